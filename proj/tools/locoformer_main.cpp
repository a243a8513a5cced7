// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end:
//   locoformer train     [--config FILE] [--out DIR] [--key value ...]
//   locoformer separate  --checkpoint FILE --input WAV [--input WAV ...] [--out DIR]
//   locoformer evaluate  --manifest FILE --est-dir DIR
//   locoformer gradcheck [--quick]
//   locoformer info      [--config FILE] [--key value ...]
//
// Exit codes: 0 success, 1 usage, 2 config, 3 data/format, 4 numeric.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "locoformer/gradcheck_suite.hpp"
#include "locoformer/manifest.hpp"
#include "locoformer/runtime.hpp"
#include "locoformer/run_config.hpp"
#include "locoformer/wav.hpp"

namespace fs = std::filesystem;
using namespace locoformer;

namespace {

constexpr const char* kUsage =
    "usage: locoformer <command> [options]\n"
    "\n"
    "commands:\n"
    "  train      [--config FILE] [--out DIR] [--key value ...]\n"
    "  separate   --checkpoint FILE --input WAV [--input WAV ...] [--out DIR]\n"
    "  evaluate   --manifest FILE --est-dir DIR\n"
    "  gradcheck  [--quick]\n"
    "  info       [--config FILE] [--key value ...]\n"
    "\n"
    "Any --<config.key> <value> pair overrides the config file; see README\n"
    "for the key list. Exit codes: 0 ok, 1 usage, 2 config, 3 data/format,\n"
    "4 numeric failure.\n";

struct Args {
  std::map<std::string, std::string> flags;
  std::vector<std::string> inputs;
  std::vector<ConfigKv> overrides;
  bool quick = false;
};

Args parse_args(int argc, char** argv, int from) {
  Args a;
  for (int i = from; i < argc; ++i) {
    std::string tok = argv[i];
    if (tok.rfind("--", 0) != 0) {
      throw UsageError("unexpected positional argument '" + tok + "'");
    }
    tok = tok.substr(2);
    if (tok == "quick") {
      a.quick = true;
      continue;
    }
    if (i + 1 >= argc) throw UsageError("flag --" + tok + " needs a value");
    const std::string value = argv[++i];
    if (tok == "config" || tok == "out" || tok == "checkpoint" || tok == "manifest" ||
        tok == "est-dir") {
      a.flags[tok] = value;
    } else if (tok == "input") {
      a.inputs.push_back(value);
    } else {
      a.overrides.push_back({tok, value, "--" + tok});
    }
  }
  return a;
}

RunConfig load_config(const Args& a) {
  std::vector<ConfigKv> file_kvs;
  if (auto it = a.flags.find("config"); it != a.flags.end()) {
    file_kvs = read_config_file(it->second);
  }
  return resolve_run_config(file_kvs, a.overrides);
}

std::vector<MixtureItem<float>> make_synthetic_set(const RunConfig& cfg, const char* split,
                                                   int count) {
  std::optional<std::pair<double, double>> snr;
  if (cfg.with_noise) snr = std::pair{cfg.noise_snr_min_db, cfg.noise_snr_max_db};
  std::vector<MixtureItem<float>> items;
  items.reserve(count);
  const uint64_t split_seed = Rng::mix(cfg.train.seed, fnv1a64(split));
  for (int i = 0; i < count; ++i) {
    items.push_back(synth_mixture<float>(Rng::mix(split_seed, i), cfg.model.num_sources,
                                         cfg.item_seconds, cfg.model.stft.sample_rate, snr));
  }
  return items;
}

std::vector<MixtureItem<float>> load_manifest_set(const RunConfig& cfg, const std::string& path) {
  std::vector<MixtureItem<float>> items;
  for (const ManifestEntry& e : read_manifest(path)) {
    MixtureItem<float> item;
    item.id = e.id;
    WavData mix = load_wav(e.mix_path);
    if (mix.sample_rate != cfg.model.stft.sample_rate) {
      throw FormatError("manifest item " + e.id + ": sample rate " +
                        std::to_string(mix.sample_rate) + " does not match stft.sample_rate " +
                        std::to_string(cfg.model.stft.sample_rate));
    }
    item.sample_rate = mix.sample_rate;
    item.mix = std::move(mix.samples);
    for (const auto& rp : e.ref_paths) {
      WavData ref = load_wav(rp);
      if (ref.samples.size() != item.mix.size()) {
        throw FormatError("manifest item " + e.id + ": reference " + rp + " length " +
                          std::to_string(ref.samples.size()) + " != mixture length " +
                          std::to_string(item.mix.size()));
      }
      item.refs.push_back(std::move(ref.samples));
    }
    if (static_cast<int>(item.refs.size()) != cfg.model.num_sources) {
      throw FormatError("manifest item " + e.id + ": " + std::to_string(item.refs.size()) +
                        " references, model expects " + std::to_string(cfg.model.num_sources));
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw FormatError("manifest " + path + ": no items");
  return items;
}

std::string wav_stem(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_train(const Args& args) {
  RunConfig cfg = load_config(args);
  const std::string out_dir = args.flags.count("out") ? args.flags.at("out") : "run";
  fs::create_directories(out_dir);

  std::vector<MixtureItem<float>> train_set, val_set;
  if (cfg.source == DataSource::Synthetic) {
    train_set = make_synthetic_set(cfg, "train", cfg.train_items);
    val_set = make_synthetic_set(cfg, "val", cfg.val_items);
  } else {
    train_set = load_manifest_set(cfg, cfg.train_manifest);
    val_set = load_manifest_set(cfg, cfg.val_manifest);
  }

  std::ofstream step_log(out_dir + "/train_steps.tsv", std::ios::trunc);
  std::ofstream epoch_log(out_dir + "/train_epochs.tsv", std::ios::trunc);
  FitHooks hooks;
  hooks.on_step = [&](long step, double lr, double loss) {
    step_log << step << '\t' << lr << '\t' << loss << '\n';
  };
  hooks.on_epoch = [&](int epoch, double train_loss, double val_loss) {
    epoch_log << epoch << '\t' << train_loss << '\t' << val_loss << '\n';
    epoch_log.flush();
    std::cout << "epoch " << epoch << "\ttrain " << train_loss << "\tval " << val_loss << "\n";
  };

  const std::string config_text = canonical_config_text(cfg);
  {
    std::ofstream cfg_out(out_dir + "/resolved_config.txt", std::ios::trunc);
    cfg_out << config_text;
  }
  FitResult res = fit(cfg.model, cfg.train, cfg.task, train_set, val_set,
                      out_dir + "/checkpoints", config_text, hooks);

  save_checkpoint(out_dir + "/final.ckpt", res.averaged, nullptr, res.steps, res.epochs,
                  res.val_history, config_text);
  std::cout << "trained " << res.epochs << " epochs (" << res.steps << " steps), best val "
            << res.best_val << (res.early_stopped ? ", early-stopped" : "") << "\n";
  std::cout << "final checkpoint: " << out_dir << "/final.ckpt\n";
  return 0;
}

int cmd_separate(const Args& args) {
  if (!args.flags.count("checkpoint")) throw UsageError("separate needs --checkpoint");
  if (args.inputs.empty()) throw UsageError("separate needs at least one --input");
  const std::string out_dir = args.flags.count("out") ? args.flags.at("out") : ".";
  fs::create_directories(out_dir);

  LoadedCheckpoint ck = load_checkpoint(args.flags.at("checkpoint"));
  RunConfig cfg = parse_config_text(ck.config_text());
  ModelParams<float> params = init_params<float>(cfg.model, 0);
  restore_params(ck, params);

  NoGradGuard ng;
  for (const std::string& in_path : args.inputs) {
    WavData wav = load_wav(in_path);
    if (wav.sample_rate != cfg.model.stft.sample_rate) {
      throw FormatError("input " + in_path + ": sample rate " + std::to_string(wav.sample_rate) +
                        " does not match the model's " +
                        std::to_string(cfg.model.stft.sample_rate));
    }
    // Same normalization as training: divide by the mixture deviation, then
    // scale the estimates back.
    double mean = 0;
    for (std::size_t i = 0; i < wav.samples.size(); ++i) mean += wav.samples[i];
    mean /= static_cast<double>(wav.samples.size());
    double var = 0;
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      var += (wav.samples[i] - mean) * (wav.samples[i] - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(wav.samples.size()));
    if (sd < 1e-8) throw FormatError("input " + in_path + ": silent signal");
    Tensor<float> x = Tensor<float>::zeros({static_cast<int>(wav.samples.size())});
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      x[i] = static_cast<float>(wav.samples[i] / sd);
    }
    ForwardResult<float> res = forward(x, cfg.model, params);
    for (int s = 0; s < cfg.model.num_sources; ++s) {
      Tensor<float>& est = res.sources[s];
      for (std::size_t i = 0; i < est.size(); ++i) est[i] = static_cast<float>(est[i] * sd);
      const std::string out_path =
          out_dir + "/" + wav_stem(in_path) + "_src" + std::to_string(s + 1) + ".wav";
      save_wav(out_path, est, wav.sample_rate, WavFormat::Float32);
      std::cout << out_path << "\n";
    }
  }
  return 0;
}

int cmd_evaluate(const Args& args) {
  if (!args.flags.count("manifest")) throw UsageError("evaluate needs --manifest");
  if (!args.flags.count("est-dir")) throw UsageError("evaluate needs --est-dir");
  const std::string est_dir = args.flags.at("est-dir");

  double sum_sisnri = 0, sum_sdri = 0;
  long count = 0;
  std::printf("id\tsi_snri\tsdri\n");
  for (const ManifestEntry& e : read_manifest(args.flags.at("manifest"))) {
    WavData mix = load_wav(e.mix_path);
    const int n = static_cast<int>(e.ref_paths.size());
    if (n > 4) throw ConfigError("evaluate: item " + e.id + " has more than 4 sources");
    std::vector<Tensor<float>> refs, ests;
    for (int i = 0; i < n; ++i) {
      WavData ref = load_wav(e.ref_paths[i]);
      if (ref.samples.size() != mix.samples.size()) {
        throw FormatError("evaluate: item " + e.id + ": reference length mismatch");
      }
      refs.push_back(std::move(ref.samples));
      const std::string est_path =
          est_dir + "/" + wav_stem(e.mix_path) + "_src" + std::to_string(i + 1) + ".wav";
      WavData est = load_wav(est_path);
      if (est.samples.size() != mix.samples.size()) {
        throw FormatError("evaluate: item " + e.id + ": estimate length mismatch at " + est_path);
      }
      ests.push_back(std::move(est.samples));
    }

    // Best assignment by mean SI-SNR, matching how the model was trained.
    std::vector<int> perm(n), best(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    double best_mean = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m[i][j] = si_snr_value(ests[i], refs[j]);
    }
    do {
      double mean = 0;
      for (int j = 0; j < n; ++j) mean += m[perm[j]][j];
      mean /= n;
      if (mean > best_mean) {
        best_mean = mean;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));

    double item_sisnri = 0, item_sdri = 0;
    for (int j = 0; j < n; ++j) {
      item_sisnri += si_snri_value(ests[best[j]], refs[j], mix.samples);
      item_sdri += sdri_value(ests[best[j]], refs[j], mix.samples);
    }
    item_sisnri /= n;
    item_sdri /= n;
    std::printf("%s\t%.4f\t%.4f\n", e.id.c_str(), item_sisnri, item_sdri);
    sum_sisnri += item_sisnri;
    sum_sdri += item_sdri;
    ++count;
  }
  if (count == 0) throw FormatError("evaluate: empty manifest");
  std::printf("mean\t%.4f\t%.4f\n", sum_sisnri / count, sum_sdri / count);
  return 0;
}

int cmd_gradcheck(const Args& args) {
  const auto checks = run_gradient_suite(!args.quick, args.quick ? 5 : 20);
  bool all_ok = true;
  for (const auto& c : checks) {
    std::printf("%s\t%s\tmax_rel_err=%.3e\n", c.pass ? "ok" : "FAIL", c.name.c_str(),
                c.max_rel_err);
    all_ok &= c.pass;
  }
  if (!all_ok) {
    std::fprintf(stderr, "gradcheck: at least one check exceeded the 1e-4 budget\n");
    return 4;
  }
  return 0;
}

int cmd_info(const Args& args) {
  RunConfig cfg = load_config(args);
  ModelParams<float> params = init_params<float>(cfg.model, cfg.train.seed);
  const std::size_t n = count_params(params);
  std::cout << canonical_config_text(cfg);
  std::cout << "parameters = " << n << " (" << std::fixed << std::setprecision(2)
            << static_cast<double>(n) / 1e6 << " M)\n";
  const int probe = static_cast<int>(4.0 * cfg.model.stft.sample_rate);
  std::cout << "input 4 s @ " << cfg.model.stft.sample_rate << " Hz -> frames "
            << cfg.model.stft.frame_count(probe) << ", bins " << cfg.model.stft.bins()
            << ", latent [" << cfg.model.embed_dim << ", " << cfg.model.stft.frame_count(probe)
            << ", " << cfg.model.stft.bins() << "]\n";
  std::cout << "config fingerprint = " << std::hex << config_fingerprint(cfg) << std::dec << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fputs(kUsage, stderr);
    return 1;
  }
  const std::string cmd = argv[1];
  tune_allocator();
  try {
    const Args args = parse_args(argc, argv, 2);
    if (cmd == "train") return cmd_train(args);
    if (cmd == "separate") return cmd_separate(args);
    if (cmd == "evaluate") return cmd_evaluate(args);
    if (cmd == "gradcheck") return cmd_gradcheck(args);
    if (cmd == "info") return cmd_info(args);
    throw UsageError("unknown command '" + cmd + "'");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), kUsage);
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}
