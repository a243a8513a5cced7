// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss and metric tests. The PIT oracle is an independent in-test
// enumeration over an independently computed SI-SNR matrix.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "locoformer/gradcheck.hpp"
#include "locoformer/losses.hpp"

using namespace locoformer;

namespace {

template <class T>
Tensor<T> random_wave(int n, uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  Tensor<T> x = Tensor<T>::zeros({n});
  for (int i = 0; i < n; ++i) x[i] = static_cast<T>(amp * rng.uniform(-1.0, 1.0));
  return x;
}

// Independent SI-SNR (dB), straight from the definition.
double oracle_si_snr(const std::vector<double>& est, const std::vector<double>& ref) {
  const size_t n = est.size();
  double me = 0, mr = 0;
  for (size_t i = 0; i < n; ++i) {
    me += est[i];
    mr += ref[i];
  }
  me /= n;
  mr /= n;
  double er = 0, rr = 0;
  for (size_t i = 0; i < n; ++i) {
    er += (est[i] - me) * (ref[i] - mr);
    rr += (ref[i] - mr) * (ref[i] - mr);
  }
  const double a = er / (rr + 1e-8);
  double st = 0, sn = 0;
  for (size_t i = 0; i < n; ++i) {
    const double t = a * (ref[i] - mr);
    const double d = (est[i] - me) - t;
    st += t * t;
    sn += d * d;
  }
  return 10.0 * std::log10((st + 1e-8) / (sn + 1e-8));
}

std::vector<double> to_vec(const Tensor<double>& t) {
  return {t.data(), t.data() + t.size()};
}

}  // namespace

TEST_CASE("si_snr: perfect estimate hits the eps-limited ceiling") {
  Tensor<double> s = random_wave<double>(4000, 1);
  CHECK(si_snr(s, s).item() >= 60.0);
}

TEST_CASE("si_snr: invariant to positive scaling of the estimate") {
  Tensor<double> s = random_wave<double>(2000, 2);
  Tensor<double> e = random_wave<double>(2000, 3);
  const double base = si_snr(e, s).item();
  for (double alpha : {0.5, 2.0, 10.0}) {
    Tensor<double> scaled = Tensor<double>::zeros({2000});
    for (int i = 0; i < 2000; ++i) scaled[i] = alpha * e[i];
    CHECK(si_snr(scaled, s).item() == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("si_snr: orthogonal estimate is strongly negative") {
  const int n = 4000;
  Tensor<double> ref = Tensor<double>::zeros({n});
  Tensor<double> est = Tensor<double>::zeros({n});
  for (int i = 0; i < n; ++i) {
    ref[i] = std::sqrt(2.0) * std::sin(2.0 * 3.14159265358979323846 * 8.0 * i / n);
    est[i] = std::sqrt(2.0) * std::cos(2.0 * 3.14159265358979323846 * 8.0 * i / n);
  }
  CHECK(si_snr(est, ref).item() <= -60.0);
}

TEST_CASE("si_snr: length mismatch raises a dimension error") {
  Tensor<double> a = Tensor<double>::zeros({10});
  Tensor<double> b = Tensor<double>::zeros({11});
  CHECK_THROWS_AS(si_snr(a, b), ShapeError);
}

TEST_CASE("pit_loss: identity and swapped references") {
  std::vector<Tensor<double>> refs{random_wave<double>(1500, 10), random_wave<double>(1500, 11)};
  PitResult<double> id = pit_loss(refs, refs);
  CHECK(id.permutation == std::vector<int>{0, 1});

  std::vector<Tensor<double>> swapped{refs[1], refs[0]};
  PitResult<double> sw = pit_loss(swapped, refs);
  CHECK(sw.permutation == std::vector<int>{1, 0});
  CHECK(sw.loss.item() == doctest::Approx(id.loss.item()).epsilon(1e-12));
}

TEST_CASE("pit_loss: matches the exhaustive enumeration oracle on random cases") {
  for (int n : {2, 3}) {
    for (uint64_t seed = 0; seed < 100; ++seed) {
      std::vector<Tensor<double>> est, ref;
      for (int i = 0; i < n; ++i) {
        est.push_back(random_wave<double>(400, Rng::mix(seed, i)));
        ref.push_back(random_wave<double>(400, Rng::mix(seed, 100 + i)));
      }
      PitResult<double> got = pit_loss(est, ref);

      // oracle: independent matrix + enumeration
      std::vector<std::vector<double>> m(n, std::vector<double>(n));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[i][j] = oracle_si_snr(to_vec(est[i]), to_vec(ref[j]));
      }
      std::vector<int> perm(n), best(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      double best_mean = -1e300;
      do {
        double mean = 0;
        for (int j = 0; j < n; ++j) mean += m[perm[j]][j];
        mean /= n;
        if (mean > best_mean) {
          best_mean = mean;
          best = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));

      CHECK(got.permutation == best);
      CHECK(got.loss.item() == doctest::Approx(-best_mean).epsilon(1e-9));

      // optimality: no fixed permutation beats it
      for (int i = 0; i < n; ++i) perm[i] = i;
      do {
        double mean = 0;
        for (int j = 0; j < n; ++j) mean += m[perm[j]][j];
        mean /= n;
        CHECK(got.loss.item() <= -mean + 1e-9);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }
}

TEST_CASE("pit_loss: invariant under permuting the references") {
  std::vector<Tensor<double>> est{random_wave<double>(600, 40), random_wave<double>(600, 41),
                                  random_wave<double>(600, 42)};
  std::vector<Tensor<double>> ref{random_wave<double>(600, 50), random_wave<double>(600, 51),
                                  random_wave<double>(600, 52)};
  PitResult<double> base = pit_loss(est, ref);
  std::vector<int> shuffle{2, 0, 1};  // ref'[j] = ref[shuffle[j]]
  std::vector<Tensor<double>> ref2{ref[2], ref[0], ref[1]};
  PitResult<double> moved = pit_loss(est, ref2);
  CHECK(moved.loss.item() == doctest::Approx(base.loss.item()).epsilon(1e-12));
  for (int j = 0; j < 3; ++j) CHECK(moved.permutation[j] == base.permutation[shuffle[j]]);
}

TEST_CASE("pit_loss: more than four sources is unsupported") {
  std::vector<Tensor<double>> many(5, random_wave<double>(100, 7));
  CHECK_THROWS_AS(pit_loss(many, many), ConfigError);
}

TEST_CASE("enh_loss: zero at equality, bounded below by the time term") {
  Tensor<double> ref = random_wave<double>(2048, 60);
  CHECK(enh_loss(ref, ref).item() == doctest::Approx(0.0).epsilon(1e-9));

  Tensor<double> est = random_wave<double>(2048, 61);
  double time_term = 0;
  for (int i = 0; i < 2048; ++i) time_term += std::abs(est[i] - ref[i]);
  time_term /= 2048;
  CHECK(enh_loss(est, ref).item() >= time_term);
}

TEST_CASE("enh_loss: sign flip of a square wave leaves only the time term") {
  const int n = 2048;
  Tensor<double> ref = Tensor<double>::zeros({n});
  for (int i = 0; i < n; ++i) ref[i] = ((i / 8) % 2 == 0) ? 1.0 : -1.0;
  Tensor<double> est = Tensor<double>::zeros({n});
  for (int i = 0; i < n; ++i) est[i] = -ref[i];
  // |est - ref| = 2 everywhere; STFT magnitudes are identical
  CHECK(enh_loss(est, ref).item() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("si_snri: zero at the mixture, monotone along the path to the reference") {
  Tensor<float> ref = random_wave<float>(3000, 70);
  Tensor<float> other = random_wave<float>(3000, 71);
  Tensor<float> mix = Tensor<float>::zeros({3000});
  for (int i = 0; i < 3000; ++i) mix[i] = ref[i] + other[i];
  CHECK(si_snri_value(mix, ref, mix) == doctest::Approx(0.0).epsilon(1e-9));
  double prev = -1e300;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Tensor<float> est = Tensor<float>::zeros({3000});
    for (int i = 0; i < 3000; ++i) est[i] = static_cast<float>(mix[i] + alpha * (ref[i] - mix[i]));
    const double v = si_snri_value(est, ref, mix);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("sdri: perfect estimate reaches ceiling minus the mixture score") {
  Tensor<float> ref = random_wave<float>(3000, 80);
  Tensor<float> other = random_wave<float>(3000, 81, 0.5);
  Tensor<float> mix = Tensor<float>::zeros({3000});
  for (int i = 0; i < 3000; ++i) mix[i] = ref[i] + other[i];
  double nr = 0;
  for (int i = 0; i < 3000; ++i) nr += static_cast<double>(ref[i]) * ref[i];
  const double ceiling = 10.0 * std::log10(nr / 1e-8);
  CHECK(sdri_value(ref, ref, mix) == doctest::Approx(ceiling - sdr_value(mix, ref)).epsilon(1e-9));
}

TEST_CASE("losses: gradients match finite differences at small sizes") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 5);
    const int n = 64;
    Tensor<double> est = Tensor<double>::zeros({n}, true);
    Tensor<double> ref = Tensor<double>::zeros({n});
    fill_uniform(est, rng);
    fill_uniform(ref, rng);
    auto fwd = [&] { return si_snr(est, ref); };
    CHECK(max_fd_rel_error(fwd, {&est}, {.seed = seed}) < 1e-4);

    Tensor<double> est2 = Tensor<double>::zeros({n}, true);
    Tensor<double> ref2 = Tensor<double>::zeros({n});
    fill_uniform(est2, rng);
    fill_uniform(ref2, rng);
    std::vector<Tensor<double>> ests{est, est2};
    std::vector<Tensor<double>> refs{ref, ref2};
    auto fwd2 = [&] {
      PitResult<double> r = pit_loss(ests, refs);
      return r.loss;
    };
    CHECK(max_fd_rel_error(fwd2, {&est, &est2}, {.max_coords_per_tensor = 16, .seed = seed}) < 1e-4);

  }
}

TEST_CASE("enh_loss: gradient matches finite differences away from the L1 kinks") {
  // Every term of the loss is an L1 distance, so the check must keep each
  // |.| argument clear of its kink under the +/-h probes: est = 5*ref puts
  // every magnitude difference at 4*mag(ref) and every time difference at
  // 4|ref_i| >= 0.4.
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 77);
    const int n = 2048;
    Tensor<double> ref = Tensor<double>::zeros({n});
    Tensor<double> est = Tensor<double>::zeros({n}, true);
    for (int i = 0; i < n; ++i) {
      const double s = rng.uniform() < 0.5 ? -1.0 : 1.0;
      ref[i] = s * (0.1 + 0.9 * rng.uniform());
      est[i] = 5.0 * ref[i];
    }
    auto fwd = [&] { return enh_loss(est, ref); };
    CHECK(max_fd_rel_error(fwd, {&est}, {.max_coords_per_tensor = 8, .seed = seed}) < 1e-4);
  }
}
