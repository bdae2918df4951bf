// Likelihood detector checks.  The headline oracle evaluates the two
// Gaussian log-densities sample by sample from hand-built covariance
// matrices and compares the summed likelihoods directly — the production
// rule must agree with that brute-force comparison on every instance whose
// margin is numerically meaningful.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "abjam/coding.hpp"
#include "abjam/ml_detector.hpp"
#include "abjam/rng.hpp"

using namespace abjam;

namespace {

// outer product accumulation done longhand for the oracle path
CMatrix outer_plus_identity(const std::vector<std::vector<cdouble>>& vecs, std::size_t m) {
  CMatrix k = CMatrix::identity(m);
  for (const auto& v : vecs)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) k(i, j) += v[i] * std::conj(v[j]);
  return k;
}

std::vector<cdouble> vec_sum(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  std::vector<cdouble> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

SystemConfig random_config(Pcg32& rng, std::size_t antennas, std::size_t spreading) {
  SystemConfig cfg;
  cfg.antennas = antennas;
  cfg.spreading = spreading;
  cfg.alpha_tr = std::exp(2.0 * rng.uniform() - 1.0);
  cfg.alpha_jr = std::exp(2.0 * rng.uniform() - 1.0);
  cfg.alpha_t_rel = 0.05 + rng.uniform();
  cfg.alpha_j_rel = 0.05 + rng.uniform();
  return cfg;
}

}  // namespace

TEST_CASE("effective channels are the four scaled routes") {
  SystemConfig cfg;
  cfg.antennas = 3;
  cfg.alpha_tr = 2.0;
  cfg.alpha_jr = 5.0;
  cfg.alpha_t_rel = 0.5;
  cfg.alpha_j_rel = 0.1;
  Pcg32 rng(1, 1);
  const ChannelRealization ch = draw_channel(cfg, rng);
  const EffectiveChannels h = effective_channels(cfg, ch);

  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(std::abs(h.h1[m] - ch.f_t[m] * std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(h.h2[m] - ch.g_t * ch.f_b[m] * std::sqrt(1.0)) < 1e-15);
    CHECK(std::abs(h.h3[m] - ch.f_j[m] * std::sqrt(5.0)) < 1e-15);
    CHECK(std::abs(h.h4[m] - ch.g_j * ch.f_b[m] * std::sqrt(0.5)) < 1e-15);
  }
}

TEST_CASE("single-antenna all-ones channel gives K0 = 3, K1 = 9") {
  SystemConfig cfg;
  cfg.antennas = 1;
  cfg.alpha_tr = 1.0;
  cfg.alpha_jr = 1.0;
  cfg.alpha_t_rel = 1.0;
  cfg.alpha_j_rel = 1.0;
  ChannelRealization ch;
  ch.f_t = {1.0};
  ch.f_j = {1.0};
  ch.f_b = {1.0};
  ch.g_t = 1.0;
  ch.g_j = 1.0;

  const CovariancePair pair = covariance_matrices(cfg, ch);
  CHECK(std::abs(pair.k0()(0, 0) - cdouble(3.0, 0.0)) < 1e-14);
  CHECK(std::abs(pair.k1()(0, 0) - cdouble(9.0, 0.0)) < 1e-14);
  CHECK(pair.log_det_k0() == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(pair.log_det_k1() == doctest::Approx(std::log(9.0)).epsilon(1e-14));
  CHECK(std::abs(pair.k0_inv()(0, 0) - cdouble(1.0 / 3.0, 0.0)) < 1e-14);
}

TEST_CASE("covariances are Hermitian positive definite and match hand assembly") {
  Pcg32 rng(41, 5);
  for (int rep = 0; rep < 20; ++rep) {
    SystemConfig cfg = random_config(rng, 1 + rng.next_u32() % 4, 2);
    const ChannelRealization ch = draw_channel(cfg, rng);
    const EffectiveChannels h = effective_channels(cfg, ch);
    const std::size_t m = cfg.antennas;

    const CMatrix k0_hand = outer_plus_identity({h.h1, h.h3}, m);
    const CMatrix k1_hand =
        outer_plus_identity({vec_sum(h.h1, h.h2), vec_sum(h.h3, h.h4)}, m);

    const CovariancePair pair = covariance_matrices(cfg, ch);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(std::abs(pair.k0()(i, j) - k0_hand(i, j)) < 1e-12);
        CHECK(std::abs(pair.k1()(i, j) - k1_hand(i, j)) < 1e-12);
      }

    CHECK(is_hermitian(pair.k0()));
    CHECK(is_hermitian(pair.k1()));
    CHECK_NOTHROW(cholesky(pair.k0()));
    CHECK_NOTHROW(cholesky(pair.k1()));

    const CMatrix should_be_id = matmul(pair.k0(), pair.k0_inv());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const cdouble want = (i == j) ? cdouble(1.0, 0.0) : cdouble(0.0, 0.0);
        CHECK(std::abs(should_be_id(i, j) - want) < 1e-10);
      }
  }
}

TEST_CASE("gaussian log density at fixed points") {
  const CMatrix id1 = CMatrix::identity(1);
  const std::vector<cdouble> zero = {cdouble(0.0, 0.0)};
  CHECK(log_pdf(zero, id1) == doctest::Approx(-std::log(std::acos(-1.0))).epsilon(1e-14));

  CMatrix two(1, 1);
  two(0, 0) = 2.0;
  const std::vector<cdouble> one = {cdouble(1.0, 0.0)};
  const double expect = -0.5 - std::log(std::acos(-1.0)) - std::log(2.0);
  CHECK(log_pdf(one, two) == doctest::Approx(expect).epsilon(1e-14));

  // cached and uncached paths agree
  Pcg32 rng(9, 9);
  SystemConfig cfg = random_config(rng, 3, 2);
  const ChannelRealization ch = draw_channel(cfg, rng);
  const CovariancePair pair = covariance_matrices(cfg, ch);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<cdouble> y(3);
    for (auto& v : y) v = rng.cscg();
    CHECK(pair.log_pdf0(y) == doctest::Approx(log_pdf(y, pair.k0())).epsilon(1e-12));
    CHECK(pair.log_pdf1(y) == doctest::Approx(log_pdf(y, pair.k1())).epsilon(1e-12));
  }
}

TEST_CASE("identical covariances force state 0 (tie rule)") {
  const CMatrix id = CMatrix::identity(2);
  const CovariancePair pair(id, id);
  Pcg32 rng(4, 2);
  CMatrix y(5, 2);
  for (auto& v : y.data()) v = rng.cscg();
  CHECK(detect_symbol(y, pair) == 0);
}

TEST_CASE("detector agrees with the brute-force likelihood comparison") {
  Pcg32 rng(2026, 0);
  int skipped = 0;
  const int total = 2000;
  for (int rep = 0; rep < total; ++rep) {
    SystemConfig cfg = random_config(rng, 1 + rng.next_u32() % 3, 1 + rng.next_u32() % 5);
    const ChannelRealization ch = draw_channel(cfg, rng);
    const int truth = static_cast<int>(rng.next_u32() & 1u);
    const CMatrix y = received_symbol(cfg, ch, truth, rng);

    // oracle: sum the two log densities over the N samples, state 0 wins
    // ties, using hand-assembled covariances and the uncached density
    const EffectiveChannels h = effective_channels(cfg, ch);
    const CMatrix k0 = outer_plus_identity({h.h1, h.h3}, cfg.antennas);
    const CMatrix k1 =
        outer_plus_identity({vec_sum(h.h1, h.h2), vec_sum(h.h3, h.h4)}, cfg.antennas);
    double sum0 = 0.0, sum1 = 0.0;
    for (std::size_t n = 0; n < cfg.spreading; ++n) {
      sum0 += log_pdf(y.row(n), k0);
      sum1 += log_pdf(y.row(n), k1);
    }
    const double margin = sum0 - sum1;
    if (std::abs(margin) < 1e-9 * std::max(1.0, std::abs(sum0) + std::abs(sum1))) {
      ++skipped;  // numerically a tie; either answer is defensible
      continue;
    }
    const int oracle = margin >= 0.0 ? 0 : 1;

    const CovariancePair pair = covariance_matrices(cfg, ch);
    CHECK(detect_symbol(y, pair) == oracle);
  }
  CHECK(skipped < total / 20);
}

TEST_CASE("frames decode exactly in a strong-backscatter regime") {
  SystemConfig cfg;
  cfg.antennas = 4;
  cfg.spreading = 25;
  cfg.frame_bits = 20;
  cfg.pilot_bits = 4;
  cfg.alpha_tr = 10.0;
  cfg.alpha_jr = 10.0;
  cfg.alpha_t_rel = 0.5;
  cfg.alpha_j_rel = 0.5;

  Pcg32 rng(1234, substream(StreamPurpose::kMisc, 7, 7));
  std::vector<int> data(cfg.frame_bits - cfg.pilot_bits);
  for (auto& b : data) b = static_cast<int>(rng.next_u32() & 1u);
  const BackscatterFrame frame = make_frame(data, cfg.pilot_bits);

  const ChannelRealization ch = draw_channel(cfg, rng);
  const ReceivedBlock block = synthesize_frame(cfg, ch, frame.encoded, rng);
  const CovariancePair pair = covariance_matrices(cfg, ch);
  const std::vector<int> decoded = detect_frame(block, pair);

  REQUIRE(decoded.size() == frame.bits.size());
  CHECK(decoded == frame.bits);
}
