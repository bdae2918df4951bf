// Frame-level plumbing of the learned detector: decoding against the last
// pilot state, feature extraction wiring, and agreement with the
// likelihood detector when both use the same symbol decisions.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "abjam/dl_detector.hpp"
#include "abjam/ml_detector.hpp"

using namespace abjam;

namespace {

struct Scenario {
  SystemConfig cfg;
  BackscatterFrame frame;
  ChannelRealization channel;
  ReceivedBlock block;
};

Scenario make_scenario(std::uint64_t stream, bool strong) {
  Scenario s;
  s.cfg.antennas = 3;
  s.cfg.spreading = strong ? 25 : 6;
  s.cfg.frame_bits = 12;
  s.cfg.pilot_bits = 4;
  if (strong) {
    s.cfg.alpha_tr = 10.0;
    s.cfg.alpha_jr = 10.0;
    s.cfg.alpha_t_rel = 0.5;
    s.cfg.alpha_j_rel = 0.5;
  }
  Pcg32 rng(s.cfg.seed, stream);
  std::vector<int> data(s.cfg.frame_bits - s.cfg.pilot_bits);
  for (auto& b : data) b = static_cast<int>(rng.next_u32() & 1u);
  s.frame = make_frame(data, s.cfg.pilot_bits);
  s.channel = draw_channel(s.cfg, rng);
  s.block = synthesize_frame(s.cfg, s.channel, s.frame.encoded, rng);
  return s;
}

}  // namespace

TEST_CASE("a perfect symbol classifier recovers the data bits exactly") {
  const Scenario s = make_scenario(41, false);
  const std::size_t block_len = s.cfg.spreading * s.cfg.antennas;

  // cheat: identify the symbol by its position inside the sample buffer and
  // return its true state, isolating the decode plumbing from detection
  auto oracle = [&](CMatrixView y) {
    const std::size_t idx =
        static_cast<std::size_t>(y.ptr - s.block.samples.data()) / block_len;
    return s.frame.encoded[idx];
  };
  const std::vector<int> bits = decode_data_bits(s.block, s.frame, oracle);

  const std::vector<int> want(s.frame.bits.begin() + s.frame.pilot_count,
                              s.frame.bits.end());
  CHECK(bits == want);
}

TEST_CASE("a constant classifier yields one transition then silence") {
  const Scenario s = make_scenario(43, false);
  const std::vector<int> bits =
      decode_data_bits(s.block, s.frame, [](CMatrixView) { return 0; });
  // reference is the last pilot state; all-zero decisions decode to that
  // state as the first bit and zeros afterwards
  REQUIRE(!bits.empty());
  CHECK(bits[0] == s.frame.encoded[s.frame.pilot_count - 1]);
  for (std::size_t i = 1; i < bits.size(); ++i) CHECK(bits[i] == 0);
}

TEST_CASE("likelihood decisions flow through the shared frame plumbing") {
  const Scenario s = make_scenario(47, true);
  const CovariancePair pair = covariance_matrices(s.cfg, s.channel);

  const std::vector<int> via_plumbing = decode_data_bits(
      s.block, s.frame, [&](CMatrixView y) { return detect_symbol(y, pair); });

  // in this strong regime the detector is exact, so the data region of the
  // full-frame decode and the plumbing decode both equal the truth
  const std::vector<int> full = detect_frame(s.block, pair);
  const std::vector<int> want(s.frame.bits.begin() + s.frame.pilot_count,
                              s.frame.bits.end());
  CHECK(via_plumbing == want);
  CHECK(std::vector<int>(full.begin() + s.frame.pilot_count, full.end()) == want);
}

TEST_CASE("frame features have the advertised shapes and wiring") {
  const Scenario s = make_scenario(53, false);
  const std::vector<FeatureSequence> feats = frame_features(s.block, s.frame);
  const std::size_t m = s.cfg.antennas;
  REQUIRE(feats.size() == s.cfg.frame_bits - s.cfg.pilot_bits);
  for (const auto& f : feats) {
    CHECK(f.steps == 2 * m * m);
    CHECK(f.values.size() == f.steps * 3);
  }

  // first data symbol recomputed longhand through the same building blocks
  const PilotCovariances pilots = pilot_covariances(s.block, s.frame);
  const CMatrix c = sample_covariance(s.block.symbol(s.frame.pilot_count));
  const auto w = whiten(c, pilots.k0, pilots.k1);
  const FeatureSequence want = featurize(w.first, w.second);
  REQUIRE(want.values.size() == feats[0].values.size());
  for (std::size_t i = 0; i < want.values.size(); ++i)
    CHECK(feats[0].values[i] == doctest::Approx(want.values[i]).epsilon(1e-12));
}

TEST_CASE("an untrained flat model predicts the constant-zero state path") {
  const Scenario s = make_scenario(59, false);
  LstmModel flat;
  flat.hidden = 4;
  flat.input_dim = 3;
  flat.w_in.assign(4 * 4 * 3, 0.0);
  flat.w_rec.assign(4 * 4 * 4, 0.0);
  flat.bias.assign(16, 0.0);
  flat.dense_w.assign(8, 0.0);
  flat.dense_b.assign(2, 0.0);

  // even split per symbol; the tie resolves to state 0 like the
  // likelihood detector's rule
  const std::vector<int> bits = predict_frame(flat, s.block, s.frame);
  REQUIRE(bits.size() == s.cfg.frame_bits - s.cfg.pilot_bits);
  CHECK(bits[0] == s.frame.encoded[s.frame.pilot_count - 1]);
  for (std::size_t i = 1; i < bits.size(); ++i) CHECK(bits[i] == 0);
}

TEST_CASE("mismatched frame and block are rejected") {
  const Scenario s = make_scenario(61, false);
  BackscatterFrame other = make_frame(std::vector<int>(9, 0), 2);  // wrong length
  CHECK_THROWS_AS(decode_data_bits(s.block, other, [](CMatrixView) { return 0; }),
                  DimensionError);
  CHECK_THROWS_AS(frame_features(s.block, other), DimensionError);

  BackscatterFrame wrong_pilots = s.frame;
  wrong_pilots.pilot_count = 2;
  CHECK_THROWS_AS(frame_features(s.block, wrong_pilots), DimensionError);
}
