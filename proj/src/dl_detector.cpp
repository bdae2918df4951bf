#include "abjam/dl_detector.hpp"

namespace abjam {

namespace {

void check_frame(const ReceivedBlock& block, const BackscatterFrame& frame) {
  if (frame.encoded.size() != block.config.frame_bits ||
      frame.bits.size() != block.config.frame_bits)
    throw DimensionError("frame and received block lengths disagree");
  if (frame.pilot_count != block.config.pilot_bits)
    throw DimensionError("frame pilot count does not match the block config");
  if (frame.pilot_count >= block.config.frame_bits)
    throw DimensionError("frame has no data region");
}

int reference_state(const BackscatterFrame& frame) {
  // decoding restarts at the data region; the receiver knows the last
  // pilot's state (or the global reference when there are no pilots)
  return frame.pilot_count > 0 ? frame.encoded[frame.pilot_count - 1] : kDiffReference;
}

}  // namespace

std::vector<int> decode_data_bits(const ReceivedBlock& block, const BackscatterFrame& frame,
                                  const std::function<int(CMatrixView)>& classify) {
  check_frame(block, frame);
  const std::size_t total = block.config.frame_bits;
  std::vector<int> states;
  states.reserve(total - frame.pilot_count);
  for (std::size_t i = frame.pilot_count; i < total; ++i)
    states.push_back(classify(block.symbol(i)));
  return diff_decode(states, reference_state(frame));
}

std::vector<FeatureSequence> frame_features(const ReceivedBlock& block,
                                            const BackscatterFrame& frame) {
  check_frame(block, frame);
  const PilotCovariances pilots = pilot_covariances(block, frame);
  const CMatrix inv0 = inverse(pilots.k0);
  const CMatrix inv1 = inverse(pilots.k1);
  const std::size_t total = block.config.frame_bits;
  std::vector<FeatureSequence> out;
  out.reserve(total - frame.pilot_count);
  for (std::size_t i = frame.pilot_count; i < total; ++i) {
    const CMatrix c = sample_covariance(block.symbol(i));
    const auto whitened = whiten_inv(c, inv0, inv1);
    out.push_back(featurize(whitened.first, whitened.second));
  }
  return out;
}

std::vector<int> predict_frame(const LstmModel& model, const ReceivedBlock& block,
                               const BackscatterFrame& frame) {
  const std::vector<FeatureSequence> features = frame_features(block, frame);
  const auto probs = lstm_forward_batch(model, features);
  std::vector<int> states(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    states[i] = probs[i][1] > probs[i][0] ? 1 : 0;
  return diff_decode(states, reference_state(frame));
}

}  // namespace abjam
