#pragma once
// Learned detector applied to whole frames: estimate the per-state pilot
// covariances once per frame, whiten every data symbol's covariance, run
// the recurrent classifier, then differentially decode the data region
// against the last pilot state (which the receiver knows).

#include <cstddef>
#include <functional>
#include <vector>

#include "abjam/channel.hpp"
#include "abjam/coding.hpp"
#include "abjam/features.hpp"
#include "abjam/lstm.hpp"

namespace abjam {

// classify every data symbol with `classify` and differentially decode;
// returns the I - P data bits.  Factored out so any symbol classifier
// (learned or otherwise) can drive the same frame plumbing.
std::vector<int> decode_data_bits(const ReceivedBlock& block, const BackscatterFrame& frame,
                                  const std::function<int(CMatrixView)>& classify);

// feature sequences of every data symbol of a frame (pilot covariances
// estimated from the frame itself)
std::vector<FeatureSequence> frame_features(const ReceivedBlock& block,
                                            const BackscatterFrame& frame);

// the full learned pipeline; data symbols are classified in one batch
std::vector<int> predict_frame(const LstmModel& model, const ReceivedBlock& block,
                               const BackscatterFrame& frame);

}  // namespace abjam
