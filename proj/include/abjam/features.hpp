#pragma once
// Input pipeline of the learned detector.  Each backscatter symbol is
// summarized by its N-sample covariance, whitened against per-frame pilot
// covariance estimates of the two states, and unrolled into a real-valued
// sequence the recurrent network can consume.  No channel knowledge is
// used anywhere: everything comes from the received samples and the known
// pilot bits.

#include <cstddef>
#include <utility>
#include <vector>

#include "abjam/channel.hpp"
#include "abjam/coding.hpp"
#include "abjam/linalg.hpp"

namespace abjam {

// (1/N) sum_n y_n y_n^H over the rows of an N x M block
CMatrix sample_covariance(CMatrixView y);

// pilot-based covariance estimates of the two states:
//   Kt_e = (1 / (P_e N)) sum over the P_e pilot symbols with state e of
//          sum_n y_n y_n^H + I
// normalized by the per-state sample count actually seen (the fixed pilot
// pattern gives the states unequal shares); throws DegenerateInputError
// when a state has no pilot symbols
struct PilotCovariances {
  CMatrix k0;
  CMatrix k1;
};
PilotCovariances pilot_covariances(const ReceivedBlock& block, const BackscatterFrame& frame);

// whitened covariances (C * Kt0^{-1}, C * Kt1^{-1})
std::pair<CMatrix, CMatrix> whiten(const CMatrix& c, const CMatrix& kt0, const CMatrix& kt1);
// same, with the inverses already in hand (per-frame hot path)
std::pair<CMatrix, CMatrix> whiten_inv(const CMatrix& c, const CMatrix& kt0_inv,
                                       const CMatrix& kt1_inv);

// sequence of per-step real triples (real, imag, abs), one step per matrix
// entry: first whitened-under-state-0 row-major, then state 1; 2 M^2 steps
struct FeatureSequence {
  std::size_t steps = 0;
  std::vector<double> values;  // steps * 3, step-major
};

FeatureSequence featurize(const CMatrix& c0, const CMatrix& c1);

}  // namespace abjam
