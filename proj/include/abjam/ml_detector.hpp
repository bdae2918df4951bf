#pragma once
// Optimal noncoherent detector.  Conditioned on the backscatter state the
// received vector is zero-mean complex Gaussian, so detection reduces to
// comparing the two Gaussian likelihoods through their covariance
// matrices.  The pair caches inverses and log-determinants because one
// channel draw serves thousands of symbol decisions.

#include <cstddef>
#include <span>
#include <vector>

#include "abjam/channel.hpp"
#include "abjam/linalg.hpp"

namespace abjam {

// per-antenna composite coefficients of the four source->receiver routes:
// h1 direct transmitter, h2 transmitter via tag, h3 direct jammer,
// h4 jammer via tag
struct EffectiveChannels {
  std::vector<cdouble> h1, h2, h3, h4;
};

EffectiveChannels effective_channels(const SystemConfig& cfg, const ChannelRealization& ch);

// covariances of one received RF sample under the two tag states:
//   state 0 (tag silent):  K0 = h1 h1^H + h3 h3^H + I
//   state 1 (tag active):  K1 = (h1+h2)(h1+h2)^H + (h3+h4)(h3+h4)^H + I
class CovariancePair {
 public:
  CovariancePair(CMatrix k0, CMatrix k1);  // validates and caches

  const CMatrix& k0() const { return k0_; }
  const CMatrix& k1() const { return k1_; }
  const CMatrix& k0_inv() const { return k0_inv_; }
  const CMatrix& k1_inv() const { return k1_inv_; }
  double log_det_k0() const { return log_det_k0_; }
  double log_det_k1() const { return log_det_k1_; }
  std::size_t dim() const { return k0_.rows(); }

  // cached ln p(y | state) for one received RF sample
  double log_pdf0(std::span<const cdouble> y) const;
  double log_pdf1(std::span<const cdouble> y) const;

 private:
  CMatrix k0_, k1_, k0_inv_, k1_inv_;
  double log_det_k0_, log_det_k1_;
};

CovariancePair covariance_matrices(const SystemConfig& cfg, const ChannelRealization& ch);

// ln of the CN(0,K) density at y: -y^H K^{-1} y - M ln(pi) - ln|K|;
// uncached convenience form
double log_pdf(std::span<const cdouble> y, const CMatrix& k);

// decide the state of one backscatter symbol from its N x M sample block:
// state 0 wins iff sum_n y_n^H (K0^{-1} - K1^{-1}) y_n < N ln(|K1|/|K0|),
// the log form of the likelihood-ratio test; ties resolve to 0
int detect_symbol(CMatrixView y, const CovariancePair& pair);

// detect every symbol of a frame and differentially decode; returns all I
// bits (pilots included)
std::vector<int> detect_frame(const ReceivedBlock& block, const CovariancePair& pair);

}  // namespace abjam
