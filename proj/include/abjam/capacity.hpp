#pragma once
// Achievable backscatter-rate estimation.  Per backscatter symbol the tag
// conveys I(e; y) = H_b(theta0) - E_y[H_b(posterior of state 0)] bits; the
// expectation has no closed form, so it is Monte-Carlo estimated and then
// maximized over the prior on a grid.  One RF sample per symbol is the
// unit here (rates are per backscatter symbol at N = 1).

#include <cstddef>
#include <span>
#include <vector>

#include "abjam/ml_detector.hpp"
#include "abjam/rng.hpp"

namespace abjam {

// H_b(p) = -p log2 p - (1-p) log2 (1-p); 0 at both endpoints
double binary_entropy(double p);

// posterior probability of state 0 given one received sample, computed in
// the log domain so extreme likelihood ratios stay stable
double posterior_bit0(std::span<const cdouble> y, double theta0, const CovariancePair& pair);

struct MiEstimate {
  double value = 0.0;      // estimated bits per backscatter symbol
  double std_error = 0.0;  // MC standard error of the estimate
};

// I(e; y) at one prior; `samples` received vectors drawn from the mixture
MiEstimate mutual_information(double theta0, const CovariancePair& pair,
                              std::size_t samples, Pcg32& rng);

// I(e; y) at several priors from ONE set of Monte-Carlo draws (common
// random numbers): per sample the state-conditional log-densities are
// computed once and reused at every prior, so curve differences are not
// masked by independent sampling noise
std::vector<MiEstimate> mutual_information_curve(std::span<const double> theta0s,
                                                 const CovariancePair& pair,
                                                 std::size_t samples, Pcg32& rng);

struct RateEstimate {
  double rate_bits = 0.0;    // max over the prior grid, clamped to [0,1]
  double theta0_star = 0.0;  // argmax prior
  double std_error = 0.0;    // MC standard error at the argmax
  std::size_t mc_samples = 0;
};

// maximize I(e; y) over the prior grid {step, 2 step, ...} < 1
RateEstimate max_backscatter_rate(const CovariancePair& pair, std::size_t samples,
                                  double grid_step, Pcg32& rng);

}  // namespace abjam
