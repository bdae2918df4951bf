#include "abjam/capacity.hpp"

#include <cmath>
#include <limits>

namespace abjam {

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw DegenerateInputError("binary_entropy: probability outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

// posterior of state 0 from the two log-densities, stable in both tails
double posterior_from_logs(double log_p0, double log_p1, double theta0) {
  if (theta0 == 0.0) return 0.0;
  if (theta0 == 1.0) return 1.0;
  if (std::isinf(log_p0) && std::isinf(log_p1) && log_p0 < 0.0 && log_p1 < 0.0)
    throw DegenerateInputError("posterior: both state densities vanished");
  const double gap = std::log1p(-theta0) + log_p1 - (std::log(theta0) + log_p0);
  if (gap > 700.0) return 0.0;
  if (gap < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(gap));
}

}  // namespace

double posterior_bit0(std::span<const cdouble> y, double theta0, const CovariancePair& pair) {
  if (!(theta0 >= 0.0 && theta0 <= 1.0))
    throw DegenerateInputError("posterior_bit0: theta0 outside [0,1]");
  if (y.size() != pair.dim())
    throw DimensionError("posterior_bit0: sample length does not match covariance size");
  return posterior_from_logs(pair.log_pdf0(y), pair.log_pdf1(y), theta0);
}

std::vector<MiEstimate> mutual_information_curve(std::span<const double> theta0s,
                                                 const CovariancePair& pair,
                                                 std::size_t samples, Pcg32& rng) {
  if (samples < 2)
    throw ConfigError("mutual_information: need at least 2 MC samples");
  for (double t : theta0s)
    if (!(t >= 0.0 && t <= 1.0))
      throw DegenerateInputError("mutual_information: theta0 outside [0,1]");

  const std::size_t m = pair.dim();
  const CMatrix l0 = cholesky(pair.k0());
  const CMatrix l1 = cholesky(pair.k1());

  // one shared draw per sample: a uniform that picks the state at any
  // prior, plus the four state-conditional log-densities of both candidate
  // received vectors (built from a single standard-normal vector)
  struct Draw {
    double u;
    double lp00, lp01;  // y drawn under state 0, scored under K0 / K1
    double lp10, lp11;  // y drawn under state 1
  };
  std::vector<Draw> draws(samples);
  std::vector<cdouble> z(m), y0(m), y1(m);
  for (auto& d : draws) {
    d.u = rng.uniform();
    for (auto& v : z) v = rng.cscg();
    for (std::size_t i = 0; i < m; ++i) {
      cdouble acc0 = 0.0, acc1 = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        acc0 += l0(i, j) * z[j];
        acc1 += l1(i, j) * z[j];
      }
      y0[i] = acc0;
      y1[i] = acc1;
    }
    d.lp00 = pair.log_pdf0(y0);
    d.lp01 = pair.log_pdf1(y0);
    d.lp10 = pair.log_pdf0(y1);
    d.lp11 = pair.log_pdf1(y1);
  }

  std::vector<MiEstimate> out;
  out.reserve(theta0s.size());
  for (double theta0 : theta0s) {
    // E_y[H_b(posterior)] over the mixture, same draws at every prior
    double sum = 0.0, sum_sq = 0.0;
    for (const Draw& d : draws) {
      const bool state0 = d.u < theta0;
      const double h = binary_entropy(posterior_from_logs(
          state0 ? d.lp00 : d.lp10, state0 ? d.lp01 : d.lp11, theta0));
      sum += h;
      sum_sq += h * h;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.push_back({binary_entropy(theta0) - mean, std::sqrt(var / n)});
  }
  return out;
}

MiEstimate mutual_information(double theta0, const CovariancePair& pair,
                              std::size_t samples, Pcg32& rng) {
  const double t[1] = {theta0};
  return mutual_information_curve(t, pair, samples, rng)[0];
}

RateEstimate max_backscatter_rate(const CovariancePair& pair, std::size_t samples,
                                  double grid_step, Pcg32& rng) {
  if (!(grid_step > 0.0 && grid_step < 1.0))
    throw ConfigError("max_backscatter_rate: grid step must be in (0,1)");
  std::vector<double> grid;
  for (double t = grid_step; t < 1.0 - grid_step / 2.0; t += grid_step) grid.push_back(t);
  const std::vector<MiEstimate> curve = mutual_information_curve(grid, pair, samples, rng);

  RateEstimate best;
  best.rate_bits = -std::numeric_limits<double>::infinity();
  best.mc_samples = samples;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (curve[i].value > best.rate_bits) {
      best.rate_bits = curve[i].value;
      best.theta0_star = grid[i];
      best.std_error = curve[i].std_error;
    }
  }
  // one state carries at most one bit; MC noise can poke past the ends
  best.rate_bits = std::min(1.0, std::max(0.0, best.rate_bits));
  return best;
}

}  // namespace abjam
