#include "abjam/ml_detector.hpp"

#include <cmath>
#include <numbers>

#include "abjam/coding.hpp"

namespace abjam {

EffectiveChannels effective_channels(const SystemConfig& cfg, const ChannelRealization& ch) {
  if (ch.f_t.size() != cfg.antennas || ch.f_j.size() != cfg.antennas ||
      ch.f_b.size() != cfg.antennas)
    throw DimensionError("effective_channels: realization does not match antenna count");
  const double sq_tr = std::sqrt(cfg.alpha_tr);
  const double sq_jr = std::sqrt(cfg.alpha_jr);
  const double sq_tb = std::sqrt(cfg.alpha_tb());
  const double sq_jb = std::sqrt(cfg.alpha_jb());
  EffectiveChannels h;
  h.h1.resize(cfg.antennas);
  h.h2.resize(cfg.antennas);
  h.h3.resize(cfg.antennas);
  h.h4.resize(cfg.antennas);
  for (std::size_t m = 0; m < cfg.antennas; ++m) {
    h.h1[m] = ch.f_t[m] * sq_tr;
    h.h2[m] = ch.g_t * ch.f_b[m] * sq_tb;
    h.h3[m] = ch.f_j[m] * sq_jr;
    h.h4[m] = ch.g_j * ch.f_b[m] * sq_jb;
  }
  return h;
}

namespace {

// A += v v^H
void add_outer(CMatrix& a, const std::vector<cdouble>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) += v[i] * std::conj(v[j]);
}

}  // namespace

CovariancePair::CovariancePair(CMatrix k0, CMatrix k1)
    : k0_(std::move(k0)), k1_(std::move(k1)) {
  if (k0_.rows() != k0_.cols() || !k0_.same_shape(k1_))
    throw DimensionError("CovariancePair: need two square matrices of equal size");
  if (!is_hermitian(k0_) || !is_hermitian(k1_))
    throw DimensionError("CovariancePair: covariance matrices must be Hermitian");
  k0_inv_ = inverse(k0_);
  k1_inv_ = inverse(k1_);
  log_det_k0_ = log_abs_det(k0_);
  log_det_k1_ = log_abs_det(k1_);
}

double CovariancePair::log_pdf0(std::span<const cdouble> y) const {
  return -quad_form_real(y, k0_inv_) - static_cast<double>(dim()) * std::log(std::numbers::pi) -
         log_det_k0_;
}

double CovariancePair::log_pdf1(std::span<const cdouble> y) const {
  return -quad_form_real(y, k1_inv_) - static_cast<double>(dim()) * std::log(std::numbers::pi) -
         log_det_k1_;
}

CovariancePair covariance_matrices(const SystemConfig& cfg, const ChannelRealization& ch) {
  const EffectiveChannels h = effective_channels(cfg, ch);
  const std::size_t m = cfg.antennas;

  CMatrix k0 = CMatrix::identity(m);
  add_outer(k0, h.h1);
  add_outer(k0, h.h3);

  CMatrix k1 = CMatrix::identity(m);
  std::vector<cdouble> t(m), j(m);
  for (std::size_t i = 0; i < m; ++i) {
    t[i] = h.h1[i] + h.h2[i];
    j[i] = h.h3[i] + h.h4[i];
  }
  add_outer(k1, t);
  add_outer(k1, j);

  return CovariancePair(std::move(k0), std::move(k1));
}

double log_pdf(std::span<const cdouble> y, const CMatrix& k) {
  if (k.rows() != k.cols() || k.rows() != y.size())
    throw DimensionError("log_pdf: need square covariance matching vector length");
  return -quad_form_real(y, inverse(k)) -
         static_cast<double>(y.size()) * std::log(std::numbers::pi) - log_abs_det(k);
}

int detect_symbol(CMatrixView y, const CovariancePair& pair) {
  if (y.cols != pair.dim())
    throw DimensionError("detect_symbol: sample width does not match covariance size");
  if (y.rows == 0) throw DimensionError("detect_symbol: empty sample block");

  // statistic sum_n y^H (K0^{-1} - K1^{-1}) y against N ln(|K1|/|K0|)
  const CMatrix& inv0 = pair.k0_inv();
  const CMatrix& inv1 = pair.k1_inv();
  const std::size_t m = y.cols;
  double stat = 0.0;
  for (std::size_t n = 0; n < y.rows; ++n) {
    const cdouble* row = y.ptr + n * m;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      cdouble row_acc = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        row_acc += (inv0(i, j) - inv1(i, j)) * row[j];
      acc += (std::conj(row[i]) * row_acc).real();
    }
    stat += acc;
  }
  const double threshold =
      static_cast<double>(y.rows) * (pair.log_det_k1() - pair.log_det_k0());
  return stat <= threshold ? 0 : 1;  // tie resolves to state 0
}

std::vector<int> detect_frame(const ReceivedBlock& block, const CovariancePair& pair) {
  const std::size_t count = block.config.frame_bits;
  std::vector<int> states(count);
  for (std::size_t i = 0; i < count; ++i) states[i] = detect_symbol(block.symbol(i), pair);
  return diff_decode(states);
}

}  // namespace abjam
