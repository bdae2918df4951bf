#include "abjam/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace abjam {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double value) {
  if (value <= 0.0)
    throw ConfigError("linear_to_db: value must be > 0, got " + std::to_string(value));
  return 10.0 * std::log10(value);
}

double link_budget(double p_tx, double g_tx, double g_rx, double distance,
                   double exponent, double wavelength) {
  if (p_tx <= 0.0 || g_tx <= 0.0 || g_rx <= 0.0 || distance <= 0.0 || wavelength <= 0.0)
    throw ConfigError("link_budget: powers, gains, distance and wavelength must be > 0");
  const double kappa = std::pow(wavelength / (4.0 * std::numbers::pi), 2.0);
  return kappa * p_tx * g_tx * g_rx / std::pow(distance, exponent);
}

void SystemConfig::validate() const {
  if (antennas < 1) throw ConfigError("config: antennas must be >= 1");
  if (spreading < 1) throw ConfigError("config: spreading must be >= 1");
  if (frame_bits < 1) throw ConfigError("config: frame_bits must be >= 1");
  if (pilot_bits >= frame_bits)
    throw ConfigError("config: pilot_bits must be < frame_bits (got " +
                      std::to_string(pilot_bits) + " / " + std::to_string(frame_bits) + ")");
  if (pilot_bits % 2 != 0) throw ConfigError("config: pilot_bits must be even");
  if (!(alpha_tr > 0.0) || !(alpha_jr > 0.0))
    throw ConfigError("config: direct-path gains must be > 0");
  if (alpha_t_rel < 0.0 || alpha_j_rel < 0.0)
    throw ConfigError("config: relative backscatter gains must be >= 0");
  if (!(theta0 >= 0.0 && theta0 <= 1.0))
    throw ConfigError("config: theta0 must be in [0,1]");
}

std::vector<cdouble> sample_cscg(std::size_t count, Pcg32& rng) {
  std::vector<cdouble> out(count);
  for (auto& v : out) v = rng.cscg();
  return out;
}

ChannelRealization draw_channel(const SystemConfig& cfg, Pcg32& rng) {
  ChannelRealization ch;
  ch.f_t = sample_cscg(cfg.antennas, rng);
  ch.f_j = sample_cscg(cfg.antennas, rng);
  ch.f_b = sample_cscg(cfg.antennas, rng);
  ch.g_t = rng.cscg();
  ch.g_j = rng.cscg();
  return ch;
}

namespace {

// per-antenna source coefficients for a fixed backscatter state: the
// transmitter reaches antenna m directly and through the tag, likewise the
// jammer, so y_nm = a_m s_t + b_m s_j + noise
struct SourceCoeffs {
  std::vector<cdouble> a;
  std::vector<cdouble> b;
};

SourceCoeffs source_coeffs(const SystemConfig& cfg, const ChannelRealization& ch, int e) {
  const double sq_tr = std::sqrt(cfg.alpha_tr);
  const double sq_jr = std::sqrt(cfg.alpha_jr);
  const double sq_tb = std::sqrt(cfg.alpha_tb());
  const double sq_jb = std::sqrt(cfg.alpha_jb());
  SourceCoeffs c;
  c.a.resize(cfg.antennas);
  c.b.resize(cfg.antennas);
  const double state = static_cast<double>(e);
  for (std::size_t m = 0; m < cfg.antennas; ++m) {
    c.a[m] = ch.f_t[m] * sq_tr + state * ch.f_b[m] * ch.g_t * sq_tb;
    c.b[m] = ch.f_j[m] * sq_jr + state * ch.f_b[m] * ch.g_j * sq_jb;
  }
  return c;
}

void fill_symbol(cdouble* out, const SourceCoeffs& c, std::size_t spreading,
                 std::size_t antennas, Pcg32& rng) {
  for (std::size_t n = 0; n < spreading; ++n) {
    const cdouble s_t = rng.cscg();
    const cdouble s_j = rng.cscg();
    cdouble* row = out + n * antennas;
    for (std::size_t m = 0; m < antennas; ++m)
      row[m] = c.a[m] * s_t + c.b[m] * s_j + rng.cscg();
  }
}

void check_channel(const SystemConfig& cfg, const ChannelRealization& ch) {
  if (ch.f_t.size() != cfg.antennas || ch.f_j.size() != cfg.antennas ||
      ch.f_b.size() != cfg.antennas)
    throw DimensionError("channel realization does not match the antenna count");
}

}  // namespace

CMatrix received_symbol(const SystemConfig& cfg, const ChannelRealization& ch, int e,
                        Pcg32& rng) {
  cfg.validate();
  check_channel(cfg, ch);
  if (e != 0 && e != 1) throw DimensionError("received_symbol: state must be 0 or 1");
  CMatrix y(cfg.spreading, cfg.antennas);
  const SourceCoeffs c = source_coeffs(cfg, ch, e);
  fill_symbol(y.data().data(), c, cfg.spreading, cfg.antennas, rng);
  return y;
}

ReceivedBlock synthesize_frame(const SystemConfig& cfg, const ChannelRealization& ch,
                               const std::vector<int>& encoded, Pcg32& rng) {
  cfg.validate();
  check_channel(cfg, ch);
  if (encoded.size() != cfg.frame_bits)
    throw DimensionError("synthesize_frame: need " + std::to_string(cfg.frame_bits) +
                         " encoded states, got " + std::to_string(encoded.size()));
  ReceivedBlock block;
  block.config = cfg;
  block.channel = ch;
  block.encoded = encoded;
  block.samples.resize(cfg.frame_bits * cfg.spreading * cfg.antennas);

  // the two states reuse fixed coefficient sets; only sources/noise are
  // redrawn per RF sample
  const SourceCoeffs c0 = source_coeffs(cfg, ch, 0);
  const SourceCoeffs c1 = source_coeffs(cfg, ch, 1);
  const std::size_t stride = cfg.spreading * cfg.antennas;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    const int e = encoded[i];
    if (e != 0 && e != 1) throw DimensionError("synthesize_frame: states must be 0 or 1");
    fill_symbol(block.samples.data() + i * stride, e == 0 ? c0 : c1, cfg.spreading,
                cfg.antennas, rng);
  }
  return block;
}

}  // namespace abjam
