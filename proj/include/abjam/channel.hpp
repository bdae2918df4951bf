#pragma once
// Physical-layer model: one ambient transmitter and one reactive jammer
// both act as RF sources; a passive tag toggles its antenna impedance to
// backscatter their superposition toward an M-antenna receiver.  All
// fading coefficients, source symbols and noise are unit CSCG; average
// link strengths enter as linear power gains.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "abjam/errors.hpp"
#include "abjam/linalg.hpp"
#include "abjam/rng.hpp"

namespace abjam {

double db_to_linear(double db);
double linear_to_db(double value);

// average received power of a free-space link: (wavelength/4pi)^2 *
// p_tx * g_tx * g_rx / distance^exponent.  All arguments must be > 0.
double link_budget(double p_tx, double g_tx, double g_rx, double distance,
                   double exponent, double wavelength);

// simulation parameters; power gains stored LINEAR (convert dB at the
// CLI/config boundary, never inside the model)
struct SystemConfig {
  std::size_t antennas = 10;      // M, receive antennas
  std::size_t spreading = 50;     // N, RF samples per backscatter symbol
  std::size_t frame_bits = 100;   // I, bits per frame (pilots included)
  std::size_t pilot_bits = 20;    // P, leading pilot bits
  double alpha_tr = 3.1622776601683795;  // transmitter->receiver gain (5 dB)
  double alpha_jr = 5.011872336272722;   // jammer->receiver gain (7 dB)
  double alpha_t_rel = 0.03162277660168379;  // tag path gain relative to direct, tx (-15 dB)
  double alpha_j_rel = 0.03162277660168379;  // same for the jammer (-15 dB)
  double theta0 = 0.5;            // prior probability of backscatter state 0
  std::uint64_t seed = 1;         // master seed; substreams derive from it

  // backscatter-path gains are tied to the direct paths
  double alpha_tb() const { return alpha_t_rel * alpha_tr; }
  double alpha_jb() const { return alpha_j_rel * alpha_jr; }

  void validate() const;  // throws ConfigError on out-of-range fields
};

// one block-fading draw, constant over a frame
struct ChannelRealization {
  std::vector<cdouble> f_t;  // transmitter -> receiver, length M
  std::vector<cdouble> f_j;  // jammer -> receiver
  std::vector<cdouble> f_b;  // tag -> receiver
  cdouble g_t;               // transmitter -> tag
  cdouble g_j;               // jammer -> tag
};

// i.i.d. CN(0,1) vector of the given length
std::vector<cdouble> sample_cscg(std::size_t count, Pcg32& rng);

// draw order: f_t, f_j, f_b entrywise, then g_t, g_j
ChannelRealization draw_channel(const SystemConfig& cfg, Pcg32& rng);

// N x M received samples for one backscatter state e in {0,1}; row n holds
// the M antenna outputs of RF sample n.  Per sample the draw order is
// s_t, s_j, then the M noise entries.
CMatrix received_symbol(const SystemConfig& cfg, const ChannelRealization& ch, int e,
                        Pcg32& rng);

// a whole frame of received samples plus the snapshots that produced it
struct ReceivedBlock {
  SystemConfig config;
  ChannelRealization channel;
  std::vector<int> encoded;      // backscatter state per symbol, length I
  std::vector<cdouble> samples;  // I * N * M, symbol-major then row-major

  CMatrixView symbol(std::size_t i) const {
    return {samples.data() + i * config.spreading * config.antennas,
            config.spreading, config.antennas};
  }
};

ReceivedBlock synthesize_frame(const SystemConfig& cfg, const ChannelRealization& ch,
                               const std::vector<int>& encoded, Pcg32& rng);

}  // namespace abjam
