#pragma once
// Counter-seedable PCG32 (O'Neill's 64/32 LCG variant with output
// permutation) plus Box-Muller Gaussians.  Every Monte-Carlo consumer gets
// its own (seed, stream) pair, so trials are reproducible in isolation and
// independent of each other no matter how work is scheduled.

#include <complex>
#include <cstdint>

namespace abjam {

class Pcg32 {
 public:
  // same seed + same stream => same sequence; distinct streams from one
  // seed are independent generators
  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // uniform double in [0, 1) with 53 random bits
  double uniform();
  // uniform double in (0, 1], safe as a log() argument
  double uniform_pos();

  // standard normal via Box-Muller; draws one uniform pair per two values
  // and caches the second
  double gaussian();

  // circularly-symmetric complex Gaussian CN(0,1): (z0 + i z1) / sqrt(2)
  // from one fresh Box-Muller pair (never touches the gaussian() cache)
  std::complex<double> cscg();

 private:
  void pair(double& z0, double& z1);

  std::uint64_t state_;
  std::uint64_t inc_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// substream purposes: keeps training frames disjoint from evaluation
// frames and sweep points disjoint from each other under one master seed
enum class StreamPurpose : std::uint64_t {
  kEvalFrame = 0,    // BER / detector evaluation frames
  kRealization = 1,  // channel realizations for rate estimation
  kTrainFrame = 2,   // training-set frames
  kMisc = 3,         // weight init, shuffles, one-off draws
};

// stream id = purpose(8 bits) | sweep-point(16 bits) | trial(40 bits)
std::uint64_t substream(StreamPurpose purpose, std::uint64_t point, std::uint64_t trial);

}  // namespace abjam
