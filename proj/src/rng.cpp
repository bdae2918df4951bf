#include "abjam/rng.hpp"

#include <cmath>
#include <numbers>

namespace abjam {

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) {
  // standard PCG stream setup: increment must be odd
  inc_ = (stream << 1u) | 1u;
  state_ = 0u;
  next_u32();
  state_ += seed;
  next_u32();
}

std::uint32_t Pcg32::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

std::uint64_t Pcg32::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32u) | next_u32();
}

double Pcg32::uniform() {
  // 53-bit mantissa from one 64-bit draw
  return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
}

double Pcg32::uniform_pos() {
  return 1.0 - uniform();  // (0, 1]
}

void Pcg32::pair(double& z0, double& z1) {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(phi);
  z1 = r * std::sin(phi);
}

double Pcg32::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double z0, z1;
  pair(z0, z1);
  spare_ = z1;
  has_spare_ = true;
  return z0;
}

std::complex<double> Pcg32::cscg() {
  double z0, z1;
  pair(z0, z1);
  return {z0 * std::numbers::sqrt2 / 2.0, z1 * std::numbers::sqrt2 / 2.0};
}

std::uint64_t substream(StreamPurpose purpose, std::uint64_t point, std::uint64_t trial) {
  return (static_cast<std::uint64_t>(purpose) << 56u) | ((point & 0xffffULL) << 40u) |
         (trial & 0xffffffffffULL);
}

}  // namespace abjam
