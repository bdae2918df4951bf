#pragma once
// Modulo-2 differential coding of tag bits and frame assembly.  The tag
// backscatters the running XOR of the bit stream against a fixed reference
// state, so the receiver can decode from state transitions without knowing
// which absolute state maps to which bit.

#include <cstddef>
#include <vector>

#include "abjam/errors.hpp"

namespace abjam {

// reference state prepended before the first bit
inline constexpr int kDiffReference = 1;

// e[i] = e[i-1] XOR b[i], e[0] = reference; returns the I backscatter
// states (reference itself not included).  Bits must be 0/1.
std::vector<int> diff_encode(const std::vector<int>& bits, int reference = kDiffReference);

// inverse map: b[i] = e[i] XOR e[i-1]
std::vector<int> diff_decode(const std::vector<int>& states, int reference = kDiffReference);

// one tag frame: pilot bits followed by data bits, plus the encoded states
struct BackscatterFrame {
  std::vector<int> bits;     // pilot_count pilots then data, length I
  std::size_t pilot_count;   // P
  std::vector<int> encoded;  // diff_encode(bits), length I
};

// assemble a frame around `data_bits` with P pilot bits in the fixed
// deterministic pattern P/2 zeros then P/2 ones (P must be even)
BackscatterFrame make_frame(const std::vector<int>& data_bits, std::size_t pilot_count);

}  // namespace abjam
