#include "abjam/coding.hpp"

#include <string>

namespace abjam {

namespace {

void require_binary(const std::vector<int>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0 && v[i] != 1)
      throw DimensionError(std::string(what) + ": element " + std::to_string(i) +
                           " is " + std::to_string(v[i]) + ", want 0 or 1");
}

}  // namespace

std::vector<int> diff_encode(const std::vector<int>& bits, int reference) {
  require_binary(bits, "diff_encode bits");
  if (reference != 0 && reference != 1)
    throw DimensionError("diff_encode: reference must be 0 or 1");
  std::vector<int> states(bits.size());
  int prev = reference;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    prev ^= bits[i];
    states[i] = prev;
  }
  return states;
}

std::vector<int> diff_decode(const std::vector<int>& states, int reference) {
  require_binary(states, "diff_decode states");
  if (reference != 0 && reference != 1)
    throw DimensionError("diff_decode: reference must be 0 or 1");
  std::vector<int> bits(states.size());
  int prev = reference;
  for (std::size_t i = 0; i < states.size(); ++i) {
    bits[i] = states[i] ^ prev;
    prev = states[i];
  }
  return bits;
}

BackscatterFrame make_frame(const std::vector<int>& data_bits, std::size_t pilot_count) {
  if (pilot_count % 2 != 0)
    throw DimensionError("make_frame: pilot count must be even, got " +
                         std::to_string(pilot_count));
  require_binary(data_bits, "make_frame data bits");
  BackscatterFrame frame;
  frame.pilot_count = pilot_count;
  frame.bits.reserve(pilot_count + data_bits.size());
  frame.bits.assign(pilot_count / 2, 0);
  frame.bits.insert(frame.bits.end(), pilot_count / 2, 1);
  frame.bits.insert(frame.bits.end(), data_bits.begin(), data_bits.end());
  frame.encoded = diff_encode(frame.bits);
  return frame;
}

}  // namespace abjam
