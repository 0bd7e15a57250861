#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "faeq/linalg.hpp"

namespace faeq {

/// Symmetric mid-rise alphabet for K bits per real dimension: the 2^K odd
/// integers {-(2^K-1), ..., -1, +1, ..., +(2^K-1)}. No zero element.
struct MidRiseAlphabet {
  int bits = 0;             // K
  std::vector<int> values;  // ascending
};

inline int alphabet_top(int bits) { return (1 << bits) - 1; }

inline void check_alphabet_bits(int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("alphabet bits must be in [1,8]");
}

inline MidRiseAlphabet alphabet_values(int bits) {
  check_alphabet_bits(bits);
  MidRiseAlphabet a;
  a.bits = bits;
  const int top = alphabet_top(bits);
  a.values.reserve(size_t(1) << bits);
  for (int v = -top; v <= top; v += 2) a.values.push_back(v);
  return a;
}

inline bool in_alphabet(int value, int bits) {
  return (value % 2 != 0) && std::abs(value) <= alphabet_top(bits);
}

/// Nearest alphabet value to z. Exact midpoints (even integers) round toward
/// +inf; magnitudes beyond the range clip to +-(2^K-1).
inline int quantize_to_alphabet(double z, int bits) {
  check_alphabet_bits(bits);
  if (!std::isfinite(z)) throw std::invalid_argument("quantize_to_alphabet: non-finite input");
  const int top = alphabet_top(bits);
  if (z >= top - 1) return top;
  if (z < -(top - 1)) return -top;
  return 2 * static_cast<int>(std::floor(z / 2.0)) + 1;
}

/// Bipolar bit-plane decomposition: value = sum_k 2^k * sign[k], sign in {-1,+1}.
/// One plane per significance; this is what a PIM row stores.
struct BitPlanes {
  int bits = 0;
  std::array<int8_t, 8> sign{};  // c_0 .. c_{K-1}
};

inline BitPlanes bitplane_encode(int value, int bits) {
  check_alphabet_bits(bits);
  if (!in_alphabet(value, bits))
    throw std::invalid_argument("bitplane_encode: value not in alphabet");
  BitPlanes p;
  p.bits = bits;
  // offset-binary index: m in [0, 2^K), bit k of m gives the sign of plane k
  const int m = (value + alphabet_top(bits)) / 2;
  for (int k = 0; k < bits; ++k) p.sign[size_t(k)] = ((m >> k) & 1) ? int8_t{+1} : int8_t{-1};
  return p;
}

inline int bitplane_decode(const BitPlanes& p) {
  int v = 0;
  for (int k = 0; k < p.bits; ++k) v += (1 << k) * p.sign[size_t(k)];
  return v;
}

/// L-bit two's-complement integer vector (a quantized received signal).
struct FixedPointVector {
  int bits = 0;  // word length L
  std::vector<int32_t> values;

  FixedPointVector() = default;
  FixedPointVector(int word_bits, std::vector<int32_t> v) : bits(word_bits), values(std::move(v)) {
    if (bits < 2 || bits > 31) throw std::invalid_argument("FixedPointVector: word length out of range");
    const int32_t lo = min_value(bits);
    const int32_t hi = max_value(bits);
    for (int32_t x : values)
      if (x < lo || x > hi) throw std::out_of_range("FixedPointVector: entry exceeds word length");
  }

  static int32_t min_value(int bits) { return -(int32_t{1} << (bits - 1)); }
  static int32_t max_value(int bits) { return (int32_t{1} << (bits - 1)) - 1; }
  size_t size() const { return values.size(); }
};

namespace detail {

// round half away from zero, then saturate to the two's-complement range
inline int32_t round_saturate(double x, int bits) {
  const double r = (x >= 0.0) ? std::floor(x + 0.5) : std::ceil(x - 0.5);
  const double lo = static_cast<double>(FixedPointVector::min_value(bits));
  const double hi = static_cast<double>(FixedPointVector::max_value(bits));
  return static_cast<int32_t>(std::clamp(r, lo, hi));
}

}  // namespace detail

/// Quantizes a complex vector to two L-bit two's-complement vectors
/// (real and imaginary parts), entry -> round(x/scale) with saturation.
inline std::pair<FixedPointVector, FixedPointVector> quantize_input(const ComplexVector& y,
                                                                    int bits, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("quantize_input: scale must be positive");
  std::vector<int32_t> re(size_t(y.size()));
  std::vector<int32_t> im(size_t(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    re[size_t(i)] = detail::round_saturate(y[i].real() / scale, bits);
    im[size_t(i)] = detail::round_saturate(y[i].imag() / scale, bits);
  }
  return {FixedPointVector(bits, std::move(re)), FixedPointVector(bits, std::move(im))};
}

/// Bit `plane` of one value's two's-complement encoding.
inline uint8_t extract_bitplane(int32_t value, int plane) {
  return static_cast<uint8_t>((static_cast<uint32_t>(value) >> plane) & 1u);
}

/// Bit ell of each entry's L-bit two's-complement encoding
/// (ell = L-1 is the sign plane).
inline std::vector<uint8_t> extract_bitplane(const FixedPointVector& v, int plane) {
  if (plane < 0 || plane >= v.bits) throw std::out_of_range("extract_bitplane: plane index out of range");
  std::vector<uint8_t> bits(v.values.size());
  for (size_t i = 0; i < v.values.size(); ++i) bits[i] = extract_bitplane(v.values[i], plane);
  return bits;
}

}  // namespace faeq
