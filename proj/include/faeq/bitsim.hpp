#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "faeq/alphabet.hpp"
#include "faeq/fame.hpp"
#include "faeq/linalg.hpp"

namespace faeq {

/// Per-vector latency of one matrix-vector product on a given datapath.
struct CycleReport {
  long cycles = 0;
  std::string architecture;
};

/// Bit-cell array emulation of the in-memory datapath. The complex product
/// X^H y is embedded into the real block form
///   [[Re(X^H), -Im(X^H)], [Im(X^H), Re(X^H)]] * [Re(y); Im(y)],
/// and every real matrix row is split into `bits` bipolar planes
/// (value = sum_k 2^k c_k, c_k in {+1,-1}). Each plane occupies one array
/// row of sign bits (1 for +1, 0 for -1), packed 64 columns per word.
struct PpacArray {
  int bits = 0;         // K: planes per real row
  int num_users = 0;    // U
  int num_antennas = 0; // B
  int n_rows = 0;       // 2*K*U
  int n_cols = 0;       // 2*B
  int words_per_row = 0;
  std::vector<uint64_t> sign_bits;  // row-major packed, tail bits zero
  std::vector<int> zero_count;      // zeros (i.e. -1 cells) per row

  /// Array row holding plane `k` of real output `r`.
  int row_index(int r, int k) const { return r * bits + k; }

  bool get_bit(int row, int col) const {
    return (sign_bits[size_t(row) * size_t(words_per_row) + size_t(col / 64)] >>
            unsigned(col % 64)) & 1u;
  }

  /// Overwrites one row from explicit +1/-1 cell values (test scaffolding
  /// and load path share it so zero_count stays consistent by construction).
  void set_row_from_signs(int row, const std::vector<int>& signs) {
    if (int(signs.size()) != n_cols)
      throw std::invalid_argument("PpacArray::set_row_from_signs: length mismatch");
    int zeros = 0;
    for (int w = 0; w < words_per_row; ++w)
      sign_bits[size_t(row) * size_t(words_per_row) + size_t(w)] = 0;
    for (int c = 0; c < n_cols; ++c) {
      if (signs[size_t(c)] == 1)
        sign_bits[size_t(row) * size_t(words_per_row) + size_t(c / 64)] |= uint64_t(1)
                                                                           << unsigned(c % 64);
      else if (signs[size_t(c)] == -1)
        ++zeros;
      else
        throw std::invalid_argument("PpacArray::set_row_from_signs: cells must be +1 or -1");
    }
    zero_count[size_t(row)] = zeros;
  }

  /// Empty array of the given geometry (all cells -1 until rows are set).
  static PpacArray with_geometry(int bits, int n_rows, int n_cols) {
    PpacArray arr;
    arr.bits = bits;
    arr.n_rows = n_rows;
    arr.n_cols = n_cols;
    arr.words_per_row = (n_cols + 63) / 64;
    arr.sign_bits.assign(size_t(n_rows) * size_t(arr.words_per_row), 0);
    arr.zero_count.assign(size_t(n_rows), n_cols);
    return arr;
  }
};

/// Integer block matrix [[Re, -Im], [Im, Re]] of a complex matrix whose
/// entries have integer real and imaginary parts.
inline Eigen::MatrixXi real_decomposition(const ComplexMatrix& xh) {
  const Eigen::Index u = xh.rows();
  const Eigen::Index b = xh.cols();
  Eigen::MatrixXi m(2 * u, 2 * b);
  for (Eigen::Index r = 0; r < u; ++r)
    for (Eigen::Index c = 0; c < b; ++c) {
      const int re = int(std::llround(xh(r, c).real()));
      const int im = int(std::llround(xh(r, c).imag()));
      m(r, c) = re;
      m(r, b + c) = -im;
      m(u + r, c) = im;
      m(u + r, b + c) = re;
    }
  return m;
}

/// Loads a finite-alphabet equalizer into the bit-cell array: one group of
/// `bits` bipolar rows per real output, bit-plane decomposed columnwise.
inline PpacArray ppac_load(const FiniteAlphabetEqualizer& fae) {
  fae.validate();
  const int users = fae.num_users();
  const int antennas = fae.num_antennas();
  PpacArray arr = PpacArray::with_geometry(fae.bits, 2 * fae.bits * users, 2 * antennas);
  arr.num_users = users;
  arr.num_antennas = antennas;

  const Eigen::MatrixXi real = real_decomposition(fae.Xh);
  std::vector<int> signs(size_t(arr.n_cols));
  for (int r = 0; r < 2 * users; ++r)
    for (int k = 0; k < fae.bits; ++k) {
      for (int c = 0; c < arr.n_cols; ++c)
        signs[size_t(c)] = bitplane_encode(real(r, c), fae.bits).sign[size_t(k)];
      arr.set_row_from_signs(arr.row_index(r, k), signs);
    }
  return arr;
}

namespace detail {

inline std::vector<uint64_t> pack_input_bits(const std::vector<uint8_t>& input) {
  std::vector<uint64_t> words((input.size() + 63) / 64, 0);
  for (size_t i = 0; i < input.size(); ++i)
    if (input[i] & 1u) words[i / 64] |= uint64_t(1) << unsigned(i % 64);
  return words;
}

inline int64_t row_op_packed(const PpacArray& arr, int row, const std::vector<uint64_t>& input) {
  int64_t pop = 0;
  const size_t base = size_t(row) * size_t(arr.words_per_row);
  for (int w = 0; w < arr.words_per_row; ++w) {
    uint64_t x = ~(arr.sign_bits[base + size_t(w)] ^ input[size_t(w)]);
    const int valid = std::min(64, arr.n_cols - 64 * w);
    if (valid < 64) x &= (uint64_t(1) << unsigned(valid)) - 1;
    pop += std::popcount(x);
  }
  return pop - arr.zero_count[size_t(row)];
}

/// Bit-serial product of the whole array with an integer input vector
/// (length n_cols, entries representable in `serial_bits` two's-complement
/// bits). Outputs one accumulator per group of `arr.bits` rows. When `trace`
/// is given it receives, per cycle, the accumulator vector after that cycle
/// (cycle 0 consumes the sign plane).
inline std::vector<int64_t> bit_serial_mvp(const PpacArray& arr,
                                           const std::vector<int32_t>& input, int serial_bits,
                                           std::vector<std::vector<int64_t>>* trace = nullptr) {
  if (int(input.size()) != arr.n_cols)
    throw std::invalid_argument("bit_serial_mvp: input length mismatch");
  if (serial_bits < 2 || serial_bits > 31)
    throw std::invalid_argument("bit_serial_mvp: serial bit width out of range");
  const int64_t lo = -(int64_t(1) << unsigned(serial_bits - 1));
  const int64_t hi = (int64_t(1) << unsigned(serial_bits - 1)) - 1;
  for (int32_t v : input)
    if (v < lo || v > hi)
      throw std::invalid_argument("bit_serial_mvp: input entry does not fit the bit width");
  if (arr.bits < 1 || arr.n_rows % arr.bits != 0)
    throw std::invalid_argument("bit_serial_mvp: malformed array");

  const int outputs = arr.n_rows / arr.bits;
  std::vector<int64_t> acc(size_t(outputs), 0);
  if (trace) trace->clear();

  std::vector<uint8_t> plane(input.size());
  for (int ell = serial_bits - 1; ell >= 0; --ell) {
    for (size_t i = 0; i < input.size(); ++i) plane[i] = extract_bitplane(input[i], ell);
    const std::vector<uint64_t> words = pack_input_bits(plane);
    for (int r = 0; r < outputs; ++r) {
      int64_t q = 0;
      for (int k = 0; k < arr.bits; ++k)
        q += (int64_t(1) << unsigned(k)) * row_op_packed(arr, r * arr.bits + k, words);
      acc[size_t(r)] = (ell == serial_bits - 1) ? -q : 2 * acc[size_t(r)] + q;
    }
    if (trace) trace->push_back(acc);
  }
  return acc;
}

}  // namespace detail

/// Inner product of one stored bipolar row with a 0/1 input vector, computed
/// the way the row ALU does: popcount of the XNOR between stored sign bits
/// and input bits, offset by the row's count of -1 cells.
inline int64_t ppac_row_op(const PpacArray& arr, int row, const std::vector<uint8_t>& input_bits) {
  if (row < 0 || row >= arr.n_rows) throw std::invalid_argument("ppac_row_op: bad row");
  if (int(input_bits.size()) != arr.n_cols)
    throw std::invalid_argument("ppac_row_op: input length mismatch");
  return detail::row_op_packed(arr, row, detail::pack_input_bits(input_bits));
}

/// Bit-serial matrix-vector product: feeds [Re(y); Im(y)] one bit-plane per
/// cycle, MSB (sign plane, negated) first, accumulating acc <- 2*acc + q.
/// Returns the 2U exact integer entries of the real-decomposed product;
/// entry r < U is Re((X^H y)_r), entry U + r is Im((X^H y)_r). Takes exactly
/// `serial_bits` cycles regardless of data.
inline std::vector<int64_t> ppac_mvp(const PpacArray& arr, const FixedPointVector& y_re,
                                     const FixedPointVector& y_im, int serial_bits,
                                     CycleReport* report = nullptr,
                                     std::vector<std::vector<int64_t>>* trace = nullptr) {
  if (arr.num_users < 1 || arr.n_rows != 2 * arr.bits * arr.num_users ||
      arr.n_cols != 2 * arr.num_antennas)
    throw std::invalid_argument("ppac_mvp: array was not produced by ppac_load");
  if (int(y_re.values.size()) != arr.num_antennas || int(y_im.values.size()) != arr.num_antennas)
    throw std::invalid_argument("ppac_mvp: input length mismatch");
  std::vector<int32_t> input;
  input.reserve(size_t(arr.n_cols));
  input.insert(input.end(), y_re.values.begin(), y_re.values.end());
  input.insert(input.end(), y_im.values.begin(), y_im.values.end());
  std::vector<int64_t> out = detail::bit_serial_mvp(arr, input, serial_bits, trace);
  if (report) *report = CycleReport{serial_bits, "ppac"};
  return out;
}

/// Precision of the per-user scale multiplier.
struct BetaMode {
  enum class Kind { kFloat, kFixed };
  Kind kind = Kind::kFloat;
  int frac_bits = 0;

  static BetaMode floating() { return {}; }
  static BetaMode fixed(int frac_bits) {
    if (frac_bits < 1 || frac_bits > 30)
      throw std::invalid_argument("BetaMode::fixed: frac_bits out of range");
    return {Kind::kFixed, frac_bits};
  }
};

namespace detail {

/// shat_u = conj(beta_u) * z_u with z integer-valued. Float mode multiplies
/// in double precision. Fixed mode rounds conj(beta) to frac_bits fractional
/// bits (half away from zero) and keeps the integer-times-Q products at
/// exactly frac_bits fractional bits, which is lossless for the product.
inline Complex apply_beta(int64_t z_re, int64_t z_im, Complex beta, const BetaMode& mode) {
  if (mode.kind == BetaMode::Kind::kFloat)
    return std::conj(beta) * Complex(double(z_re), double(z_im));
  const double scale = double(int64_t(1) << unsigned(mode.frac_bits));
  const auto q = [&](double v) -> int64_t {
    const double s = v * scale;
    return int64_t(s >= 0.0 ? std::floor(s + 0.5) : std::ceil(s - 0.5));
  };
  const int64_t b_re = q(beta.real());
  const int64_t b_im = q(-beta.imag());  // conj(beta)
  const __int128 p_re = __int128(b_re) * z_re - __int128(b_im) * z_im;
  const __int128 p_im = __int128(b_re) * z_im + __int128(b_im) * z_re;
  return {double(int64_t(p_re)) / scale, double(int64_t(p_im)) / scale};
}

}  // namespace detail

/// Full equalization on the bit-cell array: bit-serial X^H y followed by the
/// per-user scalar multiply shat_u = conj(beta_u) * (X^H y)_u.
inline ComplexVector ppac_equalize(const PpacArray& arr, const ComplexVector& beta,
                                   const FixedPointVector& y_re, const FixedPointVector& y_im,
                                   int serial_bits, const BetaMode& mode = BetaMode::floating(),
                                   CycleReport* report = nullptr) {
  if (int(beta.size()) != arr.num_users)
    throw std::invalid_argument("ppac_equalize: beta length mismatch");
  const std::vector<int64_t> z = ppac_mvp(arr, y_re, y_im, serial_bits, report);
  ComplexVector shat(arr.num_users);
  for (int u = 0; u < arr.num_users; ++u)
    shat[u] = detail::apply_beta(z[size_t(u)], z[size_t(arr.num_users + u)], beta[u], mode);
  return shat;
}

/// Multiply-accumulate array: M MAC units per user, each covering a B/M-entry
/// partition, reduced over a binary adder tree with fixed adjacent pairing.
struct MacArrayConfig {
  int mac_units = 1;  // M
  int num_antennas = 0;
  int num_users = 0;

  void validate() const {
    if (num_users < 1 || num_antennas < 1)
      throw std::invalid_argument("MacArrayConfig: bad dimensions");
    if (mac_units < 1 || mac_units > num_antennas ||
        (mac_units & (mac_units - 1)) != 0 || num_antennas % mac_units != 0)
      throw std::invalid_argument(
          "MacArrayConfig: M must be a power of two that divides the antenna count");
  }

  long cycles() const {
    long t = num_antennas / mac_units;
    for (int m = mac_units; m > 1; m >>= 1) ++t;  // + log2(M)
    return t;
  }
};

/// Equalization on the MAC array. Partial complex inner products are exact
/// in 64-bit integers; the tree reduction and the beta multiply match
/// ppac_equalize bit for bit, only the cycle count differs.
inline ComplexVector mac_mvp(const FiniteAlphabetEqualizer& fae, const FixedPointVector& y_re,
                             const FixedPointVector& y_im, int serial_bits,
                             const MacArrayConfig& cfg, CycleReport* report = nullptr,
                             const BetaMode& mode = BetaMode::floating()) {
  cfg.validate();
  fae.validate();
  if (fae.num_antennas() != cfg.num_antennas || fae.num_users() != cfg.num_users)
    throw std::invalid_argument("mac_mvp: equalizer does not match the array geometry");
  if (int(y_re.values.size()) != cfg.num_antennas || int(y_im.values.size()) != cfg.num_antennas)
    throw std::invalid_argument("mac_mvp: input length mismatch");
  const int64_t lo = -(int64_t(1) << unsigned(serial_bits - 1));
  const int64_t hi = (int64_t(1) << unsigned(serial_bits - 1)) - 1;
  if (serial_bits < 2 || serial_bits > 31)
    throw std::invalid_argument("mac_mvp: serial bit width out of range");
  for (const auto& half : {y_re.values, y_im.values})
    for (int32_t v : half)
      if (v < lo || v > hi)
        throw std::invalid_argument("mac_mvp: input entry does not fit the bit width");

  const int chunk = cfg.num_antennas / cfg.mac_units;
  ComplexVector shat(cfg.num_users);
  std::vector<int64_t> part_re(size_t(cfg.mac_units));
  std::vector<int64_t> part_im(size_t(cfg.mac_units));
  for (int u = 0; u < cfg.num_users; ++u) {
    for (int m = 0; m < cfg.mac_units; ++m) {
      int64_t acc_re = 0;
      int64_t acc_im = 0;
      for (int i = m * chunk; i < (m + 1) * chunk; ++i) {
        const int64_t x_re = int64_t(std::llround(fae.Xh(u, i).real()));
        const int64_t x_im = int64_t(std::llround(fae.Xh(u, i).imag()));
        acc_re += x_re * y_re.values[size_t(i)] - x_im * y_im.values[size_t(i)];
        acc_im += x_re * y_im.values[size_t(i)] + x_im * y_re.values[size_t(i)];
      }
      part_re[size_t(m)] = acc_re;
      part_im[size_t(m)] = acc_im;
    }
    for (int width = cfg.mac_units; width > 1; width >>= 1)
      for (int i = 0; i < width / 2; ++i) {
        part_re[size_t(i)] = part_re[size_t(2 * i)] + part_re[size_t(2 * i + 1)];
        part_im[size_t(i)] = part_im[size_t(2 * i)] + part_im[size_t(2 * i + 1)];
      }
    shat[u] = detail::apply_beta(part_re[0], part_im[0], fae.beta[u], mode);
  }
  if (report) *report = CycleReport{cfg.cycles(), "mac"};
  return shat;
}

}  // namespace faeq
