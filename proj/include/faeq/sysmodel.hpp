#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "faeq/linalg.hpp"
#include "faeq/rng.hpp"

namespace faeq {

/// Gray-labeled constellation, normalized to unit mean symbol energy.
/// labels[i] is the bit pattern of points[i], MSB first.
struct Constellation {
  std::string name;
  std::vector<Complex> points;
  std::vector<uint32_t> labels;
  int bits_per_symbol = 0;
  double symbol_energy = 1.0;  // Es; points are pre-normalized so this is 1

  const Complex& point_of_label(uint32_t label) const { return points.at(label_index.at(label)); }
  std::vector<size_t> label_index;  // label -> index into points

  static const Constellation& qpsk();
  static const Constellation& qam16();
  static const Constellation& by_name(std::string_view n);
};

namespace detail {

// per-axis Gray maps; code 0... on the positive side
inline double gray_axis2(uint32_t bit) { return bit ? -1.0 : +1.0; }

inline double gray_axis4(uint32_t hi, uint32_t lo) {
  // 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3 (adjacent levels differ in one bit)
  const uint32_t code = (hi << 1) | lo;
  switch (code) {
    case 0b00: return +3.0;
    case 0b01: return +1.0;
    case 0b11: return -1.0;
    default: return -3.0;
  }
}

inline Constellation make_qpsk() {
  Constellation c;
  c.name = "QPSK";
  c.bits_per_symbol = 2;
  const double a = 1.0 / std::sqrt(2.0);
  for (uint32_t label = 0; label < 4; ++label) {
    const uint32_t bi = (label >> 1) & 1;  // in-phase bit (MSB)
    const uint32_t bq = label & 1;
    c.points.push_back({a * gray_axis2(bi), a * gray_axis2(bq)});
    c.labels.push_back(label);
  }
  c.label_index.assign(4, 0);
  for (size_t i = 0; i < c.points.size(); ++i) c.label_index[c.labels[i]] = i;
  return c;
}

inline Constellation make_qam16() {
  Constellation c;
  c.name = "16QAM";
  c.bits_per_symbol = 4;
  const double a = 1.0 / std::sqrt(10.0);
  for (uint32_t label = 0; label < 16; ++label) {
    const uint32_t i_hi = (label >> 3) & 1;
    const uint32_t i_lo = (label >> 2) & 1;
    const uint32_t q_hi = (label >> 1) & 1;
    const uint32_t q_lo = label & 1;
    c.points.push_back({a * gray_axis4(i_hi, i_lo), a * gray_axis4(q_hi, q_lo)});
    c.labels.push_back(label);
  }
  c.label_index.assign(16, 0);
  for (size_t i = 0; i < c.points.size(); ++i) c.label_index[c.labels[i]] = i;
  return c;
}

}  // namespace detail

inline const Constellation& Constellation::qpsk() {
  static const Constellation c = detail::make_qpsk();
  return c;
}

inline const Constellation& Constellation::qam16() {
  static const Constellation c = detail::make_qam16();
  return c;
}

inline const Constellation& Constellation::by_name(std::string_view n) {
  if (n == "qpsk" || n == "QPSK") return qpsk();
  if (n == "qam16" || n == "16QAM" || n == "16qam") return qam16();
  throw std::invalid_argument("unknown constellation: " + std::string(n));
}

/// Uplink operating point: B antennas serve U single-antenna users.
struct UplinkScenario {
  int num_antennas = 0;        // B
  int num_users = 0;           // U
  double symbol_energy = 1.0;  // Es
  double noise_variance = 0.0; // N0 per complex entry
  double rho = 0.0;            // N0/Es

  UplinkScenario(int antennas, int users, double es, double n0)
      : num_antennas(antennas), num_users(users), symbol_energy(es), noise_variance(n0) {
    if (users < 1 || antennas < users) throw std::invalid_argument("scenario: need B >= U >= 1");
    if (!(es > 0.0)) throw std::invalid_argument("scenario: Es must be positive");
    if (n0 < 0.0) throw std::invalid_argument("scenario: N0 must be nonnegative");
    rho = n0 / es;
  }
};

/// i.i.d. CN(0,1) channel matrix, B x U.
inline ComplexMatrix generate_rayleigh_channel(int num_antennas, int num_users, uint64_t seed) {
  if (num_users < 1 || num_antennas < num_users)
    throw std::invalid_argument("generate_rayleigh_channel: need B >= U >= 1");
  Rng rng(derive_seed(seed, 0x48));
  ComplexMatrix h(num_antennas, num_users);
  for (int r = 0; r < num_antennas; ++r)
    for (int c = 0; c < num_users; ++c) h(r, c) = rng.complex_normal(1.0);
  return h;
}

/// y = H s + n with n i.i.d. CN(0, N0).
inline ComplexVector simulate_uplink(const ComplexMatrix& channel, const ComplexVector& symbols,
                                     double noise_variance, uint64_t seed) {
  if (channel.cols() != symbols.size())
    throw std::invalid_argument("simulate_uplink: dimension mismatch");
  if (noise_variance < 0.0) throw std::invalid_argument("simulate_uplink: N0 must be nonnegative");
  ComplexVector y = channel * symbols;
  if (noise_variance > 0.0) {
    Rng rng(derive_seed(seed, 0x4e));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.complex_normal(noise_variance);
  }
  return y;
}

/// L-MMSE equalizer W^H = (H^H H + rho I)^{-1} H^H (U x B). Solved through an
/// LDLT factorization of the U x U Gram matrix. The Gram condition estimate is
/// written to *condition_out when requested; at rho = 0 a numerically singular
/// system throws with the estimate in the message.
inline ComplexMatrix lmmse_equalizer(const ComplexMatrix& channel, double rho,
                                     double* condition_out = nullptr) {
  if (rho < 0.0) throw std::invalid_argument("lmmse_equalizer: rho must be nonnegative");
  const Eigen::Index users = channel.cols();
  const ComplexMatrix gram = channel.adjoint() * channel;
  ComplexMatrix reg = gram;
  for (Eigen::Index u = 0; u < users; ++u) reg(u, u) += rho;

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(reg, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  const double cond = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (condition_out) *condition_out = cond;
  if (rho == 0.0 && !(lmin > lmax * 1e-14))
    throw std::runtime_error("lmmse_equalizer: singular system at rho = 0 (condition estimate " +
                             std::to_string(cond) + ")");

  return reg.ldlt().solve(channel.adjoint());
}

/// shat = W^H y.
inline ComplexVector apply_equalizer(const ComplexMatrix& wh, const ComplexVector& y) {
  if (wh.cols() != y.size()) throw std::invalid_argument("apply_equalizer: dimension mismatch");
  return wh * y;
}

/// Per-UE contribution to the post-equalization MSE:
/// Es * ||H^H v - e_u||^2 + N0 * ||v||^2 with v the column for user u.
inline double per_user_mse(const ComplexVector& v, const ComplexMatrix& channel, double es,
                           double n0, int user) {
  ComplexVector t = channel.adjoint() * v;
  t[user] -= 1.0;
  return es * t.squaredNorm() + n0 * v.squaredNorm();
}

/// E ||V^H y - s||^2 in closed form: Es ||V^H H - I||_F^2 + N0 ||V^H||_F^2.
inline double mse_closed_form(const ComplexMatrix& vh, const ComplexMatrix& channel, double es,
                              double n0) {
  if (vh.cols() != channel.rows() || vh.rows() != channel.cols())
    throw std::invalid_argument("mse_closed_form: dimension mismatch");
  if (!(es > 0.0) || n0 < 0.0) throw std::invalid_argument("mse_closed_form: bad Es/N0");
  ComplexMatrix m = vh * channel;
  for (Eigen::Index u = 0; u < m.rows(); ++u) m(u, u) -= 1.0;
  return es * m.squaredNorm() + n0 * vh.squaredNorm();
}

/// Empirical E ||V^H y - s||^2 over random data and noise. Symbols are drawn
/// uniformly from the constellation and scaled by sqrt(Es) so E[s s^H] = Es I.
/// Writes the standard error of the estimate to *std_err_out when requested.
inline double mse_monte_carlo(const ComplexMatrix& vh, const ComplexMatrix& channel, double es,
                              double n0, const Constellation& constellation, long trials,
                              uint64_t seed, double* std_err_out = nullptr) {
  if (vh.cols() != channel.rows() || vh.rows() != channel.cols())
    throw std::invalid_argument("mse_monte_carlo: dimension mismatch");
  if (trials < 1) throw std::invalid_argument("mse_monte_carlo: trials must be >= 1");
  const Eigen::Index users = channel.cols();
  const double amp = std::sqrt(es);
  Rng rng(derive_seed(seed, 0x4d));
  double sum = 0.0;
  double sum_sq = 0.0;
  ComplexVector s(users);
  for (long t = 0; t < trials; ++t) {
    for (Eigen::Index u = 0; u < users; ++u)
      s[u] = amp * constellation.points[size_t(rng.uniform_int(constellation.points.size()))];
    ComplexVector y = channel * s;
    if (n0 > 0.0)
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.complex_normal(n0);
    const double err = (vh * y - s).squaredNorm();
    sum += err;
    sum_sq += err * err;
  }
  const double mean = sum / double(trials);
  if (std_err_out) {
    const double var = std::max(0.0, sum_sq / double(trials) - mean * mean);
    *std_err_out = std::sqrt(var / double(trials));
  }
  return mean;
}

/// Maps a bit string (values 0/1, length divisible by bits_per_symbol, MSB
/// first within each symbol) onto constellation points.
inline ComplexVector modulate(const std::vector<uint8_t>& bits, const Constellation& c) {
  if (bits.size() % size_t(c.bits_per_symbol) != 0)
    throw std::invalid_argument("modulate: bit count not divisible by bits_per_symbol");
  const size_t n = bits.size() / size_t(c.bits_per_symbol);
  ComplexVector s(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    uint32_t label = 0;
    for (int b = 0; b < c.bits_per_symbol; ++b)
      label = (label << 1) | (bits[i * size_t(c.bits_per_symbol) + size_t(b)] & 1u);
    s[Eigen::Index(i)] = c.point_of_label(label);
  }
  return s;
}

/// Nearest-point hard detection; ties go to the lexicographically smallest label.
inline std::vector<uint8_t> detect(const ComplexVector& shat, const Constellation& c) {
  std::vector<uint8_t> bits;
  bits.reserve(size_t(shat.size()) * size_t(c.bits_per_symbol));
  for (Eigen::Index i = 0; i < shat.size(); ++i) {
    uint32_t best_label = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (uint32_t label = 0; label < (1u << c.bits_per_symbol); ++label) {
      const double d = std::norm(shat[i] - c.point_of_label(label));
      if (d < best_dist) {
        best_dist = d;
        best_label = label;
      }
    }
    for (int b = c.bits_per_symbol - 1; b >= 0; --b)
      bits.push_back(static_cast<uint8_t>((best_label >> b) & 1u));
  }
  return bits;
}

}  // namespace faeq
