#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "faeq/alphabet.hpp"
#include "faeq/linalg.hpp"
#include "faeq/sysmodel.hpp"

namespace faeq {

/// Finite-alphabet equalizer V^H = diag(beta^*) X^H. Row u of Xh is x_u^H,
/// so every entry of Xh has real and imaginary parts drawn from the mid-rise
/// alphabet for `bits`. shat_u = conj(beta_u) * (x_u^H y).
struct FiniteAlphabetEqualizer {
  ComplexMatrix Xh;    // U x B, row u = x_u^H
  ComplexVector beta;  // U complex scale factors
  int bits = 1;

  int num_users() const { return int(Xh.rows()); }
  int num_antennas() const { return int(Xh.cols()); }

  /// The alphabet-valued column vector x_u (B x 1).
  ComplexVector x_column(int user) const { return Xh.row(user).adjoint(); }

  /// Dense U x B matrix V^H = diag(beta^*) X^H.
  ComplexMatrix full_matrix() const { return beta.conjugate().asDiagonal() * Xh; }

  /// shat = diag(beta^*) X^H y without materializing the dense matrix.
  ComplexVector apply(const ComplexVector& y) const {
    if (Xh.cols() != y.size())
      throw std::invalid_argument("FiniteAlphabetEqualizer::apply: dimension mismatch");
    ComplexVector shat = Xh * y;
    for (Eigen::Index u = 0; u < shat.size(); ++u) shat[u] *= std::conj(beta[u]);
    return shat;
  }

  /// Checks shape consistency and that every Xh entry lies on the alphabet.
  void validate() const {
    check_alphabet_bits(bits);
    if (Xh.rows() != beta.size())
      throw std::invalid_argument("FiniteAlphabetEqualizer: beta/Xh row mismatch");
    if (Xh.rows() < 1 || Xh.cols() < 1)
      throw std::invalid_argument("FiniteAlphabetEqualizer: empty matrix");
    if (!all_finite(beta)) throw std::invalid_argument("FiniteAlphabetEqualizer: bad beta");
    for (Eigen::Index r = 0; r < Xh.rows(); ++r)
      for (Eigen::Index c = 0; c < Xh.cols(); ++c) {
        const Complex e = Xh(r, c);
        const bool integral = e.real() == std::nearbyint(e.real()) &&
                              e.imag() == std::nearbyint(e.imag());
        if (!integral || !in_alphabet(int(e.real()), bits) || !in_alphabet(int(e.imag()), bits))
          throw std::invalid_argument("FiniteAlphabetEqualizer: entry off the alphabet");
      }
  }
};

/// MSE-optimal complex scale for a fixed vector x and user u:
/// beta = Es (x^H h_u) / (Es ||H^H x||^2 + N0 ||x||^2), the stationary point
/// of Es ||H^H (beta x) - e_u||^2 + N0 ||beta x||^2 in beta. When the
/// denominator vanishes with x nonzero (N0 = 0 and H^H x = 0) the objective
/// no longer depends on beta and 0 is returned.
inline Complex optimal_beta(const ComplexVector& x, const ComplexMatrix& channel, double es,
                            double n0, int user) {
  if (x.size() != channel.rows()) throw std::invalid_argument("optimal_beta: dimension mismatch");
  if (user < 0 || user >= channel.cols()) throw std::invalid_argument("optimal_beta: bad user");
  if (x.squaredNorm() == 0.0) throw std::invalid_argument("optimal_beta: zero x");
  const double denom = es * (channel.adjoint() * x).squaredNorm() + n0 * x.squaredNorm();
  if (!(denom > 0.0)) return Complex(0.0, 0.0);
  return es * x.dot(channel.col(user)) / denom;  // x.dot(h) = x^H h
}

/// Projects z onto the scaled alphabet: finds (beta, x) with x entrywise on
/// the mid-rise alphabet approximately minimizing ||z - beta x||. Starts from
/// the scale that maps the largest component magnitude onto the top level,
/// then alternates entrywise quantization of z/beta with the least-squares
/// scale beta = (x^H z)/||x||^2, returning the best pair seen — never worse
/// than the initial scale-and-quantize candidate.
inline std::pair<Complex, ComplexVector> project_scaled_alphabet(const ComplexVector& z, int bits,
                                                                 int alternations = 3) {
  check_alphabet_bits(bits);
  if (z.size() < 1) throw std::invalid_argument("project_scaled_alphabet: empty input");
  if (alternations < 1)
    throw std::invalid_argument("project_scaled_alphabet: alternations must be >= 1");
  const double top = double(alphabet_top(bits));

  double peak = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    peak = std::max({peak, std::abs(z[i].real()), std::abs(z[i].imag())});
  if (peak == 0.0) throw std::invalid_argument("project_scaled_alphabet: zero input");

  Complex beta(peak / top, 0.0);
  ComplexVector x(z.size());
  Complex best_beta = beta;
  ComplexVector best_x;
  double best_err = std::numeric_limits<double>::infinity();

  for (int it = 0; it < alternations; ++it) {
    if (beta == Complex(0.0, 0.0)) break;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Complex w = z[i] / beta;
      x[i] = Complex(double(quantize_to_alphabet(w.real(), bits)),
                     double(quantize_to_alphabet(w.imag(), bits)));
    }
    beta = x.dot(z) / x.squaredNorm();  // x.dot(z) = x^H z
    const double err = (z - beta * x).norm();
    if (err < best_err) {
      best_err = err;
      best_beta = beta;
      best_x = x;
    }
  }
  return {best_beta, best_x};
}

/// Quantize-then-refit design: scale each L-MMSE row so its largest
/// component magnitude lands on the top alphabet level, quantize real and
/// imaginary parts entrywise, then fit the MSE-optimal beta to the result.
inline FiniteAlphabetEqualizer flmmse_design(const ComplexMatrix& channel, double es, double n0,
                                             int bits) {
  check_alphabet_bits(bits);
  if (!(es > 0.0) || n0 < 0.0) throw std::invalid_argument("flmmse_design: bad Es/N0");
  const ComplexMatrix wh = lmmse_equalizer(channel, n0 / es);
  const Eigen::Index users = channel.cols();

  FiniteAlphabetEqualizer eq;
  eq.bits = bits;
  eq.Xh.resize(users, channel.rows());
  eq.beta.resize(users);
  for (Eigen::Index u = 0; u < users; ++u) {
    const ComplexVector w = wh.row(u).adjoint();
    if (w.squaredNorm() == 0.0)
      throw std::runtime_error("flmmse_design: all-zero equalizer row");
    // Single scale-and-quantize pass == the first projection candidate.
    const auto [beta0, x] = project_scaled_alphabet(w, bits, 1);
    (void)beta0;
    eq.Xh.row(u) = x.adjoint();
    eq.beta[u] = optimal_beta(x, channel, es, n0, int(u));
  }
  return eq;
}

/// Gradient of f(v) = Es ||H^H v - e_u||^2 + N0 ||v||^2 with respect to v
/// (Wirtinger convention, scaled so a gradient step v - tau * g descends):
/// g = 2 Es H (H^H v - e_u) + 2 N0 v. Vanishes exactly at the L-MMSE column.
inline ComplexVector fbs_gradient(const ComplexVector& v, const ComplexMatrix& channel, double es,
                                  double n0, int user) {
  if (v.size() != channel.rows()) throw std::invalid_argument("fbs_gradient: dimension mismatch");
  if (user < 0 || user >= channel.cols()) throw std::invalid_argument("fbs_gradient: bad user");
  ComplexVector r = channel.adjoint() * v;
  r[user] -= 1.0;
  return 2.0 * es * (channel * r) + 2.0 * n0 * v;
}

enum class StepRule { kInverseLipschitz, kFixed };

struct FbsConfig {
  int max_iters = 100;
  StepRule step_rule = StepRule::kInverseLipschitz;
  double fixed_step = 0.0;     // used when step_rule == kFixed
  int proj_alternations = 3;   // alternations inside each projection
  bool keep_best = true;       // track the lowest-MSE iterate per user
  int power_iters = 50;        // power-iteration budget for the Lipschitz bound
  double power_tol = 1e-6;     // relative convergence tolerance for the bound
  int step_doublings = -1;     // ladder of step sizes per iteration: base * 2^k
                               // for k = 0..step_doublings; -1 derives the
                               // depth from the curvature spread (0 for kFixed)
  bool polish = true;          // per-coordinate descent on improving candidates

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("FbsConfig: max_iters must be >= 1");
    if (proj_alternations < 1)
      throw std::invalid_argument("FbsConfig: proj_alternations must be >= 1");
    if (step_rule == StepRule::kFixed && !(fixed_step > 0.0))
      throw std::invalid_argument("FbsConfig: fixed_step must be positive");
    if (power_iters < 1 || !(power_tol > 0.0))
      throw std::invalid_argument("FbsConfig: bad power-iteration settings");
    if (step_doublings < -1 || step_doublings > 60)
      throw std::invalid_argument("FbsConfig: step_doublings must be in [-1, 60]");
  }
};

namespace detail {

/// Largest eigenvalue of the PSD Gram matrix H^H H by power iteration
/// (equals the largest eigenvalue of H H^H).
inline double gram_spectral_max(const ComplexMatrix& channel, int iters, double tol) {
  const ComplexMatrix gram = channel.adjoint() * channel;
  const Eigen::Index n = gram.rows();
  ComplexVector b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = Complex(1.0 + 1e-3 * double(i), 0.0);
  b.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const ComplexVector gb = gram * b;
    const double next = std::real(b.dot(gb));
    const double nrm = gb.norm();
    if (nrm == 0.0) return 0.0;  // H = 0
    b = gb / nrm;
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(0.0, lambda);
}

/// Per-user MSE at the MSE-optimal scale of x:
/// min_beta f(beta x) = Es - Es^2 |x^H h_u|^2 / (Es ||H^H x||^2 + N0 ||x||^2).
/// Equal to per_user_mse(optimal_beta(x, ...) * x, ...) without forming the
/// scaled vector; Es when the denominator vanishes (the estimate is then 0).
inline double best_scale_mse(const ComplexVector& x, const ComplexMatrix& channel, double es,
                             double n0, int user) {
  const ComplexVector p = channel.adjoint() * x;
  const double denom = es * p.squaredNorm() + n0 * x.squaredNorm();
  if (!(denom > 0.0)) return es;
  return es - es * es * std::norm(p[user]) / denom;
}

/// Greedy per-coordinate descent on best_scale_mse: sweep the real and
/// imaginary components in order, moving each to the alphabet value that
/// lowers the MSE the most, until a full sweep makes no strict improvement.
/// Candidate moves cost O(U) through incremental updates of p = H^H x.
inline void coordinate_polish(ComplexVector& x, const ComplexMatrix& channel, double es,
                              double n0, int user, int bits, int max_rounds = 64) {
  const std::vector<int>& axis = alphabet_values(bits).values;
  for (int round = 0; round < max_rounds; ++round) {
    ComplexVector p = channel.adjoint() * x;  // refreshed per round against drift
    double nx = x.squaredNorm();
    const auto mse_of = [&](const ComplexVector& pp, double nn) {
      const double denom = es * pp.squaredNorm() + n0 * nn;
      if (!(denom > 0.0)) return es;
      return es - es * es * std::norm(pp[user]) / denom;
    };
    double current = mse_of(p, nx);
    bool improved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (int part = 0; part < 2; ++part) {
        const double old_val = (part == 0) ? x[i].real() : x[i].imag();
        double best_val = old_val;
        double best_mse = current;
        ComplexVector best_p;
        double best_nx = nx;
        for (int a : axis) {
          if (double(a) == old_val) continue;
          const Complex delta = (part == 0) ? Complex(double(a) - old_val, 0.0)
                                            : Complex(0.0, double(a) - old_val);
          // x' = x + delta e_i, so p' = p + delta * conj(row i of H).
          ComplexVector pp = p + channel.row(i).conjugate().transpose() * delta;
          const double nn = nx + std::norm(x[i] + delta) - std::norm(x[i]);
          const double mse = mse_of(pp, nn);
          if (mse < best_mse) {
            best_mse = mse;
            best_val = double(a);
            best_p = std::move(pp);
            best_nx = nn;
          }
        }
        if (best_val != old_val) {
          x[i] += (part == 0) ? Complex(best_val - old_val, 0.0)
                              : Complex(0.0, best_val - old_val);
          p = best_p;
          nx = best_nx;
          current = best_mse;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

/// Ladder depth that lets a gradient step overshoot the unconstrained
/// minimizer along every curvature mode: 2 tau 2^k (Es lambda_min + N0) > 2
/// for the weakest mode. N0 bounds the curvature from below; with N0 = 0 a
/// relative floor caps the depth instead.
inline int auto_step_doublings(double es, double lmax, double n0) {
  const double floor_curv = std::max(n0, es * lmax * 1e-9);
  if (!(floor_curv > 0.0)) return 0;
  const double ratio = (es * lmax + n0) / floor_curv;
  return std::min(40, std::max(0, int(std::ceil(std::log2(ratio))) + 1));
}

}  // namespace detail

/// Forward-backward splitting design. Each user starts from its L-MMSE
/// column, where the smooth part of the objective has a vanishing gradient:
/// a single conservative (1/L) gradient step can therefore never leave the
/// quantization cell of the starting point, and the plain iteration stalls on
/// the quantize-then-refit answer. To actually explore the alphabet, every
/// iteration evaluates a forward-tracking ladder of step sizes tau * 2^k for
/// k = 0..step_doublings and advances greedily to the candidate with the
/// lowest per-user MSE at its optimal scale. When no rung moves the iterate,
/// it restarts from the farthest rung (a deterministic kick) before giving
/// up. With polish on, each candidate that improves the record is refined by
/// per-coordinate descent on the closed-form MSE. The plain quantization of
/// the starting point (what flmmse_design produces) seeds the candidate set,
/// so with keep_best the result never does worse than the quantize-then-refit
/// design; the record is also non-increasing in max_iters because later
/// iterations only grow the evaluated candidate set. Setting
/// step_doublings = 0, polish = false, keep_best = false recovers the
/// textbook projected-gradient iteration. The MSE-optimal beta is refit to
/// the chosen alphabet vector at the end.
inline FiniteAlphabetEqualizer fame_fbs_design(const ComplexMatrix& channel, double es, double n0,
                                               int bits, const FbsConfig& config = {}) {
  check_alphabet_bits(bits);
  if (!(es > 0.0) || n0 < 0.0) throw std::invalid_argument("fame_fbs_design: bad Es/N0");
  config.validate();

  double tau = 0.0;
  int doublings = std::max(0, config.step_doublings);
  if (config.step_rule == StepRule::kFixed) {
    tau = config.fixed_step;
    if (config.step_doublings < 0) doublings = 0;  // no spectral estimate to derive a depth
  } else {
    const double lmax = detail::gram_spectral_max(channel, config.power_iters, config.power_tol);
    const double lipschitz = 2.0 * (es * lmax + n0);
    if (!(lipschitz > 0.0))
      throw std::invalid_argument("fame_fbs_design: degenerate channel, cannot derive a step");
    tau = 1.0 / lipschitz;
    if (config.step_doublings < 0) doublings = detail::auto_step_doublings(es, lmax, n0);
  }

  const ComplexMatrix wh = lmmse_equalizer(channel, n0 / es);
  const Eigen::Index users = channel.cols();

  FiniteAlphabetEqualizer eq;
  eq.bits = bits;
  eq.Xh.resize(users, channel.rows());
  eq.beta.resize(users);

  for (Eigen::Index u = 0; u < users; ++u) {
    ComplexVector v = wh.row(u).adjoint();  // v^0

    // Record tracking. best_raw orders candidates by their unpolished MSE and
    // gates which ones get polished, so the trajectory itself is independent
    // of the polish flag; best holds the returned (possibly polished) answer.
    const auto [beta0, x0] = project_scaled_alphabet(v, bits, 1);
    (void)beta0;
    double best_raw = detail::best_scale_mse(x0, channel, es, n0, int(u));
    ComplexVector best_x = x0;
    double best_mse = best_raw;
    if (config.polish) {
      detail::coordinate_polish(best_x, channel, es, n0, int(u), bits);
      best_mse = detail::best_scale_mse(best_x, channel, es, n0, int(u));
    }
    ComplexVector last_x = x0;  // alphabet vector of the final iterate

    for (int it = 0; it < config.max_iters; ++it) {
      const ComplexVector g = fbs_gradient(v, channel, es, n0, int(u));

      ComplexVector v_next = v;
      ComplexVector next_x = last_x;
      double next_mse = std::numeric_limits<double>::infinity();
      ComplexVector v_far = v;  // farthest rung that produced a valid projection
      ComplexVector far_x = last_x;
      bool moved = false;

      double step = tau;
      for (int k = 0; k <= doublings; ++k, step *= 2.0) {
        const ComplexVector z = v - step * g;
        if (z.isZero(0.0)) continue;  // projection undefined at the origin
        const auto [beta, x] = project_scaled_alphabet(z, bits, config.proj_alternations);
        const ComplexVector candidate = beta * x;
        const double raw = detail::best_scale_mse(x, channel, es, n0, int(u));
        if (raw < next_mse) {
          next_mse = raw;
          v_next = candidate;
          next_x = x;
        }
        v_far = candidate;
        far_x = x;
        moved = true;
        if (raw < best_raw) {
          best_raw = raw;
          ComplexVector refined = x;
          double mse = raw;
          if (config.polish) {
            detail::coordinate_polish(refined, channel, es, n0, int(u), bits);
            mse = detail::best_scale_mse(refined, channel, es, n0, int(u));
          }
          if (mse < best_mse) {
            best_mse = mse;
            best_x = refined;
          }
        }
        if (g.isZero(0.0)) break;  // every rung lands on the same point
      }

      if (!moved) break;  // all rungs hit the origin; nothing to project
      if (v_next == v) {
        if (v_far == v) break;  // the kick target is the current point: stalled
        v = v_far;              // kick: restart from the most aggressive rung
        last_x = far_x;
      } else {
        v = v_next;
        last_x = next_x;
      }
    }

    ComplexVector chosen;
    if (config.keep_best) {
      chosen = best_x;
    } else {
      chosen = last_x;
      if (config.polish) detail::coordinate_polish(chosen, channel, es, n0, int(u), bits);
    }
    eq.Xh.row(u) = chosen.adjoint();
    eq.beta[u] = optimal_beta(chosen, channel, es, n0, int(u));
  }
  return eq;
}

namespace detail {

/// Global per-user minimizer by enumeration over alphabet^B (real and
/// imaginary parts independently), with the MSE-optimal beta for each
/// candidate. Enumeration is lexicographic over the interleaved component
/// list [Re x_0, Im x_0, Re x_1, ...] with values ascending and the last
/// component cycling fastest; strict improvement keeps the first (i.e.
/// lexicographically smallest) minimizer.
inline std::pair<ComplexVector, double> oracle_single_user(const ComplexMatrix& channel,
                                                           double es, double n0, int bits,
                                                           int user) {
  const int b = int(channel.rows());
  const int levels = 1 << bits;
  const std::vector<int>& axis = alphabet_values(bits).values;  // ascending

  std::vector<int> idx(size_t(2 * b), 0);
  ComplexVector x = ComplexVector::Constant(b, Complex(double(axis[0]), double(axis[0])));

  ComplexVector best_x = x;
  double best_mse = std::numeric_limits<double>::infinity();
  const long total = long(std::llround(std::pow(double(levels), 2.0 * b)));
  for (long n = 0; n < total; ++n) {
    const Complex beta = optimal_beta(x, channel, es, n0, user);
    const double mse = per_user_mse(beta * x, channel, es, n0, user);
    if (mse < best_mse) {
      best_mse = mse;
      best_x = x;
    }
    for (int slot = 2 * b - 1; slot >= 0; --slot) {
      const int entry = slot / 2;
      const bool is_re = (slot % 2 == 0);
      if (++idx[size_t(slot)] < levels) {
        const double val = double(axis[size_t(idx[size_t(slot)])]);
        x[entry] = is_re ? Complex(val, x[entry].imag()) : Complex(x[entry].real(), val);
        break;
      }
      idx[size_t(slot)] = 0;
      x[entry] = is_re ? Complex(double(axis[0]), x[entry].imag())
                       : Complex(x[entry].real(), double(axis[0]));
    }
  }
  return {best_x, best_mse};
}

}  // namespace detail

/// Exhaustive global minimizer of the per-user MSE, one user at a time.
/// Refuses instances where a single user's search space (2^bits)^(2B)
/// exceeds 2^24 candidates.
inline FiniteAlphabetEqualizer exhaustive_fame_oracle(const ComplexMatrix& channel, double es,
                                                      double n0, int bits) {
  check_alphabet_bits(bits);
  if (!(es > 0.0) || n0 < 0.0) throw std::invalid_argument("exhaustive_fame_oracle: bad Es/N0");
  const int b = int(channel.rows());
  const Eigen::Index users = channel.cols();
  if (users < 1 || b < 1) throw std::invalid_argument("exhaustive_fame_oracle: empty channel");
  if (std::pow(double(1 << bits), 2.0 * b) > double(1 << 24))
    throw std::invalid_argument("exhaustive_fame_oracle: search space exceeds 2^24 candidates");

  FiniteAlphabetEqualizer eq;
  eq.bits = bits;
  eq.Xh.resize(users, b);
  eq.beta.resize(users);
  for (Eigen::Index u = 0; u < users; ++u) {
    const auto [x, mse] = detail::oracle_single_user(channel, es, n0, bits, int(u));
    (void)mse;
    eq.Xh.row(u) = x.adjoint();
    eq.beta[u] = optimal_beta(x, channel, es, n0, int(u));
  }
  return eq;
}

}  // namespace faeq
