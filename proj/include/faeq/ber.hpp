#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "faeq/bitsim.hpp"
#include "faeq/fame.hpp"
#include "faeq/rng.hpp"
#include "faeq/sysmodel.hpp"

namespace faeq {

enum class EqualizerKind { kLmmse, kFlmmse, kFameFbs };

inline std::string equalizer_kind_name(EqualizerKind k) {
  switch (k) {
    case EqualizerKind::kLmmse: return "lmmse";
    case EqualizerKind::kFlmmse: return "flmmse";
    default: return "fame-fbs";
  }
}

/// Where the equalization arithmetic runs: double precision, the bit-serial
/// in-memory array, or the MAC array. Bit-exact paths quantize the receive
/// vector to `serial_bits` two's-complement integers with step `scale`
/// (scale = 0 picks 3*rms(y)/2^(L-1) per vector, a 3-sigma loading).
struct Datapath {
  enum class Kind { kFloat, kPpac, kMac };
  Kind kind = Kind::kFloat;
  int serial_bits = 7;   // L
  double scale = 0.0;    // 0 = automatic per-vector scale
  int mac_units = 1;     // M, MAC path only
  BetaMode beta_mode = BetaMode::floating();

  static Datapath floating_point() { return {}; }
  static Datapath ppac(int serial_bits, double scale = 0.0) {
    Datapath d;
    d.kind = Kind::kPpac;
    d.serial_bits = serial_bits;
    d.scale = scale;
    return d;
  }
  static Datapath mac(int serial_bits, double scale = 0.0, int mac_units = 1) {
    Datapath d;
    d.kind = Kind::kMac;
    d.serial_bits = serial_bits;
    d.scale = scale;
    d.mac_units = mac_units;
    return d;
  }
};

/// Monte-Carlo sweep description. Every trial draws a fresh channel, designs
/// the equalizer for it, sends one random symbol vector and counts hard-
/// detection bit errors. SNR means Es/N0: per-user symbol energy over
/// per-antenna complex noise variance.
struct SweepConfig {
  int num_antennas = 0;
  int num_users = 0;
  std::string constellation = "qpsk";
  EqualizerKind equalizer = EqualizerKind::kLmmse;
  int bits = 1;             // K, finite-alphabet kinds only
  FbsConfig fbs;            // FAME-FBS solver settings
  Datapath datapath;
  std::vector<double> snr_db_points;
  double symbol_energy = 1.0;
  long min_errors = 200;
  long max_trials = 100000;
  uint64_t seed = 1;

  void validate() const {
    if (num_users < 1 || num_antennas < num_users)
      throw std::invalid_argument("SweepConfig: need B >= U >= 1");
    Constellation::by_name(constellation);
    if (snr_db_points.empty()) throw std::invalid_argument("SweepConfig: empty SNR list");
    if (min_errors < 1 || max_trials < 1)
      throw std::invalid_argument("SweepConfig: min_errors and max_trials must be >= 1");
    if (!(symbol_energy > 0.0)) throw std::invalid_argument("SweepConfig: Es must be positive");
    if (equalizer != EqualizerKind::kLmmse) check_alphabet_bits(bits);
    if (datapath.kind != Datapath::Kind::kFloat) {
      if (equalizer == EqualizerKind::kLmmse)
        throw std::invalid_argument("SweepConfig: bit-exact datapaths need a finite-alphabet equalizer");
      if (datapath.serial_bits < 2 || datapath.serial_bits > 31)
        throw std::invalid_argument("SweepConfig: serial bit width out of range");
      if (datapath.scale < 0.0) throw std::invalid_argument("SweepConfig: negative input scale");
      if (datapath.kind == Datapath::Kind::kMac) {
        MacArrayConfig mac{datapath.mac_units, num_antennas, num_users};
        mac.validate();
      }
    }
  }
};

struct BerPoint {
  double snr_db = 0.0;
  long trials = 0;
  long bits_simulated = 0;
  long bit_errors = 0;
  double ber = 0.0;
  double std_err = 0.0;
};

struct BerCurve {
  std::vector<BerPoint> points;
};

/// Number of worker threads: an explicit request wins, then the
/// FAEQ_THREADS environment variable, then machine parallelism.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return std::min(requested, 256);
  if (const char* env = std::getenv("FAEQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return int(std::min(v, 256L));
  }
  return std::max(1, int(std::thread::hardware_concurrency()));
}

namespace detail {

/// Step that maps the receive vector onto `serial_bits`-bit integers.
inline double input_scale(const ComplexVector& y, const Datapath& dp) {
  if (dp.scale > 0.0) return dp.scale;
  const double rms = y.norm() / std::sqrt(2.0 * double(y.size()));
  if (rms == 0.0) return 1.0;
  return 3.0 * rms / double(int64_t(1) << unsigned(dp.serial_bits - 1));
}

struct TrialResult {
  long bits = 0;
  long errors = 0;        // through cfg.datapath
  long errors_float = 0;  // through the double-precision path
  double rel_deviation = 0.0;
};

/// One Monte-Carlo trial: fresh channel, fresh symbols, fresh noise, all
/// independently seeded from (master seed, SNR index, trial index) so the
/// outcome does not depend on scheduling. With `also_float` set the trial is
/// additionally equalized in double precision for consistency reporting.
inline TrialResult run_trial(const SweepConfig& cfg, const Constellation& cons, double n0,
                             int snr_index, long trial, bool also_float) {
  const uint64_t ts = derive_seed(cfg.seed, uint64_t(snr_index), uint64_t(trial));
  const ComplexMatrix h =
      generate_rayleigh_channel(cfg.num_antennas, cfg.num_users, derive_seed(ts, 1));

  Rng bit_rng(derive_seed(ts, 2));
  std::vector<uint8_t> tx(size_t(cfg.num_users) * size_t(cons.bits_per_symbol));
  for (auto& b : tx) b = uint8_t(bit_rng.uniform_int(2));
  const ComplexVector s = std::sqrt(cfg.symbol_energy) * modulate(tx, cons);
  const ComplexVector y = simulate_uplink(h, s, n0, derive_seed(ts, 3));

  ComplexVector shat;
  ComplexVector shat_float;
  if (cfg.equalizer == EqualizerKind::kLmmse) {
    const ComplexMatrix vh = lmmse_equalizer(h, n0 / cfg.symbol_energy);
    shat = vh * y;
    shat_float = shat;
  } else {
    const FiniteAlphabetEqualizer eq =
        (cfg.equalizer == EqualizerKind::kFlmmse)
            ? flmmse_design(h, cfg.symbol_energy, n0, cfg.bits)
            : fame_fbs_design(h, cfg.symbol_energy, n0, cfg.bits, cfg.fbs);
    if (cfg.datapath.kind == Datapath::Kind::kFloat) {
      shat = eq.apply(y);
      shat_float = shat;
    } else {
      const double scale = input_scale(y, cfg.datapath);
      const auto [y_re, y_im] = quantize_input(y, cfg.datapath.serial_bits, scale);
      if (cfg.datapath.kind == Datapath::Kind::kPpac) {
        const PpacArray arr = ppac_load(eq);
        shat = ppac_equalize(arr, eq.beta, y_re, y_im, cfg.datapath.serial_bits,
                             cfg.datapath.beta_mode);
      } else {
        MacArrayConfig mac{cfg.datapath.mac_units, cfg.num_antennas, cfg.num_users};
        shat = mac_mvp(eq, y_re, y_im, cfg.datapath.serial_bits, mac, nullptr,
                       cfg.datapath.beta_mode);
      }
      shat *= scale;
      if (also_float) shat_float = eq.apply(y);
    }
  }

  TrialResult r;
  r.bits = long(tx.size());
  const std::vector<uint8_t> rx = faeq::detect(shat, cons);
  for (size_t i = 0; i < tx.size(); ++i) r.errors += (rx[i] != tx[i]);
  if (also_float) {
    const std::vector<uint8_t> rxf = faeq::detect(shat_float, cons);
    for (size_t i = 0; i < tx.size(); ++i) r.errors_float += (rxf[i] != tx[i]);
    const double ref = shat_float.norm();
    r.rel_deviation = (ref > 0.0) ? (shat - shat_float).norm() / ref : (shat - shat_float).norm();
  }
  return r;
}

/// Runs trials [first, first+count) split across threads; partial sums are
/// combined by commutative addition so the totals are schedule-independent.
inline TrialResult run_chunk(const SweepConfig& cfg, const Constellation& cons, double n0,
                             int snr_index, long first, long count, bool also_float,
                             int threads) {
  std::vector<TrialResult> partial(size_t(std::max(1, threads)));
  const auto worker = [&](int tid) {
    TrialResult acc;
    for (long t = first + tid; t < first + count; t += threads) {
      const TrialResult r = run_trial(cfg, cons, n0, snr_index, t, also_float);
      acc.bits += r.bits;
      acc.errors += r.errors;
      acc.errors_float += r.errors_float;
      acc.rel_deviation = std::max(acc.rel_deviation, r.rel_deviation);
    }
    partial[size_t(tid)] = acc;
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  TrialResult total;
  for (const auto& p : partial) {
    total.bits += p.bits;
    total.errors += p.errors;
    total.errors_float += p.errors_float;
    total.rel_deviation = std::max(total.rel_deviation, p.rel_deviation);
  }
  return total;
}

/// Trials are committed in fixed-size chunks; the stopping rule is evaluated
/// only at chunk boundaries so the trial count never depends on thread count.
constexpr long kTrialChunk = 512;

}  // namespace detail

/// Monte-Carlo BER sweep. Deterministic given cfg.seed: every trial is
/// seeded by (seed, SNR index, trial index) and the stopping rule (min_errors
/// bit errors or max_trials, whichever first) is applied per whole chunk.
inline BerCurve ber_sweep(const SweepConfig& cfg, int threads = 0) {
  cfg.validate();
  const Constellation& cons = Constellation::by_name(cfg.constellation);
  const int nthreads = resolve_threads(threads);

  BerCurve curve;
  for (size_t si = 0; si < cfg.snr_db_points.size(); ++si) {
    const double snr_db = cfg.snr_db_points[si];
    const double n0 = cfg.symbol_energy * std::pow(10.0, -snr_db / 10.0);
    detail::TrialResult total;
    long trials = 0;
    while (trials < cfg.max_trials) {
      const long count = std::min(detail::kTrialChunk, cfg.max_trials - trials);
      const detail::TrialResult chunk =
          detail::run_chunk(cfg, cons, n0, int(si), trials, count, false, nthreads);
      total.bits += chunk.bits;
      total.errors += chunk.errors;
      trials += count;
      if (total.errors >= cfg.min_errors) break;
    }
    BerPoint p;
    p.snr_db = snr_db;
    p.trials = trials;
    p.bits_simulated = total.bits;
    p.bit_errors = total.errors;
    p.ber = (total.bits > 0) ? double(total.errors) / double(total.bits) : 0.0;
    p.std_err = (total.bits > 0) ? std::sqrt(p.ber * (1.0 - p.ber) / double(total.bits)) : 0.0;
    curve.points.push_back(p);
  }
  return curve;
}

/// Per-SNR comparison of the bit-exact datapath against double precision on
/// identical trials (same channels, symbols and noise).
struct ConsistencyPoint {
  double snr_db = 0.0;
  long trials = 0;
  long bits_simulated = 0;
  double ber_hw = 0.0;
  double ber_float = 0.0;
  double ber_delta = 0.0;        // ber_hw - ber_float
  double pooled_std_err = 0.0;   // sqrt(se_hw^2 + se_float^2)
  double max_rel_deviation = 0.0;  // max over trials of ||shat_hw - shat_float|| / ||shat_float||
};

/// Runs cfg's bit-exact datapath and the double-precision path side by side.
/// Reports the BER of both, their difference, and the worst relative output
/// deviation. Degrades gracefully at tiny serial widths: numbers worsen, the
/// contract (exact comparison on identical trials) stays intact.
inline std::vector<ConsistencyPoint> datapath_consistency(const SweepConfig& cfg,
                                                          int threads = 0) {
  cfg.validate();
  if (cfg.datapath.kind == Datapath::Kind::kFloat)
    throw std::invalid_argument("datapath_consistency: cfg must select a bit-exact datapath");
  const Constellation& cons = Constellation::by_name(cfg.constellation);
  const int nthreads = resolve_threads(threads);

  std::vector<ConsistencyPoint> report;
  for (size_t si = 0; si < cfg.snr_db_points.size(); ++si) {
    const double snr_db = cfg.snr_db_points[si];
    const double n0 = cfg.symbol_energy * std::pow(10.0, -snr_db / 10.0);
    detail::TrialResult total;
    long trials = 0;
    while (trials < cfg.max_trials) {
      const long count = std::min(detail::kTrialChunk, cfg.max_trials - trials);
      const detail::TrialResult chunk =
          detail::run_chunk(cfg, cons, n0, int(si), trials, count, true, nthreads);
      total.bits += chunk.bits;
      total.errors += chunk.errors;
      total.errors_float += chunk.errors_float;
      total.rel_deviation = std::max(total.rel_deviation, chunk.rel_deviation);
      trials += count;
      if (std::min(total.errors, total.errors_float) >= cfg.min_errors) break;
    }
    ConsistencyPoint p;
    p.snr_db = snr_db;
    p.trials = trials;
    p.bits_simulated = total.bits;
    p.ber_hw = (total.bits > 0) ? double(total.errors) / double(total.bits) : 0.0;
    p.ber_float = (total.bits > 0) ? double(total.errors_float) / double(total.bits) : 0.0;
    p.ber_delta = p.ber_hw - p.ber_float;
    const double se_hw = std::sqrt(p.ber_hw * (1.0 - p.ber_hw) / double(total.bits));
    const double se_fl = std::sqrt(p.ber_float * (1.0 - p.ber_float) / double(total.bits));
    p.pooled_std_err = std::sqrt(se_hw * se_hw + se_fl * se_fl);
    p.max_rel_deviation = total.rel_deviation;
    report.push_back(p);
  }
  return report;
}

}  // namespace faeq
