#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace faeq {

/// Measured figures for a single equalizer instance at one operating point.
struct InstanceCalibration {
  std::string arch;        // "ppac" | "mac"
  int bits = 0;            // K: equalizer resolution
  int input_bits = 0;      // L: input resolution of the operating point
  double area_mm2 = 0.0;
  double power_w = 0.0;
  double f_clk_hz = 0.0;
  long latency_cycles = 0; // cycles per matrix-vector product

  void validate() const {
    if (arch.empty()) throw std::invalid_argument("InstanceCalibration: empty arch");
    if (bits < 1 || input_bits < 1)
      throw std::invalid_argument("InstanceCalibration: resolutions must be positive");
    if (!(area_mm2 > 0.0) || !(power_w > 0.0) || !(f_clk_hz > 0.0) || latency_cycles < 1)
      throw std::invalid_argument("InstanceCalibration: all figures must be positive");
  }
};

/// Fraction of an M=1 MAC design's area/power attributable to the MAC units
/// themselves (the part that scales when units are replicated).
struct ReplicationFractions {
  double a_mac = 0.0;
  double p_mac = 0.0;

  void validate() const {
    if (!(a_mac > 0.0) || a_mac > 1.0 || !(p_mac > 0.0) || p_mac > 1.0)
      throw std::invalid_argument("ReplicationFractions: fractions must lie in (0, 1]");
  }
};

/// System-level cost of meeting a throughput target with replicated,
/// time-interleaved instances.
struct CostReport {
  long instances = 0;
  double total_area_mm2 = 0.0;
  double total_power_w = 0.0;
  double achieved_throughput = 0.0;  // vectors/s
};

/// Already-aggregated system figure taken from an external source rather
/// than computed from a per-instance calibration (verified = false marks
/// numbers whose per-instance provenance is outside this repo).
struct SystemFigure {
  std::string arch;
  int bits = 0;
  int input_bits = 0;
  double target_throughput = 0.0;
  double total_area_mm2 = 0.0;
  double total_power_w = 0.0;
  bool verified = false;
};

/// A named collection of calibrations, typically loaded from one JSON file.
struct CalibrationSet {
  std::string technology;
  std::vector<InstanceCalibration> instances;
  std::vector<SystemFigure> system_figures;

  const InstanceCalibration* find_instance(const std::string& arch, int bits,
                                           int input_bits) const {
    for (const auto& c : instances)
      if (c.arch == arch && c.bits == bits && c.input_bits == input_bits) return &c;
    return nullptr;
  }
};

/// Sustained rate of one instance: clock over per-vector latency.
inline double instance_throughput(const InstanceCalibration& cal) {
  cal.validate();
  return cal.f_clk_hz / double(cal.latency_cycles);
}

/// Minimal number of parallel instances meeting `target` vectors/s, with
/// area and power scaled proportionally.
inline CostReport system_cost(const InstanceCalibration& cal, double target) {
  if (!(target > 0.0)) throw std::invalid_argument("system_cost: target must be positive");
  const double rate = instance_throughput(cal);
  long n = long(std::ceil(target / rate));
  if (n < 1) n = 1;
  // Guard the ceiling against floating-point edge cases: grow until the
  // target is met, then shrink while the count stays sufficient.
  while (double(n) * rate < target) ++n;
  while (n > 1 && double(n - 1) * rate >= target) --n;
  CostReport r;
  r.instances = n;
  r.total_area_mm2 = double(n) * cal.area_mm2;
  r.total_power_w = double(n) * cal.power_w;
  r.achieved_throughput = double(n) * rate;
  return r;
}

namespace detail {

inline int log2_exact(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  if ((1 << l) != v) throw std::invalid_argument("log2_exact: not a power of two");
  return l;
}

}  // namespace detail

/// Scales an M=1 MAC-array calibration to M replicated units per user:
/// area and power grow as (1 - frac) + M * frac, latency drops to
/// B/M + log2(M) (partition scan plus adder tree), clock unchanged.
inline InstanceCalibration replicate_mac_model(const InstanceCalibration& base, int mac_units,
                                               const ReplicationFractions& fr, int num_antennas) {
  base.validate();
  fr.validate();
  if (num_antennas < 1) throw std::invalid_argument("replicate_mac_model: bad antenna count");
  if (mac_units < 1 || (mac_units & (mac_units - 1)) != 0 || num_antennas % mac_units != 0)
    throw std::invalid_argument(
        "replicate_mac_model: M must be a power of two dividing the antenna count");
  InstanceCalibration out = base;
  out.area_mm2 = base.area_mm2 * ((1.0 - fr.a_mac) + double(mac_units) * fr.a_mac);
  out.power_w = base.power_w * ((1.0 - fr.p_mac) + double(mac_units) * fr.p_mac);
  out.latency_cycles = long(num_antennas / mac_units) + detail::log2_exact(mac_units);
  return out;
}

/// Power-of-two unit count minimizing the area-latency product
/// ((1 - a_mac) + M a_mac) * (B/M + log2 M); ties go to the smaller M.
inline int optimize_mac_units(int num_antennas, const ReplicationFractions& fr) {
  fr.validate();
  if (num_antennas < 1 || (num_antennas & (num_antennas - 1)) != 0)
    throw std::invalid_argument("optimize_mac_units: antenna count must be a power of two");
  int best_m = 1;
  double best_at = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= num_antennas; m <<= 1) {
    const double area = (1.0 - fr.a_mac) + double(m) * fr.a_mac;
    const double latency = double(num_antennas / m) + double(detail::log2_exact(m));
    const double at = area * latency;
    if (at < best_at) {
      best_at = at;
      best_m = m;
    }
  }
  return best_m;
}

/// One row of the design-space sweep.
struct ExploreRow {
  std::string arch;
  int bits = 0;
  int input_bits = 0;
  double target_throughput = 0.0;
  CostReport report;
};

/// Cost table over every architecture present in the calibration set, in
/// deterministic (arch, K, L, target) order. A requested point with no
/// calibration entry is an error, not a silent skip.
inline std::vector<ExploreRow> explore(const CalibrationSet& set,
                                       const std::vector<double>& targets,
                                       const std::vector<int>& bits_list,
                                       const std::vector<int>& input_bits_list) {
  if (set.instances.empty()) throw std::invalid_argument("explore: no instance calibrations");
  if (targets.empty() || bits_list.empty() || input_bits_list.empty())
    throw std::invalid_argument("explore: empty sweep list");

  std::set<std::string> arches;
  for (const auto& c : set.instances) arches.insert(c.arch);
  std::vector<int> bits_sorted = bits_list;
  std::sort(bits_sorted.begin(), bits_sorted.end());
  std::vector<int> input_sorted = input_bits_list;
  std::sort(input_sorted.begin(), input_sorted.end());

  std::vector<ExploreRow> rows;
  for (const auto& arch : arches)
    for (int k : bits_sorted)
      for (int l : input_sorted) {
        const InstanceCalibration* cal = set.find_instance(arch, k, l);
        if (!cal)
          throw std::invalid_argument("explore: missing calibration for arch=" + arch + " K=" +
                                      std::to_string(k) + " L=" + std::to_string(l));
        for (double target : targets) {
          ExploreRow row;
          row.arch = arch;
          row.bits = k;
          row.input_bits = l;
          row.target_throughput = target;
          row.report = system_cost(*cal, target);
          rows.push_back(row);
        }
      }
  return rows;
}

/// Rounds to `digits` significant figures (used when tabulating results).
inline double round_to_sig_figs(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const double mag = std::pow(10.0, double(digits - 1) - std::floor(std::log10(std::abs(v))));
  return std::round(v * mag) / mag;
}

}  // namespace faeq
