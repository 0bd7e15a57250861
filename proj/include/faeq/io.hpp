#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "faeq/ber.hpp"
#include "faeq/fame.hpp"
#include "faeq/hwcost.hpp"
#include "faeq/linalg.hpp"

namespace faeq {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSON interchange. Complex numbers are [re, im] pairs; matrices are flat
// row-major arrays with explicit dimension fields.
// ---------------------------------------------------------------------------

inline Json complex_to_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("complex value must be a [re, im] pair");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

/// { "num_antennas": B, "num_users": U, "entries": B*U [re,im] pairs, row-major }
inline Json channel_to_json(const ComplexMatrix& h) {
  Json entries = Json::array();
  for (Eigen::Index r = 0; r < h.rows(); ++r)
    for (Eigen::Index c = 0; c < h.cols(); ++c) entries.push_back(complex_to_json(h(r, c)));
  Json j;
  j["format"] = "faeq-channel";
  j["num_antennas"] = h.rows();
  j["num_users"] = h.cols();
  j["entries"] = entries;
  return j;
}

inline ComplexMatrix channel_from_json(const Json& j) {
  const auto b = j.at("num_antennas").get<Eigen::Index>();
  const auto u = j.at("num_users").get<Eigen::Index>();
  const Json& entries = j.at("entries");
  if (b < 1 || u < 1 || Eigen::Index(entries.size()) != b * u)
    throw std::invalid_argument("channel JSON: dimensions do not match entry count");
  ComplexMatrix h(b, u);
  size_t i = 0;
  for (Eigen::Index r = 0; r < b; ++r)
    for (Eigen::Index c = 0; c < u; ++c) h(r, c) = complex_from_json(entries.at(i++));
  return h;
}

/// Equalizers are stored per user: "x_columns"[u] is the alphabet column
/// x_u (B pairs), "beta"[u] the complex scale. In memory row u of Xh is
/// x_u^H, i.e. the entrywise conjugate of the stored column.
inline Json equalizer_to_json(const FiniteAlphabetEqualizer& eq) {
  Json beta = Json::array();
  Json columns = Json::array();
  for (int u = 0; u < eq.num_users(); ++u) {
    beta.push_back(complex_to_json(eq.beta[u]));
    Json col = Json::array();
    const ComplexVector x = eq.x_column(u);
    for (Eigen::Index i = 0; i < x.size(); ++i) col.push_back(complex_to_json(x[i]));
    columns.push_back(col);
  }
  Json j;
  j["format"] = "faeq-equalizer";
  j["num_antennas"] = eq.num_antennas();
  j["num_users"] = eq.num_users();
  j["bits"] = eq.bits;
  j["beta"] = beta;
  j["x_columns"] = columns;
  return j;
}

inline FiniteAlphabetEqualizer equalizer_from_json(const Json& j) {
  const auto b = j.at("num_antennas").get<Eigen::Index>();
  const auto u = j.at("num_users").get<Eigen::Index>();
  FiniteAlphabetEqualizer eq;
  eq.bits = j.at("bits").get<int>();
  const Json& beta = j.at("beta");
  const Json& columns = j.at("x_columns");
  if (Eigen::Index(beta.size()) != u || Eigen::Index(columns.size()) != u)
    throw std::invalid_argument("equalizer JSON: user count mismatch");
  eq.Xh.resize(u, b);
  eq.beta.resize(u);
  for (Eigen::Index r = 0; r < u; ++r) {
    eq.beta[r] = complex_from_json(beta.at(size_t(r)));
    const Json& col = columns.at(size_t(r));
    if (Eigen::Index(col.size()) != b)
      throw std::invalid_argument("equalizer JSON: column length mismatch");
    for (Eigen::Index c = 0; c < b; ++c)
      eq.Xh(r, c) = std::conj(complex_from_json(col.at(size_t(c))));
  }
  eq.validate();
  return eq;
}

inline Json instance_calibration_to_json(const InstanceCalibration& c) {
  Json j;
  j["arch"] = c.arch;
  j["bits"] = c.bits;
  j["input_bits"] = c.input_bits;
  j["area_mm2"] = c.area_mm2;
  j["power_w"] = c.power_w;
  j["f_clk_hz"] = c.f_clk_hz;
  j["latency_cycles"] = c.latency_cycles;
  return j;
}

inline InstanceCalibration instance_calibration_from_json(const Json& j) {
  InstanceCalibration c;
  c.arch = j.at("arch").get<std::string>();
  c.bits = j.at("bits").get<int>();
  c.input_bits = j.at("input_bits").get<int>();
  c.area_mm2 = j.at("area_mm2").get<double>();
  c.power_w = j.at("power_w").get<double>();
  c.f_clk_hz = j.at("f_clk_hz").get<double>();
  c.latency_cycles = j.at("latency_cycles").get<long>();
  c.validate();
  return c;
}

inline Json calibration_to_json(const CalibrationSet& set) {
  Json instances = Json::array();
  for (const auto& c : set.instances) instances.push_back(instance_calibration_to_json(c));
  Json figures = Json::array();
  for (const auto& f : set.system_figures) {
    Json j;
    j["arch"] = f.arch;
    j["bits"] = f.bits;
    j["input_bits"] = f.input_bits;
    j["target_throughput_vectors_per_s"] = f.target_throughput;
    j["total_area_mm2"] = f.total_area_mm2;
    j["total_power_w"] = f.total_power_w;
    j["verified"] = f.verified;
    figures.push_back(j);
  }
  Json j;
  j["format"] = "faeq-calibration";
  j["technology"] = set.technology;
  j["instances"] = instances;
  j["system_figures"] = figures;
  return j;
}

inline CalibrationSet calibration_from_json(const Json& j) {
  CalibrationSet set;
  set.technology = j.value("technology", std::string{});
  for (const Json& e : j.at("instances"))
    set.instances.push_back(instance_calibration_from_json(e));
  if (j.contains("system_figures"))
    for (const Json& e : j.at("system_figures")) {
      SystemFigure f;
      f.arch = e.at("arch").get<std::string>();
      f.bits = e.at("bits").get<int>();
      f.input_bits = e.at("input_bits").get<int>();
      f.target_throughput = e.at("target_throughput_vectors_per_s").get<double>();
      f.total_area_mm2 = e.at("total_area_mm2").get<double>();
      f.total_power_w = e.at("total_power_w").get<double>();
      f.verified = e.value("verified", false);
      set.system_figures.push_back(f);
    }
  return set;
}

/// { "num_antennas": B, "vectors": [ B [re,im] pairs, ... ] } — sample
/// receive vectors for the equalize command.
inline Json vectors_to_json(const std::vector<ComplexVector>& vectors, Eigen::Index b) {
  Json arr = Json::array();
  for (const auto& v : vectors) {
    if (v.size() != b) throw std::invalid_argument("vectors_to_json: length mismatch");
    Json one = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) one.push_back(complex_to_json(v[i]));
    arr.push_back(one);
  }
  Json j;
  j["format"] = "faeq-vectors";
  j["num_antennas"] = b;
  j["vectors"] = arr;
  return j;
}

inline std::vector<ComplexVector> vectors_from_json(const Json& j) {
  const auto b = j.at("num_antennas").get<Eigen::Index>();
  std::vector<ComplexVector> out;
  for (const Json& one : j.at("vectors")) {
    if (Eigen::Index(one.size()) != b)
      throw std::invalid_argument("vectors JSON: vector length mismatch");
    ComplexVector v(b);
    for (Eigen::Index i = 0; i < b; ++i) v[i] = complex_from_json(one.at(size_t(i)));
    out.push_back(std::move(v));
  }
  return out;
}

inline std::string equalizer_kind_to_string(EqualizerKind k) { return equalizer_kind_name(k); }

inline EqualizerKind equalizer_kind_from_string(const std::string& s) {
  if (s == "lmmse") return EqualizerKind::kLmmse;
  if (s == "flmmse") return EqualizerKind::kFlmmse;
  if (s == "fame-fbs") return EqualizerKind::kFameFbs;
  throw std::invalid_argument("unknown equalizer kind: " + s +
                              " (expected lmmse, flmmse or fame-fbs)");
}

inline Json beta_mode_to_json(const BetaMode& m) {
  Json j;
  j["kind"] = (m.kind == BetaMode::Kind::kFloat) ? "float" : "fixed";
  if (m.kind == BetaMode::Kind::kFixed) j["frac_bits"] = m.frac_bits;
  return j;
}

inline BetaMode beta_mode_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "float") return BetaMode::floating();
  if (kind == "fixed") return BetaMode::fixed(j.at("frac_bits").get<int>());
  throw std::invalid_argument("unknown beta mode: " + kind);
}

inline Json datapath_to_json(const Datapath& d) {
  Json j;
  switch (d.kind) {
    case Datapath::Kind::kFloat: j["kind"] = "float"; break;
    case Datapath::Kind::kPpac: j["kind"] = "ppac"; break;
    case Datapath::Kind::kMac: j["kind"] = "mac"; break;
  }
  if (d.kind != Datapath::Kind::kFloat) {
    j["serial_bits"] = d.serial_bits;
    j["scale"] = d.scale;
    j["beta_mode"] = beta_mode_to_json(d.beta_mode);
    if (d.kind == Datapath::Kind::kMac) j["mac_units"] = d.mac_units;
  }
  return j;
}

inline Datapath datapath_from_json(const Json& j) {
  Datapath d;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "float") return Datapath::floating_point();
  if (kind == "ppac")
    d = Datapath::ppac(j.at("serial_bits").get<int>(), j.value("scale", 0.0));
  else if (kind == "mac")
    d = Datapath::mac(j.at("serial_bits").get<int>(), j.value("scale", 0.0),
                      j.value("mac_units", 1));
  else
    throw std::invalid_argument("unknown datapath kind: " + kind);
  if (j.contains("beta_mode")) d.beta_mode = beta_mode_from_json(j.at("beta_mode"));
  return d;
}

inline Json fbs_config_to_json(const FbsConfig& c) {
  Json j;
  j["max_iters"] = c.max_iters;
  j["step_rule"] = (c.step_rule == StepRule::kFixed) ? "fixed" : "inverse-lipschitz";
  j["fixed_step"] = c.fixed_step;
  j["proj_alternations"] = c.proj_alternations;
  j["keep_best"] = c.keep_best;
  j["power_iters"] = c.power_iters;
  j["power_tol"] = c.power_tol;
  j["step_doublings"] = c.step_doublings;
  j["polish"] = c.polish;
  return j;
}

inline FbsConfig fbs_config_from_json(const Json& j) {
  FbsConfig c;
  c.max_iters = j.value("max_iters", c.max_iters);
  const std::string rule = j.value("step_rule", std::string("inverse-lipschitz"));
  if (rule == "fixed")
    c.step_rule = StepRule::kFixed;
  else if (rule == "inverse-lipschitz")
    c.step_rule = StepRule::kInverseLipschitz;
  else
    throw std::invalid_argument("unknown step rule: " + rule);
  c.fixed_step = j.value("fixed_step", c.fixed_step);
  c.proj_alternations = j.value("proj_alternations", c.proj_alternations);
  c.keep_best = j.value("keep_best", c.keep_best);
  c.power_iters = j.value("power_iters", c.power_iters);
  c.power_tol = j.value("power_tol", c.power_tol);
  c.step_doublings = j.value("step_doublings", c.step_doublings);
  c.polish = j.value("polish", c.polish);
  return c;
}

inline Json sweep_config_to_json(const SweepConfig& c) {
  Json j;
  j["num_antennas"] = c.num_antennas;
  j["num_users"] = c.num_users;
  j["constellation"] = c.constellation;
  j["equalizer"] = equalizer_kind_to_string(c.equalizer);
  j["bits"] = c.bits;
  j["fbs"] = fbs_config_to_json(c.fbs);
  j["datapath"] = datapath_to_json(c.datapath);
  j["snr_db_points"] = c.snr_db_points;
  j["symbol_energy"] = c.symbol_energy;
  j["min_errors"] = c.min_errors;
  j["max_trials"] = c.max_trials;
  j["seed"] = c.seed;
  return j;
}

inline SweepConfig sweep_config_from_json(const Json& j) {
  SweepConfig c;
  c.num_antennas = j.value("num_antennas", c.num_antennas);
  c.num_users = j.value("num_users", c.num_users);
  c.constellation = j.value("constellation", c.constellation);
  if (j.contains("equalizer"))
    c.equalizer = equalizer_kind_from_string(j.at("equalizer").get<std::string>());
  c.bits = j.value("bits", c.bits);
  if (j.contains("fbs")) c.fbs = fbs_config_from_json(j.at("fbs"));
  if (j.contains("datapath")) c.datapath = datapath_from_json(j.at("datapath"));
  if (j.contains("snr_db_points"))
    c.snr_db_points = j.at("snr_db_points").get<std::vector<double>>();
  c.symbol_energy = j.value("symbol_energy", c.symbol_energy);
  c.min_errors = j.value("min_errors", c.min_errors);
  c.max_trials = j.value("max_trials", c.max_trials);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("JSON parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// CSV emission: ',' separator, '.' decimal point, mandatory header row,
// unit suffixes on columns that carry units.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  for (char& c : buf) {
    if (c == '\0') break;
    if (c == ',') c = '.';  // immune to a non-C locale sneaking in
  }
  return buf;
}

}  // namespace detail

/// One curve per file; snr_db means Es/N0 (per-user symbol energy over
/// per-antenna complex noise variance), stated in a leading comment line.
inline void write_ber_csv(std::ostream& out, const BerCurve& curve) {
  out << "# snr_db is Es/N0 in dB: per-user symbol energy over per-antenna complex noise "
         "variance\n";
  out << "snr_db,trials,bit_errors,ber,stderr\n";
  for (const auto& p : curve.points)
    out << detail::format_double(p.snr_db) << ',' << p.trials << ',' << p.bit_errors << ','
        << detail::format_double(p.ber) << ',' << detail::format_double(p.std_err) << '\n';
}

inline void write_cost_csv(std::ostream& out, const std::vector<ExploreRow>& rows) {
  out << "arch,K_bits,L_bits,target_vectors_per_s,instances,total_area_mm2,total_power_w,"
         "achieved_vectors_per_s\n";
  for (const auto& r : rows)
    out << r.arch << ',' << r.bits << ',' << r.input_bits << ','
        << detail::format_double(r.target_throughput) << ',' << r.report.instances << ','
        << detail::format_double(r.report.total_area_mm2) << ','
        << detail::format_double(r.report.total_power_w) << ','
        << detail::format_double(r.report.achieved_throughput) << '\n';
}

inline void write_consistency_csv(std::ostream& out, const std::vector<ConsistencyPoint>& rows) {
  out << "# snr_db is Es/N0 in dB: per-user symbol energy over per-antenna complex noise "
         "variance\n";
  out << "snr_db,trials,bits,ber_hw,ber_float,ber_delta,pooled_stderr,max_rel_deviation\n";
  for (const auto& p : rows)
    out << detail::format_double(p.snr_db) << ',' << p.trials << ',' << p.bits_simulated << ','
        << detail::format_double(p.ber_hw) << ',' << detail::format_double(p.ber_float) << ','
        << detail::format_double(p.ber_delta) << ',' << detail::format_double(p.pooled_std_err)
        << ',' << detail::format_double(p.max_rel_deviation) << '\n';
}

}  // namespace faeq
