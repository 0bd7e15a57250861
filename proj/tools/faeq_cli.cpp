// faeq: finite-alphabet equalizer designer, bit-exact datapath emulator and
// hardware cost explorer. Every subcommand writes its outputs plus a
// <command>_manifest.json capturing the fully resolved configuration; running
// the tool again with the same manifest reproduces the outputs byte for byte.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "faeq/faeq.hpp"
#include "faeq/selftest.hpp"

namespace fs = std::filesystem;
using faeq::Json;

namespace {

/// Accepts either a bare config object or a previously written manifest
/// (in which case the embedded "config" object is used).
Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = faeq::load_json_file(path);
  if (j.is_object() && j.contains("command") && j.contains("config")) return j.at("config");
  if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object: " + path);
  return j;
}

/// Config value wins only when the flag was not given on the command line.
template <typename T>
void from_config(const Json& cfg, const std::string& key, const CLI::Option* opt, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

void write_manifest(const fs::path& dir, const std::string& command, const Json& config,
                    uint64_t seed, const std::vector<std::string>& outputs) {
  Json m;
  m["command"] = command;
  m["config"] = config;
  m["outputs"] = outputs;
  m["seed"] = seed;
  m["tool_version"] = faeq::kVersion;
  faeq::save_json_file(dir / (command + "_manifest.json"), m);
}

faeq::Datapath::Kind datapath_kind_from_string(const std::string& s) {
  if (s == "float") return faeq::Datapath::Kind::kFloat;
  if (s == "ppac") return faeq::Datapath::Kind::kPpac;
  if (s == "mac") return faeq::Datapath::Kind::kMac;
  throw std::invalid_argument("unknown datapath: " + s + " (expected float, ppac or mac)");
}

/// Shared --datapath/--L/--scale/--M/--beta-mode/--beta-frac flag block.
struct DatapathFlags {
  std::string kind = "float";
  int serial_bits = 7;
  double scale = 0.0;
  int mac_units = 1;
  std::string beta_mode = "float";
  int beta_frac = 14;
  CLI::Option* kind_opt = nullptr;
  CLI::Option* bits_opt = nullptr;
  CLI::Option* scale_opt = nullptr;
  CLI::Option* units_opt = nullptr;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* frac_opt = nullptr;

  void add_to(CLI::App* cmd, const std::string& default_kind) {
    kind = default_kind;
    kind_opt = cmd->add_option("--datapath", kind, "float, ppac or mac")->capture_default_str();
    bits_opt = cmd->add_option("--L", serial_bits, "input word length of bit-exact datapaths")
                   ->capture_default_str();
    scale_opt = cmd->add_option("--scale", scale, "input quantizer step (0 = per-vector auto)")
                    ->capture_default_str();
    units_opt =
        cmd->add_option("--M", mac_units, "MAC units per user (mac datapath)")->capture_default_str();
    mode_opt = cmd->add_option("--beta-mode", beta_mode, "beta arithmetic: float or fixed")
                   ->capture_default_str();
    frac_opt = cmd->add_option("--beta-frac", beta_frac,
                               "fractional bits for fixed-point beta (implies --beta-mode fixed)")
                   ->capture_default_str();
  }

  faeq::Datapath resolve(const Json& cfg) const {
    faeq::Datapath d;
    if (cfg.contains("datapath")) d = faeq::datapath_from_json(cfg.at("datapath"));
    if (kind_opt->count() > 0) d.kind = datapath_kind_from_string(kind);
    if (bits_opt->count() > 0) d.serial_bits = serial_bits;
    if (scale_opt->count() > 0) d.scale = scale;
    if (units_opt->count() > 0) d.mac_units = mac_units;
    if (mode_opt->count() > 0) {
      if (beta_mode == "fixed")
        d.beta_mode = faeq::BetaMode::fixed(beta_frac);
      else if (beta_mode == "float")
        d.beta_mode = faeq::BetaMode::floating();
      else
        throw std::invalid_argument("unknown beta mode: " + beta_mode);
    } else if (frac_opt->count() > 0) {
      d.beta_mode = faeq::BetaMode::fixed(beta_frac);
    }
    return d;
  }
};

/// Shared FAME-FBS solver flags.
struct FbsFlags {
  int max_iters = 100;
  int alternations = 3;
  CLI::Option* iters_opt = nullptr;
  CLI::Option* alt_opt = nullptr;

  void add_to(CLI::App* cmd) {
    iters_opt = cmd->add_option("--max-iters", max_iters, "FAME-FBS iteration budget")
                    ->capture_default_str();
    alt_opt = cmd->add_option("--alternations", alternations,
                              "scale/quantize alternations inside each projection")
                  ->capture_default_str();
  }

  faeq::FbsConfig resolve(const Json& cfg) const {
    faeq::FbsConfig c;
    if (cfg.contains("fbs")) c = faeq::fbs_config_from_json(cfg.at("fbs"));
    if (iters_opt->count() > 0) c.max_iters = max_iters;
    if (alt_opt->count() > 0) c.proj_alternations = alternations;
    return c;
  }
};

Json shat_list_to_json(const std::vector<faeq::ComplexVector>& shats) {
  Json arr = Json::array();
  for (const auto& s : shats) {
    Json one = Json::array();
    for (Eigen::Index i = 0; i < s.size(); ++i) one.push_back(faeq::complex_to_json(s[i]));
    arr.push_back(one);
  }
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Finite-alphabet spatial equalizers for the massive MU-MIMO uplink:\n"
      "design (FL-MMSE / FAME-FBS), bit-exact MAC and bit-serial in-memory\n"
      "datapath emulation, BER sweeps and hardware cost exploration."};
  app.name("faeq");
  app.require_subcommand(1);

  uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config_path;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--out-dir", out_dir, "directory for outputs and manifests")
      ->capture_default_str();
  app.add_option("--config", config_path,
                 "JSON config (a bare config object or a previously written manifest)");

  // --- design ---------------------------------------------------------------
  auto* design = app.add_subcommand(
      "design", "design a finite-alphabet equalizer for a channel and write it as JSON");
  design->fallthrough();
  std::string d_channel;
  int d_b = 0, d_u = 0, d_k = 1;
  std::string d_method = "flmmse";
  double d_es = 1.0, d_n0 = 0.0;
  std::string d_out = "equalizer.json";
  CLI::Option* d_channel_opt =
      design->add_option("--channel", d_channel, "channel JSON file (omit to draw i.i.d. Rayleigh)");
  CLI::Option* d_b_opt = design->add_option("--B", d_b, "number of basestation antennas");
  CLI::Option* d_u_opt = design->add_option("--U", d_u, "number of users");
  CLI::Option* d_k_opt =
      design->add_option("--K", d_k, "alphabet resolution in bits")->capture_default_str();
  CLI::Option* d_method_opt =
      design->add_option("--method", d_method, "flmmse or fame-fbs")->capture_default_str();
  CLI::Option* d_es_opt =
      design->add_option("--es", d_es, "per-user symbol energy Es")->capture_default_str();
  CLI::Option* d_n0_opt =
      design->add_option("--n0", d_n0, "per-antenna complex noise variance N0")
          ->capture_default_str();
  CLI::Option* d_out_opt =
      design->add_option("--out", d_out, "equalizer output filename")->capture_default_str();
  FbsFlags d_fbs;
  d_fbs.add_to(design);

  // --- equalize ---------------------------------------------------------------
  auto* equalize = app.add_subcommand(
      "equalize", "apply a designed equalizer to sample vectors via a chosen datapath");
  equalize->fallthrough();
  std::string e_equalizer, e_input;
  std::string e_out = "equalized.json";
  CLI::Option* e_eq_opt =
      equalize->add_option("--equalizer", e_equalizer, "equalizer JSON file");
  CLI::Option* e_in_opt =
      equalize->add_option("--input", e_input, "sample vectors JSON file");
  CLI::Option* e_out_opt =
      equalize->add_option("--out", e_out, "output filename")->capture_default_str();
  DatapathFlags e_dp;
  e_dp.add_to(equalize, "float");

  // --- ber -------------------------------------------------------------------
  auto* ber = app.add_subcommand("ber", "Monte-Carlo bit error rate sweep, CSV output");
  ber->fallthrough();
  int b_b = 0, b_u = 0, b_k = 1;
  std::string b_cons = "qpsk", b_eq = "lmmse";
  std::vector<double> b_snrs;
  double b_es = 1.0;
  long b_min_errors = 200, b_max_trials = 100000;
  int b_threads = 0;
  bool b_consistency = false;
  std::string b_out = "ber.csv";
  CLI::Option* b_b_opt = ber->add_option("--B", b_b, "number of basestation antennas");
  CLI::Option* b_u_opt = ber->add_option("--U", b_u, "number of users");
  CLI::Option* b_cons_opt =
      ber->add_option("--constellation", b_cons, "qpsk or 16qam")->capture_default_str();
  CLI::Option* b_eq_opt =
      ber->add_option("--equalizer", b_eq, "lmmse, flmmse or fame-fbs")->capture_default_str();
  CLI::Option* b_k_opt =
      ber->add_option("--K", b_k, "alphabet resolution in bits")->capture_default_str();
  CLI::Option* b_snr_opt =
      ber->add_option("--snr", b_snrs, "Es/N0 points in dB (comma separated)")->delimiter(',');
  CLI::Option* b_es_opt =
      ber->add_option("--es", b_es, "per-user symbol energy Es")->capture_default_str();
  CLI::Option* b_minerr_opt =
      ber->add_option("--min-errors", b_min_errors, "bit errors to collect per point")
          ->capture_default_str();
  CLI::Option* b_maxtr_opt =
      ber->add_option("--max-trials", b_max_trials, "trial cap per point")->capture_default_str();
  ber->add_option("--threads", b_threads,
                  "worker threads (0 = FAEQ_THREADS, then machine parallelism)")
      ->capture_default_str();
  ber->add_flag("--consistency", b_consistency,
                "also compare the bit-exact datapath against the float path");
  CLI::Option* b_out_opt =
      ber->add_option("--out", b_out, "CSV output filename")->capture_default_str();
  DatapathFlags b_dp;
  b_dp.add_to(ber, "float");
  FbsFlags b_fbs;
  b_fbs.add_to(ber);

  // --- hw ---------------------------------------------------------------------
  auto* hw = app.add_subcommand(
      "hw", "minimal-instance area/power/throughput exploration from a calibration file");
  hw->fallthrough();
  std::string h_calibration;
  std::vector<double> h_targets;
  std::vector<int> h_bits, h_input_bits;
  std::string h_out = "cost.csv";
  CLI::Option* h_cal_opt =
      hw->add_option("--calibration", h_calibration, "calibration JSON file");
  CLI::Option* h_target_opt =
      hw->add_option("--target", h_targets, "target throughput in vectors/s (comma separated)")
          ->delimiter(',');
  CLI::Option* h_bits_opt =
      hw->add_option("--K", h_bits, "equalizer resolutions to explore (default: all calibrated)")
          ->delimiter(',');
  CLI::Option* h_input_opt =
      hw->add_option("--L", h_input_bits, "input resolutions to explore (default: all calibrated)")
          ->delimiter(',');
  CLI::Option* h_out_opt =
      hw->add_option("--out", h_out, "CSV output filename")->capture_default_str();

  // --- selftest -----------------------------------------------------------------
  auto* selftest = app.add_subcommand(
      "selftest", "run the acceptance suite; one PASS/FAIL line per criterion");
  selftest->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const Json cfg = load_config(config_path);

    if (app.got_subcommand(design)) {
      from_config(cfg, "channel", d_channel_opt, d_channel);
      from_config(cfg, "num_antennas", d_b_opt, d_b);
      from_config(cfg, "num_users", d_u_opt, d_u);
      from_config(cfg, "bits", d_k_opt, d_k);
      from_config(cfg, "method", d_method_opt, d_method);
      from_config(cfg, "symbol_energy", d_es_opt, d_es);
      from_config(cfg, "noise_variance", d_n0_opt, d_n0);
      from_config(cfg, "out", d_out_opt, d_out);
      uint64_t eff_seed = seed;
      if (seed_opt->count() == 0 && cfg.contains("seed")) eff_seed = cfg.at("seed").get<uint64_t>();
      if (d_method != "flmmse" && d_method != "fame-fbs")
        throw std::invalid_argument("unknown method: " + d_method +
                                    " (expected flmmse or fame-fbs)");

      faeq::ComplexMatrix channel;
      std::vector<std::string> outputs;
      std::string channel_ref = d_channel;
      if (!d_channel.empty()) {
        channel = faeq::channel_from_json(faeq::load_json_file(d_channel));
        if ((d_b_opt->count() > 0 && channel.rows() != d_b) ||
            (d_u_opt->count() > 0 && channel.cols() != d_u))
          throw std::runtime_error("channel file dimensions disagree with --B/--U");
      } else {
        if (d_b < 1 || d_u < 1)
          throw std::invalid_argument("design needs either --channel or both --B and --U");
        channel = faeq::generate_rayleigh_channel(d_b, d_u, eff_seed);
        const std::string name = "channel.json";
        faeq::save_json_file(dir / name, faeq::channel_to_json(channel));
        outputs.push_back(name);
        channel_ref = (dir / name).string();
      }

      const faeq::FbsConfig fbs = d_fbs.resolve(cfg);
      faeq::FiniteAlphabetEqualizer eq;
      if (d_method == "flmmse")
        eq = faeq::flmmse_design(channel, d_es, d_n0, d_k);
      else
        eq = faeq::fame_fbs_design(channel, d_es, d_n0, d_k, fbs);
      faeq::save_json_file(dir / d_out, faeq::equalizer_to_json(eq));
      outputs.push_back(d_out);

      Json resolved;
      resolved["channel"] = channel_ref;
      resolved["num_antennas"] = channel.rows();
      resolved["num_users"] = channel.cols();
      resolved["bits"] = d_k;
      resolved["method"] = d_method;
      resolved["symbol_energy"] = d_es;
      resolved["noise_variance"] = d_n0;
      resolved["out"] = d_out;
      resolved["seed"] = eff_seed;
      if (d_method == "fame-fbs") resolved["fbs"] = faeq::fbs_config_to_json(fbs);
      write_manifest(dir, "design", resolved, eff_seed, outputs);
      return 0;
    }

    if (app.got_subcommand(equalize)) {
      from_config(cfg, "equalizer", e_eq_opt, e_equalizer);
      from_config(cfg, "input", e_in_opt, e_input);
      from_config(cfg, "out", e_out_opt, e_out);
      if (e_equalizer.empty() || e_input.empty())
        throw std::invalid_argument("equalize needs --equalizer and --input files");
      const faeq::Datapath dp = e_dp.resolve(cfg);

      const faeq::FiniteAlphabetEqualizer eq =
          faeq::equalizer_from_json(faeq::load_json_file(e_equalizer));
      const std::vector<faeq::ComplexVector> vectors =
          faeq::vectors_from_json(faeq::load_json_file(e_input));
      for (const auto& y : vectors)
        if (y.size() != eq.num_antennas())
          throw std::runtime_error("input vectors do not match the equalizer antenna count");

      std::vector<faeq::ComplexVector> shats;
      std::vector<double> scales;
      faeq::CycleReport report{0, "float"};
      if (dp.kind == faeq::Datapath::Kind::kFloat) {
        for (const auto& y : vectors) shats.push_back(eq.apply(y));
      } else {
        const faeq::PpacArray arr =
            dp.kind == faeq::Datapath::Kind::kPpac ? faeq::ppac_load(eq) : faeq::PpacArray{};
        const faeq::MacArrayConfig mac{dp.mac_units, eq.num_antennas(), eq.num_users()};
        for (const auto& y : vectors) {
          const double s = faeq::detail::input_scale(y, dp);
          const auto [y_re, y_im] = faeq::quantize_input(y, dp.serial_bits, s);
          faeq::ComplexVector shat;
          if (dp.kind == faeq::Datapath::Kind::kPpac)
            shat = faeq::ppac_equalize(arr, eq.beta, y_re, y_im, dp.serial_bits, dp.beta_mode,
                                       &report);
          else
            shat = faeq::mac_mvp(eq, y_re, y_im, dp.serial_bits, mac, &report, dp.beta_mode);
          shats.push_back(shat * s);
          scales.push_back(s);
        }
      }

      Json out_json;
      out_json["format"] = "faeq-equalized";
      out_json["architecture"] = report.architecture;
      out_json["cycles_per_vector"] = report.cycles;
      out_json["num_users"] = eq.num_users();
      out_json["outputs"] = shat_list_to_json(shats);
      out_json["input_scales"] = scales;
      faeq::save_json_file(dir / e_out, out_json);

      Json resolved;
      resolved["equalizer"] = e_equalizer;
      resolved["input"] = e_input;
      resolved["datapath"] = faeq::datapath_to_json(dp);
      resolved["out"] = e_out;
      write_manifest(dir, "equalize", resolved, seed, {e_out});
      return 0;
    }

    if (app.got_subcommand(ber)) {
      faeq::SweepConfig sweep = faeq::sweep_config_from_json(cfg);
      if (b_b_opt->count() > 0) sweep.num_antennas = b_b;
      if (b_u_opt->count() > 0) sweep.num_users = b_u;
      if (b_cons_opt->count() > 0) sweep.constellation = b_cons;
      if (b_eq_opt->count() > 0) sweep.equalizer = faeq::equalizer_kind_from_string(b_eq);
      if (b_k_opt->count() > 0) sweep.bits = b_k;
      if (b_snr_opt->count() > 0) sweep.snr_db_points = b_snrs;
      if (b_es_opt->count() > 0) sweep.symbol_energy = b_es;
      if (b_minerr_opt->count() > 0) sweep.min_errors = b_min_errors;
      if (b_maxtr_opt->count() > 0) sweep.max_trials = b_max_trials;
      if (seed_opt->count() > 0) sweep.seed = seed;
      sweep.datapath = b_dp.resolve(cfg);
      sweep.fbs = b_fbs.resolve(cfg);
      from_config(cfg, "out", b_out_opt, b_out);
      if (cfg.contains("consistency") && !b_consistency)
        b_consistency = cfg.at("consistency").get<bool>();

      const faeq::BerCurve curve = faeq::ber_sweep(sweep, b_threads);
      {
        std::ofstream out(dir / b_out);
        if (!out) throw std::runtime_error("cannot write " + (dir / b_out).string());
        faeq::write_ber_csv(out, curve);
      }
      std::vector<std::string> outputs{b_out};
      if (b_consistency) {
        const auto rows = faeq::datapath_consistency(sweep, b_threads);
        const std::string name = "consistency.csv";
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        faeq::write_consistency_csv(out, rows);
        outputs.push_back(name);
      }

      Json resolved = faeq::sweep_config_to_json(sweep);
      resolved["consistency"] = b_consistency;
      resolved["out"] = b_out;
      write_manifest(dir, "ber", resolved, sweep.seed, outputs);
      return 0;
    }

    if (app.got_subcommand(hw)) {
      from_config(cfg, "calibration", h_cal_opt, h_calibration);
      from_config(cfg, "targets", h_target_opt, h_targets);
      from_config(cfg, "bits", h_bits_opt, h_bits);
      from_config(cfg, "input_bits", h_input_opt, h_input_bits);
      from_config(cfg, "out", h_out_opt, h_out);
      if (h_calibration.empty()) throw std::invalid_argument("hw needs --calibration");
      if (h_targets.empty()) throw std::invalid_argument("hw needs at least one --target");

      const faeq::CalibrationSet set =
          faeq::calibration_from_json(faeq::load_json_file(h_calibration));
      if (h_bits.empty() || h_input_bits.empty()) {
        std::set<int> ks, ls;
        for (const auto& inst : set.instances) {
          ks.insert(inst.bits);
          ls.insert(inst.input_bits);
        }
        if (h_bits.empty()) h_bits.assign(ks.begin(), ks.end());
        if (h_input_bits.empty()) h_input_bits.assign(ls.begin(), ls.end());
      }

      const std::vector<faeq::ExploreRow> rows =
          faeq::explore(set, h_targets, h_bits, h_input_bits);
      std::ofstream out(dir / h_out);
      if (!out) throw std::runtime_error("cannot write " + (dir / h_out).string());
      faeq::write_cost_csv(out, rows);

      Json resolved;
      resolved["calibration"] = h_calibration;
      resolved["targets"] = h_targets;
      resolved["bits"] = h_bits;
      resolved["input_bits"] = h_input_bits;
      resolved["out"] = h_out;
      write_manifest(dir, "hw", resolved, seed, {h_out});
      return 0;
    }

    if (app.got_subcommand(selftest)) {
      const auto results = faeq::selftest::run_all();
      faeq::selftest::print_report(std::cout, results);
      Json criteria = Json::array();
      for (const auto& r : results) {
        Json c;
        c["id"] = r.id;
        c["name"] = r.name;
        c["passed"] = r.passed;
        criteria.push_back(c);
      }
      Json report;
      report["all_passed"] = faeq::selftest::all_passed(results);
      report["criteria"] = criteria;
      faeq::save_json_file(dir / "selftest_report.json", report);
      write_manifest(dir, "selftest", Json::object(), seed, {"selftest_report.json"});
      return faeq::selftest::all_passed(results) ? 0 : 3;
    }

    std::cerr << app.help() << std::flush;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
