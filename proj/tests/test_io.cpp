#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "faeq/io.hpp"
#include "faeq/rng.hpp"

using namespace faeq;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "faeq_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("complex values serialize as [re, im] pairs") {
  const Complex c(0.1, -2.5);
  const Json j = complex_to_json(c);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  REQUIRE(j.at(0).get<double>() == 0.1);
  REQUIRE(j.at(1).get<double>() == -2.5);
  REQUIRE(complex_from_json(j) == c);

  REQUIRE_THROWS_AS(complex_from_json(Json::array({1.0})), std::invalid_argument);
  REQUIRE_THROWS_AS(complex_from_json(Json::array({1.0, 2.0, 3.0})), std::invalid_argument);
  REQUIRE_THROWS_AS(complex_from_json(Json(3.0)), std::invalid_argument);
}

TEST_CASE("channel JSON stores row-major entries with explicit dimensions") {
  ComplexMatrix h(2, 3);
  Rng rng(8);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) h(r, c) = Complex(rng.normal(), rng.normal());

  const Json j = channel_to_json(h);
  REQUIRE(j.at("format") == "faeq-channel");
  REQUIRE(j.at("num_antennas") == 2);
  REQUIRE(j.at("num_users") == 3);
  REQUIRE(j.at("entries").size() == 6);
  REQUIRE(complex_from_json(j.at("entries").at(1)) == h(0, 1));  // row-major
  REQUIRE(complex_from_json(j.at("entries").at(3)) == h(1, 0));

  const ComplexMatrix back = channel_from_json(j);
  REQUIRE((back - h).norm() == 0.0);

  Json bad = j;
  bad["entries"].erase(5);
  REQUIRE_THROWS_AS(channel_from_json(bad), std::invalid_argument);
  bad = j;
  bad["num_antennas"] = 0;
  REQUIRE_THROWS_AS(channel_from_json(bad), std::invalid_argument);
}

TEST_CASE("equalizer JSON stores per-user columns, not conjugated rows") {
  const ComplexMatrix h = generate_rayleigh_channel(4, 2, 99);
  const FiniteAlphabetEqualizer eq = flmmse_design(h, 1.0, 0.1, 2);

  const Json j = equalizer_to_json(eq);
  REQUIRE(j.at("format") == "faeq-equalizer");
  REQUIRE(j.at("num_antennas") == 4);
  REQUIRE(j.at("num_users") == 2);
  REQUIRE(j.at("bits") == 2);
  const ComplexVector x0 = eq.x_column(0);
  for (int i = 0; i < 4; ++i)
    REQUIRE(complex_from_json(j.at("x_columns").at(0).at(size_t(i))) == x0[i]);

  const FiniteAlphabetEqualizer back = equalizer_from_json(j);
  REQUIRE((back.Xh - eq.Xh).norm() == 0.0);
  REQUIRE((back.beta - eq.beta).norm() == 0.0);
  REQUIRE(back.bits == eq.bits);
}

TEST_CASE("equalizer JSON validation rejects malformed content") {
  const ComplexMatrix h = generate_rayleigh_channel(4, 2, 99);
  const Json good = equalizer_to_json(flmmse_design(h, 1.0, 0.1, 2));

  Json bad = good;
  bad["x_columns"][0][0] = Json::array({2.0, 1.0});  // even part: off the alphabet
  REQUIRE_THROWS_AS(equalizer_from_json(bad), std::invalid_argument);

  bad = good;
  bad["x_columns"][0][0] = Json::array({9.0, 1.0});  // out of range for K=2
  REQUIRE_THROWS_AS(equalizer_from_json(bad), std::invalid_argument);

  bad = good;
  bad["beta"].erase(1);
  REQUIRE_THROWS_AS(equalizer_from_json(bad), std::invalid_argument);

  bad = good;
  bad["x_columns"][1].erase(3);
  REQUIRE_THROWS_AS(equalizer_from_json(bad), std::invalid_argument);

  bad = good;
  bad.erase("bits");
  REQUIRE_THROWS(equalizer_from_json(bad));
}

TEST_CASE("calibration JSON round trips instances and system figures") {
  CalibrationSet set;
  set.technology = "28nm";
  InstanceCalibration c;
  c.arch = "ppac";
  c.bits = 1;
  c.input_bits = 4;
  c.area_mm2 = 0.164;
  c.power_w = 0.112;
  c.f_clk_hz = 796e6;
  c.latency_cycles = 4;
  set.instances.push_back(c);
  SystemFigure f;
  f.arch = "mac";
  f.bits = 1;
  f.input_bits = 4;
  f.target_throughput = 2e9;
  f.total_area_mm2 = 21.0;
  f.total_power_w = 5.0;
  f.verified = false;
  set.system_figures.push_back(f);

  const Json j = calibration_to_json(set);
  REQUIRE(j.at("format") == "faeq-calibration");
  const CalibrationSet back = calibration_from_json(j);
  REQUIRE(back.technology == "28nm");
  REQUIRE(back.instances.size() == 1);
  REQUIRE(back.instances[0].arch == "ppac");
  REQUIRE(back.instances[0].area_mm2 == 0.164);
  REQUIRE(back.instances[0].f_clk_hz == 796e6);
  REQUIRE(back.system_figures.size() == 1);
  REQUIRE(back.system_figures[0].arch == "mac");
  REQUIRE(back.system_figures[0].total_area_mm2 == 21.0);
  REQUIRE(back.system_figures[0].verified == false);

  Json bad = j;
  bad["instances"][0]["area_mm2"] = 0.0;
  REQUIRE_THROWS_AS(calibration_from_json(bad), std::invalid_argument);
  REQUIRE_THROWS(calibration_from_json(Json::object()));
}

TEST_CASE("sample vector files round trip") {
  std::vector<ComplexVector> vecs;
  Rng rng(12);
  for (int n = 0; n < 3; ++n) {
    ComplexVector v(4);
    for (int i = 0; i < 4; ++i) v[i] = Complex(rng.normal(), rng.normal());
    vecs.push_back(v);
  }
  const Json j = vectors_to_json(vecs, 4);
  REQUIRE(j.at("format") == "faeq-vectors");
  REQUIRE(j.at("num_antennas") == 4);
  const std::vector<ComplexVector> back = vectors_from_json(j);
  REQUIRE(back.size() == 3);
  for (size_t n = 0; n < 3; ++n) REQUIRE((back[n] - vecs[n]).norm() == 0.0);

  REQUIRE_THROWS_AS(vectors_to_json(vecs, 5), std::invalid_argument);
  Json bad = j;
  bad["num_antennas"] = 3;
  REQUIRE_THROWS_AS(vectors_from_json(bad), std::invalid_argument);
}

TEST_CASE("equalizer kind names are a bijection") {
  for (EqualizerKind k :
       {EqualizerKind::kLmmse, EqualizerKind::kFlmmse, EqualizerKind::kFameFbs})
    REQUIRE(equalizer_kind_from_string(equalizer_kind_to_string(k)) == k);
  REQUIRE_THROWS_AS(equalizer_kind_from_string("zf"), std::invalid_argument);
}

TEST_CASE("beta mode JSON round trips both kinds") {
  const Json jf = beta_mode_to_json(BetaMode::floating());
  REQUIRE(jf.at("kind") == "float");
  REQUIRE_FALSE(jf.contains("frac_bits"));
  REQUIRE(beta_mode_from_json(jf).kind == BetaMode::Kind::kFloat);

  const Json jq = beta_mode_to_json(BetaMode::fixed(14));
  REQUIRE(jq.at("kind") == "fixed");
  REQUIRE(jq.at("frac_bits") == 14);
  const BetaMode back = beta_mode_from_json(jq);
  REQUIRE(back.kind == BetaMode::Kind::kFixed);
  REQUIRE(back.frac_bits == 14);

  REQUIRE_THROWS_AS(beta_mode_from_json(Json{{"kind", "decimal"}}), std::invalid_argument);
}

TEST_CASE("datapath JSON carries only the fields its kind needs") {
  const Json jf = datapath_to_json(Datapath::floating_point());
  REQUIRE(jf.at("kind") == "float");
  REQUIRE_FALSE(jf.contains("serial_bits"));
  REQUIRE(datapath_from_json(jf).kind == Datapath::Kind::kFloat);

  Datapath p = Datapath::ppac(7, 0.5);
  p.beta_mode = BetaMode::fixed(12);
  const Json jp = datapath_to_json(p);
  REQUIRE(jp.at("kind") == "ppac");
  REQUIRE(jp.at("serial_bits") == 7);
  REQUIRE(jp.at("scale") == 0.5);
  REQUIRE_FALSE(jp.contains("mac_units"));
  const Datapath pb = datapath_from_json(jp);
  REQUIRE(pb.kind == Datapath::Kind::kPpac);
  REQUIRE(pb.serial_bits == 7);
  REQUIRE(pb.scale == 0.5);
  REQUIRE(pb.beta_mode.kind == BetaMode::Kind::kFixed);
  REQUIRE(pb.beta_mode.frac_bits == 12);

  const Json jm = datapath_to_json(Datapath::mac(4, 0.0, 16));
  REQUIRE(jm.at("kind") == "mac");
  REQUIRE(jm.at("mac_units") == 16);
  const Datapath mb = datapath_from_json(jm);
  REQUIRE(mb.kind == Datapath::Kind::kMac);
  REQUIRE(mb.mac_units == 16);

  REQUIRE_THROWS_AS(datapath_from_json(Json{{"kind", "fpga"}}), std::invalid_argument);
}

TEST_CASE("solver configuration JSON round trips and defaults cleanly") {
  FbsConfig c;
  c.max_iters = 42;
  c.step_rule = StepRule::kFixed;
  c.fixed_step = 0.03;
  c.proj_alternations = 5;
  c.keep_best = false;
  c.power_iters = 17;
  c.power_tol = 1e-9;
  c.step_doublings = 12;
  c.polish = false;
  const FbsConfig back = fbs_config_from_json(fbs_config_to_json(c));
  REQUIRE(back.max_iters == 42);
  REQUIRE(back.step_rule == StepRule::kFixed);
  REQUIRE(back.fixed_step == 0.03);
  REQUIRE(back.proj_alternations == 5);
  REQUIRE(back.keep_best == false);
  REQUIRE(back.power_iters == 17);
  REQUIRE(back.power_tol == 1e-9);
  REQUIRE(back.step_doublings == 12);
  REQUIRE(back.polish == false);

  const FbsConfig defaults = fbs_config_from_json(Json::object());
  const FbsConfig reference;
  REQUIRE(defaults.max_iters == reference.max_iters);
  REQUIRE(defaults.step_rule == reference.step_rule);
  REQUIRE(defaults.proj_alternations == reference.proj_alternations);
  REQUIRE(defaults.keep_best == reference.keep_best);
  REQUIRE(defaults.step_doublings == reference.step_doublings);
  REQUIRE(defaults.polish == reference.polish);
  REQUIRE_THROWS_AS(fbs_config_from_json(Json{{"step_rule", "newton"}}), std::invalid_argument);
}

TEST_CASE("sweep configuration JSON round trips every field") {
  SweepConfig c;
  c.num_antennas = 64;
  c.num_users = 8;
  c.constellation = "16qam";
  c.equalizer = EqualizerKind::kFameFbs;
  c.bits = 3;
  c.fbs.max_iters = 7;
  c.datapath = Datapath::mac(6, 0.25, 8);
  c.snr_db_points = {-2.0, 0.0, 4.5};
  c.symbol_energy = 2.0;
  c.min_errors = 77;
  c.max_trials = 1234;
  c.seed = 987654321;

  const SweepConfig back = sweep_config_from_json(sweep_config_to_json(c));
  REQUIRE(back.num_antennas == 64);
  REQUIRE(back.num_users == 8);
  REQUIRE(back.constellation == "16qam");
  REQUIRE(back.equalizer == EqualizerKind::kFameFbs);
  REQUIRE(back.bits == 3);
  REQUIRE(back.fbs.max_iters == 7);
  REQUIRE(back.datapath.kind == Datapath::Kind::kMac);
  REQUIRE(back.datapath.serial_bits == 6);
  REQUIRE(back.datapath.scale == 0.25);
  REQUIRE(back.datapath.mac_units == 8);
  REQUIRE(back.snr_db_points == std::vector<double>{-2.0, 0.0, 4.5});
  REQUIRE(back.symbol_energy == 2.0);
  REQUIRE(back.min_errors == 77);
  REQUIRE(back.max_trials == 1234);
  REQUIRE(back.seed == 987654321);

  const SweepConfig defaults = sweep_config_from_json(Json::object());
  REQUIRE(defaults.num_antennas == SweepConfig{}.num_antennas);
  REQUIRE(defaults.constellation == SweepConfig{}.constellation);
  REQUIRE(defaults.equalizer == SweepConfig{}.equalizer);
  REQUIRE(defaults.seed == SweepConfig{}.seed);
}

TEST_CASE("JSON files save and load through the filesystem") {
  const auto dir = scratch_dir();
  const auto path = dir / "roundtrip.json";
  const ComplexMatrix h = generate_rayleigh_channel(3, 2, 5);
  save_json_file(path, channel_to_json(h));
  const ComplexMatrix back = channel_from_json(load_json_file(path));
  REQUIRE((back - h).norm() == 0.0);

  // serialized text ends with a newline
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(!text.empty());
  REQUIRE(text.back() == '\n');
}

TEST_CASE("missing and malformed files raise errors naming the path") {
  const auto dir = scratch_dir();
  const auto missing = dir / "does_not_exist.json";
  std::filesystem::remove(missing);
  try {
    load_json_file(missing);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("does_not_exist.json") != std::string::npos);
  }

  const auto garbled = dir / "garbled.json";
  {
    std::ofstream out(garbled);
    out << "{ not json at all";
  }
  try {
    load_json_file(garbled);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("garbled.json") != std::string::npos);
  }
}

TEST_CASE("numeric CSV fields use a point as the decimal separator") {
  REQUIRE(detail::format_double(0.5) == "0.5");
  REQUIRE(detail::format_double(-1.804) == "-1.804");
  REQUIRE(detail::format_double(2e9) == "2000000000");
  REQUIRE(detail::format_double(2e-9) == "2e-09");
  REQUIRE(detail::format_double(0.0) == "0");
  REQUIRE(detail::format_double(113714285.7142857) == "113714285.714");
}

TEST_CASE("BER CSV has the pinned header and one row per point") {
  BerCurve curve;
  BerPoint p;
  p.snr_db = 10.0;
  p.trials = 512;
  p.bits_simulated = 2048;
  p.bit_errors = 17;
  p.ber = 17.0 / 2048.0;
  p.std_err = 0.002;
  curve.points.push_back(p);
  p.snr_db = 12.5;
  curve.points.push_back(p);

  std::ostringstream out;
  write_ber_csv(out, curve);
  const std::vector<std::string> lines = lines_of(out.str());
  REQUIRE(lines.size() == 4);
  REQUIRE(lines[0].rfind("# snr_db is Es/N0 in dB", 0) == 0);
  REQUIRE(lines[1] == "snr_db,trials,bit_errors,ber,stderr");
  REQUIRE(lines[2] == "10,512,17,0.00830078125,0.002");
  REQUIRE(lines[3].rfind("12.5,", 0) == 0);
}

TEST_CASE("cost CSV has the pinned header with unit suffixes") {
  ExploreRow r;
  r.arch = "ppac";
  r.bits = 1;
  r.input_bits = 4;
  r.target_throughput = 2e9;
  r.report.instances = 11;
  r.report.total_area_mm2 = 1.804;
  r.report.total_power_w = 1.232;
  r.report.achieved_throughput = 11 * 199e6;

  std::ostringstream out;
  write_cost_csv(out, {r});
  const std::vector<std::string> lines = lines_of(out.str());
  REQUIRE(lines.size() == 2);
  REQUIRE(lines[0] ==
          "arch,K_bits,L_bits,target_vectors_per_s,instances,total_area_mm2,total_power_w,"
          "achieved_vectors_per_s");
  REQUIRE(lines[1] == "ppac,1,4,2000000000,11,1.804,1.232,2189000000");
}

TEST_CASE("consistency CSV has the pinned header") {
  ConsistencyPoint p;
  p.snr_db = 8.0;
  p.trials = 512;
  p.bits_simulated = 2048;
  p.ber_hw = 0.01;
  p.ber_float = 0.0095;
  p.ber_delta = p.ber_hw - p.ber_float;
  p.pooled_std_err = 0.003;
  p.max_rel_deviation = 0.0012;

  std::ostringstream out;
  write_consistency_csv(out, {p});
  const std::vector<std::string> lines = lines_of(out.str());
  REQUIRE(lines.size() == 3);
  REQUIRE(lines[0].rfind("# snr_db is Es/N0 in dB", 0) == 0);
  REQUIRE(lines[1] == "snr_db,trials,bits,ber_hw,ber_float,ber_delta,pooled_stderr,max_rel_deviation");
  REQUIRE(lines[2].rfind("8,512,2048,0.01,0.0095,", 0) == 0);
}
