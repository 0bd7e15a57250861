#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "faeq/hwcost.hpp"
#include "faeq/rng.hpp"

using namespace faeq;

namespace {

InstanceCalibration make_cal(const std::string& arch, int bits, int input_bits, double area,
                             double power, double f_clk, long latency) {
  InstanceCalibration c;
  c.arch = arch;
  c.bits = bits;
  c.input_bits = input_bits;
  c.area_mm2 = area;
  c.power_w = power;
  c.f_clk_hz = f_clk;
  c.latency_cycles = latency;
  return c;
}

// The six measured in-memory equalizer operating points (28 nm, B = 256).
CalibrationSet measured_set() {
  CalibrationSet set;
  set.technology = "28nm";
  for (int l : {4, 7}) {
    set.instances.push_back(make_cal("ppac", 1, l, 0.164, 0.112, 796e6, l));
    set.instances.push_back(make_cal("ppac", 2, l, 0.324, 0.246, 785e6, l));
    set.instances.push_back(make_cal("ppac", 3, l, 0.483, 0.383, 784e6, l));
  }
  return set;
}

}  // namespace

TEST_CASE("instance_throughput is clock over latency") {
  REQUIRE(instance_throughput(make_cal("ppac", 1, 4, 0.164, 0.112, 796e6, 4)) == 199e6);
  REQUIRE(round_to_sig_figs(instance_throughput(make_cal("ppac", 1, 7, 0.164, 0.112, 796e6, 7)) /
                                1e6,
                            4) == 113.7);
  REQUIRE(instance_throughput(make_cal("ppac", 3, 7, 0.483, 0.383, 784e6, 7)) == 112e6);
}

TEST_CASE("calibration records reject non-physical figures") {
  REQUIRE_THROWS_AS(instance_throughput(make_cal("", 1, 4, 1, 1, 1e9, 4)), std::invalid_argument);
  REQUIRE_THROWS_AS(instance_throughput(make_cal("ppac", 0, 4, 1, 1, 1e9, 4)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(instance_throughput(make_cal("ppac", 1, 4, 0, 1, 1e9, 4)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(instance_throughput(make_cal("ppac", 1, 4, 1, 1, 1e9, 0)),
                    std::invalid_argument);
}

TEST_CASE("system_cost meets a 2 Gvec/s target with the fewest instances") {
  const CostReport slow = system_cost(make_cal("ppac", 1, 7, 0.164, 0.112, 796e6, 7), 2e9);
  REQUIRE(slow.instances == 18);
  REQUIRE(slow.total_area_mm2 == Catch::Approx(2.952).epsilon(1e-12));
  REQUIRE(slow.total_power_w == Catch::Approx(2.016).epsilon(1e-12));
  REQUIRE(slow.achieved_throughput >= 2e9);

  const CostReport fast = system_cost(make_cal("ppac", 1, 4, 0.164, 0.112, 796e6, 4), 2e9);
  REQUIRE(fast.instances == 11);
  REQUIRE(fast.total_area_mm2 == Catch::Approx(1.804).epsilon(1e-12));
  REQUIRE(fast.total_power_w == Catch::Approx(1.232).epsilon(1e-12));
}

TEST_CASE("system_cost instance counts are minimal and sufficient") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double f = 1e8 + rng.uniform() * 1e9;
    const long lat = 1 + long(rng.uniform_int(20));
    const double target = 1e6 + rng.uniform() * 5e9;
    const InstanceCalibration cal = make_cal("ppac", 1, 4, 0.1, 0.1, f, lat);
    const CostReport r = system_cost(cal, target);
    const double rate = instance_throughput(cal);
    REQUIRE(double(r.instances) * rate >= target);
    if (r.instances > 1) REQUIRE(double(r.instances - 1) * rate < target);
    REQUIRE(r.achieved_throughput == double(r.instances) * rate);
  }
}

TEST_CASE("system_cost handles single-instance and exact-multiple targets") {
  const InstanceCalibration cal = make_cal("ppac", 1, 4, 0.164, 0.112, 796e6, 4);
  REQUIRE(system_cost(cal, 1e6).instances == 1);
  REQUIRE(system_cost(cal, 199e6).instances == 1);
  REQUIRE(system_cost(cal, 398e6).instances == 2);  // exactly two instances, not three
  REQUIRE_THROWS_AS(system_cost(cal, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(system_cost(cal, -1.0), std::invalid_argument);
}

TEST_CASE("system_cost instance count is monotone in the target") {
  const InstanceCalibration cal = make_cal("ppac", 2, 7, 0.324, 0.246, 785e6, 7);
  long prev = 0;
  for (double target = 1e8; target <= 4e9; target += 1e8) {
    const long n = system_cost(cal, target).instances;
    REQUIRE(n >= prev);
    prev = n;
  }
}

TEST_CASE("explore reproduces the published cost table at two significant figures") {
  const std::vector<ExploreRow> rows = explore(measured_set(), {2e9}, {1, 2, 3}, {4, 7});
  REQUIRE(rows.size() == 6);

  // Deterministic order: K ascending, then L ascending.
  const int expect_bits[] = {1, 1, 2, 2, 3, 3};
  const int expect_input[] = {4, 7, 4, 7, 4, 7};
  const long expect_instances[] = {11, 18, 11, 18, 11, 18};
  const double expect_area[] = {1.8, 3.0, 3.6, 5.8, 5.3, 8.7};
  const double expect_power[] = {1.2, 2.0, 2.7, 4.4, 4.2, 6.9};
  for (int i = 0; i < 6; ++i) {
    REQUIRE(rows[size_t(i)].arch == "ppac");
    REQUIRE(rows[size_t(i)].bits == expect_bits[i]);
    REQUIRE(rows[size_t(i)].input_bits == expect_input[i]);
    REQUIRE(rows[size_t(i)].target_throughput == 2e9);
    REQUIRE(rows[size_t(i)].report.instances == expect_instances[i]);
    REQUIRE(round_to_sig_figs(rows[size_t(i)].report.total_area_mm2, 2) == expect_area[i]);
    REQUIRE(round_to_sig_figs(rows[size_t(i)].report.total_power_w, 2) == expect_power[i]);
  }
}

TEST_CASE("explore orders architectures alphabetically and keeps target order") {
  CalibrationSet set = measured_set();
  set.instances.push_back(make_cal("mac", 1, 4, 21.0, 5.0, 583e6, 256));
  const std::vector<ExploreRow> rows = explore(set, {2e9, 1e9}, {1}, {4});
  REQUIRE(rows.size() == 4);
  REQUIRE(rows[0].arch == "mac");
  REQUIRE(rows[0].target_throughput == 2e9);
  REQUIRE(rows[1].arch == "mac");
  REQUIRE(rows[1].target_throughput == 1e9);
  REQUIRE(rows[2].arch == "ppac");
  REQUIRE(rows[3].arch == "ppac");
}

TEST_CASE("explore rejects empty sweeps and missing calibration points") {
  const CalibrationSet set = measured_set();
  REQUIRE_THROWS_AS(explore(set, {}, {1}, {4}), std::invalid_argument);
  REQUIRE_THROWS_AS(explore(set, {2e9}, {}, {4}), std::invalid_argument);
  REQUIRE_THROWS_AS(explore(set, {2e9}, {1}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(explore(set, {2e9}, {4}, {4}), std::invalid_argument);  // no K=4 point
  REQUIRE_THROWS_AS(explore(CalibrationSet{}, {2e9}, {1}, {4}), std::invalid_argument);
}

TEST_CASE("find_instance retrieves exactly the requested operating point") {
  const CalibrationSet set = measured_set();
  const InstanceCalibration* hit = set.find_instance("ppac", 2, 7);
  REQUIRE(hit != nullptr);
  REQUIRE(hit->area_mm2 == 0.324);
  REQUIRE(set.find_instance("ppac", 2, 5) == nullptr);
  REQUIRE(set.find_instance("mac", 2, 7) == nullptr);
}

TEST_CASE("replicate_mac_model scales only the replicated share") {
  const InstanceCalibration base = make_cal("mac", 1, 4, 21.0, 5.0, 583e6, 256);
  const ReplicationFractions fr{0.2, 0.75};

  const InstanceCalibration same = replicate_mac_model(base, 1, fr, 256);
  REQUIRE(same.area_mm2 == base.area_mm2);
  REQUIRE(same.power_w == base.power_w);
  REQUIRE(same.latency_cycles == 256);

  const InstanceCalibration rep = replicate_mac_model(base, 16, fr, 256);
  // (1 - 0.2) + 16 * 0.2 = 4.0 and (1 - 0.75) + 16 * 0.75 = 12.25
  REQUIRE(rep.area_mm2 == Catch::Approx(21.0 * 4.0).epsilon(1e-12));
  REQUIRE(rep.power_w == Catch::Approx(5.0 * 12.25).epsilon(1e-12));
  REQUIRE(rep.latency_cycles == 20);  // 256/16 + log2(16)
  REQUIRE(rep.f_clk_hz == base.f_clk_hz);
}

TEST_CASE("replicate_mac_model with full fractions multiplies by the unit count") {
  const InstanceCalibration base = make_cal("mac", 1, 4, 2.0, 3.0, 1e9, 8);
  const ReplicationFractions fr{1.0, 1.0};
  const InstanceCalibration rep = replicate_mac_model(base, 8, fr, 8);
  REQUIRE(rep.area_mm2 == Catch::Approx(16.0).epsilon(1e-12));
  REQUIRE(rep.power_w == Catch::Approx(24.0).epsilon(1e-12));
  REQUIRE(rep.latency_cycles == 4);  // 8/8 + log2(8)
}

TEST_CASE("replicate_mac_model validates the unit count") {
  const InstanceCalibration base = make_cal("mac", 1, 4, 21.0, 5.0, 583e6, 256);
  const ReplicationFractions fr{0.2, 0.75};
  REQUIRE_THROWS_AS(replicate_mac_model(base, 3, fr, 256), std::invalid_argument);
  REQUIRE_THROWS_AS(replicate_mac_model(base, 0, fr, 256), std::invalid_argument);
  REQUIRE_THROWS_AS(replicate_mac_model(base, 512, fr, 256), std::invalid_argument);
  REQUIRE_THROWS_AS(replicate_mac_model(base, 4, fr, 6), std::invalid_argument);
  REQUIRE_THROWS_AS(replicate_mac_model(base, 16, fr, 0), std::invalid_argument);
}

TEST_CASE("ReplicationFractions must lie in the half-open unit interval") {
  REQUIRE_THROWS_AS((ReplicationFractions{0.0, 0.5}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((ReplicationFractions{0.5, 0.0}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((ReplicationFractions{1.1, 0.5}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((ReplicationFractions{-0.1, 0.5}.validate()), std::invalid_argument);
  REQUIRE_NOTHROW((ReplicationFractions{1.0, 1.0}.validate()));
  REQUIRE_NOTHROW((ReplicationFractions{0.2, 0.75}.validate()));
}

TEST_CASE("optimize_mac_units balances replication area against latency") {
  REQUIRE(optimize_mac_units(256, ReplicationFractions{0.2, 0.75}) == 16);
  // All area replicates: parallelism never pays, stay at one unit.
  REQUIRE(optimize_mac_units(256, ReplicationFractions{1.0, 1.0}) == 1);
  // Nearly free units: pure latency minimization; 128 and 256 units both
  // reach 9 cycles, the cheaper 128 wins.
  REQUIRE(optimize_mac_units(256, ReplicationFractions{1e-9, 0.5}) == 128);
  REQUIRE(optimize_mac_units(1, ReplicationFractions{0.2, 0.75}) == 1);
  REQUIRE_THROWS_AS(optimize_mac_units(24, ReplicationFractions{0.2, 0.75}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(optimize_mac_units(0, ReplicationFractions{0.2, 0.75}),
                    std::invalid_argument);
}

TEST_CASE("optimize_mac_units returns the argmin over all power-of-two counts") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = 0.01 + 0.99 * rng.uniform();
    const ReplicationFractions fr{a, 0.5};
    const int best = optimize_mac_units(256, fr);
    REQUIRE((best & (best - 1)) == 0);
    REQUIRE(256 % best == 0);
    const auto at = [&](int m) {
      int log2m = 0;
      while ((1 << log2m) < m) ++log2m;
      return ((1.0 - a) + double(m) * a) * (256.0 / double(m) + double(log2m));
    };
    for (int m = 1; m <= 256; m <<= 1) REQUIRE(at(best) <= at(m) + 1e-12);
  }
}

TEST_CASE("round_to_sig_figs keeps the leading digits only") {
  REQUIRE(round_to_sig_figs(1.804, 2) == 1.8);
  REQUIRE(round_to_sig_figs(2.952, 2) == 3.0);
  REQUIRE(round_to_sig_figs(12345.0, 2) == 12000.0);
  REQUIRE(round_to_sig_figs(0.00123456, 3) == 0.00123);
  REQUIRE(round_to_sig_figs(9.99, 2) == 10.0);
  REQUIRE(round_to_sig_figs(-4.213, 2) == -4.2);
  REQUIRE(round_to_sig_figs(0.0, 5) == 0.0);
}
