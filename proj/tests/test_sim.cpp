#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "sim.hpp"

using namespace sensormesh;

namespace {

const std::string kFixture =
    std::string(SENSORMESH_FIXTURES_DIR) + "/temperature_anomaly.csv";
const std::string kPresetsDir = SENSORMESH_PRESETS_DIR;

ScenarioConfig crosscheck_config(SimMode mode, int n) {
  ScenarioConfig config =
      preset_scenario(mode == SimMode::isa_ci ? "isa_ci" : "isa_ci_cas");
  config.node_count = n;
  config.profile.leakage_current_a = 0.0;
  config.duration_s = mode == SimMode::isa_ci ? 6e7 : 4e8;
  return config;
}

double lora_energy_j(const SimResult& result, double supply_v = 3.7) {
  double coulombs = 0.0;
  for (const NodeResult& n : result.nodes) {
    coulombs += n.ledger.lora_tx_c + n.ledger.lora_rx_c;
  }
  return coulombs * supply_v;
}

}  // namespace

TEST_CASE("scenario files in the presets directory match the built-ins") {
  for (const std::string& name : preset_names()) {
    const ScenarioConfig from_file =
        load_scenario(kPresetsDir + "/" + name + ".cfg");
    const ScenarioConfig builtin = preset_scenario(name);
    CHECK(from_file.mode == builtin.mode);
    CHECK(from_file.node_count == builtin.node_count);
    CHECK(from_file.duration_s == builtin.duration_s);
    CHECK(from_file.anomaly_period_s == builtin.anomaly_period_s);
    CHECK(from_file.heartbeat_s == builtin.heartbeat_s);
    CHECK(from_file.profile.leakage_current_a ==
          builtin.profile.leakage_current_a);
  }
}

TEST_CASE("scenario parser rejects unknown keys by name") {
  CHECK_THROWS_WITH_AS(parse_scenario("modee = isa\n"),
                       doctest::Contains("modee"), ScenarioError);
  CHECK_THROWS_WITH_AS(parse_scenario("nodes = many\n"),
                       doctest::Contains("nodes"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("mode = warp_drive\n"), ScenarioError);
  CHECK_NOTHROW(parse_scenario("# comment only\nmode = isa\nduration_s = 10\n"));
}

TEST_CASE("continuous radio occupancy drains the cell in about 4.3 hours") {
  const SimResult result = run(preset_scenario("lora_every_second"));
  CHECK(result.first_death_s == doctest::Approx(4.3 * 3600.0).epsilon(0.10));
  CHECK(result.info_retention == 1.0);
  CHECK(result.sample_retention == 1.0);
}

TEST_CASE("rotating cluster heads reach the 104-day regime") {
  const SimResult result = run(preset_scenario("isa_ci_cas"));
  const double days = result.first_death_s / 86400.0;
  CHECK(days == doctest::Approx(104.0).epsilon(0.10));
  // Better than 90% of the leakage-only bound.
  const double bound_s = 828.0 / kLifetimeLeakageA;
  CHECK(result.first_death_s / bound_s >= 0.90);
  CHECK(result.info_retention > 0.98);
}

TEST_CASE("ladder rungs are ordered and bounded by leakage") {
  const double baseline = run(preset_scenario("lora_every_second")).first_death_s;
  const double duty = run(preset_scenario("duty_cycled_lora")).first_death_s;
  const double isa = run(preset_scenario("isa")).first_death_s;
  const double ci = run(preset_scenario("isa_ci")).first_death_s;
  const double cas = run(preset_scenario("isa_ci_cas")).first_death_s;
  const double bound_s = 828.0 / kLifetimeLeakageA;

  CHECK(baseline < isa);
  CHECK(isa <= cas);
  CHECK(cas < bound_s);
  CHECK(baseline < duty);
  CHECK(duty < bound_s);
  // A fixed head dies before a rotating one for n >= 2.
  CHECK(ci < cas);
}

TEST_CASE("literal duty interpretation of the always-on baseline") {
  // One 190 ms Rx+Tx event per second instead of continuous occupancy.
  ScenarioConfig config = preset_scenario("lora_every_second");
  config.baseline_radio = BaselineRadio::literal_duty;
  config.duration_s = 100000.0;
  const SimResult literal = run(config);
  const double per_second_c =
      config.profile.lora_rx.charge_c() + config.profile.lora_tx.charge_c() +
      kLifetimeLeakageA;
  CHECK(literal.first_death_s ==
        doctest::Approx(828.0 / per_second_c).epsilon(0.02));
  CHECK(literal.first_death_s >
        run(preset_scenario("lora_every_second")).first_death_s);
}

TEST_CASE("every documented scenario key parses") {
  const ScenarioConfig config = parse_scenario(
      "mode = isa_ci_cas\n"
      "nodes = 3\n"
      "node_spacing_m = 4\n"
      "hub_distance_m = 2500\n"
      "relay_distances_m = 1250, 1900\n"
      "duration_s = 1000\n"
      "sample_period_s = 1\n"
      "seed = 42\n"
      "baseline = 21\n"
      "noise = 0.001\n"
      "anomaly_period_s = 300\n"
      "anomaly_magnitude = 0.2\n"
      "threshold_x = 0.12\n"
      "threshold_y = 0.03\n"
      "heartbeat_s = 300\n"
      "duty_period_s = 60\n"
      "leakage_ua = 28\n"
      "battery_mah = 110\n"
      "supply_voltage = 3.0\n"
      "lora_overhead_mj = 10\n"
      "lora_pricing = airtime\n"
      "baseline_radio = literal_duty\n"
      "sf = auto\n"
      "payload_bytes = 120\n"
      "bandwidth_khz = 250\n"
      "tx_power_dbm = 14\n"
      "carrier_mhz = 868\n"
      "path_loss_exponent = 2.5\n"
      "ble_range_m = 12\n"
      "similarity_window_s = 300\n"
      "record_events = false\n");
  CHECK(config.node_count == 3);
  CHECK(config.relay_distances_m.size() == 2);
  CHECK(config.profile.leakage_current_a == doctest::Approx(28e-6));
  CHECK(config.profile.lora_event_overhead_j == doctest::Approx(10e-3));
  CHECK(config.pricing == LoRaPricing::airtime);
  CHECK(config.sf_auto);
  CHECK(config.lora.bandwidth_hz == 250e3);
  CHECK(config.lora_receiver.bandwidth_hz == 250e3);
  CHECK(config.carrier_frequency_hz == doctest::Approx(868e6));
  CHECK(!config.record_events);
}

TEST_CASE("duty cycling delivers one sample in N") {
  ScenarioConfig config = preset_scenario("duty_cycled_lora");
  config.duty_period_s = 100.0;
  config.duration_s = 200000.0;
  const SimResult result = run(config);
  CHECK(result.sample_retention == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("quiet nodes coast down to the leakage-plus-compute floor") {
  ScenarioConfig config;
  config.mode = SimMode::isa;
  config.node_count = 1;
  config.anomaly_period_s = 0.0;
  config.heartbeat_s = 0.0;
  config.duration_s = 1.2e7;
  config.profile.leakage_current_a = kLifetimeLeakageA;
  const SimResult result = run(config);
  const double compute_rate =
      config.profile.isa_compute.charge_c() / config.sample_period_s;
  const double expected = 828.0 / (kLifetimeLeakageA + compute_rate);
  CHECK(result.first_death_s == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("ledger conservation holds on every preset") {
  for (const std::string& name : preset_names()) {
    const SimResult result = run(preset_scenario(name));
    for (const NodeResult& node : result.nodes) {
      const double drained = node.initial_charge_c - node.final_charge_c;
      CHECK(std::abs(drained - node.ledger.total_c()) <= 1e-9);
    }
  }
}

TEST_CASE("identical configs produce byte-identical event logs") {
  ScenarioConfig config = preset_scenario("isa_ci_cas");
  config.duration_s = 20000.0;
  // Noise wide enough that spurious detections depend on the draw.
  config.noise = 0.08;
  config.record_events = true;
  const SimResult a = run(config);
  const SimResult b = run(config);
  CHECK(a.events_csv() == b.events_csv());
  CHECK(a.summary_csv() == b.summary_csv());
  CHECK(!a.events.empty());

  config.seed = 99;
  const SimResult c = run(config);
  CHECK(a.events_csv() != c.events_csv());  // the seed actually matters
}

TEST_CASE("dead nodes stop acting") {
  ScenarioConfig config = preset_scenario("isa_ci_cas");
  config.record_events = true;
  config.duration_s = 1.2e7;
  const SimResult result = run(config);
  std::map<std::uint32_t, double> death_time;
  for (const NodeResult& node : result.nodes) {
    if (node.died) death_time[node.id] = node.lifetime_s;
  }
  REQUIRE(!death_time.empty());
  for (const SimEventRecord& event : result.events) {
    if (event.kind == "death") continue;
    const auto it = death_time.find(event.node);
    if (it != death_time.end()) {
      CHECK(event.time_s <= it->second + 1e-9);
    }
  }
}

TEST_CASE("rotation keeps batteries balanced while everyone is alive") {
  ScenarioConfig config = preset_scenario("isa_ci_cas");
  config.node_count = 4;
  config.duration_s = 2.0e6;  // well before first death
  const SimResult result = run(config);
  double min_charge = 1e18;
  double max_charge = -1e18;
  for (const NodeResult& node : result.nodes) {
    CHECK(!node.died);
    min_charge = std::min(min_charge, node.final_charge_c);
    max_charge = std::max(max_charge, node.final_charge_c);
  }
  const EnergyProfile& p = config.profile;
  const double slack = p.lora_event_charge_c() + p.ble_event.charge_c() +
                       p.isa_ci_cas_compute.charge_c() * 900.0;
  CHECK(max_charge - min_charge <= slack);
}

TEST_CASE("rotation keeps working after the first death") {
  // Survivors must keep rotating; otherwise deaths are spread far apart.
  ScenarioConfig config = preset_scenario("isa_ci_cas");
  config.node_count = 3;
  config.duration_s = 1.3e7;
  const SimResult result = run(config);
  for (const NodeResult& node : result.nodes) CHECK(node.died);
  CHECK(result.last_death_s - result.first_death_s <=
        0.01 * result.first_death_s);
}

TEST_CASE("simulated first death matches the closed forms within 5%") {
  for (int n : {2, 4, 8}) {
    const LifetimeCrosscheck ci =
        lifetime_crosscheck(crosscheck_config(SimMode::isa_ci, n));
    CHECK(ci.relative_error <= 0.05);
    const LifetimeCrosscheck cas =
        lifetime_crosscheck(crosscheck_config(SimMode::isa_ci_cas, n));
    CHECK(cas.relative_error <= 0.05);
  }
}

TEST_CASE("degenerate single-node cluster agrees across both modes") {
  const LifetimeCrosscheck ci =
      lifetime_crosscheck(crosscheck_config(SimMode::isa_ci, 1));
  ScenarioConfig cas_config = crosscheck_config(SimMode::isa_ci_cas, 1);
  cas_config.duration_s = 6e7;
  const LifetimeCrosscheck cas = lifetime_crosscheck(cas_config);
  // Identical up to the slightly larger rotation compute pulse.
  CHECK(cas.simulated_s == doctest::Approx(ci.simulated_s).epsilon(0.02));
  CHECK(ci.relative_error <= 0.05);
  CHECK(cas.relative_error <= 0.05);
}

TEST_CASE("cross-check refuses non-stationary scenarios") {
  ScenarioConfig config = crosscheck_config(SimMode::isa_ci, 2);
  config.profile.leakage_current_a = kLifetimeLeakageA;
  CHECK_THROWS_WITH_AS(lifetime_crosscheck(config),
                       doctest::Contains("leakage"), std::invalid_argument);

  config = crosscheck_config(SimMode::isa_ci, 2);
  config.mode = SimMode::isa;
  CHECK_THROWS_AS(lifetime_crosscheck(config), std::invalid_argument);

  config = crosscheck_config(SimMode::isa_ci, 2);
  config.noise = 0.01;
  CHECK_THROWS_AS(lifetime_crosscheck(config), std::invalid_argument);

  config = crosscheck_config(SimMode::isa_ci, 2);
  config.anomaly_period_s = 0.0;
  CHECK_THROWS_AS(lifetime_crosscheck(config), std::invalid_argument);
}

TEST_CASE("routing: hub in range needs no relays") {
  const std::map<std::uint32_t, Position> no_relays;
  const RoutePlan plan =
      route_multihop({0, 0}, {0, 800.0}, no_relays, 1249.0);
  CHECK(plan.reachable);
  CHECK(plan.relay_ids.empty());
  CHECK(plan.hop_count() == 1);
}

TEST_CASE("routing: 2.5 km at SF7 takes exactly two hops") {
  ScenarioConfig config;
  config.hub_distance_m = 2500.0;
  config.sf_auto = true;
  const std::map<std::uint32_t, Position> relays{{1, {0, 1250.0}}};
  const RoutePlan plan = plan_route(config, {0, 0}, {0, 2500.0}, relays);
  CHECK(plan.reachable);
  CHECK(plan.spreading_factor == 7);
  CHECK(plan.hop_count() == 2);
  CHECK(plan.relay_ids == std::vector<std::uint32_t>{1});

  // Without the relay the same span needs SF10 in one hop.
  const RoutePlan direct =
      plan_route(config, {0, 0}, {0, 2500.0}, {});
  CHECK(direct.reachable);
  CHECK(direct.spreading_factor == 10);
  CHECK(direct.hop_count() == 1);
}

TEST_CASE("routing: unreachable hub still charges the attempt") {
  ScenarioConfig config;
  config.mode = SimMode::isa;
  config.node_count = 1;
  config.hub_distance_m = 50000.0;  // beyond SF12
  config.duration_s = 1000.0;
  config.anomaly_period_s = 900.0;
  config.heartbeat_s = 0.0;
  config.profile.leakage_current_a = 0.0;
  const SimResult result = run(config);
  CHECK(result.delivery_failures > 0);
  CHECK(result.uplink_count == 0);
  CHECK(result.nodes[0].ledger.lora_tx_c > 0.0);
}

TEST_CASE("two-hop ledger audit reproduces the closed-form benefit") {
  ScenarioConfig audit;
  audit.mode = SimMode::isa;
  audit.node_count = 1;
  audit.hub_distance_m = 2500.0;
  audit.duration_s = 1000.0;
  audit.anomaly_period_s = 900.0;
  audit.heartbeat_s = 0.0;
  audit.pricing = LoRaPricing::airtime;
  audit.sf_auto = true;
  audit.profile.leakage_current_a = 0.0;

  const SimResult one_hop = run(audit);
  audit.relay_distances_m = {1250.0};
  const SimResult two_hop = run(audit);
  REQUIRE(one_hop.uplink_count == 1);
  REQUIRE(two_hop.uplink_count == 1);

  const double ratio = lora_energy_j(one_hop) / lora_energy_j(two_hop);
  const double closed_form = multihop_benefit(audit.lora, 10, 7, 2);
  CHECK(ratio == doctest::Approx(closed_form).epsilon(0.05));
  CHECK(ratio == doctest::Approx(2.6).epsilon(0.05 / 2.6));
}

TEST_CASE("golden trace drives the event path end to end") {
  ScenarioConfig config;
  config.mode = SimMode::isa;
  config.node_count = 1;
  config.trace_file = kFixture;
  config.duration_s = 99.0;
  config.heartbeat_s = 10.0;
  config.record_events = true;
  const SimResult result = run(config);
  // The heated excursion fires the detector: uplinks happen and the kept
  // points reach the hub with high fidelity.
  CHECK(result.uplink_count >= 1);
  CHECK(result.info_retention >= 0.98);
  CHECK(!result.nodes[0].died);
  CHECK(result.nodes[0].ledger.lora_tx_c > 0.0);

  // Outliving the trace is an error, not silent extrapolation.
  config.duration_s = 500.0;
  CHECK_THROWS_WITH_AS(run(config), doctest::Contains("underrun"),
                       ScenarioError);
}

TEST_CASE("clustered golden-trace run uses one uplink for both nodes") {
  ScenarioConfig config;
  config.mode = SimMode::isa_ci;
  config.node_count = 2;
  config.trace_file = kFixture;
  config.duration_s = 99.0;
  config.similarity_window_s = 10.0;  // form before the excursion
  config.heartbeat_s = 10.0;
  config.record_events = true;
  const SimResult result = run(config);
  CHECK(result.nodes[0].ledger.lora_tx_c > 0.0);
  CHECK(result.nodes[1].ledger.lora_tx_c == 0.0);  // member never uplinks
  CHECK(result.nodes[1].ledger.ble_c > 0.0);
  CHECK(result.info_retention >= 0.98);
}

TEST_CASE("summary csv carries one row per node") {
  ScenarioConfig config = preset_scenario("isa_ci");
  config.duration_s = 5000.0;
  const SimResult result = run(config);
  const std::string csv = result.summary_csv();
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n';
  CHECK(rows == 1 + result.nodes.size());
  CHECK(csv.find("retention_correlation") != std::string::npos);
}
