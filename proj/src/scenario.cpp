#include "scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sensormesh {

const char* mode_name(SimMode mode) {
  switch (mode) {
    case SimMode::lora_every_second: return "lora_every_second";
    case SimMode::duty_cycled_lora: return "duty_cycled_lora";
    case SimMode::isa: return "isa";
    case SimMode::isa_ci: return "isa_ci";
    case SimMode::isa_ci_cas: return "isa_ci_cas";
  }
  return "unknown";
}

std::optional<SimMode> mode_from_name(std::string_view name) {
  for (SimMode m : {SimMode::lora_every_second, SimMode::duty_cycled_lora,
                    SimMode::isa, SimMode::isa_ci, SimMode::isa_ci_cas}) {
    if (name == mode_name(m)) return m;
  }
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double to_double(const std::string& key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ScenarioError("bad numeric value for key '" + key + "': " +
                        std::string(value));
  }
  return out;
}

long long to_int(const std::string& key, std::string_view value) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ScenarioError("bad integer value for key '" + key + "': " +
                        std::string(value));
  }
  return out;
}

bool to_bool(const std::string& key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ScenarioError("bad boolean value for key '" + key + "': " +
                      std::string(value));
}

std::vector<double> to_list(const std::string& key, std::string_view value) {
  std::vector<double> out;
  std::size_t begin = 0;
  while (begin <= value.size()) {
    const std::size_t comma = value.find(',', begin);
    const std::string_view item =
        trim(value.substr(begin, comma == std::string_view::npos
                                     ? std::string_view::npos
                                     : comma - begin));
    if (!item.empty()) out.push_back(to_double(key, item));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

}  // namespace

void ScenarioConfig::validate_or_throw() const {
  if (!(duration_s > 0)) throw ScenarioError("duration_s must be > 0");
  if (node_count < 1) throw ScenarioError("nodes must be >= 1");
  if (!(sample_period_s > 0)) throw ScenarioError("sample_period_s must be > 0");
  if (!(battery_mah > 0)) throw ScenarioError("battery_mah must be > 0");
  if (anomaly_period_s < 0 || heartbeat_s < 0 || duty_period_s <= 0) {
    throw ScenarioError("periods must be non-negative (duty period positive)");
  }
  if (!(thresholds.anomaly_x > 0 && thresholds.anomaly_x < 1) ||
      !(thresholds.compress_y > 0)) {
    throw ScenarioError("thresholds must be positive fractions below 1");
  }
  if (!sf_auto) validate(lora);
  if (mode == SimMode::duty_cycled_lora && duty_period_s < sample_period_s) {
    throw ScenarioError("duty_period_s must be >= sample_period_s");
  }
}

void scenario_set(ScenarioConfig& c, const std::string& key,
                  const std::string& raw_value) {
  const std::string value{trim(raw_value)};
  if (key == "mode") {
    const auto m = mode_from_name(value);
    if (!m) throw ScenarioError("unknown mode '" + value + "'");
    c.mode = *m;
  } else if (key == "nodes") {
    c.node_count = static_cast<int>(to_int(key, value));
  } else if (key == "node_spacing_m") {
    c.node_spacing_m = to_double(key, value);
  } else if (key == "hub_distance_m") {
    c.hub_distance_m = to_double(key, value);
  } else if (key == "relay_distances_m") {
    c.relay_distances_m = to_list(key, value);
  } else if (key == "duration_s") {
    c.duration_s = to_double(key, value);
  } else if (key == "sample_period_s") {
    c.sample_period_s = to_double(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "baseline") {
    c.baseline = to_double(key, value);
  } else if (key == "noise") {
    c.noise = to_double(key, value);
  } else if (key == "anomaly_period_s") {
    c.anomaly_period_s = to_double(key, value);
  } else if (key == "anomaly_magnitude") {
    c.anomaly_magnitude = to_double(key, value);
  } else if (key == "trace_file") {
    c.trace_file = value;
  } else if (key == "threshold_x") {
    c.thresholds.anomaly_x = to_double(key, value);
  } else if (key == "threshold_y") {
    c.thresholds.compress_y = to_double(key, value);
  } else if (key == "heartbeat_s") {
    c.heartbeat_s = to_double(key, value);
  } else if (key == "duty_period_s") {
    c.duty_period_s = to_double(key, value);
  } else if (key == "leakage_ua") {
    c.profile.leakage_current_a = to_double(key, value) * 1e-6;
  } else if (key == "leakage_preset") {
    if (value == "measured") {
      c.profile.leakage_current_a = kMeasuredLeakageA;
    } else if (value == "lifetime") {
      c.profile.leakage_current_a = kLifetimeLeakageA;
    } else {
      throw ScenarioError("leakage_preset must be 'measured' or 'lifetime'");
    }
  } else if (key == "battery_mah") {
    c.battery_mah = to_double(key, value);
  } else if (key == "supply_voltage") {
    c.profile.supply_voltage_v = to_double(key, value);
  } else if (key == "lora_overhead_mj") {
    c.profile.lora_event_overhead_j = to_double(key, value) * 1e-3;
  } else if (key == "lora_pricing") {
    if (value == "fixed") {
      c.pricing = LoRaPricing::fixed_event;
    } else if (value == "airtime") {
      c.pricing = LoRaPricing::airtime;
    } else {
      throw ScenarioError("lora_pricing must be 'fixed' or 'airtime'");
    }
  } else if (key == "baseline_radio") {
    if (value == "continuous") {
      c.baseline_radio = BaselineRadio::continuous;
    } else if (value == "literal_duty") {
      c.baseline_radio = BaselineRadio::literal_duty;
    } else {
      throw ScenarioError("baseline_radio must be 'continuous' or 'literal_duty'");
    }
  } else if (key == "sf") {
    if (value == "auto") {
      c.sf_auto = true;
    } else {
      c.sf_auto = false;
      c.lora.spreading_factor = static_cast<int>(to_int(key, value));
    }
  } else if (key == "payload_bytes") {
    c.lora.payload_bytes = static_cast<int>(to_int(key, value));
  } else if (key == "bandwidth_khz") {
    c.lora.bandwidth_hz = to_double(key, value) * 1e3;
    c.lora_receiver.bandwidth_hz = c.lora.bandwidth_hz;
  } else if (key == "tx_power_dbm") {
    c.lora.tx_power_dbm = to_double(key, value);
  } else if (key == "carrier_mhz") {
    c.carrier_frequency_hz = to_double(key, value) * 1e6;
  } else if (key == "path_loss_exponent") {
    c.path_loss_exponent = to_double(key, value);
  } else if (key == "ble_range_m") {
    c.ble_range_m = to_double(key, value);
  } else if (key == "similarity_window_s") {
    c.similarity_window_s = to_double(key, value);
  } else if (key == "record_events") {
    c.record_events = to_bool(key, value);
  } else {
    throw ScenarioError("unknown scenario key '" + key + "'");
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const std::size_t eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw ScenarioError("line " + std::to_string(line_no) +
                          ": expected key = value");
    }
    scenario_set(config, std::string(trim(row.substr(0, eq))),
                 std::string(trim(row.substr(eq + 1))));
  }
  config.validate_or_throw();
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

namespace {

constexpr const char* kCommonPreset =
    "sample_period_s = 1\n"
    "seed = 1\n"
    "baseline = 20\n"
    "noise = 0\n"
    "threshold_x = 0.10\n"
    "threshold_y = 0.02\n"
    "battery_mah = 230\n"
    "leakage_preset = lifetime\n"
    "hub_distance_m = 100\n"
    "sf = 7\n"
    "lora_pricing = fixed\n"
    "record_events = false\n";

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "lora_every_second", "duty_cycled_lora", "isa", "isa_ci", "isa_ci_cas"};
  return names;
}

std::string preset_text(const std::string& name) {
  std::string text = std::string("mode = ") + name + "\n" + kCommonPreset;
  if (name == "lora_every_second") {
    text += "nodes = 1\nduration_s = 36000\nanomaly_period_s = 0\nheartbeat_s = 0\n";
  } else if (name == "duty_cycled_lora") {
    text += "nodes = 1\nduration_s = 12000000\nduty_period_s = 900\n"
            "anomaly_period_s = 0\nheartbeat_s = 0\n";
  } else if (name == "isa") {
    text += "nodes = 1\nduration_s = 12000000\nanomaly_period_s = 900\n"
            "anomaly_magnitude = 0.15\nheartbeat_s = 900\n";
  } else if (name == "isa_ci" || name == "isa_ci_cas") {
    text += "nodes = 2\nnode_spacing_m = 5\nble_range_m = 10\n"
            "similarity_window_s = 900\nduration_s = 12000000\n"
            "anomaly_period_s = 900\nanomaly_magnitude = 0.15\nheartbeat_s = 900\n";
  } else {
    throw ScenarioError("unknown preset '" + name + "'");
  }
  return text;
}

ScenarioConfig preset_scenario(const std::string& name) {
  return parse_scenario(preset_text(name));
}

}  // namespace sensormesh
