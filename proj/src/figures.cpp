#include "figures.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "isa.hpp"
#include "sim.hpp"

namespace sensormesh {

namespace {

std::string format_row(const char* fmt, auto... values) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, values...);
  return buf;
}

struct Range {
  double start = 0, stop = 0, step = 1;
};

Range parse_range(const std::string& text) {
  Range r;
  const auto first = text.find(':');
  if (first == std::string::npos) {
    r.start = r.stop = std::stod(text);
    return r;
  }
  const auto second = text.find(':', first + 1);
  r.start = std::stod(text.substr(0, first));
  if (second == std::string::npos) {
    r.stop = std::stod(text.substr(first + 1));
  } else {
    r.stop = std::stod(text.substr(first + 1, second - first - 1));
    r.step = std::stod(text.substr(second + 1));
  }
  if (r.step <= 0 || r.stop < r.start) {
    throw std::invalid_argument("bad range '" + text + "'");
  }
  return r;
}

std::map<std::string, std::string> parse_args(const std::string& args) {
  std::map<std::string, std::string> out;
  std::size_t begin = 0;
  while (begin < args.size()) {
    std::size_t comma = args.find(',', begin);
    if (comma == std::string::npos) comma = args.size();
    const std::string item = args.substr(begin, comma - begin);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("sweep args must be key=value pairs");
      }
      out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    begin = comma + 1;
  }
  return out;
}

}  // namespace

LinkParams default_lora_link() {
  return {915e6, 1.0, 2.83, 0.0, 0.0};
}

ReceiverParams default_lora_receiver() {
  // SF7 LoRa bit rate; only min-energy figures consume the data rate.
  return {3.5, 15.0, 125e3, 5468.75, 1.0};
}

LoRaParams default_lora_params() { return LoRaParams{}; }

BudgetReport budget_report(const LoRaParams& lora, const LinkParams& link,
                           const ReceiverParams& rx, int n_hops, int compare_sf,
                           double battery_mah, double supply_voltage_v) {
  if (n_hops < 1) throw std::invalid_argument("n_hops must be >= 1");
  BudgetReport report;
  report.n_hops = n_hops;
  report.range_m = lora_range_m(lora, link, rx);
  report.packet_bytes = lora_packet_bytes(lora);
  report.airtime_s = lora_airtime_s(lora);
  report.energy_per_bit_j = lora_energy_per_bit_multihop_j(lora, n_hops);
  report.battery_bits =
      battery_bit_budget(lora, n_hops, battery_mah, supply_voltage_v);
  if (compare_sf != 0) {
    report.compare_sf = compare_sf;
    report.multihop_benefit =
        multihop_benefit(lora, compare_sf, lora.spreading_factor, n_hops);
  }
  return report;
}

std::string list_figure_keys() {
  return "duty_cycle, ci_savings, lifetime_vs_n, sf_range_bits, "
         "compression_tradeoff, lifetime_ladder";
}

namespace {

std::string duty_cycle_csv(const std::map<std::string, std::string>& args) {
  Range n{1, 100, 1};
  if (const auto it = args.find("N"); it != args.end()) n = parse_range(it->second);
  DutyCycleParams params;  // reference-hardware presets
  std::string out = "period_n_s,energy_j,info_loss\n";
  for (double period = n.start; period <= n.stop + 1e-9; period += n.step) {
    params.period_s = period;
    out += format_row("%g,%.9g,%.9g\n", period, duty_cycle_energy_j(params),
                      info_loss_fraction(period, 1.0));
  }
  return out;
}

std::string ci_savings_csv(const std::map<std::string, std::string>& args) {
  Range n{1, 20, 1};
  if (const auto it = args.find("n"); it != args.end()) n = parse_range(it->second);
  CiEnergyParams params;  // reference-hardware presets
  std::string out = "cluster_size,savings_j\n";
  for (double size = n.start; size <= n.stop + 1e-9; size += n.step) {
    params.cluster_size = static_cast<int>(std::llround(size));
    out += format_row("%d,%.9g\n", params.cluster_size, ci_savings_j(params));
  }
  return out;
}

std::string lifetime_vs_n_csv(const std::map<std::string, std::string>& args) {
  Range n{1, 20, 1};
  if (const auto it = args.find("n"); it != args.end()) n = parse_range(it->second);
  CiEnergyParams params;
  const double cycle_s = 1800.0;  // one communication cycle of 30 minutes
  const double baseline_s = cycle_s * params.battery_energy_j / params.e_long_range_j;
  std::string out = "cluster_size,ratio_ci,ratio_ci_cas\n";
  for (double size = n.start; size <= n.stop + 1e-9; size += n.step) {
    params.cluster_size = static_cast<int>(std::llround(size));
    out += format_row("%d,%.9g,%.9g\n", params.cluster_size,
                      network_lifetime_ci_s(params, cycle_s) / baseline_s,
                      network_lifetime_ci_cas_s(params, cycle_s) / baseline_s);
  }
  return out;
}

std::string sf_range_bits_csv(const std::map<std::string, std::string>& args) {
  int max_hops = 2;
  if (const auto it = args.find("hops"); it != args.end()) {
    max_hops = static_cast<int>(parse_range(it->second).stop);
  }
  LoRaParams lora = default_lora_params();
  const LinkParams link = default_lora_link();
  const ReceiverParams rx = default_lora_receiver();
  std::string out = "sf,hops,range_m,packet_bytes,energy_per_bit_j,battery_bits\n";
  for (int sf = 7; sf <= 12; ++sf) {
    lora.spreading_factor = sf;
    const double range = lora_range_m(lora, link, rx);
    for (int hops = 1; hops <= max_hops; ++hops) {
      out += format_row("%d,%d,%.9g,%.9g,%.9g,%.9g\n", sf, hops, range * hops,
                        lora_packet_bytes(lora),
                        lora_energy_per_bit_multihop_j(lora, hops),
                        battery_bit_budget(lora, hops, 230.0));
    }
  }
  return out;
}

}  // namespace

std::string compression_sweep_csv(const SensorTrace& trace, double y_start,
                                  double y_stop, double y_step) {
  if (y_step <= 0 || y_stop < y_start || y_start <= 0) {
    throw std::invalid_argument("bad threshold sweep range");
  }
  std::string out = "threshold_y,kept,compression_ratio,correlation\n";
  for (double y = y_start; y <= y_stop + 1e-12; y += y_step) {
    const CompressedSeries series = compress(trace, y);
    const FidelityMetrics metrics = fidelity_metrics(trace, series);
    if (metrics.correlation) {
      out += format_row("%.6g,%zu,%.9g,%.9g\n", y, series.kept.size(),
                        metrics.compression_ratio, *metrics.correlation);
    } else {
      out += format_row("%.6g,%zu,%.9g,constant_signal\n", y,
                        series.kept.size(), metrics.compression_ratio);
    }
  }
  return out;
}

std::string ladder_csv() {
  std::string out =
      "mode,network_lifetime_s,network_lifetime_days,info_retention,"
      "sample_retention\n";
  for (const std::string& name : preset_names()) {
    const SimResult result = run(preset_scenario(name));
    const double lifetime = result.first_death_s;
    out += format_row("%s,%.9g,%.6g,%.6g,%.6g\n", name.c_str(), lifetime,
                      lifetime / 86400.0, result.info_retention,
                      result.sample_retention);
  }
  return out;
}

std::string sweep_csv(const std::string& figure_key, const std::string& args) {
  const auto parsed = parse_args(args);
  if (figure_key == "duty_cycle") return duty_cycle_csv(parsed);
  if (figure_key == "ci_savings") return ci_savings_csv(parsed);
  if (figure_key == "lifetime_vs_n") return lifetime_vs_n_csv(parsed);
  if (figure_key == "sf_range_bits") return sf_range_bits_csv(parsed);
  if (figure_key == "lifetime_ladder") return ladder_csv();
  if (figure_key == "compression_tradeoff") {
    std::string trace_path;
    if (const auto it = parsed.find("trace"); it != parsed.end()) {
      trace_path = it->second;
    } else if (const char* dir = std::getenv("SENSORMESH_FIXTURES")) {
      trace_path = std::string(dir) + "/temperature_anomaly.csv";
    } else {
      throw std::invalid_argument(
          "compression_tradeoff needs trace=<csv path> or the "
          "SENSORMESH_FIXTURES environment variable");
    }
    Range y{0.005, 0.05, 0.005};
    if (const auto it = parsed.find("y"); it != parsed.end()) {
      y = parse_range(it->second);
    }
    TraceSet traces = load_trace_csv(trace_path);
    if (traces.empty()) throw std::invalid_argument("trace file holds no samples");
    const auto temp = traces.find(Channel::temperature);
    const SensorTrace& trace =
        temp != traces.end() ? temp->second : traces.begin()->second;
    return compression_sweep_csv(trace, y.start, y.stop, y.step);
  }
  throw std::invalid_argument("unknown figure key '" + figure_key +
                              "'; valid keys: " + list_figure_keys());
}

}  // namespace sensormesh
