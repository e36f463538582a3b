// Command-line front door for the sensormesh library. Talks to the core
// exclusively through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sensormesh.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void print_warnings() {
  const char* warnings = sm_last_warnings();
  if (warnings && *warnings) std::cerr << "warning: " << warnings << "\n";
}

int fail_runtime() {
  std::cerr << "error: " << sm_last_error() << "\n";
  return kExitRuntime;
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return true;
}

double parse_code_rate(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  }
  return std::stod(text);
}

struct BudgetOptions {
  int sf = 7;
  double bandwidth_khz = 125.0;
  std::string code_rate = "4/5";
  int payload = 240;
  int preamble = 8;
  double ptx_dbm = 7.0;
  double pcons_tx_mw = 95.4;
  double pcons_rx_mw = 15.2;
  int n_hops = 1;
  int compare_sf = 0;
  double exponent = 2.83;
  double carrier_mhz = 915.0;
  double noise_figure_db = 3.5;
  double snr_db = 15.0;
  bool include_preamble = false;
  bool csv = false;
};

int run_budget(const BudgetOptions& opt) {
  sm_lora_params lora;
  sm_lora_params_init(&lora);
  lora.spreading_factor = opt.sf;
  lora.bandwidth_hz = opt.bandwidth_khz * 1e3;
  lora.code_rate = parse_code_rate(opt.code_rate);
  lora.payload_bytes = opt.payload;
  lora.preamble_bytes = opt.preamble;
  lora.tx_power_dbm = opt.ptx_dbm;
  lora.tx_power_consumption_w = opt.pcons_tx_mw * 1e-3;
  lora.rx_power_consumption_w = opt.pcons_rx_mw * 1e-3;
  lora.include_preamble_in_packet = opt.include_preamble ? 1 : 0;

  sm_link_params link;
  sm_link_params_init(&link);
  link.carrier_frequency_hz = opt.carrier_mhz * 1e6;
  link.path_loss_exponent = opt.exponent;

  sm_rx_params rx;
  sm_rx_params_init(&rx);
  rx.bandwidth_hz = lora.bandwidth_hz;
  rx.noise_figure_db = opt.noise_figure_db;
  rx.required_snr_db = opt.snr_db;

  sm_budget_report report;
  if (sm_budget(&lora, &link, &rx, opt.n_hops, opt.compare_sf, &report) != SM_OK) {
    return fail_runtime();
  }
  print_warnings();

  if (opt.csv) {
    std::printf("sf,n_hops,range_m,packet_bytes,airtime_s,energy_per_bit_j,"
                "battery_bits,compare_sf,multihop_benefit\n");
    std::printf("%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n", opt.sf,
                report.n_hops, report.range_m, report.packet_bytes,
                report.airtime_s, report.energy_per_bit_j, report.battery_bits,
                report.compare_sf, report.multihop_benefit);
    return kExitOk;
  }
  std::printf("spreading factor     : %d\n", opt.sf);
  std::printf("range                : %.4g km\n", report.range_m / 1000.0);
  std::printf("packet size          : %.6g bytes\n", report.packet_bytes);
  std::printf("airtime              : %.4g ms\n", report.airtime_s * 1e3);
  std::printf("energy per bit       : %.4g uJ/bit over %d hop(s)\n",
              report.energy_per_bit_j * 1e6, report.n_hops);
  std::printf("battery bit budget   : %.4g Mb\n", report.battery_bits / 1e6);
  if (report.compare_sf != 0) {
    std::printf("benefit vs 1-hop SF%d: %.4g\n", report.compare_sf,
                report.multihop_benefit);
  }
  return kExitOk;
}

struct CompressOptions {
  std::string trace_path;
  std::string channel;
  double y = 0.02;
  double x = 0.0;
  bool metrics = false;
  std::string y_sweep;
  std::string out_path;
};

int run_compress(const CompressOptions& opt) {
  sm_trace* trace = nullptr;
  if (sm_trace_load(opt.trace_path.c_str(), &trace) != SM_OK) {
    return fail_runtime();
  }
  const char* channel = opt.channel.empty() ? nullptr : opt.channel.c_str();

  if (!opt.y_sweep.empty()) {
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(opt.y_sweep.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3) {
      std::cerr << "error: --y-sweep expects start:stop:step\n";
      sm_trace_free(trace);
      return kExitUsage;
    }
    char* csv = nullptr;
    if (sm_compression_sweep(trace, channel, start, stop, step, &csv) != SM_OK) {
      sm_trace_free(trace);
      return fail_runtime();
    }
    std::fputs(csv, stdout);
    sm_string_free(csv);
    sm_trace_free(trace);
    return kExitOk;
  }

  sm_trace* kept = nullptr;
  sm_fidelity metrics{};
  if (sm_trace_compress(trace, channel, opt.y, &kept, &metrics) != SM_OK) {
    sm_trace_free(trace);
    return fail_runtime();
  }
  char* csv = nullptr;
  if (sm_trace_csv(kept, &csv) != SM_OK) {
    sm_trace_free(kept);
    sm_trace_free(trace);
    return fail_runtime();
  }
  bool ok = true;
  if (opt.out_path.empty()) {
    std::fputs(csv, stdout);
  } else {
    ok = write_file(opt.out_path, csv);
  }
  sm_string_free(csv);
  sm_trace_free(kept);

  if (ok && opt.metrics) {
    if (metrics.correlation_defined) {
      std::fprintf(stderr, "ratio=%.6g correlation=%.6g kept=%llu source=%llu\n",
                   metrics.compression_ratio, metrics.correlation,
                   static_cast<unsigned long long>(metrics.kept),
                   static_cast<unsigned long long>(metrics.source));
    } else {
      std::fprintf(stderr, "ratio=%.6g correlation=constant_signal kept=%llu "
                   "source=%llu\n",
                   metrics.compression_ratio,
                   static_cast<unsigned long long>(metrics.kept),
                   static_cast<unsigned long long>(metrics.source));
    }
    if (opt.x > 0) {
      uint64_t count = 0;
      if (sm_trace_anomaly_count(trace, channel, opt.x, &count) != SM_OK) {
        sm_trace_free(trace);
        return fail_runtime();
      }
      std::fprintf(stderr, "anomalies=%llu (x=%.6g)\n",
                   static_cast<unsigned long long>(count), opt.x);
    }
  }
  sm_trace_free(trace);
  return ok ? kExitOk : kExitRuntime;
}

struct SimulateOptions {
  std::string config_path;
  std::string preset;
  bool ladder = false;
  long long seed = -1;
  std::string mode;
  int nodes = 0;
  std::vector<std::string> overrides;
  std::string out_dir;
};

int run_simulate(const SimulateOptions& opt) {
  if (opt.ladder) {
    char* csv = nullptr;
    if (sm_ladder_csv(&csv) != SM_OK) return fail_runtime();
    std::fputs(csv, stdout);
    bool ok = true;
    if (!opt.out_dir.empty()) {
      ok = write_file(opt.out_dir + "/lifetime_ladder.csv", csv);
    }
    sm_string_free(csv);
    return ok ? kExitOk : kExitRuntime;
  }

  sm_scenario* scenario = nullptr;
  sm_status status = SM_OK;
  if (!opt.preset.empty()) {
    status = sm_scenario_preset(opt.preset.c_str(), &scenario);
  } else if (!opt.config_path.empty()) {
    status = sm_scenario_load(opt.config_path.c_str(), &scenario);
  } else {
    status = sm_scenario_create(&scenario);
  }
  if (status != SM_OK) return fail_runtime();

  auto set = [&](const char* key, const std::string& value) {
    if (sm_scenario_set(scenario, key, value.c_str()) != SM_OK) {
      std::cerr << "error: " << sm_last_error() << "\n";
      return false;
    }
    return true;
  };
  bool ok = true;
  if (opt.seed >= 0) ok = set("seed", std::to_string(opt.seed));
  if (ok && !opt.mode.empty()) ok = set("mode", opt.mode);
  if (ok && opt.nodes > 0) ok = set("nodes", std::to_string(opt.nodes));
  for (const std::string& item : opt.overrides) {
    if (!ok) break;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << item << "'\n";
      ok = false;
      break;
    }
    ok = set(item.substr(0, eq).c_str(), item.substr(eq + 1));
  }
  if (!ok) {
    sm_scenario_free(scenario);
    return kExitUsage;
  }

  sm_sim_result* result = nullptr;
  status = sm_simulate(scenario, &result);
  sm_scenario_free(scenario);
  if (status != SM_OK) return fail_runtime();

  char* summary = nullptr;
  if (sm_result_summary_csv(result, &summary) != SM_OK) {
    sm_sim_result_free(result);
    return fail_runtime();
  }
  double first = 0, last = 0, corr = 0, fraction = 0;
  sm_result_network_lifetime(result, &first, &last);
  sm_result_retention(result, &corr, &fraction);

  std::fputs(summary, stdout);
  std::fprintf(stderr,
               "network lifetime: first death %.6g s (%.4g days), last death "
               "%.6g s; retention correlation %.6g, sample retention %.6g\n",
               first, first / 86400.0, last, corr, fraction);

  if (!opt.out_dir.empty()) {
    ok = write_file(opt.out_dir + "/summary.csv", summary);
    char* events = nullptr;
    if (ok && sm_result_events_csv(result, &events) == SM_OK) {
      ok = write_file(opt.out_dir + "/events.csv", events);
      sm_string_free(events);
    }
  }
  sm_string_free(summary);
  sm_sim_result_free(result);
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-aware multi-sensor mesh calculators and simulator"};
  app.require_subcommand(1);

  BudgetOptions budget;
  CLI::App* budget_cmd =
      app.add_subcommand("budget", "LoRa link budget and multi-hop benefit");
  budget_cmd->add_option("--sf", budget.sf, "spreading factor")
      ->check(CLI::Range(7, 12));
  budget_cmd->add_option("--bw", budget.bandwidth_khz, "bandwidth in kHz");
  budget_cmd->add_option("--cr", budget.code_rate, "code rate, e.g. 4/5");
  budget_cmd->add_option("--payload", budget.payload, "payload bytes")
      ->check(CLI::PositiveNumber);
  budget_cmd->add_option("--preamble", budget.preamble, "preamble bytes");
  budget_cmd->add_option("--ptx", budget.ptx_dbm, "transmit power in dBm");
  budget_cmd->add_option("--pcons-tx", budget.pcons_tx_mw,
                         "transmitter power consumption in mW");
  budget_cmd->add_option("--pcons-rx", budget.pcons_rx_mw,
                         "receiver power consumption in mW");
  budget_cmd->add_option("--n-hops", budget.n_hops, "hop count")
      ->check(CLI::PositiveNumber);
  budget_cmd->add_option("--compare-sf", budget.compare_sf,
                         "single-hop SF to compare against")
      ->check(CLI::Range(7, 12));
  budget_cmd->add_option("--exponent", budget.exponent, "path loss exponent");
  budget_cmd->add_option("--carrier", budget.carrier_mhz, "carrier in MHz");
  budget_cmd->add_option("--nf", budget.noise_figure_db, "noise figure in dB");
  budget_cmd->add_option("--snr", budget.snr_db, "demodulation SNR in dB");
  budget_cmd->add_flag("--include-preamble", budget.include_preamble,
                       "count the preamble in the packet size");
  budget_cmd->add_flag("--csv", budget.csv, "machine-readable output");

  CompressOptions compress;
  CLI::App* compress_cmd =
      app.add_subcommand("compress", "temporal compression of a trace CSV");
  compress_cmd->add_option("trace", compress.trace_path, "input trace CSV")
      ->required();
  compress_cmd->add_option("--y", compress.y, "compression threshold")
      ->check(CLI::PositiveNumber);
  compress_cmd->add_option("--x", compress.x,
                           "anomaly threshold (reported with --metrics)");
  compress_cmd->add_option("--channel", compress.channel, "channel name");
  compress_cmd->add_flag("--metrics", compress.metrics,
                         "print ratio and correlation to stderr");
  compress_cmd->add_option("--y-sweep", compress.y_sweep,
                           "sweep thresholds start:stop:step, emit CSV");
  compress_cmd->add_option("--out", compress.out_path, "write kept samples here");

  SimulateOptions simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "run a network scenario");
  simulate_cmd->add_option("config", simulate.config_path,
                           "scenario file (key = value lines)");
  simulate_cmd->add_option("--preset", simulate.preset,
                           "built-in preset name");
  simulate_cmd->add_flag("--ladder", simulate.ladder,
                         "run every preset and print the lifetime ladder");
  simulate_cmd->add_option("--seed", simulate.seed, "override the seed");
  simulate_cmd->add_option("--mode", simulate.mode, "override the mode");
  simulate_cmd->add_option("--nodes", simulate.nodes, "override the node count");
  simulate_cmd->add_option("--set", simulate.overrides,
                           "override any scenario key, key=value");
  simulate_cmd->add_option("--out", simulate.out_dir,
                           "directory for summary.csv and events.csv");

  std::string figure_key;
  std::string sweep_args;
  std::string sweep_n, sweep_period, sweep_y, sweep_trace, sweep_hops;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "emit a figure table CSV");
  sweep_cmd->add_option("figure", figure_key, "figure key")->required();
  sweep_cmd
      ->add_option("--args", sweep_args,
                   "comma-separated key=value pairs, ranges as a:b[:c]")
      ->default_val("");
  sweep_cmd->add_option("--n", sweep_n, "cluster-size range, e.g. 1:20");
  sweep_cmd->add_option("--N", sweep_period, "duty-period range, e.g. 1:100");
  sweep_cmd->add_option("--y", sweep_y, "threshold range, e.g. 0.005:0.05:0.005");
  sweep_cmd->add_option("--trace", sweep_trace, "trace CSV for compression sweeps");
  sweep_cmd->add_option("--hops", sweep_hops, "hop range, e.g. 1:2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (budget_cmd->parsed()) return run_budget(budget);
  if (compress_cmd->parsed()) return run_compress(compress);
  if (simulate_cmd->parsed()) return run_simulate(simulate);
  if (sweep_cmd->parsed()) {
    auto append = [&sweep_args](const char* key, const std::string& value) {
      if (value.empty()) return;
      if (!sweep_args.empty()) sweep_args += ',';
      sweep_args += key;
      sweep_args += '=';
      sweep_args += value;
    };
    append("n", sweep_n);
    append("N", sweep_period);
    append("y", sweep_y);
    append("trace", sweep_trace);
    append("hops", sweep_hops);
    char* csv = nullptr;
    if (sm_sweep_csv(figure_key.c_str(), sweep_args.c_str(), &csv) != SM_OK) {
      std::cerr << "error: " << sm_last_error() << "\n";
      return kExitUsage;
    }
    std::fputs(csv, stdout);
    sm_string_free(csv);
    return kExitOk;
  }
  return kExitUsage;
}
