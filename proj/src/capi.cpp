#include "sensormesh.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "figures.hpp"
#include "isa.hpp"
#include "sim.hpp"
#include "trace.hpp"

using namespace sensormesh;

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_warnings;

void set_warnings(const Warnings& warnings) {
  g_last_warnings.clear();
  for (const std::string& w : warnings) {
    if (!g_last_warnings.empty()) g_last_warnings += '\n';
    g_last_warnings += w;
  }
}

// Runs the body, translating exceptions into status codes.
template <typename Fn>
sm_status guarded(Fn&& body) {
  g_last_error.clear();
  g_last_warnings.clear();
  try {
    return body();
  } catch (const TraceError& e) {
    g_last_error = e.what();
    return SM_ERR_IO;
  } catch (const ScenarioError& e) {
    g_last_error = e.what();
    return SM_ERR_INVALID;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return SM_ERR_INVALID;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SM_ERR_RUNTIME;
  }
}

sm_status require(bool ok, const char* message) {
  if (!ok) {
    g_last_error = message;
    return SM_ERR_INVALID;
  }
  return SM_OK;
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

LinkParams from_c(const sm_link_params& p) {
  return {p.carrier_frequency_hz, p.distance_m, p.path_loss_exponent,
          p.tx_antenna_gain_db, p.rx_antenna_gain_db};
}

ReceiverParams from_c(const sm_rx_params& p) {
  return {p.noise_figure_db, p.required_snr_db, p.bandwidth_hz, p.data_rate_bps,
          p.tx_efficiency};
}

LoRaParams from_c(const sm_lora_params& p) {
  LoRaParams out;
  out.spreading_factor = p.spreading_factor;
  out.bandwidth_hz = p.bandwidth_hz;
  out.code_rate = p.code_rate;
  out.header_flag = p.header_flag;
  out.low_data_rate_flag = p.low_data_rate_flag;
  out.preamble_bytes = p.preamble_bytes;
  out.payload_bytes = p.payload_bytes;
  out.tx_power_dbm = p.tx_power_dbm;
  out.tx_power_consumption_w = p.tx_power_consumption_w;
  out.rx_power_consumption_w = p.rx_power_consumption_w;
  out.include_preamble_in_packet = p.include_preamble_in_packet != 0;
  return out;
}

DutyCycleParams from_c(const sm_duty_params& p) {
  return {p.period_s,         p.bits_per_sample,  p.data_rate_bps,
          p.on_current_a,     p.compute_leak_current_a,
          p.transition_time_s, p.horizon_s,       p.supply_voltage_v};
}

CiEnergyParams from_c(const sm_ci_params& p) {
  return {p.e_long_range_j,      p.e_short_range_j, p.e_compute_ci_j,
          p.e_compute_ci_cas_j,  p.battery_energy_j, p.cluster_size};
}

const SensorTrace& select_channel(const TraceSet& traces, const char* channel) {
  if (traces.empty()) throw std::invalid_argument("trace holds no samples");
  if (channel == nullptr || *channel == '\0') {
    if (traces.size() > 1) {
      throw std::invalid_argument(
          "trace holds several channels; name one explicitly");
    }
    return traces.begin()->second;
  }
  const auto c = channel_from_name(channel);
  if (!c) throw std::invalid_argument(std::string("unknown channel '") + channel + "'");
  const auto it = traces.find(*c);
  if (it == traces.end()) {
    throw std::invalid_argument(std::string("trace has no '") + channel +
                                "' channel");
  }
  return it->second;
}

}  // namespace

struct sm_trace {
  TraceSet traces;
};

struct sm_scenario {
  ScenarioConfig config;
};

struct sm_sim_result {
  SimResult result;
};

extern "C" {

const char* sm_version(void) { return "1.0.0"; }

const char* sm_last_error(void) { return g_last_error.c_str(); }

const char* sm_last_warnings(void) { return g_last_warnings.c_str(); }

void sm_string_free(char* text) { delete[] text; }

void sm_link_params_init(sm_link_params* params) {
  if (!params) return;
  const LinkParams d = default_lora_link();
  *params = {d.carrier_frequency_hz, d.distance_m, d.path_loss_exponent,
             d.tx_antenna_gain_db, d.rx_antenna_gain_db};
}

void sm_rx_params_init(sm_rx_params* params) {
  if (!params) return;
  const ReceiverParams d = default_lora_receiver();
  *params = {d.noise_figure_db, d.required_snr_db, d.bandwidth_hz,
             d.data_rate_bps, d.tx_efficiency};
}

void sm_lora_params_init(sm_lora_params* params) {
  if (!params) return;
  const LoRaParams d;
  *params = {d.spreading_factor,
             d.bandwidth_hz,
             d.code_rate,
             d.header_flag,
             d.low_data_rate_flag,
             d.preamble_bytes,
             d.payload_bytes,
             d.tx_power_dbm,
             d.tx_power_consumption_w,
             d.rx_power_consumption_w,
             d.include_preamble_in_packet ? 1 : 0};
}

void sm_duty_params_init(sm_duty_params* params) {
  if (!params) return;
  const DutyCycleParams d;
  *params = {d.period_s,          d.bits_per_sample, d.data_rate_bps,
             d.on_current_a,      d.compute_leak_current_a,
             d.transition_time_s, d.horizon_s,       d.supply_voltage_v};
}

void sm_ci_params_init(sm_ci_params* params) {
  if (!params) return;
  const CiEnergyParams d;
  *params = {d.e_long_range_j,     d.e_short_range_j,  d.e_compute_ci_j,
             d.e_compute_ci_cas_j, d.battery_energy_j, d.cluster_size};
}

sm_status sm_fspl(const sm_link_params* link, double* gain_linear,
                  double* loss_db) {
  if (auto s = require(link && (gain_linear || loss_db), "null argument")) return s;
  return guarded([&] {
    Warnings warnings;
    const PathLoss loss = fspl(from_c(*link), &warnings);
    set_warnings(warnings);
    if (gain_linear) *gain_linear = loss.gain;
    if (loss_db) *loss_db = loss.loss_db;
    return SM_OK;
  });
}

sm_status sm_landauer_limit(double temperature_k, double* j_per_bit) {
  if (auto s = require(j_per_bit, "null argument")) return s;
  return guarded([&] {
    *j_per_bit = landauer_limit_j_per_bit(temperature_k);
    return SM_OK;
  });
}

sm_status sm_receiver_sensitivity(const sm_rx_params* rx, double temperature_k,
                                  double* watts) {
  if (auto s = require(rx && watts, "null argument")) return s;
  return guarded([&] {
    *watts = receiver_sensitivity_w(from_c(*rx), temperature_k);
    return SM_OK;
  });
}

sm_status sm_required_tx_power(const sm_link_params* link,
                               const sm_rx_params* rx, double temperature_k,
                               double* watts) {
  if (auto s = require(link && rx && watts, "null argument")) return s;
  return guarded([&] {
    Warnings warnings;
    *watts = required_tx_power_w(from_c(*link), from_c(*rx), temperature_k,
                                 &warnings);
    set_warnings(warnings);
    return SM_OK;
  });
}

sm_status sm_min_comm_energy(const sm_link_params* link, const sm_rx_params* rx,
                             double temperature_k, double* j_per_bit) {
  if (auto s = require(link && rx && j_per_bit, "null argument")) return s;
  return guarded([&] {
    Warnings warnings;
    *j_per_bit = min_comm_energy_j_per_bit(from_c(*link), from_c(*rx),
                                           temperature_k, &warnings);
    set_warnings(warnings);
    return SM_OK;
  });
}

sm_status sm_duty_cycle_energy(const sm_duty_params* params, double* joules) {
  if (auto s = require(params && joules, "null argument")) return s;
  return guarded([&] {
    *joules = duty_cycle_energy_j(from_c(*params));
    return SM_OK;
  });
}

sm_status sm_info_loss(double period_s, double sample_period_s,
                       double* fraction) {
  if (auto s = require(fraction, "null argument")) return s;
  return guarded([&] {
    *fraction = info_loss_fraction(period_s, sample_period_s);
    return SM_OK;
  });
}

sm_status sm_ci_savings(const sm_ci_params* params, double* joules) {
  if (auto s = require(params && joules, "null argument")) return s;
  return guarded([&] {
    Warnings warnings;
    *joules = ci_savings_j(from_c(*params), &warnings);
    set_warnings(warnings);
    return SM_OK;
  });
}

sm_status sm_network_lifetime_ci(const sm_ci_params* params,
                                 double cycle_period_s, double* seconds) {
  if (auto s = require(params && seconds, "null argument")) return s;
  return guarded([&] {
    *seconds = network_lifetime_ci_s(from_c(*params), cycle_period_s);
    return SM_OK;
  });
}

sm_status sm_network_lifetime_ci_cas(const sm_ci_params* params,
                                     double cycle_period_s, double* seconds) {
  if (auto s = require(params && seconds, "null argument")) return s;
  return guarded([&] {
    *seconds = network_lifetime_ci_cas_s(from_c(*params), cycle_period_s);
    return SM_OK;
  });
}

sm_status sm_lora_range(const sm_lora_params* lora, const sm_link_params* link,
                        const sm_rx_params* rx, double* meters) {
  if (auto s = require(lora && link && rx && meters, "null argument")) return s;
  return guarded([&] {
    Warnings warnings;
    *meters = lora_range_m(from_c(*lora), from_c(*link), from_c(*rx),
                           kRoomTemperatureK, &warnings);
    set_warnings(warnings);
    return SM_OK;
  });
}

sm_status sm_lora_packet_bytes(const sm_lora_params* lora, double* bytes) {
  if (auto s = require(lora && bytes, "null argument")) return s;
  return guarded([&] {
    *bytes = lora_packet_bytes(from_c(*lora));
    return SM_OK;
  });
}

sm_status sm_lora_airtime(const sm_lora_params* lora, double* seconds) {
  if (auto s = require(lora && seconds, "null argument")) return s;
  return guarded([&] {
    *seconds = lora_airtime_s(from_c(*lora));
    return SM_OK;
  });
}

sm_status sm_lora_energy_per_bit(const sm_lora_params* lora, int n_hops,
                                 double* j_per_bit) {
  if (auto s = require(lora && j_per_bit, "null argument")) return s;
  return guarded([&] {
    *j_per_bit = lora_energy_per_bit_multihop_j(from_c(*lora), n_hops);
    return SM_OK;
  });
}

sm_status sm_multihop_benefit(const sm_lora_params* lora, int sf_before,
                              int sf_after, int n_hops, double* ratio) {
  if (auto s = require(lora && ratio, "null argument")) return s;
  return guarded([&] {
    *ratio = multihop_benefit(from_c(*lora), sf_before, sf_after, n_hops);
    return SM_OK;
  });
}

sm_status sm_budget(const sm_lora_params* lora, const sm_link_params* link,
                    const sm_rx_params* rx, int n_hops, int compare_sf,
                    sm_budget_report* report) {
  if (auto s = require(lora && link && rx && report, "null argument")) return s;
  return guarded([&] {
    const BudgetReport r =
        budget_report(from_c(*lora), from_c(*link), from_c(*rx), n_hops,
                      compare_sf);
    *report = {r.range_m,     r.packet_bytes,    r.airtime_s,
               r.energy_per_bit_j, r.battery_bits, r.n_hops,
               r.compare_sf,  r.multihop_benefit};
    return SM_OK;
  });
}

sm_status sm_trace_load(const char* path, sm_trace** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_trace{load_trace_csv(path)};
    return SM_OK;
  });
}

sm_status sm_trace_save(const sm_trace* trace, const char* path) {
  if (auto s = require(trace && path, "null argument")) return s;
  return guarded([&] {
    save_trace_csv(trace->traces, path);
    return SM_OK;
  });
}

sm_status sm_trace_csv(const sm_trace* trace, char** csv) {
  if (auto s = require(trace && csv, "null argument")) return s;
  return guarded([&] {
    *csv = copy_string(trace_to_csv(trace->traces));
    return SM_OK;
  });
}

void sm_trace_free(sm_trace* trace) { delete trace; }

sm_status sm_trace_reference(sm_trace** out) {
  if (auto s = require(out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_trace{generate_trace(reference_temperature_spec())};
    return SM_OK;
  });
}

sm_status sm_trace_compress(const sm_trace* trace, const char* channel,
                            double threshold_y, sm_trace** kept,
                            sm_fidelity* metrics) {
  if (auto s = require(trace && (kept || metrics), "null argument")) return s;
  return guarded([&] {
    const SensorTrace& input = select_channel(trace->traces, channel);
    const CompressedSeries series = compress(input, threshold_y);
    if (metrics) {
      const FidelityMetrics m = fidelity_metrics(input, series);
      metrics->compression_ratio = m.compression_ratio;
      metrics->correlation = m.correlation.value_or(0.0);
      metrics->correlation_defined = m.correlation.has_value() ? 1 : 0;
      metrics->kept = series.kept.size();
      metrics->source = series.source_count;
    }
    if (kept) {
      SensorTrace kept_trace;
      kept_trace.channel = series.channel;
      kept_trace.samples = series.kept;
      TraceSet set;
      set[series.channel] = std::move(kept_trace);
      *kept = new sm_trace{std::move(set)};
    }
    return SM_OK;
  });
}

sm_status sm_trace_anomaly_count(const sm_trace* trace, const char* channel,
                                 double threshold_x, uint64_t* count) {
  if (auto s = require(trace && count, "null argument")) return s;
  return guarded([&] {
    const SensorTrace& input = select_channel(trace->traces, channel);
    *count = detect_anomalies(input, threshold_x).size();
    return SM_OK;
  });
}

sm_status sm_trace_calibrate(const sm_trace* trace, const char* channel,
                             double* threshold_x, double* threshold_y) {
  if (auto s = require(trace && threshold_x && threshold_y, "null argument")) {
    return s;
  }
  return guarded([&] {
    Warnings warnings;
    const SensorTrace& input = select_channel(trace->traces, channel);
    const Thresholds thresholds = calibrate_thresholds(input, 2, &warnings);
    set_warnings(warnings);
    *threshold_x = thresholds.anomaly_x;
    *threshold_y = thresholds.compress_y;
    return SM_OK;
  });
}

sm_status sm_compression_sweep(const sm_trace* trace, const char* channel,
                               double y_start, double y_stop, double y_step,
                               char** csv) {
  if (auto s = require(trace && csv, "null argument")) return s;
  return guarded([&] {
    const SensorTrace& input = select_channel(trace->traces, channel);
    *csv = copy_string(compression_sweep_csv(input, y_start, y_stop, y_step));
    return SM_OK;
  });
}

sm_status sm_scenario_create(sm_scenario** out) {
  if (auto s = require(out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_scenario{};
    return SM_OK;
  });
}

sm_status sm_scenario_load(const char* path, sm_scenario** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_scenario{load_scenario(path)};
    return SM_OK;
  });
}

sm_status sm_scenario_parse(const char* text, sm_scenario** out) {
  if (auto s = require(text && out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_scenario{parse_scenario(text)};
    return SM_OK;
  });
}

sm_status sm_scenario_preset(const char* name, sm_scenario** out) {
  if (auto s = require(name && out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_scenario{preset_scenario(name)};
    return SM_OK;
  });
}

sm_status sm_scenario_set(sm_scenario* scenario, const char* key,
                          const char* value) {
  if (auto s = require(scenario && key && value, "null argument")) return s;
  return guarded([&] {
    scenario_set(scenario->config, key, value);
    return SM_OK;
  });
}

void sm_scenario_free(sm_scenario* scenario) { delete scenario; }

const char* sm_preset_names(void) {
  static const std::string names = [] {
    std::string joined;
    for (const std::string& name : preset_names()) {
      if (!joined.empty()) joined += ',';
      joined += name;
    }
    return joined;
  }();
  return names.c_str();
}

sm_status sm_simulate(const sm_scenario* scenario, sm_sim_result** out) {
  if (auto s = require(scenario && out, "null argument")) return s;
  return guarded([&] {
    *out = new sm_sim_result{run(scenario->config)};
    return SM_OK;
  });
}

void sm_sim_result_free(sm_sim_result* result) { delete result; }

sm_status sm_result_network_lifetime(const sm_sim_result* result,
                                     double* first_death_s,
                                     double* last_death_s) {
  if (auto s = require(result, "null argument")) return s;
  if (first_death_s) *first_death_s = result->result.first_death_s;
  if (last_death_s) *last_death_s = result->result.last_death_s;
  return SM_OK;
}

sm_status sm_result_retention(const sm_sim_result* result,
                              double* correlation_min,
                              double* sample_fraction) {
  if (auto s = require(result, "null argument")) return s;
  if (correlation_min) *correlation_min = result->result.info_retention;
  if (sample_fraction) *sample_fraction = result->result.sample_retention;
  return SM_OK;
}

sm_status sm_result_node_count(const sm_sim_result* result, int* count) {
  if (auto s = require(result && count, "null argument")) return s;
  *count = static_cast<int>(result->result.nodes.size());
  return SM_OK;
}

sm_status sm_result_node_lifetime(const sm_sim_result* result, int index,
                                  double* seconds) {
  if (auto s = require(result && seconds, "null argument")) return s;
  if (index < 0 || index >= static_cast<int>(result->result.nodes.size())) {
    g_last_error = "node index out of range";
    return SM_ERR_INVALID;
  }
  *seconds = result->result.nodes[index].lifetime_s;
  return SM_OK;
}

sm_status sm_result_summary_csv(const sm_sim_result* result, char** csv) {
  if (auto s = require(result && csv, "null argument")) return s;
  return guarded([&] {
    *csv = copy_string(result->result.summary_csv());
    return SM_OK;
  });
}

sm_status sm_result_events_csv(const sm_sim_result* result, char** csv) {
  if (auto s = require(result && csv, "null argument")) return s;
  return guarded([&] {
    *csv = copy_string(result->result.events_csv());
    return SM_OK;
  });
}

sm_status sm_sweep_csv(const char* figure_key, const char* args, char** csv) {
  if (auto s = require(figure_key && csv, "null argument")) return s;
  return guarded([&] {
    *csv = copy_string(sweep_csv(figure_key, args ? args : ""));
    return SM_OK;
  });
}

sm_status sm_ladder_csv(char** csv) {
  if (auto s = require(csv, "null argument")) return s;
  return guarded([&] {
    *csv = copy_string(ladder_csv());
    return SM_OK;
  });
}

}  // extern "C"
