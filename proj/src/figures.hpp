#pragma once

#include <string>

#include "energy_model.hpp"
#include "scenario.hpp"
#include "trace.hpp"

namespace sensormesh {

// Everything the budget subcommand prints for one parameter set.
struct BudgetReport {
  double range_m = 0.0;
  double packet_bytes = 0.0;
  double airtime_s = 0.0;
  double energy_per_bit_j = 0.0;   // over n_hops
  double battery_bits = 0.0;       // deliverable bits on one battery
  int n_hops = 1;
  int compare_sf = 0;              // 0: no comparison requested
  double multihop_benefit = 0.0;   // vs compare_sf at one hop
};

BudgetReport budget_report(const LoRaParams& lora, const LinkParams& link,
                           const ReceiverParams& rx, int n_hops, int compare_sf,
                           double battery_mah = 230.0,
                           double supply_voltage_v = 3.7);

// Reference-hardware parameter sets used as CLI defaults.
LinkParams default_lora_link();
ReceiverParams default_lora_receiver();
LoRaParams default_lora_params();

/// Figure tables as CSV. Supported keys: duty_cycle, ci_savings,
/// lifetime_vs_n, sf_range_bits, compression_tradeoff, lifetime_ladder.
/// Args are comma-separated key=value pairs; ranges use start:stop[:step].
std::string sweep_csv(const std::string& figure_key, const std::string& args);

std::string list_figure_keys();

/// Runs every built-in scenario preset and tabulates the resulting network
/// lifetimes and retention metrics.
std::string ladder_csv();

std::string compression_sweep_csv(const SensorTrace& trace, double y_start,
                                  double y_stop, double y_step);

}  // namespace sensormesh
