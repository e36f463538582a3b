#include "energy_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sensormesh {

namespace {

void warn(Warnings* warnings, std::string message) {
  if (warnings) warnings->push_back(std::move(message));
}

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

bool is_standard_code_rate(double cr) {
  for (int d = 5; d <= 8; ++d) {
    if (std::abs(cr - 4.0 / d) < 1e-9) return true;
  }
  return false;
}

}  // namespace

void validate(const LinkParams& p, Warnings* warnings) {
  if (!(p.carrier_frequency_hz > 0)) fail("carrier_frequency must be > 0");
  if (!(p.distance_m > 0)) fail("distance must be > 0");
  if (!(p.path_loss_exponent >= 2.0 && p.path_loss_exponent <= 4.0)) {
    fail("path_loss_exponent must lie in [2, 4]");
  }
  if (p.path_loss_exponent > 3.0) {
    warn(warnings, "path_loss_exponent above the typical [2, 3] band");
  }
}

void validate(const ReceiverParams& p) {
  if (!(p.bandwidth_hz > 0)) fail("bandwidth must be > 0");
  if (!(p.data_rate_bps > 0)) fail("data_rate must be > 0");
  if (!(p.tx_efficiency > 0 && p.tx_efficiency <= 1)) {
    fail("tx_efficiency must lie in (0, 1]");
  }
}

void validate(const LoRaParams& p) {
  if (p.spreading_factor < 7 || p.spreading_factor > 12) {
    fail("spreading_factor must lie in 7..12");
  }
  if (!(p.bandwidth_hz > 0)) fail("bandwidth must be > 0");
  if (!is_standard_code_rate(p.code_rate)) {
    fail("code_rate must be one of 4/5, 4/6, 4/7, 4/8");
  }
  if (p.header_flag != 0 && p.header_flag != 1) fail("header_flag must be 0 or 1");
  if (p.low_data_rate_flag != 0 && p.low_data_rate_flag != 1) {
    fail("low_data_rate_flag must be 0 or 1");
  }
  if (p.preamble_bytes < 0) fail("preamble_bytes must be >= 0");
  if (p.payload_bytes < 1) fail("payload_bytes must be >= 1");
  if (p.spreading_factor - 2 * p.low_data_rate_flag <= 0) {
    fail("SF - 2*DE must be positive");
  }
  if (!(p.tx_power_consumption_w >= 0) || !(p.rx_power_consumption_w >= 0)) {
    fail("power consumption must be >= 0");
  }
}

void validate(const DutyCycleParams& p) {
  if (!(p.period_s >= 1.0)) fail("period_N must be >= 1 s");
  if (!(p.bits_per_sample > 0)) fail("bits_per_sample must be > 0");
  if (!(p.data_rate_bps > 0)) fail("data_rate must be > 0");
  if (!(p.transition_time_s >= 0)) fail("transition_time must be >= 0");
  if (!(p.on_current_a >= p.compute_leak_current_a)) {
    fail("on_current must be at least compute_leak_current");
  }
  if (!(p.horizon_s > 0)) fail("horizon must be > 0");
  if (!(p.supply_voltage_v > 0)) fail("supply_voltage must be > 0");
}

void validate(const CiEnergyParams& p, Warnings* warnings) {
  if (p.cluster_size < 1) fail("cluster_size must be >= 1");
  if (p.e_long_range_j < 0 || p.e_short_range_j < 0 || p.e_compute_ci_j < 0 ||
      p.e_compute_ci_cas_j < 0 || p.battery_energy_j < 0) {
    fail("energies must be >= 0");
  }
  if (p.e_long_range_j <= p.e_short_range_j) {
    warn(warnings, "long-range energy does not exceed short-range energy; "
                   "clustering cannot pay off");
  }
}

PathLoss fspl(const LinkParams& link, Warnings* warnings) {
  validate(link, warnings);
  const double lambda = wavelength_m(link.carrier_frequency_hz);
  const double ratio = lambda / (4.0 * std::numbers::pi * link.distance_m);
  const double gain = db_to_linear(link.tx_antenna_gain_db) *
                      db_to_linear(link.rx_antenna_gain_db) *
                      std::pow(ratio, link.path_loss_exponent);
  return {gain, -linear_to_db(gain)};
}

double landauer_limit_j_per_bit(double temperature_k) {
  if (!(temperature_k > 0)) fail("temperature must be > 0");
  return kBoltzmann * temperature_k * std::numbers::ln2;
}

double receiver_sensitivity_w(const ReceiverParams& rx, double temperature_k) {
  validate(rx);
  if (!(temperature_k > 0)) fail("temperature must be > 0");
  return kBoltzmann * temperature_k * db_to_linear(rx.noise_figure_db) *
         db_to_linear(rx.required_snr_db) * rx.bandwidth_hz;
}

double required_tx_power_w(const LinkParams& link, const ReceiverParams& rx,
                           double temperature_k, Warnings* warnings) {
  return receiver_sensitivity_w(rx, temperature_k) / fspl(link, warnings).gain;
}

double min_comm_energy_j_per_bit(const LinkParams& link, const ReceiverParams& rx,
                                 double temperature_k, Warnings* warnings) {
  return min_comm_energy_at_floor_j_per_bit(
      required_tx_power_w(link, rx, temperature_k, warnings), rx.tx_efficiency,
      rx.data_rate_bps);
}

double min_comm_energy_at_floor_j_per_bit(double tx_floor_w, double tx_efficiency,
                                          double data_rate_bps) {
  if (!(tx_floor_w >= 0)) fail("tx floor must be >= 0");
  if (!(tx_efficiency > 0 && tx_efficiency <= 1)) {
    fail("tx_efficiency must lie in (0, 1]");
  }
  if (!(data_rate_bps > 0)) fail("data_rate must be > 0");
  return tx_floor_w / (tx_efficiency * data_rate_bps);
}

double duty_cycle_energy_j(const DutyCycleParams& p) {
  validate(p);
  const double tx_window_s = p.bits_per_sample / p.data_rate_bps;
  // A period longer than the horizon still transmits once.
  const double transmissions = std::max(p.horizon_s / p.period_s, 1.0);
  const double t_on = std::min(tx_window_s * transmissions, p.horizon_s);
  const double t_off = p.horizon_s - t_on;
  return p.supply_voltage_v *
         (t_on * p.on_current_a + t_off * p.compute_leak_current_a +
          2.0 * p.transition_time_s * p.on_current_a * transmissions);
}

double info_loss_fraction(double period_s, double sample_period_s) {
  if (!(sample_period_s > 0)) fail("sample_period must be > 0");
  if (!(period_s >= sample_period_s)) fail("period_N must be >= sample_period");
  return 1.0 - sample_period_s / period_s;
}

double ci_savings_j(const CiEnergyParams& p, Warnings* warnings) {
  validate(p, warnings);
  const double n = p.cluster_size;
  return (n - 1.0) * p.e_long_range_j -
         n * (p.e_short_range_j + p.e_compute_ci_j);
}

double network_lifetime_ci_s(const CiEnergyParams& p, double cycle_period_s,
                             Warnings* warnings) {
  validate(p, warnings);
  if (!(cycle_period_s > 0)) fail("cycle_period must be > 0");
  const double head_cycle_j =
      p.e_short_range_j + p.e_compute_ci_j + p.e_long_range_j;
  if (!(head_cycle_j > 0)) fail("per-cycle energy must be > 0");
  return cycle_period_s * p.battery_energy_j / head_cycle_j;
}

double network_lifetime_ci_cas_s(const CiEnergyParams& p, double cycle_period_s,
                                 Warnings* warnings) {
  validate(p, warnings);
  if (!(cycle_period_s > 0)) fail("cycle_period must be > 0");
  const double n = p.cluster_size;
  const double denom =
      n * (p.e_short_range_j + p.e_compute_ci_cas_j) + p.e_long_range_j;
  if (!(denom > 0)) fail("per-cycle energy must be > 0");
  return cycle_period_s * n * p.battery_energy_j / denom;
}

double lora_range_m(const LoRaParams& p, const LinkParams& link,
                    const ReceiverParams& rx, double temperature_k,
                    Warnings* warnings) {
  validate(p);
  validate(link, warnings);
  const double lambda = wavelength_m(link.carrier_frequency_hz);
  const double spread = std::exp2(p.spreading_factor);
  const double sensitivity_w = receiver_sensitivity_w(rx, temperature_k);
  const double n = link.path_loss_exponent;
  const double budget =
      std::pow(lambda / (4.0 * std::numbers::pi), n) *
      dbm_to_watts(p.tx_power_dbm) * spread / sensitivity_w;
  return std::pow(budget, 1.0 / n);
}

double lora_packet_bytes(const LoRaParams& p) {
  validate(p);
  const double numerator = 8.0 * p.payload_bytes - 4.0 * p.spreading_factor +
                           16.0 + 28.0 - 20.0 * p.header_flag;
  const double denominator = p.spreading_factor - 2.0 * p.low_data_rate_flag;
  // ceil binds before the 1/CR factor.
  const double symbol_term =
      std::max(std::ceil(numerator / denominator) * (1.0 / p.code_rate), 0.0);
  double bytes = 8.0 + symbol_term;
  if (p.include_preamble_in_packet) bytes += p.preamble_bytes + 4.25;
  return bytes;
}

double lora_airtime_s(const LoRaParams& p) {
  const double t_byte_s = std::exp2(p.spreading_factor) / p.bandwidth_hz;
  return lora_packet_bytes(p) * t_byte_s;
}

double lora_energy_per_bit_j(const LoRaParams& p) {
  return lora_energy_per_bit_multihop_j(p, 1);
}

double lora_energy_per_bit_multihop_j(const LoRaParams& p, int n_hops) {
  if (n_hops < 1) fail("n_hops must be >= 1");
  const double chain_power_w = n_hops * p.tx_power_consumption_w +
                               (n_hops - 1) * p.rx_power_consumption_w;
  return chain_power_w * lora_airtime_s(p) / (8.0 * p.payload_bytes);
}

double multihop_benefit(const LoRaParams& p, int sf_before, int sf_after,
                        int n_hops) {
  if (sf_before < sf_after) fail("sf_before must be >= sf_after");
  if (n_hops < 1) fail("n_hops must be >= 1");
  LoRaParams before = p;
  before.spreading_factor = sf_before;
  LoRaParams after = p;
  after.spreading_factor = sf_after;
  const double chain_power_w = n_hops * p.tx_power_consumption_w +
                               (n_hops - 1) * p.rx_power_consumption_w;
  return std::exp2(sf_before - sf_after) * lora_packet_bytes(before) *
         p.tx_power_consumption_w /
         (lora_packet_bytes(after) * chain_power_w);
}

double battery_bit_budget(const LoRaParams& p, int n_hops, double battery_mah,
                          double supply_voltage_v) {
  if (!(battery_mah > 0) || !(supply_voltage_v > 0)) {
    fail("battery and supply voltage must be > 0");
  }
  const double battery_j = battery_mah * 1e-3 * 3600.0 * supply_voltage_v;
  return battery_j / lora_energy_per_bit_multihop_j(p, n_hops);
}

}  // namespace sensormesh
