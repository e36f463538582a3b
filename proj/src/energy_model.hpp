#pragma once

#include <string>
#include <vector>

#include "units.hpp"

namespace sensormesh {

using Warnings = std::vector<std::string>;

// RF link geometry. path_loss_exponent is the empirical fading exponent;
// values in [2, 4] are accepted, values outside [2, 3] are flagged.
struct LinkParams {
  double carrier_frequency_hz = 915e6;
  double distance_m = 10.0;
  double path_loss_exponent = 2.0;
  double tx_antenna_gain_db = 0.0;
  double rx_antenna_gain_db = 0.0;
};

struct ReceiverParams {
  double noise_figure_db = 3.5;
  double required_snr_db = 15.0;
  double bandwidth_hz = 125e3;
  double data_rate_bps = 1e6;
  double tx_efficiency = 1.0;  // fraction in (0, 1]
};

struct LoRaParams {
  int spreading_factor = 7;  // 7..12
  double bandwidth_hz = 125e3;
  double code_rate = 4.0 / 5.0;  // one of 4/5, 4/6, 4/7, 4/8
  int header_flag = 0;           // H
  int low_data_rate_flag = 0;    // DE
  int preamble_bytes = 8;
  int payload_bytes = 240;
  double tx_power_dbm = 7.0;
  double tx_power_consumption_w = 95.4e-3;
  double rx_power_consumption_w = 15.2e-3;
  // The quoted packet sizes (249.25 B at SF10, 354.25 B at SF7) omit the
  // preamble term even though the printed formula includes it; the default
  // reproduces the quoted numbers.
  bool include_preamble_in_packet = false;
};

struct DutyCycleParams {
  double period_s = 1.0;  // N, seconds between transmissions
  double bits_per_sample = 130.0;
  double data_rate_bps = 1000.0;  // with bits_per_sample fixes the on-window
  double on_current_a = 72.5e-3;
  double compute_leak_current_a = 83.3e-6;
  double transition_time_s = 1e-3;
  double horizon_s = 86400.0;
  double supply_voltage_v = 3.7;
};

struct CiEnergyParams {
  double e_long_range_j = 50e-3;       // one long-range uplink
  double e_short_range_j = 359e-6;     // one short-range broadcast
  double e_compute_ci_j = 1.4e-3;      // per communication cycle
  double e_compute_ci_cas_j = 1.65e-3; // per communication cycle
  double battery_energy_j = 230e-3 * 3600.0 * 3.7;
  int cluster_size = 2;
};

void validate(const LinkParams& p, Warnings* warnings = nullptr);
void validate(const ReceiverParams& p);
void validate(const LoRaParams& p);
void validate(const DutyCycleParams& p);
void validate(const CiEnergyParams& p, Warnings* warnings = nullptr);

struct PathLoss {
  double gain;     // G_Tx * G_Rx * (lambda / 4 pi d)^n, <= 1 for real links
  double loss_db;  // positive dB magnitude of the same quantity
};

/// Free-space path loss between isotropic-ish antennas at distance d.
PathLoss fspl(const LinkParams& link, Warnings* warnings = nullptr);

/// Minimum energy per switched bit at temperature T: kT ln2.
double landauer_limit_j_per_bit(double temperature_k);

/// Noise-limited receiver sensitivity: kT * NF * SNR * BW, in watts.
double receiver_sensitivity_w(const ReceiverParams& rx,
                              double temperature_k = kRoomTemperatureK);

/// Transmit power needed so the signal still clears sensitivity after the
/// path loss.
double required_tx_power_w(const LinkParams& link, const ReceiverParams& rx,
                           double temperature_k = kRoomTemperatureK,
                           Warnings* warnings = nullptr);

/// Channel-limited floor on communication energy per bit.
double min_comm_energy_j_per_bit(const LinkParams& link, const ReceiverParams& rx,
                                 double temperature_k = kRoomTemperatureK,
                                 Warnings* warnings = nullptr);
double min_comm_energy_at_floor_j_per_bit(double tx_floor_w, double tx_efficiency,
                                          double data_rate_bps);

/// Total energy over the horizon when transmitting every N seconds:
/// on-window at I_on, remainder at the compute+leak current, plus two
/// transition windows per transmission. N beyond the horizon degenerates to a
/// single transmission rather than an error.
double duty_cycle_energy_j(const DutyCycleParams& p);

/// Fraction of samples lost when an unbuffered node only forwards the latest
/// sample every N seconds.
double info_loss_fraction(double period_s, double sample_period_s);

/// Per-cycle saving from clustering n nodes: (n-1)*E_lr - n*(E_sr + E_comp).
/// Negative for n=1 (clustering a single node is pure overhead).
double ci_savings_j(const CiEnergyParams& p, Warnings* warnings = nullptr);

/// Lifetime with a fixed cluster-head: head burns E_sr + E_comp + E_lr each
/// cycle and is the bottleneck regardless of n.
double network_lifetime_ci_s(const CiEnergyParams& p, double cycle_period_s,
                             Warnings* warnings = nullptr);

/// Lifetime with head rotation: the long-range cost is amortized over n.
double network_lifetime_ci_cas_s(const CiEnergyParams& p, double cycle_period_s,
                                 Warnings* warnings = nullptr);

/// Maximum LoRa link distance; chirp spreading improves sensitivity by 2^SF.
double lora_range_m(const LoRaParams& p, const LinkParams& link,
                    const ReceiverParams& rx,
                    double temperature_k = kRoomTemperatureK,
                    Warnings* warnings = nullptr);

/// Total packet size in bytes (fractional; symbol padding is kept unrounded).
double lora_packet_bytes(const LoRaParams& p);

/// Time on air for one packet, using T_byte = 2^SF / BW.
double lora_airtime_s(const LoRaParams& p);

/// Transmit energy per payload bit for a single hop, and the n-hop variant
/// where the chain pays n_hops transmitters and n_hops-1 receivers.
double lora_energy_per_bit_j(const LoRaParams& p);
double lora_energy_per_bit_multihop_j(const LoRaParams& p, int n_hops);

/// Energy-per-bit advantage of covering a distance with n_hops short hops at
/// sf_after instead of one hop at sf_before.
double multihop_benefit(const LoRaParams& p, int sf_before, int sf_after,
                        int n_hops);

/// Payload bits deliverable on one battery charge.
double battery_bit_budget(const LoRaParams& p, int n_hops, double battery_mah,
                          double supply_voltage_v = 3.7);

}  // namespace sensormesh
