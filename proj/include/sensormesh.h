/* sensormesh - energy-aware multi-sensor mesh analytics and simulation.
 *
 * C interface to the sensormesh core. All functions return a status code;
 * on failure sm_last_error() describes the problem. Handles returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function. Strings returned through char** out-parameters are
 * released with sm_string_free().
 *
 * The library itself is thread-safe for concurrent calls on distinct
 * handles; sm_last_error()/sm_last_warnings() are thread-local.
 */
#ifndef SENSORMESH_H
#define SENSORMESH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sm_status {
  SM_OK = 0,
  SM_ERR_INVALID = 1, /* bad parameter or malformed input */
  SM_ERR_IO = 2,      /* file could not be read or written */
  SM_ERR_RUNTIME = 3, /* internal failure */
} sm_status;

const char* sm_version(void);

/* Message for the most recent failing call on this thread. */
const char* sm_last_error(void);

/* Newline-joined warnings from the most recent call on this thread; empty
 * string when the call produced none. */
const char* sm_last_warnings(void);

void sm_string_free(char* text);

/* ---- parameter sets (defaults mirror the reference hardware) ---- */

typedef struct sm_link_params {
  double carrier_frequency_hz;
  double distance_m;
  double path_loss_exponent;
  double tx_antenna_gain_db;
  double rx_antenna_gain_db;
} sm_link_params;

typedef struct sm_rx_params {
  double noise_figure_db;
  double required_snr_db;
  double bandwidth_hz;
  double data_rate_bps;
  double tx_efficiency;
} sm_rx_params;

typedef struct sm_lora_params {
  int spreading_factor; /* 7..12 */
  double bandwidth_hz;
  double code_rate; /* 4/5, 4/6, 4/7 or 4/8 */
  int header_flag;
  int low_data_rate_flag;
  int preamble_bytes;
  int payload_bytes;
  double tx_power_dbm;
  double tx_power_consumption_w;
  double rx_power_consumption_w;
  int include_preamble_in_packet;
} sm_lora_params;

typedef struct sm_duty_params {
  double period_s;
  double bits_per_sample;
  double data_rate_bps;
  double on_current_a;
  double compute_leak_current_a;
  double transition_time_s;
  double horizon_s;
  double supply_voltage_v;
} sm_duty_params;

typedef struct sm_ci_params {
  double e_long_range_j;
  double e_short_range_j;
  double e_compute_ci_j;
  double e_compute_ci_cas_j;
  double battery_energy_j;
  int cluster_size;
} sm_ci_params;

void sm_link_params_init(sm_link_params* params);
void sm_rx_params_init(sm_rx_params* params);
void sm_lora_params_init(sm_lora_params* params);
void sm_duty_params_init(sm_duty_params* params);
void sm_ci_params_init(sm_ci_params* params);

/* ---- closed-form calculators ---- */

sm_status sm_fspl(const sm_link_params* link, double* gain_linear,
                  double* loss_db);
sm_status sm_landauer_limit(double temperature_k, double* j_per_bit);
sm_status sm_receiver_sensitivity(const sm_rx_params* rx, double temperature_k,
                                  double* watts);
sm_status sm_required_tx_power(const sm_link_params* link,
                               const sm_rx_params* rx, double temperature_k,
                               double* watts);
sm_status sm_min_comm_energy(const sm_link_params* link, const sm_rx_params* rx,
                             double temperature_k, double* j_per_bit);
sm_status sm_duty_cycle_energy(const sm_duty_params* params, double* joules);
sm_status sm_info_loss(double period_s, double sample_period_s,
                       double* fraction);
sm_status sm_ci_savings(const sm_ci_params* params, double* joules);
sm_status sm_network_lifetime_ci(const sm_ci_params* params,
                                 double cycle_period_s, double* seconds);
sm_status sm_network_lifetime_ci_cas(const sm_ci_params* params,
                                     double cycle_period_s, double* seconds);
sm_status sm_lora_range(const sm_lora_params* lora, const sm_link_params* link,
                        const sm_rx_params* rx, double* meters);
sm_status sm_lora_packet_bytes(const sm_lora_params* lora, double* bytes);
sm_status sm_lora_airtime(const sm_lora_params* lora, double* seconds);
sm_status sm_lora_energy_per_bit(const sm_lora_params* lora, int n_hops,
                                 double* j_per_bit);
sm_status sm_multihop_benefit(const sm_lora_params* lora, int sf_before,
                              int sf_after, int n_hops, double* ratio);

/* Everything the budget subcommand reports for one parameter set. A
 * compare_sf of 0 skips the multi-hop comparison. */
typedef struct sm_budget_report {
  double range_m;
  double packet_bytes;
  double airtime_s;
  double energy_per_bit_j;
  double battery_bits;
  int n_hops;
  int compare_sf;
  double multihop_benefit;
} sm_budget_report;

sm_status sm_budget(const sm_lora_params* lora, const sm_link_params* link,
                    const sm_rx_params* rx, int n_hops, int compare_sf,
                    sm_budget_report* report);

/* ---- sensor traces ---- */

typedef struct sm_trace sm_trace;

typedef struct sm_fidelity {
  double compression_ratio;
  double correlation;     /* valid only when correlation_defined != 0 */
  int correlation_defined;
  uint64_t kept;
  uint64_t source;
} sm_fidelity;

sm_status sm_trace_load(const char* path, sm_trace** out);
sm_status sm_trace_save(const sm_trace* trace, const char* path);
sm_status sm_trace_csv(const sm_trace* trace, char** csv);
void sm_trace_free(sm_trace* trace);

/* The committed reference trace: 100 s of 1 Hz temperature data holding one
 * heated excursion. */
sm_status sm_trace_reference(sm_trace** out);

/* channel may be NULL when the trace holds a single channel. */
sm_status sm_trace_compress(const sm_trace* trace, const char* channel,
                            double threshold_y, sm_trace** kept,
                            sm_fidelity* metrics);
sm_status sm_trace_anomaly_count(const sm_trace* trace, const char* channel,
                                 double threshold_x, uint64_t* count);
sm_status sm_trace_calibrate(const sm_trace* trace, const char* channel,
                             double* threshold_x, double* threshold_y);
sm_status sm_compression_sweep(const sm_trace* trace, const char* channel,
                               double y_start, double y_stop, double y_step,
                               char** csv);

/* ---- scenario simulation ---- */

typedef struct sm_scenario sm_scenario;
typedef struct sm_sim_result sm_sim_result;

sm_status sm_scenario_create(sm_scenario** out);
sm_status sm_scenario_load(const char* path, sm_scenario** out);
sm_status sm_scenario_parse(const char* text, sm_scenario** out);
sm_status sm_scenario_preset(const char* name, sm_scenario** out);
sm_status sm_scenario_set(sm_scenario* scenario, const char* key,
                          const char* value);
void sm_scenario_free(sm_scenario* scenario);

/* Comma-separated names of the built-in lifetime-ladder presets. */
const char* sm_preset_names(void);

sm_status sm_simulate(const sm_scenario* scenario, sm_sim_result** out);
void sm_sim_result_free(sm_sim_result* result);

sm_status sm_result_network_lifetime(const sm_sim_result* result,
                                     double* first_death_s,
                                     double* last_death_s);
sm_status sm_result_retention(const sm_sim_result* result,
                              double* correlation_min,
                              double* sample_fraction);
sm_status sm_result_node_count(const sm_sim_result* result, int* count);
sm_status sm_result_node_lifetime(const sm_sim_result* result, int index,
                                  double* seconds);
sm_status sm_result_summary_csv(const sm_sim_result* result, char** csv);
sm_status sm_result_events_csv(const sm_sim_result* result, char** csv);

/* ---- figure tables ---- */

/* figure_key: duty_cycle | ci_savings | lifetime_vs_n | sf_range_bits |
 * compression_tradeoff | lifetime_ladder. args holds comma-separated
 * key=value pairs (ranges as start:stop[:step]); NULL means defaults. */
sm_status sm_sweep_csv(const char* figure_key, const char* args, char** csv);
sm_status sm_ladder_csv(char** csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SENSORMESH_H */
