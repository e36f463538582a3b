#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace sensormesh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Quoted radio ranges carry three significant figures; hop feasibility
// comparisons allow the matching slack.
constexpr double kRangeTolerance = 1e-3;
constexpr double kBroadcastSlotS = 0.020;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1), pure in (seed, node, tick) so replays are exact.
double noise_draw(std::uint64_t seed, std::uint32_t node, std::uint64_t tick) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(tick ^ (static_cast<std::uint64_t>(node) << 32)));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

std::uint64_t ticks_from_period(double period_s, double sample_period_s,
                                const char* what) {
  const double ratio = period_s / sample_period_s;
  const auto ticks = static_cast<std::uint64_t>(std::llround(ratio));
  if (ticks == 0 || std::abs(ratio - static_cast<double>(ticks)) > 1e-9) {
    throw ScenarioError(std::string(what) +
                        " must be a whole multiple of sample_period_s");
  }
  return ticks;
}

struct WeightedPearson {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

  void add(double x, double y, double weight) {
    n += weight;
    sx += weight * x;
    sy += weight * y;
    sxx += weight * x * x;
    syy += weight * y * y;
    sxy += weight * x * y;
  }
  double correlation() const {
    if (n <= 0) return std::numeric_limits<double>::quiet_NaN();
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    if (vx <= 0) return std::numeric_limits<double>::quiet_NaN();
    if (vy <= 0) return 0.0;
    return (sxy - sx * sy / n) / std::sqrt(vx * vy);
  }
};

struct SimNode {
  std::uint32_t id = 0;
  Position pos;
  bool is_relay = false;
  double charge_c = 0.0;
  double initial_charge_c = 0.0;
  bool alive = true;
  double death_s = kInf;
  double last_sync_s = 0.0;
  std::uint64_t charged_ticks = 0;  // sensing ticks already accounted
  LedgerCategories ledger;

  std::optional<AnomalyDetector> detector;
  std::optional<DeadbandCompressor> compressor;
  std::vector<SensorSample> pending;    // kept but not yet uplinked
  std::vector<SensorSample> delivered;  // hub-side series from this node
  std::array<std::vector<AnomalyEvent>, 3> history;  // for cluster formation
  std::uint64_t next_heartbeat_tick = 0;
  std::uint16_t sequence = 0;
};

struct EngineCluster {
  CasController controller;
  std::map<std::uint32_t, BatteryReport> reports;
  std::vector<SensorSample> delivered;
  std::uint64_t next_heartbeat_tick = 0;

  explicit EngineCluster(ClusterState state) : controller(std::move(state)) {}
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg) : cfg_(cfg) {
    cfg_.validate_or_throw();
    build_nodes();
    if (!cfg_.trace_file.empty()) load_trace();
    tick_s_ = cfg_.sample_period_s;
    duration_ticks_ = static_cast<std::uint64_t>(
        std::floor(cfg_.duration_s / tick_s_ + 1e-9));
  }

  SimResult run();

 private:
  // ---- setup ----
  void build_nodes() {
    const double battery_c = mah_to_coulombs(cfg_.battery_mah);
    hub_ = {0.0, cfg_.hub_distance_m};
    for (int i = 0; i < cfg_.node_count; ++i) {
      SimNode node;
      node.id = static_cast<std::uint32_t>(i);
      node.pos = {i * cfg_.node_spacing_m, 0.0};
      node.charge_c = node.initial_charge_c = battery_c;
      nodes_.push_back(std::move(node));
    }
    for (std::size_t i = 0; i < cfg_.relay_distances_m.size(); ++i) {
      SimNode relay;
      relay.id = static_cast<std::uint32_t>(cfg_.node_count + i);
      relay.pos = {0.0, cfg_.relay_distances_m[i]};
      relay.is_relay = true;
      relay.charge_c = relay.initial_charge_c = battery_c;
      relay_positions_[relay.id] = relay.pos;
      nodes_.push_back(std::move(relay));
    }
  }

  void load_trace() {
    TraceSet traces = load_trace_csv(cfg_.trace_file);
    if (traces.empty()) throw ScenarioError("trace file holds no samples");
    const auto it = traces.find(Channel::temperature);
    trace_ = it != traces.end() ? std::move(it->second)
                                : std::move(traces.begin()->second);
    for (std::size_t i = 0; i < trace_->samples.size(); ++i) {
      const double expected = static_cast<double>(i) * cfg_.sample_period_s;
      if (std::abs(trace_->samples[i].timestamp_s - expected) > 1e-6) {
        throw ScenarioError("trace samples must sit on the sample-period grid");
      }
    }
  }

  // ---- source model ----
  bool piecewise_constant_source() const {
    return !trace_ && cfg_.noise == 0.0;
  }

  double source_value(std::uint32_t node, std::uint64_t tick) const {
    if (trace_) {
      if (tick >= trace_->samples.size()) {
        throw ScenarioError("trace underrun: simulation outlived the trace");
      }
      return trace_->samples[tick].value;
    }
    double value = cfg_.baseline;
    if (cfg_.anomaly_period_s > 0) {
      const std::uint64_t period = anomaly_period_ticks();
      if ((tick / period) % 2 == 1) value *= 1.0 + cfg_.anomaly_magnitude;
    }
    if (cfg_.noise > 0) {
      value *= 1.0 + cfg_.noise * noise_draw(cfg_.seed, node, tick);
    }
    return value;
  }

  std::uint64_t anomaly_period_ticks() const {
    return ticks_from_period(cfg_.anomaly_period_s, tick_s_, "anomaly_period_s");
  }

  // Next tick strictly after `tick` at which any node's value may change.
  std::uint64_t source_next_change(std::uint64_t tick) const {
    if (!piecewise_constant_source()) return tick + 1;
    if (cfg_.anomaly_period_s <= 0) return std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t period = anomaly_period_ticks();
    return (tick / period + 1) * period;
  }

  // ---- charging ----
  CurrentPulse compute_pulse() const {
    switch (cfg_.mode) {
      case SimMode::isa: return cfg_.profile.isa_compute;
      case SimMode::isa_ci: return cfg_.profile.isa_ci_compute;
      case SimMode::isa_ci_cas: return cfg_.profile.isa_ci_cas_compute;
      default: return {0.0, 0.0};
    }
  }

  void log(double t, std::uint32_t node, const char* kind, double coulombs) {
    if (cfg_.record_events) events_.push_back({t, node, kind, coulombs});
  }

  void mark_death(SimNode& node, double t) {
    node.alive = false;
    node.death_s = t;
    node.charge_c = 0.0;
    log(t, node.id, "death", 0.0);
  }

  // Continuous leakage plus one compute pulse per sensing tick, advanced to
  // time t (ticks with index*Ts <= t are charged). Nodes that cannot cover
  // the accrual die at the linear-interpolated instant.
  void sync(SimNode& node, double t) {
    if (!node.alive || t <= node.last_sync_s) return;
    const double leak_a = cfg_.profile.leakage_current_a;
    const double pulse_c = node.is_relay ? 0.0 : compute_pulse().charge_c();
    std::uint64_t ticks_due = 0;
    if (!node.is_relay) {
      const auto through =
          static_cast<std::uint64_t>(std::floor(t / tick_s_ + 1e-9)) + 1;
      ticks_due = through > node.charged_ticks ? through - node.charged_ticks : 0;
    }
    const double interval = t - node.last_sync_s;
    const double leak_c = leak_a * interval;
    const double comp_c = pulse_c * static_cast<double>(ticks_due);
    const double need = leak_c + comp_c;
    if (need < node.charge_c) {
      node.charge_c -= need;
      node.ledger.leakage_c += leak_c;
      node.ledger.compute_c += comp_c;
      node.charged_ticks += ticks_due;
      if (leak_c > 0) log(t, node.id, "leakage", leak_c);
      if (comp_c > 0) log(t, node.id, "compute", comp_c);
      node.last_sync_s = t;
      return;
    }
    // Charge exhausts mid-interval; smear the drains as a combined rate.
    const double rate = need / interval;
    const double death_t =
        rate > 0 ? node.last_sync_s + node.charge_c / rate : t;
    const double leak_part = interval > 0 ? leak_c * (node.charge_c / need) : 0.0;
    const double comp_part = node.charge_c - leak_part;
    node.ledger.leakage_c += leak_part;
    node.ledger.compute_c += comp_part;
    if (leak_part > 0) log(death_t, node.id, "leakage", leak_part);
    if (comp_part > 0) log(death_t, node.id, "compute", comp_part);
    node.last_sync_s = death_t;
    mark_death(node, death_t);
  }

  // Atomic event charge; partially payable events kill the node and count as
  // incomplete. Returns true when fully paid.
  bool charge_event(SimNode& node, double t, double coulombs, const char* kind,
                    double LedgerCategories::*category) {
    if (!node.alive) return false;
    sync(node, t);
    if (!node.alive) return false;
    if (coulombs >= node.charge_c) {
      node.ledger.*category += node.charge_c;
      log(t, node.id, kind, node.charge_c);
      mark_death(node, t);
      return false;
    }
    node.charge_c -= coulombs;
    node.ledger.*category += coulombs;
    log(t, node.id, kind, coulombs);
    return true;
  }

  // ---- LoRa uplinks ----
  LoRaParams route_lora(int sf) const {
    LoRaParams lora = cfg_.lora;
    lora.spreading_factor = sf;
    return lora;
  }

  RoutePlan current_route(const Position& from) {
    std::map<std::uint32_t, Position> alive_relays;
    for (const SimNode& node : nodes_) {
      if (node.is_relay && node.alive) alive_relays[node.id] = node.pos;
    }
    return plan_route(cfg_, from, hub_, alive_relays);
  }

  SimNode& node_by_id(std::uint32_t id) { return nodes_.at(id); }

  // Charges sender and relays for one transmission; true when the payload
  // reached the hub.
  bool transmit(SimNode& sender, double t, const RoutePlan& route) {
    if (!route.reachable) {
      if (cfg_.pricing == LoRaPricing::fixed_event) {
        const double attempt = cfg_.profile.lora_tx.charge_c() +
                               cfg_.profile.lora_event_overhead_j /
                                   cfg_.profile.supply_voltage_v;
        charge_event(sender, t, attempt, "lora_tx", &LedgerCategories::lora_tx_c);
      } else {
        const double airtime = lora_airtime_s(route_lora(cfg_.lora.spreading_factor));
        charge_event(sender, t,
                     cfg_.lora.tx_power_consumption_w /
                         cfg_.profile.supply_voltage_v * airtime,
                     "lora_tx", &LedgerCategories::lora_tx_c);
      }
      log(t, sender.id, "delivery_failure", 0.0);
      ++delivery_failures_;
      return false;
    }

    if (cfg_.pricing == LoRaPricing::fixed_event) {
      const double overhead_c =
          cfg_.profile.lora_event_overhead_j / cfg_.profile.supply_voltage_v;
      bool ok = charge_event(sender, t, cfg_.profile.lora_rx.charge_c(),
                             "lora_rx", &LedgerCategories::lora_rx_c);
      ok = ok && charge_event(sender, t,
                              cfg_.profile.lora_tx.charge_c() + overhead_c,
                              "lora_tx", &LedgerCategories::lora_tx_c);
      if (!ok) return false;
      for (std::uint32_t relay_id : route.relay_ids) {
        SimNode& relay = node_by_id(relay_id);
        bool relay_ok =
            charge_event(relay, t, cfg_.profile.lora_rx.charge_c(), "lora_rx",
                         &LedgerCategories::lora_rx_c);
        relay_ok = relay_ok &&
                   charge_event(relay, t,
                                cfg_.profile.lora_tx.charge_c() + overhead_c,
                                "lora_tx", &LedgerCategories::lora_tx_c);
        if (!relay_ok) {
          log(t, relay_id, "delivery_failure", 0.0);
          ++delivery_failures_;
          return false;
        }
      }
      return true;
    }

    // Airtime pricing: chain pays hop transmitters plus relay receivers.
    const double airtime = lora_airtime_s(route_lora(route.spreading_factor));
    const double v = cfg_.profile.supply_voltage_v;
    const double tx_c = cfg_.lora.tx_power_consumption_w / v * airtime;
    const double rx_c = cfg_.lora.rx_power_consumption_w / v * airtime;
    if (!charge_event(sender, t, tx_c, "lora_tx", &LedgerCategories::lora_tx_c)) {
      return false;
    }
    for (std::uint32_t relay_id : route.relay_ids) {
      SimNode& relay = node_by_id(relay_id);
      bool relay_ok =
          charge_event(relay, t, rx_c, "lora_rx", &LedgerCategories::lora_rx_c);
      relay_ok = relay_ok && charge_event(relay, t, tx_c, "lora_tx",
                                          &LedgerCategories::lora_tx_c);
      if (!relay_ok) {
        log(t, relay_id, "delivery_failure", 0.0);
        ++delivery_failures_;
        return false;
      }
    }
    return true;
  }

  // ---- mode loops ----
  void run_baseline();
  void run_duty_cycled();
  void run_isa_family();

  // ---- isa-family helpers ----
  void form_clusters_now(double t);
  void broadcast(SimNode& node, double t,
                 const std::optional<AnomalyEvent>& event);
  void uplink_standalone(SimNode& node, double t, std::uint64_t tick);
  void uplink_cluster(EngineCluster& cluster, double t, std::uint64_t tick);
  EngineCluster* cluster_of(std::uint32_t node_id);

  // ---- results ----
  SimResult finalize();
  void fill_retention(SimResult& result);
  void replay_correlation(const SimNode& node,
                          const std::vector<SensorSample>& series,
                          double end_s, WeightedPearson& acc);

  ScenarioConfig cfg_;
  std::vector<SimNode> nodes_;
  std::optional<SensorTrace> trace_;
  Position hub_;
  std::map<std::uint32_t, Position> relay_positions_;
  std::vector<EngineCluster> clusters_;
  std::map<std::uint32_t, std::size_t> cluster_index_;
  bool clusters_formed_ = false;
  double tick_s_ = 1.0;
  std::uint64_t duration_ticks_ = 0;
  std::vector<SimEventRecord> events_;
  std::uint64_t uplink_count_ = 0;
  std::uint64_t delivery_failures_ = 0;
};

void Engine::run_baseline() {
  const CurrentPulse rx = cfg_.profile.lora_rx;
  const CurrentPulse tx = cfg_.profile.lora_tx;
  const double cycle_s = cfg_.baseline_radio == BaselineRadio::continuous
                             ? rx.duration_s + tx.duration_s
                             : 1.0;
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cycle_s;
    if (t >= cfg_.duration_s) break;
    bool any_alive = false;
    for (SimNode& node : nodes_) {
      if (node.is_relay || !node.alive) continue;
      // Continuous occupancy: a reception window then a transmission,
      // back-to-back; no per-event setup overhead since the radio never
      // sleeps.
      bool ok = charge_event(node, t, rx.charge_c(), "lora_rx",
                             &LedgerCategories::lora_rx_c);
      ok = ok && charge_event(node, t, tx.charge_c(), "lora_tx",
                              &LedgerCategories::lora_tx_c);
      if (ok) ++uplink_count_;
      any_alive = any_alive || node.alive;
    }
    if (!any_alive) break;
  }
  for (SimNode& node : nodes_) sync(node, cfg_.duration_s);
}

void Engine::run_duty_cycled() {
  const std::uint64_t period_ticks =
      ticks_from_period(cfg_.duty_period_s, tick_s_, "duty_period_s");
  for (std::uint64_t tick = period_ticks; tick <= duration_ticks_;
       tick += period_ticks) {
    const double t = static_cast<double>(tick) * tick_s_;
    bool any_alive = false;
    for (SimNode& node : nodes_) {
      if (node.is_relay) continue;
      if (!node.alive) continue;
      const double value = source_value(node.id, tick);
      const RoutePlan route = current_route(node.pos);
      sync(node, t);
      if (!node.alive) continue;
      if (transmit(node, t, route)) {
        ++uplink_count_;
        node.delivered.push_back({t, value});
      }
      any_alive = any_alive || node.alive;
    }
    if (!any_alive) break;
  }
  for (SimNode& node : nodes_) sync(node, cfg_.duration_s);
}

EngineCluster* Engine::cluster_of(std::uint32_t node_id) {
  const auto it = cluster_index_.find(node_id);
  return it == cluster_index_.end() ? nullptr : &clusters_[it->second];
}

void Engine::form_clusters_now(double t) {
  std::vector<NodeEvents> histories;
  std::map<std::uint32_t, Position> positions;
  for (SimNode& node : nodes_) {
    if (node.is_relay || !node.alive) continue;
    NodeEvents events;
    events.node_id = node.id;
    for (std::size_t c = 0; c < 3; ++c) {
      for (const AnomalyEvent& e : node.history[c]) {
        if (e.anomaly_time_s >= t - cfg_.similarity_window_s) {
          events.per_channel[c].push_back(e);
        }
      }
    }
    histories.push_back(std::move(events));
    positions[node.id] = node.pos;
  }
  SimilarityParams params;
  params.window_s = cfg_.similarity_window_s;
  const auto states =
      form_clusters(histories, positions, cfg_.ble_range_m, params, t);
  const std::uint64_t tick = static_cast<std::uint64_t>(std::llround(t / tick_s_));
  const std::uint64_t hb_ticks =
      cfg_.heartbeat_s > 0 ? ticks_from_period(cfg_.heartbeat_s, tick_s_, "heartbeat_s")
                           : 0;
  for (const ClusterState& state : states) {
    EngineCluster cluster(state);
    cluster.next_heartbeat_tick = hb_ticks > 0 ? tick + hb_ticks : 0;
    for (std::uint32_t id : state.members) {
      cluster_index_[id] = clusters_.size();
    }
    clusters_.push_back(std::move(cluster));
  }
  clusters_formed_ = true;
  log(t, 0, "clusters_formed", 0.0);
}

void Engine::broadcast(SimNode& node, double t,
                       const std::optional<AnomalyEvent>& event) {
  const double at = t + broadcast_slot_delay_s(node.id, kBroadcastSlotS);
  if (!charge_event(node, at, cfg_.profile.ble_event.charge_c(), "ble",
                    &LedgerCategories::ble_c)) {
    return;
  }
  std::array<std::optional<AnomalyEvent>, 3> events{};
  if (event) events[static_cast<std::size_t>(event->channel)] = *event;
  const auto packets =
      make_broadcast(static_cast<std::uint8_t>(node.id & 0xFF), events,
                     node.charge_c, node.sequence);
  node.sequence = static_cast<std::uint16_t>(node.sequence + 3);
  if (EngineCluster* cluster = cluster_of(node.id)) {
    cluster->reports[node.id] = {node.id,
                                 uah_to_coulombs(static_cast<double>(
                                     packets[0].battery_uah)),
                                 at};
    if (cluster->controller.pending() == node.id) {
      cluster->controller.acknowledge(node.id, at);
      log(at, node.id, "head_activated", 0.0);
    }
  }
}

void Engine::uplink_standalone(SimNode& node, double t, std::uint64_t tick) {
  if (!node.alive) return;
  // Uplink right after the node's own broadcast slot so log times stay
  // monotone within a tick.
  const double at = t + broadcast_slot_delay_s(node.id, kBroadcastSlotS) +
                    cfg_.profile.ble_event.duration_s;
  const RoutePlan route = current_route(node.pos);
  if (transmit(node, at, route)) {
    ++uplink_count_;
    node.delivered.insert(node.delivered.end(), node.pending.begin(),
                          node.pending.end());
    node.pending.clear();
  }
  const std::uint64_t hb = cfg_.heartbeat_s > 0
                               ? ticks_from_period(cfg_.heartbeat_s, tick_s_,
                                                   "heartbeat_s")
                               : 0;
  if (hb > 0) node.next_heartbeat_tick = tick + hb;
}

void Engine::uplink_cluster(EngineCluster& cluster, double t,
                            std::uint64_t tick) {
  const std::uint64_t hb =
      cfg_.heartbeat_s > 0
          ? ticks_from_period(cfg_.heartbeat_s, tick_s_, "heartbeat_s")
          : 0;
  if (hb > 0) cluster.next_heartbeat_tick = tick + hb;

  ClusterState state = cluster.controller.cluster();
  SimNode* head = &node_by_id(state.head);
  if (!head->alive) {
    if (cfg_.mode != SimMode::isa_ci_cas) return;  // fixed head stays dark
    // Deterministic recovery: hand the role to the live member with the
    // highest instantaneous charge.
    std::map<std::uint32_t, BatteryReport> live;
    for (std::uint32_t id : state.members) {
      const SimNode& member = node_by_id(id);
      if (member.alive) live[id] = {id, member.charge_c, t};
    }
    if (live.empty()) return;
    ClusterState moved = state;
    moved.head = elect_head(moved, live);
    cluster.controller = CasController(moved);
    state = moved;
    head = &node_by_id(state.head);
    log(t, state.head, "head_recovered", 0.0);
  }

  const double uplink_t = t + kBroadcastSlotS * (cfg_.node_count + 1);
  CompressedSeries series;
  series.channel = Channel::temperature;
  series.kept = head->pending;
  series.source_count = head->pending.size();
  series.threshold_y = cfg_.thresholds.compress_y;
  std::map<std::uint32_t, double> member_charge;
  for (std::uint32_t id : state.members) {
    if (id != state.head) member_charge[id] = node_by_id(id).charge_c;
  }
  const auto payloads = spatial_compress(state, series, member_charge,
                                         cfg_.lora.payload_bytes);
  const RoutePlan route = current_route(head->pos);
  bool all_delivered = true;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    if (!transmit(*head, uplink_t, route)) {
      all_delivered = false;
      break;
    }
    ++uplink_count_;
  }
  if (all_delivered) {
    cluster.delivered.insert(cluster.delivered.end(), head->pending.begin(),
                             head->pending.end());
    for (std::uint32_t id : state.members) node_by_id(id).pending.clear();
  }

  if (cfg_.mode == SimMode::isa_ci_cas && head->alive) {
    // Dead members stopped broadcasting; their stale reports must not win
    // the election or rotation would stall on a node that can never
    // acknowledge.
    for (auto it = cluster.reports.begin(); it != cluster.reports.end();) {
      it = node_by_id(it->first).alive ? std::next(it)
                                       : cluster.reports.erase(it);
    }
    // The head compares its own instantaneous level against the reported
    // member levels after paying for the uplink.
    cluster.reports[state.head] = {state.head, head->charge_c, uplink_t};
    if (const auto handover = cluster.controller.step(cluster.reports)) {
      log(uplink_t, handover->next_head, "handover_announced", 0.0);
    }
  }
}

void Engine::run_isa_family() {
  const bool clustered =
      cfg_.mode == SimMode::isa_ci || cfg_.mode == SimMode::isa_ci_cas;
  const std::uint64_t hb_ticks =
      cfg_.heartbeat_s > 0
          ? ticks_from_period(cfg_.heartbeat_s, tick_s_, "heartbeat_s")
          : 0;
  std::uint64_t formation_tick = std::numeric_limits<std::uint64_t>::max();
  if (clustered) {
    formation_tick =
        cfg_.similarity_window_s > 0
            ? ticks_from_period(cfg_.similarity_window_s, tick_s_,
                                "similarity_window_s")
            : 0;
  }
  for (SimNode& node : nodes_) {
    if (node.is_relay) continue;
    node.detector.emplace(cfg_.thresholds.anomaly_x,
                          channel_full_scale(Channel::temperature));
    node.compressor.emplace(cfg_.thresholds.compress_y,
                            channel_full_scale(Channel::temperature));
    node.next_heartbeat_tick = hb_ticks;
  }

  std::uint64_t tick = 0;
  while (tick <= duration_ticks_) {
    const double t = static_cast<double>(tick) * tick_s_;

    if (clustered && !clusters_formed_ && tick >= formation_tick) {
      for (SimNode& node : nodes_) sync(node, t);
      form_clusters_now(t);
    }

    // Sensing pass, ascending node id.
    std::vector<std::pair<std::uint32_t, AnomalyEvent>> fired;
    for (SimNode& node : nodes_) {
      if (node.is_relay || !node.alive) continue;
      sync(node, t);
      if (!node.alive) continue;
      const double value = source_value(node.id, tick);
      if (node.compressor->feed(t, value)) node.pending.push_back({t, value});
      if (auto event = node.detector->feed(t, value)) {
        event->node_id = node.id;
        event->channel = Channel::temperature;
        if (clustered && !clusters_formed_) node.history[0].push_back(*event);
        fired.emplace_back(node.id, *event);
      }
    }

    // Event-driven communication.
    if (!fired.empty()) {
      if (clustered) {
        for (auto& [id, event] : fired) {
          broadcast(node_by_id(id), t, event);
        }
        if (clusters_formed_) {
          std::vector<std::size_t> touched;
          for (auto& [id, event] : fired) {
            const auto it = cluster_index_.find(id);
            if (it != cluster_index_.end()) touched.push_back(it->second);
          }
          std::sort(touched.begin(), touched.end());
          touched.erase(std::unique(touched.begin(), touched.end()),
                        touched.end());
          for (std::size_t index : touched) {
            uplink_cluster(clusters_[index], t, tick);
          }
        } else {
          for (auto& [id, event] : fired) {
            uplink_standalone(node_by_id(id), t, tick);
          }
        }
      } else {
        for (auto& [id, event] : fired) {
          uplink_standalone(node_by_id(id), t, tick);
        }
      }
    }

    // Heartbeat uplinks for units that stayed quiet long enough. Units that
    // just uplinked already pushed their deadline forward.
    if (hb_ticks > 0) {
      if (clusters_formed_) {
        for (EngineCluster& cluster : clusters_) {
          if (tick >= cluster.next_heartbeat_tick) {
            uplink_cluster(cluster, t, tick);
          }
        }
      } else {
        for (SimNode& node : nodes_) {
          if (node.is_relay || !node.alive) continue;
          if (tick >= node.next_heartbeat_tick) uplink_standalone(node, t, tick);
        }
      }
    }

    bool any_alive = false;
    for (const SimNode& node : nodes_) {
      if (!node.is_relay && node.alive) any_alive = true;
    }
    if (!any_alive) break;

    // Jump to the next tick where anything can happen.
    std::uint64_t next = source_next_change(tick);
    if (clustered && !clusters_formed_ && formation_tick > tick) {
      next = std::min(next, formation_tick);
    }
    if (hb_ticks > 0) {
      if (clusters_formed_) {
        for (const EngineCluster& cluster : clusters_) {
          next = std::min(next, cluster.next_heartbeat_tick);
        }
      } else {
        for (const SimNode& node : nodes_) {
          if (!node.is_relay && node.alive) {
            next = std::min(next, node.next_heartbeat_tick);
          }
        }
      }
    }
    if (next <= tick) next = tick + 1;
    tick = next;
  }
  for (SimNode& node : nodes_) sync(node, cfg_.duration_s);
}

SimResult Engine::run() {
  switch (cfg_.mode) {
    case SimMode::lora_every_second: run_baseline(); break;
    case SimMode::duty_cycled_lora: run_duty_cycled(); break;
    default: run_isa_family(); break;
  }
  return finalize();
}

void Engine::replay_correlation(const SimNode& node,
                                const std::vector<SensorSample>& series,
                                double end_s, WeightedPearson& acc) {
  if (series.empty()) return;
  const double center = cfg_.baseline;  // shift improves conditioning only
  auto zoh = [&series](double t) {
    auto it = std::upper_bound(
        series.begin(), series.end(), t,
        [](double lhs, const SensorSample& s) { return lhs < s.timestamp_s; });
    return std::prev(it)->value;
  };
  const auto start_tick = static_cast<std::uint64_t>(
      std::llround(series.front().timestamp_s / tick_s_));
  const auto end_tick =
      static_cast<std::uint64_t>(std::floor(end_s / tick_s_ + 1e-9));
  if (end_tick < start_tick) return;

  if (!piecewise_constant_source()) {
    const std::uint64_t limit =
        trace_ ? std::min<std::uint64_t>(end_tick, trace_->samples.size() - 1)
               : end_tick;
    for (std::uint64_t tick = start_tick; tick <= limit; ++tick) {
      const double t = static_cast<double>(tick) * tick_s_;
      acc.add(source_value(node.id, tick) - center, zoh(t) - center, 1.0);
    }
    return;
  }

  // Both the source and the reconstruction are piecewise constant; walk the
  // segment boundaries and weight by tick counts.
  std::vector<std::uint64_t> boundaries;
  boundaries.push_back(start_tick);
  for (const SensorSample& s : series) {
    const auto b = static_cast<std::uint64_t>(std::llround(s.timestamp_s / tick_s_));
    if (b > start_tick && b <= end_tick) boundaries.push_back(b);
  }
  if (cfg_.anomaly_period_s > 0) {
    const std::uint64_t period = anomaly_period_ticks();
    for (std::uint64_t edge = (start_tick / period + 1) * period;
         edge <= end_tick; edge += period) {
      boundaries.push_back(edge);
    }
  }
  boundaries.push_back(end_tick + 1);
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()),
                   boundaries.end());
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    const std::uint64_t begin = boundaries[i];
    const std::uint64_t count = boundaries[i + 1] - begin;
    const double t = static_cast<double>(begin) * tick_s_;
    acc.add(source_value(node.id, begin) - center, zoh(t) - center,
            static_cast<double>(count));
  }
}

void Engine::fill_retention(SimResult& result) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    SimNode& node = nodes_[i];
    NodeResult& out = result.nodes[i];
    if (node.is_relay) {
      out.retention_correlation = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double end_s = std::min(node.death_s, cfg_.duration_s);
    if (cfg_.mode == SimMode::lora_every_second) {
      out.sensed_samples =
          static_cast<std::uint64_t>(std::floor(end_s / tick_s_ + 1e-9)) + 1;
      out.delivered_samples = out.sensed_samples;
      out.retention_correlation = 1.0;
      out.sample_retention = 1.0;
      continue;
    }

    std::vector<SensorSample> series = node.delivered;
    if (const EngineCluster* cluster = cluster_of(node.id)) {
      series.insert(series.end(), cluster->delivered.begin(),
                    cluster->delivered.end());
      std::stable_sort(series.begin(), series.end(),
                       [](const SensorSample& a, const SensorSample& b) {
                         return a.timestamp_s < b.timestamp_s;
                       });
    }
    out.delivered_samples = series.size();
    if (cfg_.mode == SimMode::duty_cycled_lora) {
      out.sensed_samples =
          static_cast<std::uint64_t>(std::floor(end_s / tick_s_ + 1e-9)) + 1;
    } else {
      out.sensed_samples = node.charged_ticks;
    }
    out.sample_retention =
        out.sensed_samples
            ? static_cast<double>(out.delivered_samples) / out.sensed_samples
            : 0.0;
    WeightedPearson acc;
    replay_correlation(node, series, end_s, acc);
    out.retention_correlation = acc.correlation();
  }

  double min_corr = kInf;
  std::uint64_t sensed = 0, delivered = 0;
  for (const NodeResult& out : result.nodes) {
    if (out.is_relay) continue;
    if (!std::isnan(out.retention_correlation)) {
      min_corr = std::min(min_corr, out.retention_correlation);
    }
    sensed += out.sensed_samples;
    delivered += out.delivered_samples;
  }
  result.info_retention =
      min_corr == kInf ? std::numeric_limits<double>::quiet_NaN() : min_corr;
  result.sample_retention =
      sensed ? static_cast<double>(delivered) / sensed : 0.0;
}

SimResult Engine::finalize() {
  SimResult result;
  result.first_death_s = kInf;
  result.last_death_s = kInf;
  double last_death = -kInf;
  bool any_death = false;
  for (SimNode& node : nodes_) {
    NodeResult out;
    out.id = node.id;
    out.is_relay = node.is_relay;
    out.died = !node.alive;
    out.lifetime_s = node.alive ? cfg_.duration_s : node.death_s;
    out.initial_charge_c = node.initial_charge_c;
    out.final_charge_c = node.charge_c;
    out.ledger = node.ledger;
    if (!node.is_relay && !node.alive) {
      any_death = true;
      result.first_death_s = std::min(result.first_death_s, node.death_s);
      last_death = std::max(last_death, node.death_s);
    }
    const double drained = node.initial_charge_c - node.charge_c;
    if (std::abs(drained - node.ledger.total_c()) > 1e-6) {
      throw std::logic_error("ledger does not balance battery drawdown");
    }
    result.nodes.push_back(std::move(out));
  }
  result.last_death_s = any_death ? last_death : kInf;
  if (!any_death) result.first_death_s = kInf;
  result.uplink_count = uplink_count_;
  result.delivery_failures = delivery_failures_;
  result.events_recorded = cfg_.record_events;
  result.events = std::move(events_);
  fill_retention(result);
  return result;
}

}  // namespace

std::string SimResult::summary_csv() const {
  std::string out =
      "node,is_relay,died,lifetime_s,initial_c,final_c,lora_tx_c,lora_rx_c,"
      "ble_c,compute_c,leakage_c,retention_correlation,sample_retention,"
      "sensed,delivered\n";
  char buf[384];
  for (const NodeResult& n : nodes) {
    std::snprintf(buf, sizeof(buf),
                  "%u,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%llu,%llu\n",
                  n.id, n.is_relay ? 1 : 0, n.died ? 1 : 0, n.lifetime_s,
                  n.initial_charge_c, n.final_charge_c, n.ledger.lora_tx_c,
                  n.ledger.lora_rx_c, n.ledger.ble_c, n.ledger.compute_c,
                  n.ledger.leakage_c, n.retention_correlation,
                  n.sample_retention,
                  static_cast<unsigned long long>(n.sensed_samples),
                  static_cast<unsigned long long>(n.delivered_samples));
    out += buf;
  }
  return out;
}

std::string SimResult::events_csv() const {
  std::string out = "time_s,node,kind,coulombs\n";
  char buf[160];
  for (const SimEventRecord& e : events) {
    std::snprintf(buf, sizeof(buf), "%.9g,%u,%s,%.12g\n", e.time_s, e.node,
                  e.kind.c_str(), e.coulombs);
    out += buf;
  }
  return out;
}

SimResult run(const ScenarioConfig& config) {
  Engine engine(config);
  return engine.run();
}

RoutePlan route_multihop(const Position& source, const Position& hub,
                         const std::map<std::uint32_t, Position>& relays,
                         double max_hop_m) {
  const double reach = max_hop_m * (1.0 + kRangeTolerance);
  std::vector<std::uint32_t> relay_ids;
  std::vector<Position> points{source};
  for (const auto& [id, pos] : relays) {
    relay_ids.push_back(id);
    points.push_back(pos);
  }
  points.push_back(hub);
  const std::size_t hub_index = points.size() - 1;

  std::vector<int> parent(points.size(), -1);
  std::vector<bool> visited(points.size(), false);
  std::vector<std::size_t> queue{0};
  visited[0] = true;
  for (std::size_t cursor = 0; cursor < queue.size(); ++cursor) {
    const std::size_t at = queue[cursor];
    if (at == hub_index) break;
    for (std::size_t next = 1; next < points.size(); ++next) {
      if (visited[next]) continue;
      if (distance_m(points[at], points[next]) <= reach) {
        visited[next] = true;
        parent[next] = static_cast<int>(at);
        queue.push_back(next);
      }
    }
  }
  RoutePlan plan;
  if (!visited[hub_index]) return plan;
  plan.reachable = true;
  std::vector<std::uint32_t> chain;
  for (int at = parent[hub_index]; at > 0; at = parent[at]) {
    chain.push_back(relay_ids[at - 1]);
  }
  std::reverse(chain.begin(), chain.end());
  plan.relay_ids = std::move(chain);
  return plan;
}

RoutePlan plan_route(const ScenarioConfig& config, const Position& source,
                     const Position& hub,
                     const std::map<std::uint32_t, Position>& relays) {
  const LinkParams link{config.carrier_frequency_hz, 1.0,
                        config.path_loss_exponent, 0.0, 0.0};
  auto try_sf = [&](int sf) {
    LoRaParams lora = config.lora;
    lora.spreading_factor = sf;
    const double range = lora_range_m(lora, link, config.lora_receiver);
    RoutePlan plan = route_multihop(source, hub, relays, range);
    plan.spreading_factor = sf;
    return plan;
  };
  if (!config.sf_auto) return try_sf(config.lora.spreading_factor);
  for (int sf = 7; sf <= 12; ++sf) {
    RoutePlan plan = try_sf(sf);
    if (plan.reachable) return plan;
  }
  RoutePlan unreachable;
  unreachable.spreading_factor = 12;
  return unreachable;
}

LifetimeCrosscheck lifetime_crosscheck(const ScenarioConfig& config) {
  if (config.mode != SimMode::isa_ci && config.mode != SimMode::isa_ci_cas) {
    throw std::invalid_argument(
        "cross-check requires a clustered mode (isa_ci or isa_ci_cas)");
  }
  if (config.profile.leakage_current_a != 0.0) {
    throw std::invalid_argument(
        "cross-check requires zero leakage; the closed forms ignore it");
  }
  if (config.noise != 0.0 || !config.trace_file.empty()) {
    throw std::invalid_argument(
        "cross-check requires the noise-free procedural source");
  }
  if (!(config.anomaly_period_s > 0)) {
    throw std::invalid_argument("cross-check requires a fixed anomaly cadence");
  }
  if (!config.relay_distances_m.empty()) {
    throw std::invalid_argument("cross-check requires a single-hop uplink");
  }
  if (config.node_count > static_cast<int>(kMaxClusterMembers) + 1) {
    throw std::invalid_argument("cross-check requires a single cluster");
  }

  const EnergyProfile& p = config.profile;
  const double v = p.supply_voltage_v;
  const double cycle_s = config.anomaly_period_s;
  const double ticks_per_cycle = cycle_s / config.sample_period_s;
  const double battery_j = mah_to_coulombs(config.battery_mah) * v;
  const double e_sr = p.ble_event.charge_c() * v;
  const double e_lr = p.lora_event_charge_c() * v;

  CiEnergyParams ci;
  ci.e_long_range_j = e_lr;
  ci.e_short_range_j = e_sr;
  ci.e_compute_ci_j = p.isa_ci_compute.charge_c() * v * ticks_per_cycle;
  ci.e_compute_ci_cas_j = p.isa_ci_cas_compute.charge_c() * v * ticks_per_cycle;
  ci.battery_energy_j = battery_j;
  ci.cluster_size = config.node_count;

  LifetimeCrosscheck check;
  check.closed_form_s = config.mode == SimMode::isa_ci
                            ? network_lifetime_ci_s(ci, cycle_s)
                            : network_lifetime_ci_cas_s(ci, cycle_s);
  if (config.duration_s < check.closed_form_s * 1.05) {
    throw std::invalid_argument(
        "cross-check scenario must run past the predicted lifetime");
  }
  const SimResult result = run(config);
  check.simulated_s = result.first_death_s;
  check.relative_error =
      std::abs(check.simulated_s - check.closed_form_s) / check.closed_form_s;
  return check;
}

}  // namespace sensormesh
