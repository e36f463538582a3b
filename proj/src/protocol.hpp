#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isa.hpp"

namespace sensormesh {

// Broadcast packet: 8-byte header + 31-byte payload = 39 bytes. One
// broadcast event is three packets, one per channel. Layout (little-endian):
//   header : magic u16 | channel u8 | flags u8 | sequence u16 | crc16(payload)
//   payload: device_id u8 | value_before f64 | anomaly_time u64 |
//            value_after f64 | battery u48 (uAh)
// A channel with no event carries an all-ones anomaly_time sentinel.
inline constexpr std::size_t kPacketBytes = 39;
inline constexpr std::size_t kPayloadBytes = 31;
inline constexpr std::uint16_t kPacketMagic = 0xB5E1;
inline constexpr std::uint64_t kNoEventSentinel = ~0ull;
inline constexpr std::uint64_t kBatteryFieldMax = (1ull << 48) - 1;
inline constexpr std::size_t kMaxClusterMembers = 7;  // pairing fan-out limit

struct BlePacket {
  std::uint8_t channel = 0;
  std::uint8_t flags = 0;  // bit0: payload carries an event
  std::uint16_t sequence = 0;
  std::uint8_t device_id = 0;
  double value_before = 0.0;
  std::uint64_t anomaly_time_s = kNoEventSentinel;
  double value_after = 0.0;
  std::uint64_t battery_uah = 0;

  bool has_event() const { return flags & 1; }
};

using PacketBytes = std::array<std::uint8_t, kPacketBytes>;

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data);

PacketBytes encode_packet(const BlePacket& packet);
BlePacket decode_packet(std::span<const std::uint8_t> bytes);  // throws on bad frame

std::string packet_to_hex(const PacketBytes& bytes);
PacketBytes packet_from_hex(std::string_view hex);

struct BatteryReport {
  std::uint32_t node_id = 0;
  double charge_c = 0.0;
  double reported_at_s = 0.0;
};

/// One broadcast event: three packets in channel order. Battery values that
/// do not fit the 48-bit field saturate with a warning.
std::array<BlePacket, 3> make_broadcast(
    std::uint8_t device_id,
    const std::array<std::optional<AnomalyEvent>, 3>& events,
    double battery_charge_c, std::uint16_t base_sequence,
    std::vector<std::string>* warnings = nullptr);

/// Fixed time-multiplexing delay for a node's broadcast: one slot per device
/// id. The default 20 ms slot leaves an 8 ms guard around the 12 ms event.
double broadcast_slot_delay_s(std::uint32_t device_id, double slot_s = 0.020);

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

double distance_m(const Position& a, const Position& b);

struct ClusterState {
  std::vector<std::uint32_t> members;  // sorted, includes the head
  std::uint32_t head = 0;
  double formed_at_s = 0.0;
  double similarity_window_s = 0.0;
};

struct NodeEvents {
  std::uint32_t node_id = 0;
  std::array<std::vector<AnomalyEvent>, 3> per_channel;
};

struct SimilarityParams {
  double window_s = 900.0;
  double time_tolerance_s = 5.0;
  double value_tolerance = 0.02;
};

/// Nodes are similar when within radio range and their per-channel anomaly
/// histories match pairwise (times within tolerance, values within relative
/// tolerance). Clusters are the connected components of that relation, split
/// greedily in ascending id order so no head serves more than max_members.
std::vector<ClusterState> form_clusters(
    const std::vector<NodeEvents>& histories,
    const std::map<std::uint32_t, Position>& positions, double ble_range_m,
    const SimilarityParams& params, double now_s = 0.0,
    std::size_t max_members = kMaxClusterMembers);

/// Member with the highest reported charge; ties break to the lowest id.
/// Members without a report are skipped with a warning.
std::uint32_t elect_head(const ClusterState& cluster,
                         const std::map<std::uint32_t, BatteryReport>& reports,
                         std::vector<std::string>* warnings = nullptr);

struct HandoverMessage {
  std::uint32_t next_head = 0;
};

/// Announce/acknowledge head rotation. step() proposes a handover when the
/// current head no longer holds the highest charge; the role only moves once
/// the elected node acknowledges (its next broadcast).
class CasController {
 public:
  explicit CasController(ClusterState cluster) : cluster_(std::move(cluster)) {}

  std::optional<HandoverMessage> step(
      const std::map<std::uint32_t, BatteryReport>& reports,
      std::vector<std::string>* warnings = nullptr);
  bool acknowledge(std::uint32_t node_id, double now_s);

  const ClusterState& cluster() const { return cluster_; }
  std::optional<std::uint32_t> pending() const { return pending_; }

 private:
  ClusterState cluster_;
  std::optional<std::uint32_t> pending_;
};

// Spatially compressed uplink: the head's own kept series stands in for the
// whole cluster, plus the member roster and their latest battery levels.
struct UplinkPayload {
  std::uint32_t cluster_head = 0;
  Channel channel = Channel::temperature;
  std::vector<SensorSample> series;
  std::vector<std::uint32_t> member_ids;
  std::vector<std::uint64_t> member_battery_uah;

  std::size_t byte_size() const;
};

std::vector<UplinkPayload> spatial_compress(
    const ClusterState& cluster, const CompressedSeries& head_series,
    const std::map<std::uint32_t, double>& battery_charge_c,
    std::size_t max_payload_bytes = 240);

}  // namespace sensormesh
