#include "protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "units.hpp"

namespace sensormesh {

namespace {

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u48(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 6; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u48(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 6; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte) << 8;
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

PacketBytes encode_packet(const BlePacket& packet) {
  if (packet.channel > 2) throw std::invalid_argument("channel must be 0..2");
  PacketBytes bytes{};
  std::uint8_t* payload = bytes.data() + 8;
  payload[0] = packet.device_id;
  put_u64(payload + 1, std::bit_cast<std::uint64_t>(packet.value_before));
  put_u64(payload + 9, packet.anomaly_time_s);
  put_u64(payload + 17, std::bit_cast<std::uint64_t>(packet.value_after));
  if (packet.battery_uah > kBatteryFieldMax) {
    throw std::invalid_argument("battery field exceeds 48 bits");
  }
  put_u48(payload + 25, packet.battery_uah);

  put_u16(bytes.data(), kPacketMagic);
  bytes[2] = packet.channel;
  bytes[3] = packet.flags;
  put_u16(bytes.data() + 4, packet.sequence);
  put_u16(bytes.data() + 6, crc16_ccitt({payload, kPayloadBytes}));
  return bytes;
}

BlePacket decode_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPacketBytes) {
    throw std::invalid_argument("packet must be exactly 39 bytes");
  }
  if (get_u16(bytes.data()) != kPacketMagic) {
    throw std::invalid_argument("bad packet magic");
  }
  const std::uint8_t* payload = bytes.data() + 8;
  if (get_u16(bytes.data() + 6) != crc16_ccitt({payload, kPayloadBytes})) {
    throw std::invalid_argument("payload crc mismatch");
  }
  BlePacket packet;
  packet.channel = bytes[2];
  if (packet.channel > 2) throw std::invalid_argument("channel must be 0..2");
  packet.flags = bytes[3];
  packet.sequence = get_u16(bytes.data() + 4);
  packet.device_id = payload[0];
  packet.value_before = std::bit_cast<double>(get_u64(payload + 1));
  packet.anomaly_time_s = get_u64(payload + 9);
  packet.value_after = std::bit_cast<double>(get_u64(payload + 17));
  packet.battery_uah = get_u48(payload + 25);
  return packet;
}

std::string packet_to_hex(const PacketBytes& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * bytes.size());
  for (std::uint8_t b : bytes) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0xF]);
  }
  return hex;
}

PacketBytes packet_from_hex(std::string_view hex) {
  if (hex.size() != 2 * kPacketBytes) {
    throw std::invalid_argument("hex dump must be 78 characters");
  }
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw std::invalid_argument("bad hex digit");
  };
  PacketBytes bytes{};
  for (std::size_t i = 0; i < kPacketBytes; ++i) {
    bytes[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) |
                                         nibble(hex[2 * i + 1]));
  }
  return bytes;
}

std::array<BlePacket, 3> make_broadcast(
    std::uint8_t device_id,
    const std::array<std::optional<AnomalyEvent>, 3>& events,
    double battery_charge_c, std::uint16_t base_sequence,
    std::vector<std::string>* warnings) {
  std::uint64_t battery_uah = 0;
  const double uah = std::round(coulombs_to_uah(std::max(battery_charge_c, 0.0)));
  if (uah > static_cast<double>(kBatteryFieldMax)) {
    battery_uah = kBatteryFieldMax;
    if (warnings) warnings->push_back("battery level saturates the 48-bit field");
  } else {
    battery_uah = static_cast<std::uint64_t>(uah);
  }

  std::array<BlePacket, 3> packets;
  for (std::uint8_t channel = 0; channel < 3; ++channel) {
    BlePacket& p = packets[channel];
    p.channel = channel;
    p.sequence = static_cast<std::uint16_t>(base_sequence + channel);
    p.device_id = device_id;
    p.battery_uah = battery_uah;
    if (const auto& event = events[channel]) {
      p.flags = 1;
      p.value_before = event->value_before;
      p.anomaly_time_s =
          static_cast<std::uint64_t>(std::llround(event->anomaly_time_s));
      p.value_after = event->value_after;
    }
  }
  return packets;
}

double broadcast_slot_delay_s(std::uint32_t device_id, double slot_s) {
  if (!(slot_s > 0)) throw std::invalid_argument("slot must be > 0");
  return device_id * slot_s;
}

double distance_m(const Position& a, const Position& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

namespace {

bool events_match(const std::vector<AnomalyEvent>& a,
                  const std::vector<AnomalyEvent>& b,
                  const SimilarityParams& params) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].anomaly_time_s - b[i].anomaly_time_s) >
        params.time_tolerance_s) {
      return false;
    }
    const double scale = std::max(
        {std::abs(a[i].value_after), std::abs(b[i].value_after), 1e-12});
    if (std::abs(a[i].value_after - b[i].value_after) >
        params.value_tolerance * scale) {
      return false;
    }
  }
  return true;
}

bool similar(const NodeEvents& a, const NodeEvents& b,
             const std::map<std::uint32_t, Position>& positions,
             double ble_range_m, const SimilarityParams& params) {
  const auto pa = positions.find(a.node_id);
  const auto pb = positions.find(b.node_id);
  if (pa == positions.end() || pb == positions.end()) return false;
  if (distance_m(pa->second, pb->second) > ble_range_m) return false;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!events_match(a.per_channel[c], b.per_channel[c], params)) return false;
  }
  return true;
}

}  // namespace

std::vector<ClusterState> form_clusters(
    const std::vector<NodeEvents>& histories,
    const std::map<std::uint32_t, Position>& positions, double ble_range_m,
    const SimilarityParams& params, double now_s, std::size_t max_members) {
  std::vector<const NodeEvents*> nodes;
  nodes.reserve(histories.size());
  for (const NodeEvents& h : histories) nodes.push_back(&h);
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeEvents* a, const NodeEvents* b) {
              return a->node_id < b->node_id;
            });

  // Connected components of the similarity graph, explored in id order.
  std::vector<ClusterState> clusters;
  std::vector<bool> assigned(nodes.size(), false);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> component{i};
    assigned[i] = true;
    for (std::size_t cursor = 0; cursor < component.size(); ++cursor) {
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (assigned[j]) continue;
        if (similar(*nodes[component[cursor]], *nodes[j], positions,
                    ble_range_m, params)) {
          component.push_back(j);
          assigned[j] = true;
        }
      }
    }
    std::sort(component.begin(), component.end(),
              [&](std::size_t a, std::size_t b) {
                return nodes[a]->node_id < nodes[b]->node_id;
              });
    // Greedy split: chunks of head + max_members, lowest ids first.
    const std::size_t chunk = max_members + 1;
    for (std::size_t begin = 0; begin < component.size(); begin += chunk) {
      ClusterState cluster;
      cluster.formed_at_s = now_s;
      cluster.similarity_window_s = params.window_s;
      const std::size_t end = std::min(begin + chunk, component.size());
      for (std::size_t k = begin; k < end; ++k) {
        cluster.members.push_back(nodes[component[k]]->node_id);
      }
      cluster.head = cluster.members.front();
      clusters.push_back(std::move(cluster));
    }
  }
  return clusters;
}

std::uint32_t elect_head(const ClusterState& cluster,
                         const std::map<std::uint32_t, BatteryReport>& reports,
                         std::vector<std::string>* warnings) {
  if (cluster.members.empty()) {
    throw std::invalid_argument("cluster has no members");
  }
  std::optional<std::uint32_t> best;
  double best_charge = 0.0;
  for (std::uint32_t id : cluster.members) {
    const auto it = reports.find(id);
    if (it == reports.end()) {
      if (warnings) {
        warnings->push_back("no battery report for node " + std::to_string(id) +
                            "; excluded from election");
      }
      continue;
    }
    const double charge = it->second.charge_c;
    if (!best || charge > best_charge || (charge == best_charge && id < *best)) {
      best = id;
      best_charge = charge;
    }
  }
  if (!best) throw std::invalid_argument("no member has a battery report");
  return *best;
}

std::optional<HandoverMessage> CasController::step(
    const std::map<std::uint32_t, BatteryReport>& reports,
    std::vector<std::string>* warnings) {
  const std::uint32_t elected = elect_head(cluster_, reports, warnings);
  if (elected == cluster_.head) {
    pending_.reset();
    return std::nullopt;
  }
  const auto head_report = reports.find(cluster_.head);
  if (head_report != reports.end()) {
    const auto elected_report = reports.find(elected);
    if (elected_report != reports.end() &&
        !(head_report->second.charge_c < elected_report->second.charge_c)) {
      // Head still holds the maximum (elected differs only by tie-break).
      pending_.reset();
      return std::nullopt;
    }
  }
  pending_ = elected;
  return HandoverMessage{elected};
}

bool CasController::acknowledge(std::uint32_t node_id, double now_s) {
  if (!pending_ || *pending_ != node_id) return false;
  cluster_.head = node_id;
  cluster_.formed_at_s = now_s;
  pending_.reset();
  return true;
}

std::size_t UplinkPayload::byte_size() const {
  // head id + channel + two length fields, 16 per sample, 7 per member entry.
  return 4 + 16 * series.size() + 7 * member_ids.size();
}

std::vector<UplinkPayload> spatial_compress(
    const ClusterState& cluster, const CompressedSeries& head_series,
    const std::map<std::uint32_t, double>& battery_charge_c,
    std::size_t max_payload_bytes) {
  if (max_payload_bytes < 24) {
    throw std::invalid_argument("payload budget too small");
  }
  UplinkPayload base;
  base.cluster_head = cluster.head;
  base.channel = head_series.channel;
  for (std::uint32_t id : cluster.members) {
    if (id == cluster.head) continue;
    base.member_ids.push_back(id);
    const auto it = battery_charge_c.find(id);
    const double charge = it == battery_charge_c.end() ? 0.0 : it->second;
    base.member_battery_uah.push_back(
        static_cast<std::uint64_t>(std::round(coulombs_to_uah(charge))));
  }

  std::vector<UplinkPayload> uplinks;
  UplinkPayload current = base;
  for (const SensorSample& s : head_series.kept) {
    if (current.byte_size() + 16 > max_payload_bytes) {
      uplinks.push_back(std::move(current));
      current = UplinkPayload{};
      current.cluster_head = base.cluster_head;
      current.channel = base.channel;
    }
    current.series.push_back(s);
  }
  uplinks.push_back(std::move(current));
  return uplinks;
}

}  // namespace sensormesh
