#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sensormesh {

enum class Channel { temperature, humidity, nitrate };

const char* channel_name(Channel c);
std::optional<Channel> channel_from_name(std::string_view name);

// Full-scale value per channel, used as the denominator whenever a relative
// comparison would otherwise divide by a zero reference.
double channel_full_scale(Channel c);

struct SensorSample {
  double timestamp_s = 0.0;
  double value = 0.0;
};

struct SensorTrace {
  Channel channel = Channel::temperature;
  std::vector<SensorSample> samples;
};

// One trace per channel. Timestamps are strictly increasing within a channel.
using TraceSet = std::map<Channel, SensorTrace>;

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV schema: header "timestamp_s,channel,value", one sample per row.
/// Parse errors carry the 1-based line number of the offending row.
TraceSet parse_trace_csv(std::istream& in);
TraceSet load_trace_csv(const std::string& path);
std::string trace_to_csv(const TraceSet& traces);
void save_trace_csv(const TraceSet& traces, const std::string& path);

// Synthetic trace generation. An anomaly ramps linearly from the baseline to
// baseline*(1+magnitude) across [start, start+duration], then decays back
// exponentially with the given time constant. Noise is uniform relative
// jitter in [-amplitude, +amplitude], drawn from a seeded generator so the
// same spec always produces the same trace.
struct AnomalySpec {
  double start_s = 0.0;
  double duration_s = 0.0;
  double magnitude = 0.0;       // relative to baseline
  double recovery_tau_s = 1.0;  // exponential recovery time constant
};

struct SynthSpec {
  std::map<Channel, double> baselines = {{Channel::temperature, 20.0}};
  double noise_amplitude = 0.0;  // relative
  std::vector<AnomalySpec> anomalies;
  double duration_s = 100.0;
  double sample_period_s = 1.0;
  std::uint64_t seed = 0;
};

TraceSet generate_trace(const SynthSpec& spec);

// Spec of the committed golden fixture: a 100 s temperature profile with one
// heated excursion ramping to +15% over t=24..30 s and an exponential
// recovery. Compressing it at y=0.02 keeps exactly 12 of 100 samples.
SynthSpec reference_temperature_spec();

}  // namespace sensormesh
