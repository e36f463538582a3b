#include "trace.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace sensormesh {

namespace {

constexpr std::array<Channel, 3> kChannels = {Channel::temperature, Channel::humidity,
                                              Channel::nitrate};

double parse_number(std::string_view text, std::size_t line, const char* what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw TraceError("line " + std::to_string(line) + ": bad " + what + " '" +
                     std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::temperature: return "temperature";
    case Channel::humidity: return "humidity";
    case Channel::nitrate: return "nitrate";
  }
  return "unknown";
}

std::optional<Channel> channel_from_name(std::string_view name) {
  for (Channel c : kChannels) {
    if (name == channel_name(c)) return c;
  }
  return std::nullopt;
}

double channel_full_scale(Channel c) {
  switch (c) {
    case Channel::temperature: return 100.0;  // degC
    case Channel::humidity: return 100.0;     // %RH
    case Channel::nitrate: return 1000.0;     // mV
  }
  return 1.0;
}

TraceSet parse_trace_csv(std::istream& in) {
  TraceSet traces;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!saw_header) {
      if (row != "timestamp_s,channel,value") {
        throw TraceError("line 1: expected header 'timestamp_s,channel,value'");
      }
      saw_header = true;
      continue;
    }
    const auto first = row.find(',');
    const auto second = first == std::string_view::npos
                            ? std::string_view::npos
                            : row.find(',', first + 1);
    if (first == std::string_view::npos || second == std::string_view::npos ||
        row.find(',', second + 1) != std::string_view::npos) {
      throw TraceError("line " + std::to_string(line_no) + ": expected 3 columns");
    }
    const double t = parse_number(trim(row.substr(0, first)), line_no, "timestamp");
    const std::string_view name = trim(row.substr(first + 1, second - first - 1));
    const auto channel = channel_from_name(name);
    if (!channel) {
      throw TraceError("line " + std::to_string(line_no) + ": unknown channel '" +
                       std::string(name) + "'");
    }
    const double v = parse_number(trim(row.substr(second + 1)), line_no, "value");

    SensorTrace& trace = traces[*channel];
    trace.channel = *channel;
    if (!trace.samples.empty() && t <= trace.samples.back().timestamp_s) {
      throw TraceError("line " + std::to_string(line_no) +
                       ": non-increasing timestamp for channel " + std::string(name));
    }
    trace.samples.push_back({t, v});
  }
  if (!saw_header) {
    throw TraceError("line 1: missing header");
  }
  return traces;
}

TraceSet load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file: " + path);
  return parse_trace_csv(in);
}

std::string trace_to_csv(const TraceSet& traces) {
  std::string out = "timestamp_s,channel,value\n";
  char buf[96];
  for (const auto& [channel, trace] : traces) {
    for (const SensorSample& s : trace.samples) {
      // Values round to 6 significant digits; timestamps keep enough digits
      // for long simulated horizons.
      std::snprintf(buf, sizeof(buf), "%.9g,%s,%.6g\n", s.timestamp_s,
                    channel_name(channel), s.value);
      out += buf;
    }
  }
  return out;
}

void save_trace_csv(const TraceSet& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TraceError("cannot open output file: " + path);
  out << trace_to_csv(traces);
}

TraceSet generate_trace(const SynthSpec& spec) {
  if (spec.duration_s <= 0 || spec.sample_period_s <= 0) {
    throw TraceError("synthetic spec needs positive duration and sample period");
  }
  for (const AnomalySpec& a : spec.anomalies) {
    if (!std::isfinite(a.magnitude) || a.start_s < 0 ||
        a.start_s + a.duration_s > spec.duration_s) {
      throw TraceError("anomaly schedule outside trace duration");
    }
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-spec.noise_amplitude,
                                                spec.noise_amplitude);
  const auto sample_count =
      static_cast<std::size_t>(std::floor(spec.duration_s / spec.sample_period_s));
  TraceSet traces;
  for (Channel c : kChannels) {
    auto it = spec.baselines.find(c);
    if (it == spec.baselines.end()) continue;
    const double baseline = it->second;
    SensorTrace& trace = traces[c];
    trace.channel = c;
    trace.samples.reserve(sample_count);
    for (std::size_t i = 0; i < sample_count; ++i) {
      const double t = static_cast<double>(i) * spec.sample_period_s;
      double excursion = 0.0;
      for (const AnomalySpec& a : spec.anomalies) {
        if (t < a.start_s) continue;
        const double peak = a.magnitude * baseline;
        const double ramp_end = a.start_s + a.duration_s;
        if (t <= ramp_end) {
          excursion += a.duration_s == 0.0
                           ? peak
                           : peak * (t - a.start_s) / a.duration_s;
        } else if (a.recovery_tau_s > 0) {
          excursion += peak * std::exp(-(t - ramp_end) / a.recovery_tau_s);
        }
      }
      const double noise = spec.noise_amplitude > 0 ? jitter(rng) : 0.0;
      trace.samples.push_back({t, baseline * (1.0 + noise) + excursion});
    }
  }
  return traces;
}

SynthSpec reference_temperature_spec() {
  SynthSpec spec;
  spec.baselines = {{Channel::temperature, 20.0}};
  spec.noise_amplitude = 0.003;
  spec.anomalies = {{24.0, 6.0, 0.15, 8.0}};
  spec.duration_s = 100.0;
  spec.sample_period_s = 1.0;
  spec.seed = 3291;
  return spec;
}

}  // namespace sensormesh
