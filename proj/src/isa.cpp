#include "isa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sensormesh {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

double relative_change(double value, double reference, double zero_scale) {
  if (reference == 0.0) return std::abs(value - reference) / zero_scale;
  return std::abs(value - reference) / std::abs(reference);
}

AnomalyDetector::AnomalyDetector(double threshold_x, double zero_scale)
    : threshold_x_(threshold_x), zero_scale_(zero_scale) {
  require(threshold_x > 0, "anomaly threshold must be > 0");
  require(zero_scale > 0, "zero-reference scale must be > 0");
}

std::optional<AnomalyEvent> AnomalyDetector::feed(double timestamp_s,
                                                  double value) {
  if (!primed_) {
    primed_ = true;
    reference_ = value;
    return std::nullopt;
  }
  if (relative_change(value, reference_, zero_scale_) <= threshold_x_) {
    return std::nullopt;
  }
  AnomalyEvent event;
  event.value_before = reference_;
  event.anomaly_time_s = timestamp_s;
  event.value_after = value;
  reference_ = value;
  return event;
}

DeadbandCompressor::DeadbandCompressor(double threshold_y, double zero_scale)
    : threshold_y_(threshold_y), zero_scale_(zero_scale) {
  require(threshold_y > 0, "compression threshold must be > 0");
  require(zero_scale > 0, "zero-reference scale must be > 0");
}

bool DeadbandCompressor::feed(double /*timestamp_s*/, double value) {
  ++source_count_;
  if (kept_count_ == 0 ||
      relative_change(value, last_kept_, zero_scale_) > threshold_y_) {
    ++kept_count_;
    last_kept_ = value;
    return true;
  }
  return false;
}

std::vector<AnomalyEvent> detect_anomalies(const SensorTrace& trace, double x,
                                           std::uint32_t node_id) {
  require(!trace.samples.empty(), "trace must not be empty");
  AnomalyDetector detector(x, channel_full_scale(trace.channel));
  std::vector<AnomalyEvent> events;
  for (const SensorSample& s : trace.samples) {
    if (auto event = detector.feed(s.timestamp_s, s.value)) {
      event->node_id = node_id;
      event->channel = trace.channel;
      events.push_back(*event);
    }
  }
  return events;
}

CompressedSeries compress(const SensorTrace& trace, double y) {
  require(!trace.samples.empty(), "trace must not be empty");
  DeadbandCompressor compressor(y, channel_full_scale(trace.channel));
  CompressedSeries series;
  series.channel = trace.channel;
  series.threshold_y = y;
  for (const SensorSample& s : trace.samples) {
    if (compressor.feed(s.timestamp_s, s.value)) series.kept.push_back(s);
  }
  series.source_count = trace.samples.size();
  return series;
}

SensorTrace reconstruct(const CompressedSeries& series,
                        std::span<const double> timestamps_s) {
  require(!series.kept.empty(), "compressed series must not be empty");
  SensorTrace out;
  out.channel = series.channel;
  out.samples.reserve(timestamps_s.size());
  for (double t : timestamps_s) {
    if (t < series.kept.front().timestamp_s) {
      throw std::invalid_argument("timestamp precedes first kept sample");
    }
    auto it = std::upper_bound(
        series.kept.begin(), series.kept.end(), t,
        [](double lhs, const SensorSample& s) { return lhs < s.timestamp_s; });
    out.samples.push_back({t, std::prev(it)->value});
  }
  return out;
}

std::optional<double> pearson_correlation(std::span<const double> x,
                                          std::span<const double> y) {
  require(x.size() == y.size() && !x.empty(), "series must match and be non-empty");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0) return std::nullopt;  // constant signal, correlation undefined
  if (syy <= 0) return 0.0;           // flat reconstruction of a varying signal
  return sxy / std::sqrt(sxx * syy);
}

FidelityMetrics fidelity_metrics(const SensorTrace& original,
                                 const CompressedSeries& series) {
  require(original.channel == series.channel, "channel mismatch");
  require(original.samples.size() == series.source_count,
          "series was not produced from this trace");
  require(!series.kept.empty(), "compressed series must not be empty");
  FidelityMetrics metrics;
  metrics.compression_ratio =
      static_cast<double>(series.source_count) / series.kept.size();
  std::vector<double> timestamps;
  std::vector<double> values;
  timestamps.reserve(original.samples.size());
  values.reserve(original.samples.size());
  for (const SensorSample& s : original.samples) {
    timestamps.push_back(s.timestamp_s);
    values.push_back(s.value);
  }
  const SensorTrace rebuilt = reconstruct(series, timestamps);
  std::vector<double> rebuilt_values;
  rebuilt_values.reserve(rebuilt.samples.size());
  for (const SensorSample& s : rebuilt.samples) rebuilt_values.push_back(s.value);
  metrics.correlation = pearson_correlation(values, rebuilt_values);
  return metrics;
}

Thresholds calibrate_thresholds(const SensorTrace& history, int k,
                                std::vector<std::string>* warnings) {
  require(k == 2, "only k=2 calibration is supported");
  require(history.samples.size() >= static_cast<std::size_t>(k + 1),
          "history must hold at least k successive changes");

  const double zero_scale = channel_full_scale(history.channel);
  std::vector<double> changes;
  changes.reserve(history.samples.size() - 1);
  for (std::size_t i = 1; i < history.samples.size(); ++i) {
    changes.push_back(relative_change(history.samples[i].value,
                                      history.samples[i - 1].value, zero_scale));
  }

  const auto [lo, hi] = std::minmax_element(changes.begin(), changes.end());
  if (*hi - *lo < 1e-12) {
    if (warnings) {
      warnings->push_back("degenerate history (all changes equal); "
                          "returning default thresholds");
    }
    return Thresholds{};
  }

  // Lloyd's iterations with min/max seeding; 1-D, two centroids.
  double c_low = *lo;
  double c_high = *hi;
  std::vector<bool> in_high(changes.size(), false);
  for (int iter = 0; iter < 100; ++iter) {
    bool moved = false;
    double sum_low = 0, sum_high = 0;
    std::size_t n_low = 0, n_high = 0;
    for (std::size_t i = 0; i < changes.size(); ++i) {
      const bool high = std::abs(changes[i] - c_high) < std::abs(changes[i] - c_low);
      if (high != in_high[i]) {
        in_high[i] = high;
        moved = true;
      }
      if (high) {
        sum_high += changes[i];
        ++n_high;
      } else {
        sum_low += changes[i];
        ++n_low;
      }
    }
    if (n_low) c_low = sum_low / n_low;
    if (n_high) c_high = sum_high / n_high;
    if (!moved && iter > 0) break;
  }

  double var_low = 0;
  std::size_t n_low = 0;
  for (std::size_t i = 0; i < changes.size(); ++i) {
    if (!in_high[i]) {
      var_low += (changes[i] - c_low) * (changes[i] - c_low);
      ++n_low;
    }
  }
  const double sigma_low = n_low ? std::sqrt(var_low / n_low) : 0.0;

  Thresholds thresholds;
  thresholds.anomaly_x = 0.5 * (c_low + c_high);
  thresholds.compress_y = c_low + sigma_low;
  if (thresholds.compress_y > thresholds.anomaly_x && warnings) {
    warnings->push_back("calibrated compress_y exceeds anomaly_x");
  }
  return thresholds;
}

}  // namespace sensormesh
