#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "trace.hpp"

namespace sensormesh {

struct Thresholds {
  double anomaly_x = 0.10;   // relative change that counts as an anomaly
  double compress_y = 0.02;  // relative change that keeps a sample
};

struct AnomalyEvent {
  std::uint32_t node_id = 0;
  Channel channel = Channel::temperature;
  double value_before = 0.0;
  double anomaly_time_s = 0.0;
  double value_after = 0.0;
};

struct CompressedSeries {
  Channel channel = Channel::temperature;
  std::vector<SensorSample> kept;
  std::size_t source_count = 0;
  double threshold_y = 0.0;
};

// Relative change of v against a reference; falls back to an absolute
// comparison scaled by the channel full-scale when the reference is zero.
double relative_change(double value, double reference, double zero_scale);

// Streaming anomaly detector. The first sample primes the reference without
// firing; afterwards an event fires whenever the sample differs from the
// reference by more than x, and the reference moves to that sample.
class AnomalyDetector {
 public:
  AnomalyDetector(double threshold_x, double zero_scale);
  std::optional<AnomalyEvent> feed(double timestamp_s, double value);
  bool primed() const { return primed_; }
  double reference() const { return reference_; }

 private:
  double threshold_x_;
  double zero_scale_;
  bool primed_ = false;
  double reference_ = 0.0;
};

// Streaming deadband compressor: keeps the first sample and every sample
// that differs from the last kept one by more than y.
class DeadbandCompressor {
 public:
  DeadbandCompressor(double threshold_y, double zero_scale);
  bool feed(double timestamp_s, double value);  // true if the sample is kept
  std::size_t source_count() const { return source_count_; }
  std::size_t kept_count() const { return kept_count_; }
  double last_kept() const { return last_kept_; }

 private:
  double threshold_y_;
  double zero_scale_;
  std::size_t source_count_ = 0;
  std::size_t kept_count_ = 0;
  double last_kept_ = 0.0;
};

std::vector<AnomalyEvent> detect_anomalies(const SensorTrace& trace, double x,
                                           std::uint32_t node_id = 0);
CompressedSeries compress(const SensorTrace& trace, double y);

/// Zero-order-hold reconstruction at the requested timestamps. Requests
/// before the first kept sample are an error.
SensorTrace reconstruct(const CompressedSeries& series,
                        std::span<const double> timestamps_s);

struct FidelityMetrics {
  double compression_ratio = 1.0;
  // Empty when the original signal has no variance (correlation undefined).
  std::optional<double> correlation;
};

FidelityMetrics fidelity_metrics(const SensorTrace& original,
                                 const CompressedSeries& series);

std::optional<double> pearson_correlation(std::span<const double> x,
                                          std::span<const double> y);

/// Derives thresholds from history by 1-D k-means over the absolute relative
/// successive changes: x is the midpoint between the low and high centroids,
/// y the upper edge (mean + 1 sigma) of the low cluster. Degenerate history
/// falls back to the defaults with a warning.
Thresholds calibrate_thresholds(const SensorTrace& history, int k = 2,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace sensormesh
