#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "isa.hpp"
#include "trace.hpp"

using namespace sensormesh;

namespace {

const std::string kFixture =
    std::string(SENSORMESH_FIXTURES_DIR) + "/temperature_anomaly.csv";

SensorTrace make_trace(const std::vector<double>& values) {
  SensorTrace trace;
  for (std::size_t i = 0; i < values.size(); ++i) {
    trace.samples.push_back({static_cast<double>(i), values[i]});
  }
  return trace;
}

SensorTrace random_trace(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(1, 120);
  std::uniform_real_distribution<double> start(-50.0, 50.0);
  std::uniform_real_distribution<double> step(-0.08, 0.08);
  std::bernoulli_distribution jump(0.05);
  std::uniform_real_distribution<double> jump_size(-0.5, 0.5);
  SensorTrace trace;
  double value = start(rng);
  const int n = length(rng);
  for (int i = 0; i < n; ++i) {
    trace.samples.push_back({static_cast<double>(i), value});
    value *= 1.0 + step(rng) + (jump(rng) ? jump_size(rng) : 0.0);
  }
  return trace;
}

// Straight re-statement of the keep rule, used as the oracle.
std::vector<std::size_t> brute_force_kept(const SensorTrace& trace, double y) {
  std::vector<std::size_t> kept;
  double last = 0.0;
  const double scale = channel_full_scale(trace.channel);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const double v = trace.samples[i].value;
    if (kept.empty() || relative_change(v, last, scale) > y) {
      kept.push_back(i);
      last = v;
    }
  }
  return kept;
}

}  // namespace

TEST_CASE("constant trace produces no anomalies") {
  const SensorTrace trace = make_trace(std::vector<double>(64, 21.5));
  CHECK(detect_anomalies(trace, 0.10).empty());
}

TEST_CASE("anomaly fires against the last reference, not the last sample") {
  const SensorTrace trace = make_trace({20.0, 20.1, 22.5});
  const auto events = detect_anomalies(trace, 0.10);
  REQUIRE(events.size() == 1);
  CHECK(events[0].anomaly_time_s == 2.0);
  CHECK(events[0].value_before == 20.0);
  CHECK(events[0].value_after == 22.5);
}

TEST_CASE("reference moves to the firing sample") {
  // 20 -> 23 fires; afterwards 23 is the reference, so 24 stays quiet and
  // 26 fires again.
  const SensorTrace trace = make_trace({20.0, 23.0, 24.0, 26.0});
  const auto events = detect_anomalies(trace, 0.10);
  REQUIRE(events.size() == 2);
  CHECK(events[0].value_after == 23.0);
  CHECK(events[1].value_before == 23.0);
  CHECK(events[1].value_after == 26.0);
}

TEST_CASE("zero reference falls back to the channel full scale") {
  // Full scale for temperature is 100, so x=0.10 needs a 10-unit move away
  // from a zero reference.
  const SensorTrace trace = make_trace({0.0, 5.0, 20.0});
  const auto events = detect_anomalies(trace, 0.10);
  REQUIRE(events.size() == 1);
  CHECK(events[0].value_after == 20.0);
}

TEST_CASE("golden trace yields exactly one heated onset") {
  const SensorTrace trace =
      load_trace_csv(kFixture).at(Channel::temperature);
  const auto events = detect_anomalies(trace, 0.10);
  std::size_t onsets = 0;
  for (const AnomalyEvent& e : events) {
    if (e.value_after > e.value_before) {
      ++onsets;
      CHECK(e.anomaly_time_s >= 24.0);
      CHECK(e.anomaly_time_s <= 30.0);
    }
  }
  CHECK(onsets == 1);
}

TEST_CASE("compression keeps twelve points on the golden trace") {
  const SensorTrace trace =
      load_trace_csv(kFixture).at(Channel::temperature);
  const CompressedSeries series = compress(trace, 0.02);
  CHECK(series.kept.size() == 12);
  CHECK(series.source_count == 100);
  const FidelityMetrics metrics = fidelity_metrics(trace, series);
  CHECK(metrics.compression_ratio == doctest::Approx(100.0 / 12.0).epsilon(1e-9));
  REQUIRE(metrics.correlation.has_value());
  CHECK(*metrics.correlation > 0.98);
}

TEST_CASE("constant trace compresses to a single point") {
  const SensorTrace trace = make_trace(std::vector<double>(37, 42.0));
  const CompressedSeries series = compress(trace, 0.02);
  CHECK(series.kept.size() == 1);
  const FidelityMetrics metrics = fidelity_metrics(trace, series);
  CHECK(metrics.compression_ratio == doctest::Approx(37.0));
  CHECK(!metrics.correlation.has_value());  // constant signal
}

TEST_CASE("threshold below the minimum step keeps everything") {
  SensorTrace trace;
  double v = 10.0;
  for (int i = 0; i < 30; ++i) {
    trace.samples.push_back({static_cast<double>(i), v});
    v *= 1.01;  // every step is a 1% move
  }
  const CompressedSeries series = compress(trace, 0.005);
  CHECK(series.kept.size() == trace.samples.size());
  const FidelityMetrics metrics = fidelity_metrics(trace, series);
  CHECK(metrics.compression_ratio == 1.0);
  REQUIRE(metrics.correlation.has_value());
  CHECK(*metrics.correlation == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compression postcondition triple holds on random traces") {
  std::mt19937_64 rng(20260809);
  std::uniform_real_distribution<double> threshold(0.005, 0.3);
  for (int iter = 0; iter < 10000; ++iter) {
    const SensorTrace trace = random_trace(rng);
    const double y = threshold(rng);
    const CompressedSeries series = compress(trace, y);
    const double scale = channel_full_scale(trace.channel);

    REQUIRE(!series.kept.empty());
    REQUIRE(series.kept.front().timestamp_s == trace.samples.front().timestamp_s);
    for (std::size_t i = 1; i < series.kept.size(); ++i) {
      REQUIRE(relative_change(series.kept[i].value, series.kept[i - 1].value,
                              scale) > y);
    }
    // Every discarded sample stays within y of the kept sample before it.
    std::size_t cursor = 0;
    double last_kept = series.kept.front().value;
    for (const SensorSample& s : trace.samples) {
      if (cursor < series.kept.size() &&
          s.timestamp_s == series.kept[cursor].timestamp_s) {
        last_kept = series.kept[cursor].value;
        ++cursor;
        continue;
      }
      REQUIRE(relative_change(s.value, last_kept, scale) <= y);
    }
    // Kept indices agree with a direct restatement of the rule.
    const auto oracle = brute_force_kept(trace, y);
    REQUIRE(oracle.size() == series.kept.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      REQUIRE(trace.samples[oracle[i]].timestamp_s ==
              series.kept[i].timestamp_s);
    }
  }
}

TEST_CASE("compression and detection are deterministic") {
  std::mt19937_64 rng(99);
  const SensorTrace trace = random_trace(rng);
  const CompressedSeries a = compress(trace, 0.02);
  const CompressedSeries b = compress(trace, 0.02);
  REQUIRE(a.kept.size() == b.kept.size());
  for (std::size_t i = 0; i < a.kept.size(); ++i) {
    CHECK(a.kept[i].value == b.kept[i].value);
  }
  const auto ea = detect_anomalies(trace, 0.1);
  const auto eb = detect_anomalies(trace, 0.1);
  REQUIRE(ea.size() == eb.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    CHECK(ea[i].anomaly_time_s == eb[i].anomaly_time_s);
  }
}

TEST_CASE("compression ratio grows with the threshold on monotone traces") {
  SensorTrace trace;
  double v = 10.0;
  for (int i = 0; i < 200; ++i) {
    trace.samples.push_back({static_cast<double>(i), v});
    v *= 1.012;
  }
  double previous = 0.0;
  for (double y = 0.005; y <= 0.2; y += 0.005) {
    const double ratio = fidelity_metrics(trace, compress(trace, y)).compression_ratio;
    CHECK(ratio >= previous - 1e-12);
    previous = ratio;
  }
}

TEST_CASE("reconstruction is a zero-order hold") {
  SensorTrace trace = make_trace({1.0, 1.0, 2.0, 2.0, 2.0, 4.0});
  const CompressedSeries series = compress(trace, 0.1);
  const std::vector<double> stamps{0.0, 1.0, 2.0, 3.5, 4.9, 5.0};
  const SensorTrace rebuilt = reconstruct(series, stamps);
  REQUIRE(rebuilt.samples.size() == 6);
  CHECK(rebuilt.samples[0].value == 1.0);
  CHECK(rebuilt.samples[1].value == 1.0);
  CHECK(rebuilt.samples[2].value == 2.0);
  CHECK(rebuilt.samples[3].value == 2.0);
  CHECK(rebuilt.samples[4].value == 2.0);
  CHECK(rebuilt.samples[5].value == 4.0);

  CHECK_THROWS_AS(reconstruct(series, std::vector<double>{-1.0}),
                  std::invalid_argument);
}

TEST_CASE("single kept point reconstructs a constant") {
  const SensorTrace trace = make_trace(std::vector<double>(10, 3.0));
  const CompressedSeries series = compress(trace, 0.02);
  REQUIRE(series.kept.size() == 1);
  const std::vector<double> stamps{0.0, 4.0, 9.0};
  const SensorTrace rebuilt = reconstruct(series, stamps);
  for (const SensorSample& s : rebuilt.samples) CHECK(s.value == 3.0);
}

TEST_CASE("reconstruction error is bounded by the deadband") {
  std::mt19937_64 rng(4711);
  std::uniform_real_distribution<double> threshold(0.01, 0.2);
  for (int iter = 0; iter < 2000; ++iter) {
    const SensorTrace trace = random_trace(rng);
    const double y = threshold(rng);
    const CompressedSeries series = compress(trace, y);
    std::vector<double> stamps;
    for (const SensorSample& s : trace.samples) stamps.push_back(s.timestamp_s);
    const SensorTrace rebuilt = reconstruct(series, stamps);
    const double scale = channel_full_scale(trace.channel);
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
      const double held = rebuilt.samples[i].value;
      const double bound =
          y * (held == 0.0 ? scale : std::abs(held)) * (1.0 + 1e-12);
      REQUIRE(std::abs(trace.samples[i].value - held) <= bound);
    }
  }
}

TEST_CASE("fidelity on the golden trace across the threshold sweep") {
  const SensorTrace trace =
      load_trace_csv(kFixture).at(Channel::temperature);
  double previous_ratio = 0.0;
  for (double y = 0.005; y <= 0.0501; y += 0.005) {
    const CompressedSeries series = compress(trace, y);
    const FidelityMetrics metrics = fidelity_metrics(trace, series);
    CHECK(metrics.compression_ratio >= previous_ratio - 1e-12);
    previous_ratio = metrics.compression_ratio;
    REQUIRE(metrics.correlation.has_value());
    if (y < 0.0201) CHECK(*metrics.correlation > 0.98);
    if (y >= 0.0299) {
      CHECK(metrics.compression_ratio > 12.0);
      CHECK(*metrics.correlation > 0.9);
    }
  }
}

TEST_CASE("flat reconstruction of a varying signal reports zero correlation") {
  // One kept sample but a moving original: correlation collapses to zero
  // rather than being reported as perfect.
  SensorTrace trace = make_trace({100.0, 100.5, 101.0, 100.2});
  CompressedSeries series = compress(trace, 0.05);
  REQUIRE(series.kept.size() == 1);
  const FidelityMetrics metrics = fidelity_metrics(trace, series);
  REQUIRE(metrics.correlation.has_value());
  CHECK(*metrics.correlation == 0.0);
}

TEST_CASE("threshold calibration on a two-point change set") {
  // Changes of exactly 1% then 20%: centroids are the points themselves.
  const SensorTrace trace = make_trace({100.0, 101.0, 121.2});
  const Thresholds thresholds = calibrate_thresholds(trace);
  CHECK(thresholds.anomaly_x == doctest::Approx(0.105).epsilon(1e-9));
  CHECK(thresholds.compress_y == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("threshold calibration matches a brute-force split oracle") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> quiet(0.005, 0.001);
  std::normal_distribution<double> loud(0.15, 0.02);
  std::bernoulli_distribution pick(0.25);
  SensorTrace trace;
  double v = 100.0;
  trace.samples.push_back({0.0, v});
  std::vector<double> changes;
  for (int i = 1; i <= 400; ++i) {
    const double change = std::abs(pick(rng) ? loud(rng) : quiet(rng));
    changes.push_back(change);
    v *= 1.0 + change;
    trace.samples.push_back({static_cast<double>(i), v});
  }

  // Oracle: best two-cluster split of the sorted 1-D changes by SSE.
  std::sort(changes.begin(), changes.end());
  double best_sse = 1e300, best_low = 0, best_high = 0;
  for (std::size_t split = 1; split < changes.size(); ++split) {
    double mean_low = 0, mean_high = 0;
    for (std::size_t i = 0; i < split; ++i) mean_low += changes[i];
    for (std::size_t i = split; i < changes.size(); ++i) mean_high += changes[i];
    mean_low /= split;
    mean_high /= changes.size() - split;
    double sse = 0;
    for (std::size_t i = 0; i < split; ++i) {
      sse += (changes[i] - mean_low) * (changes[i] - mean_low);
    }
    for (std::size_t i = split; i < changes.size(); ++i) {
      sse += (changes[i] - mean_high) * (changes[i] - mean_high);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_low = mean_low;
      best_high = mean_high;
    }
  }

  const Thresholds thresholds = calibrate_thresholds(trace);
  CHECK(thresholds.anomaly_x ==
        doctest::Approx(0.5 * (best_low + best_high)).epsilon(1e-6));
  CHECK(thresholds.anomaly_x > 0.005);
  CHECK(thresholds.anomaly_x < 0.15);
  CHECK(thresholds.compress_y > best_low);
  CHECK(thresholds.compress_y < thresholds.anomaly_x);
}

TEST_CASE("degenerate calibration history returns the defaults") {
  const SensorTrace trace = make_trace({10.0, 10.0, 10.0, 10.0, 10.0});
  std::vector<std::string> warnings;
  const Thresholds thresholds = calibrate_thresholds(trace, 2, &warnings);
  CHECK(thresholds.anomaly_x == 0.10);
  CHECK(thresholds.compress_y == 0.02);
  CHECK(!warnings.empty());
}

TEST_CASE("input validation") {
  SensorTrace empty;
  CHECK_THROWS_AS(detect_anomalies(empty, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(compress(empty, 0.1), std::invalid_argument);
  const SensorTrace trace = make_trace({1.0, 2.0});
  CHECK_THROWS_AS(compress(trace, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(detect_anomalies(trace, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_thresholds(make_trace({1.0, 2.0}), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(calibrate_thresholds(make_trace({1.0, 2.0, 3.0, 4.0}), 3),
                  std::invalid_argument);
}
