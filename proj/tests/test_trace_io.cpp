#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "isa.hpp"
#include "trace.hpp"

using namespace sensormesh;

namespace {

const std::string kFixture =
    std::string(SENSORMESH_FIXTURES_DIR) + "/temperature_anomaly.csv";

}  // namespace

TEST_CASE("channel names round-trip") {
  for (Channel c : {Channel::temperature, Channel::humidity, Channel::nitrate}) {
    CHECK(channel_from_name(channel_name(c)) == c);
  }
  CHECK(!channel_from_name("pressure").has_value());
}

TEST_CASE("csv round-trip on the golden fixture is identical") {
  const TraceSet traces = load_trace_csv(kFixture);
  REQUIRE(traces.count(Channel::temperature) == 1);
  CHECK(traces.at(Channel::temperature).samples.size() == 100);

  std::istringstream again(trace_to_csv(traces));
  const TraceSet back = parse_trace_csv(again);
  REQUIRE(back.count(Channel::temperature) == 1);
  const auto& a = traces.at(Channel::temperature).samples;
  const auto& b = back.at(Channel::temperature).samples;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].timestamp_s == b[i].timestamp_s);
    CHECK(a[i].value == b[i].value);
  }
}

TEST_CASE("empty file with header parses to empty traces") {
  std::istringstream in("timestamp_s,channel,value\n");
  CHECK(parse_trace_csv(in).empty());
}

TEST_CASE("parse errors carry line numbers") {
  SUBCASE("duplicated timestamp") {
    std::istringstream in(
        "timestamp_s,channel,value\n"
        "0,temperature,20\n"
        "1,temperature,20.1\n"
        "1,temperature,20.2\n");
    CHECK_THROWS_WITH_AS(parse_trace_csv(in), doctest::Contains("line 4"),
                         TraceError);
  }
  SUBCASE("unknown channel") {
    std::istringstream in(
        "timestamp_s,channel,value\n"
        "0,salinity,20\n");
    CHECK_THROWS_WITH_AS(parse_trace_csv(in),
                         doctest::Contains("unknown channel"), TraceError);
  }
  SUBCASE("bad value") {
    std::istringstream in(
        "timestamp_s,channel,value\n"
        "0,temperature,hot\n");
    CHECK_THROWS_WITH_AS(parse_trace_csv(in), doctest::Contains("line 2"),
                         TraceError);
  }
  SUBCASE("missing header") {
    std::istringstream in("0,temperature,20\n");
    CHECK_THROWS_AS(parse_trace_csv(in), TraceError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_trace_csv("/nonexistent/trace.csv"), TraceError);
  }
}

TEST_CASE("generator is deterministic") {
  const SynthSpec spec = reference_temperature_spec();
  const TraceSet a = generate_trace(spec);
  const TraceSet b = generate_trace(spec);
  const auto& sa = a.at(Channel::temperature).samples;
  const auto& sb = b.at(Channel::temperature).samples;
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].value == sb[i].value);
  }
}

TEST_CASE("zero noise and no anomalies yield a constant trace") {
  SynthSpec spec;
  spec.baselines = {{Channel::humidity, 55.0}};
  spec.noise_amplitude = 0.0;
  spec.duration_s = 50.0;
  const TraceSet traces = generate_trace(spec);
  const auto& samples = traces.at(Channel::humidity).samples;
  REQUIRE(samples.size() == 50);
  for (const SensorSample& s : samples) CHECK(s.value == 55.0);
}

TEST_CASE("anomaly shape: linear ramp then exponential recovery") {
  SynthSpec spec = reference_temperature_spec();
  spec.noise_amplitude = 0.0;
  const TraceSet traces = generate_trace(spec);
  const auto& samples = traces.at(Channel::temperature).samples;
  CHECK(samples[23].value == doctest::Approx(20.0));
  CHECK(samples[27].value == doctest::Approx(20.0 + 3.0 * 0.5).epsilon(1e-12));
  CHECK(samples[30].value == doctest::Approx(20.0 * 1.15).epsilon(1e-12));
  CHECK(samples[38].value ==
        doctest::Approx(20.0 + 3.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("golden fixture reproduces from the committed spec") {
  const TraceSet generated = generate_trace(reference_temperature_spec());
  const TraceSet fixture = load_trace_csv(kFixture);
  const auto& ga = generated.at(Channel::temperature).samples;
  const auto& fa = fixture.at(Channel::temperature).samples;
  REQUIRE(ga.size() == fa.size());
  for (std::size_t i = 0; i < ga.size(); ++i) {
    CHECK(fa[i].value == doctest::Approx(ga[i].value).epsilon(1e-5));
    CHECK(fa[i].timestamp_s == ga[i].timestamp_s);
  }
}

TEST_CASE("step anomalies are detected at their scheduled onsets") {
  // A one-sample ramp reaches full magnitude immediately, so detection with
  // the default threshold lands within one sample of the schedule.
  SynthSpec spec;
  spec.baselines = {{Channel::temperature, 20.0}};
  spec.noise_amplitude = 0.003;
  spec.duration_s = 600.0;
  spec.anomalies = {{100.0, 1.0, 0.15, 10.0}, {400.0, 1.0, 0.2, 5.0}};
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    spec.seed = seed;
    const TraceSet traces = generate_trace(spec);
    const auto events =
        detect_anomalies(traces.at(Channel::temperature), 0.10);
    std::vector<double> onsets;
    for (const AnomalyEvent& e : events) {
      if (e.value_after > e.value_before) onsets.push_back(e.anomaly_time_s);
    }
    REQUIRE(onsets.size() == 2);
    CHECK(std::abs(onsets[0] - 100.0) <= 1.0);
    CHECK(std::abs(onsets[1] - 400.0) <= 1.0);
  }
}

TEST_CASE("anomaly schedule outside the duration is rejected") {
  SynthSpec spec;
  spec.duration_s = 10.0;
  spec.anomalies = {{8.0, 5.0, 0.1, 1.0}};
  CHECK_THROWS_AS(generate_trace(spec), TraceError);
}
