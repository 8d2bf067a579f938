#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "wattcast/cleaning.hpp"
#include "wattcast/synth.hpp"

using namespace wattcast;
using namespace std::chrono_literals;

namespace {

const Timestamp kT0 = parse_timestamp("2020-01-01T00:00:00Z");

TimeSeries series_from(const std::vector<long>& offsets_s, const std::vector<double>& values) {
  std::vector<Measurement> m;
  for (std::size_t i = 0; i < values.size(); ++i) m.push_back({kT0 + Seconds{offsets_s[i]}, values[i]});
  return TimeSeries(m);
}

TimeSeries evenly(const std::vector<double>& values, long step = 60) {
  std::vector<long> t;
  for (std::size_t i = 0; i < values.size(); ++i) t.push_back(static_cast<long>(i) * step);
  return series_from(t, values);
}

using gen::epoch_seconds;
using gen::random_series;

}  // namespace

TEST_CASE("cutoff clamps to [alpha, beta]") {
  const auto s = evenly({-5, 3, 20000});
  CHECK(cutoff_filter(s, {0, 10000}).values() == std::vector<double>{0, 3, 10000});
  const auto inside = evenly({0, 5, 9999.5});
  CHECK(cutoff_filter(inside, {0, 10000}) == inside);
  CHECK(cutoff_filter(TimeSeries{}, {0, 10000}).empty());
  CHECK_THROWS_AS(cutoff_filter(s, {5, 1}), ConfigError);
}

TEST_CASE("cutoff is idempotent") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_series(rng);
    const CutoffConfig cfg{rng.uniform(-100, 100), rng.uniform(200, 8000)};
    const auto once = cutoff_filter(s, cfg);
    CHECK(cutoff_filter(once, cfg) == once);
  }
}

TEST_CASE("zscore leaves constant series alone") {
  const auto s = evenly(std::vector<double>(50, 42.0));
  CHECK(zscore_substitute(s, {Seconds{600}, 3.0}) == s);
}

TEST_CASE("zscore replaces an upward outlier by the window mean") {
  // Window [0, 2, 0, 2]: mean 1, population sd 1, so z(5) = 4 > 3.
  const auto s = series_from({0, 60, 120, 180, 240}, {0, 2, 0, 2, 5});
  const auto out = zscore_substitute(s, {Seconds{1000}, 3.0});
  CHECK(out.values() == std::vector<double>{0, 2, 0, 2, 1});
  // Threshold above z: untouched.
  CHECK(zscore_substitute(s, {Seconds{1000}, 4.0}) == s);
  // One-sided: a low outlier stays.
  const auto low = series_from({0, 60, 120, 180, 240}, {0, 2, 0, 2, -3});
  CHECK(zscore_substitute(low, {Seconds{1000}, 3.0}) == low);
}

TEST_CASE("zscore window is time based and excludes the current point") {
  // Window [140, 240) holds only t=180, so n < 2 and the point passes.
  const auto s = series_from({0, 60, 120, 180, 240}, {0, 2, 0, 2, 50});
  CHECK(zscore_substitute(s, {Seconds{100}, 1.0}) == s);
  // Window [60, 240) holds 2, 0, 2: mean 4/3, sd 0.943; z(50) >> 3.
  const auto out = zscore_substitute(s, {Seconds{180}, 3.0});
  CHECK(out[3].value == 2.0);
  CHECK(out[4].value == Catch::Approx(4.0 / 3.0));
}

TEST_CASE("zscore substitutions feed forward") {
  const auto s = series_from({0, 1, 2, 3, 4, 5}, {0, 2, 0, 2, 100, 100});
  const auto out = zscore_substitute(s, {Seconds{1000}, 1.5});
  const auto ref = oracle::zscore(epoch_seconds(s), s.values(), 1000, 1.5);
  CHECK(out.values() == ref);
  CHECK(out[4].value == 1.0);
  CHECK(out[5].value < 100.0);
}

TEST_CASE("zscore matches the brute-force reference") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_series(rng);
    const ZScoreConfig cfg{Seconds{1 + static_cast<long>(rng.index(20000))}, rng.uniform(0.3, 4.0)};
    const auto got = zscore_substitute(s, cfg).values();
    const auto want = oracle::zscore(epoch_seconds(s), s.values(), cfg.window.count(), cfg.omega);
    REQUIRE(got == want);
  }
}

TEST_CASE("zscore output stays within the input range") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto s = random_series(rng);
    const auto v = s.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    for (double x : zscore_substitute(s, {Seconds{3000}, 1.0}).values()) {
      REQUIRE(x >= *lo);
      REQUIRE(x <= *hi);
    }
  }
}

TEST_CASE("cutoff and zscore have no look-ahead") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto s = random_series(rng);
    const std::size_t cut = rng.index(s.size()) + 1;
    const auto prefix = s.slice(0, cut);
    const ZScoreConfig z{Seconds{5000}, 2.0};
    const auto full = zscore_substitute(cutoff_filter(s, {0, 10000}), z);
    const auto part = zscore_substitute(cutoff_filter(prefix, {0, 10000}), z);
    for (std::size_t k = 0; k < cut; ++k) REQUIRE(full[k].value == part[k].value);
  }
}

TEST_CASE("aggregate sums readings into right-labelled bins") {
  const auto s = series_from({60, 180, 360}, {5, 7, 2});
  const AggregationConfig cfg{5min, kT0, kT0 + 10min};
  const auto out = aggregate(s, cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[0].timestamp == kT0 + 5min);
  CHECK(out[0].value == 12.0);
  CHECK(out[1].timestamp == kT0 + 10min);
  CHECK(out[1].value == 2.0);
}

TEST_CASE("aggregate of an empty series yields zero bins") {
  const AggregationConfig cfg{5min, kT0, kT0 + 1h};
  const auto out = aggregate(TimeSeries{}, cfg);
  REQUIRE(out.size() == 12);
  for (const auto& m : out) CHECK(m.value == 0.0);
}

TEST_CASE("aggregate over the published date range") {
  const AggregationConfig cfg{5min, parse_timestamp("2020-01-01T00:10:00Z"), parse_timestamp("2021-12-01T00:00:00Z")};
  const auto minutes = oracle::minutes_between(2020, 1, 1, 0, 10, 2021, 12, 1, 0, 0);
  REQUIRE(minutes % 5 == 0);
  CHECK(cfg.bin_count() == static_cast<std::size_t>(minutes / 5));
  CHECK(cfg.bin_count() == 201598);
  const auto out = aggregate(TimeSeries{}, cfg);
  CHECK(out.size() == 201598);
  CHECK(out.back().timestamp == cfg.end);
}

TEST_CASE("aggregate rounds a partial final bin up") {
  const AggregationConfig cfg{5min, kT0, kT0 + 12min};
  CHECK(cfg.bin_count() == 3);
  CHECK(aggregate(series_from({719}, {1}), cfg)[2].value == 1.0);
}

TEST_CASE("aggregate matches the brute-force reference and is equally spaced") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_series(rng);
    const long width = 30 + static_cast<long>(rng.index(900));
    const auto start = s.front().timestamp - Seconds{static_cast<long>(rng.index(2000))};
    const auto end = s.back().timestamp + Seconds{static_cast<long>(rng.index(2000)) - 1000};
    if (!(start < end)) continue;
    const AggregationConfig cfg{Seconds{width}, start, end};
    const auto got = aggregate(s, cfg);
    const auto want = oracle::aggregate(epoch_seconds(s), s.values(), start.time_since_epoch().count(),
                                        end.time_since_epoch().count(), width);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      REQUIRE(got[k].timestamp.time_since_epoch().count() == want[k].right_edge);
      REQUIRE(got[k].value == want[k].sum);
      if (k > 0) REQUIRE(got[k].timestamp - got[k - 1].timestamp == Seconds{width});
    }
    // Length depends only on the configuration.
    CHECK(aggregate(TimeSeries{}, cfg).size() == got.size());
  }
}

TEST_CASE("clean_pipeline composes the three stages in order") {
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    const auto s = random_series(rng);
    const CutoffConfig c{0, 10000};
    const ZScoreConfig z{Seconds{4000}, 2.5};
    const AggregationConfig a{5min, s.front().timestamp, s.back().timestamp + 1s};
    CHECK(clean_pipeline(s, c, z, a) == aggregate(zscore_substitute(cutoff_filter(s, c), z), a));
  }
}

TEST_CASE("clean_pipeline on an already regular in-range series") {
  std::vector<double> v(48, 250.0);
  const auto s = evenly(v, 300);
  const AggregationConfig a{5min, kT0, kT0 + 4h};
  const auto out = clean_pipeline(s, {}, {}, a);
  REQUIRE(out.size() == 48);
  for (const auto& m : out) CHECK(m.value == 250.0);
}

TEST_CASE("clean_pipeline bounds spikes by beta times readings per bin") {
  SynthConfig cfg;
  cfg.end = cfg.start + std::chrono::days{10};
  cfg.outlier_rate = 0.02;
  cfg.jitter = 0.1;
  cfg.seed = 11;
  const auto raw = generate_synthetic(cfg);
  const AggregationConfig a{5min, cfg.start, cfg.end};
  const auto out = clean_pipeline(raw, {0, 10000}, {std::chrono::days{7}, 3.0}, a);
  // Readings are at least cadence * (1 - jitter) - 1 s apart.
  const double min_gap = cfg.cadence_seconds * (1 - cfg.jitter) - 1;
  const auto max_per_bin = static_cast<double>(static_cast<long>(300 / min_gap) + 1);
  for (const auto& m : out) {
    REQUIRE(m.value >= 0.0);
    REQUIRE(m.value <= 10000 * max_per_bin);
  }
  for (std::size_t i = 1; i < out.size(); ++i) REQUIRE(out[i].timestamp - out[i - 1].timestamp == Seconds{300});
}
