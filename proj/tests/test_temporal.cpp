#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tlsi/rng.hpp"
#include "tlsi/temporal.hpp"

using namespace tlsi;

namespace {

struct CalendarCase {
  Timestamp ts;
  int year, month, day, weekday, hour, minute, second;
};

// frozen from an independent civil-calendar implementation (UTC, Monday=0)
const CalendarCase kCalendarOracle[] = {
    {0LL, 1970, 1, 1, 3, 0, 0, 0},
    {86400LL, 1970, 1, 2, 4, 0, 0, 0},
    {59LL, 1970, 1, 1, 3, 0, 0, 59},
    {951825661LL, 2000, 2, 29, 1, 12, 1, 1},
    {1000000000LL, 2001, 9, 9, 6, 1, 46, 40},
    {1404198000LL, 2014, 7, 1, 1, 7, 0, 0},
    {1577836799LL, 2019, 12, 31, 1, 23, 59, 59},
    {1609459200LL, 2021, 1, 1, 4, 0, 0, 0},
    {1405151999LL, 2014, 7, 12, 5, 7, 59, 59},
    {1234567890LL, 2009, 2, 13, 4, 23, 31, 30},
    {283996800LL, 1979, 1, 1, 0, 0, 0, 0},
    {4102444799LL, 2099, 12, 31, 3, 23, 59, 59},
};

}  // namespace

TEST_CASE("decompose matches the civil-calendar oracle") {
  for (const auto& c : kCalendarOracle) {
    const CalendarParts p = decompose(c.ts);
    CAPTURE(c.ts);
    CHECK(p.year == c.year);
    CHECK(p.month == c.month);
    CHECK(p.day == c.day);
    CHECK(p.weekday == c.weekday);
    CHECK(p.hour == c.hour);
    CHECK(p.minute == c.minute);
    CHECK(p.second == c.second);
  }
}

TEST_CASE("decompose round-trips through recompose on 10k random timestamps") {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const Timestamp t = static_cast<Timestamp>(rng.below(4102444800ULL));
    CHECK(recompose(decompose(t)) == t);
  }
}

TEST_CASE("time_features normalization endpoints and scaling") {
  DatasetClock clock = DatasetClock::from_range(1404198000, 1404198000 + 86400 * 30);

  const TimeFeatures at_start = time_features(clock.t_start, clock);
  CHECK(at_start.normalized[0] == 0.0);

  const TimeFeatures at_end = time_features(clock.t_start + clock.span_seconds, clock);
  CHECK(at_end.normalized[0] == 1.0);

  // hour 12 at some timestamp in range
  const Timestamp noon = 1404198000 + 5 * 3600;  // 07:00 start + 5h = 12:00 UTC
  const TimeFeatures f = time_features(noon, clock);
  CHECK(f.raw[5] == 12.0);
  CHECK(f.normalized[5] == doctest::Approx(12.0 / 23.0).epsilon(1e-12));

  // prediction times past the dataset end are allowed
  const TimeFeatures after = time_features(clock.t_start + 2 * clock.span_seconds, clock);
  CHECK(after.normalized[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(time_features(clock.t_start - 1, clock), std::invalid_argument);
}

TEST_CASE("normalized components stay in [0,1] and are monotone in their raw values") {
  DatasetClock clock = DatasetClock::from_range(1000000000, 1404198000);
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Timestamp t =
        clock.t_start + static_cast<Timestamp>(rng.below(clock.span_seconds + 1));
    const TimeFeatures f = time_features(t, clock);
    for (std::size_t j = 0; j < kTimeFeatureDim; ++j) {
      CHECK(f.normalized[j] >= 0.0);
      CHECK(f.normalized[j] <= 1.0);
    }
  }
  // monotonicity on each calendar coordinate under its linear scaling
  const TimeFeatures a = time_features(1404198000 - 3600, clock);
  const TimeFeatures b = time_features(1404198000 - 7200, clock);
  CHECK(a.raw[5] > b.raw[5]);
  CHECK(a.normalized[5] > b.normalized[5]);
  CHECK(a.normalized[0] > b.normalized[0]);
}

TEST_CASE("sim is symmetric, zero on the diagonal, length 8") {
  DatasetClock clock = DatasetClock::from_range(1404198000, 1404198000 + 86400 * 365);
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const Timestamp t1 = clock.t_start + static_cast<Timestamp>(rng.below(clock.span_seconds));
    const Timestamp t2 = clock.t_start + static_cast<Timestamp>(rng.below(clock.span_seconds));
    const auto s12 = sim(t1, t2, clock);
    const auto s21 = sim(t2, t1, clock);
    CHECK(s12.size() == kTimeFeatureDim);
    for (std::size_t j = 0; j < kTimeFeatureDim; ++j) {
      CHECK(s12[j] == s21[j]);
      CHECK(s12[j] >= 0.0);
    }
    const auto s11 = sim(t1, t1, clock);
    for (std::size_t j = 0; j < kTimeFeatureDim; ++j) CHECK(s11[j] == 0.0);
  }
}

TEST_CASE("24h apart: time-of-day components vanish, relative time shows one day") {
  DatasetClock clock = DatasetClock::from_range(1404198000, 1404198000 + 86400 * 30);
  const Timestamp t1 = 1404198000 + 3 * 86400 + 5 * 3600 + 42 * 60 + 7;
  const Timestamp t2 = t1 + 86400;
  const auto s = sim(t1, t2, clock);
  // decomposed via the calendar oracle: hour/minute/second identical one day apart
  CHECK(s[5] == 0.0);
  CHECK(s[6] == 0.0);
  CHECK(s[7] == 0.0);
  CHECK(s[0] == doctest::Approx(86400.0 / static_cast<double>(clock.span_seconds)).epsilon(1e-12));
  // Fri 2014-07-04 -> Sat: weekday differs by 1/6
  CHECK(s[4] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  // relative-time coordinate is invariant under a common shift
  const auto shifted = sim(t1 + 12345, t2 + 12345, clock);
  CHECK(shifted[0] == doctest::Approx(s[0]).epsilon(1e-12));
}
