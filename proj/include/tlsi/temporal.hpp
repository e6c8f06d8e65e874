#pragma once

#include <array>
#include <cstdint>

namespace tlsi {

// Unix epoch seconds, UTC.
using Timestamp = std::int64_t;

// Number of calendar components in a decomposed timestamp.
inline constexpr std::size_t kCalendarComponents = 7;
// Width of the full temporal feature vector: relative time + calendar.
inline constexpr std::size_t kTimeFeatureDim = kCalendarComponents + 1;

// [year, month 1-12, day 1-31, weekday Monday=0, hour 0-23, minute, second],
// proleptic Gregorian, UTC.
struct CalendarParts {
  int year;
  int month;
  int day;
  int weekday;
  int hour;
  int minute;
  int second;
};

CalendarParts decompose(Timestamp t);
// Inverse of decompose (weekday is ignored).
Timestamp recompose(const CalendarParts& parts);

// Start and extent of a dataset's time range, used to scale temporal features.
struct DatasetClock {
  Timestamp t_start = 0;
  std::int64_t span_seconds = 1;  // >= 1

  static DatasetClock from_range(Timestamp t_min, Timestamp t_max);
  int start_year() const;
  int end_year() const;
};

// The 8-vector [t - t_start, year, month, day, weekday, hour, minute, second],
// kept both raw and normalized. The model consumes the normalized form; raw
// values exist for debugging dumps.
struct TimeFeatures {
  std::array<double, kTimeFeatureDim> raw;
  std::array<double, kTimeFeatureDim> normalized;
};

// Rejects t earlier than clock.t_start. Timestamps past the end of the range
// are allowed; the normalized relative time then exceeds 1.
TimeFeatures time_features(Timestamp t, const DatasetClock& clock);

// Elementwise |a - b| of the two normalized feature vectors.
std::array<double, kTimeFeatureDim> sim(Timestamp t1, Timestamp t2, const DatasetClock& clock);

}  // namespace tlsi
