#include "tlsi/temporal.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tlsi {

namespace chr = std::chrono;

CalendarParts decompose(Timestamp t) {
  const chr::sys_seconds tp{chr::seconds{t}};
  const auto day_point = chr::floor<chr::days>(tp);
  const chr::year_month_day ymd{day_point};
  const chr::weekday wd{day_point};
  const auto tod = chr::hh_mm_ss{tp - day_point};
  CalendarParts p;
  p.year = static_cast<int>(ymd.year());
  p.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  p.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  p.weekday = static_cast<int>(wd.iso_encoding()) - 1;  // Monday = 0
  p.hour = static_cast<int>(tod.hours().count());
  p.minute = static_cast<int>(tod.minutes().count());
  p.second = static_cast<int>(tod.seconds().count());
  return p;
}

Timestamp recompose(const CalendarParts& p) {
  const chr::year_month_day ymd{chr::year{p.year}, chr::month{static_cast<unsigned>(p.month)},
                                chr::day{static_cast<unsigned>(p.day)}};
  const chr::sys_days days{ymd};
  return chr::sys_seconds{days}.time_since_epoch().count() + p.hour * 3600 + p.minute * 60 +
         p.second;
}

DatasetClock DatasetClock::from_range(Timestamp t_min, Timestamp t_max) {
  if (t_max < t_min) throw std::invalid_argument("DatasetClock: t_max before t_min");
  DatasetClock c;
  c.t_start = t_min;
  c.span_seconds = std::max<std::int64_t>(1, t_max - t_min);
  return c;
}

int DatasetClock::start_year() const { return decompose(t_start).year; }
int DatasetClock::end_year() const { return decompose(t_start + span_seconds).year; }

TimeFeatures time_features(Timestamp t, const DatasetClock& clock) {
  if (t < clock.t_start)
    throw std::invalid_argument("time_features: timestamp " + std::to_string(t) +
                                " precedes dataset start " + std::to_string(clock.t_start));
  const CalendarParts p = decompose(t);
  TimeFeatures f;
  f.raw = {static_cast<double>(t - clock.t_start),
           static_cast<double>(p.year),
           static_cast<double>(p.month),
           static_cast<double>(p.day),
           static_cast<double>(p.weekday),
           static_cast<double>(p.hour),
           static_cast<double>(p.minute),
           static_cast<double>(p.second)};
  const double year_span =
      std::max(1, clock.end_year() - clock.start_year());
  f.normalized = {static_cast<double>(t - clock.t_start) / static_cast<double>(clock.span_seconds),
                  (p.year - clock.start_year()) / year_span,
                  (p.month - 1) / 11.0,
                  (p.day - 1) / 30.0,
                  p.weekday / 6.0,
                  p.hour / 23.0,
                  p.minute / 59.0,
                  p.second / 59.0};
  return f;
}

std::array<double, kTimeFeatureDim> sim(Timestamp t1, Timestamp t2, const DatasetClock& clock) {
  const TimeFeatures a = time_features(t1, clock);
  const TimeFeatures b = time_features(t2, clock);
  std::array<double, kTimeFeatureDim> out;
  for (std::size_t i = 0; i < kTimeFeatureDim; ++i)
    out[i] = std::fabs(a.normalized[i] - b.normalized[i]);
  return out;
}

}  // namespace tlsi
