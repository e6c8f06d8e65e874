#include "tlsi/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace tlsi {

using nlohmann::json;

std::uint32_t Vocabulary::intern(const std::string& raw) {
  auto it = to_index_.find(raw);
  if (it != to_index_.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(to_raw_.size());
  to_index_.emplace(raw, idx);
  to_raw_.push_back(raw);
  return idx;
}

std::optional<std::uint32_t> Vocabulary::lookup(const std::string& raw) const {
  auto it = to_index_.find(raw);
  if (it == to_index_.end()) return std::nullopt;
  return it->second;
}

Dataset Dataset::from_raw(const std::vector<RawEvent>& raw, std::size_t malformed) {
  Dataset ds;
  ds.malformed_lines = malformed;
  ds.events.reserve(raw.size());
  ds.item_category.push_back(0);  // pad slot
  Timestamp t_min = 0, t_max = 0;
  for (const RawEvent& e : raw) {
    BehaviorEvent ev;
    ev.user = ds.users.intern(e.user);
    ev.item = ds.items.intern(e.item);
    ev.category = ds.categories.intern(e.category);
    ev.ts = e.ts;
    if (ev.item == ds.item_category.size())
      ds.item_category.push_back(ev.category);  // first occurrence wins
    if (ds.events.empty()) {
      t_min = t_max = ev.ts;
    } else {
      t_min = std::min(t_min, ev.ts);
      t_max = std::max(t_max, ev.ts);
    }
    ds.events.push_back(ev);
  }
  if (!ds.events.empty()) ds.clock = DatasetClock::from_range(t_min, t_max);
  return ds;
}

static std::string id_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw std::runtime_error("id is neither string nor integer");
}

static bool parse_jsonl_line(const std::string& line, RawEvent& out) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  try {
    if (!j.contains("user") || !j.contains("item") || !j.contains("category") ||
        !j.contains("ts") || !j["ts"].is_number_integer())
      return false;
    const auto ts = j["ts"].get<std::int64_t>();
    if (ts < 0) return false;
    out.user = id_to_string(j["user"]);
    out.item = id_to_string(j["item"]);
    out.category = id_to_string(j["category"]);
    out.ts = ts;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

static bool parse_csv_line(const std::string& line, RawEvent& out) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (fields.size() != 4) return false;
  try {
    std::size_t pos = 0;
    const long long ts = std::stoll(fields[3], &pos);
    if (pos != fields[3].size() || ts < 0) return false;
    out.user = fields[0];
    out.item = fields[1];
    out.category = fields[2];
    out.ts = ts;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

Dataset load_behavior_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open behavior log: " + path);

  std::vector<RawEvent> raw;
  std::size_t malformed = 0, total = 0;
  std::string line;
  bool csv = false, first_content_line = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      if (line == "user,item,category,ts") {
        csv = true;
        continue;  // header
      }
    }
    ++total;
    RawEvent e;
    const bool ok = csv ? parse_csv_line(line, e) : parse_jsonl_line(line, e);
    if (ok)
      raw.push_back(std::move(e));
    else
      ++malformed;
  }
  if (total > 0 && static_cast<double>(malformed) / static_cast<double>(total) > 0.01)
    throw std::runtime_error("behavior log " + path + ": " + std::to_string(malformed) + " of " +
                             std::to_string(total) + " lines malformed (>1%), wrong file?");
  return Dataset::from_raw(raw, malformed);
}

// Integer-looking raw ids round-trip as JSON integers.
static json id_to_json(const std::string& raw) {
  if (!raw.empty() && raw.size() <= 18 &&
      raw.find_first_not_of("0123456789") == std::string::npos &&
      (raw.size() == 1 || raw[0] != '0'))
    return json(std::stoll(raw));
  return json(raw);
}

void write_jsonl(const std::string& path, const std::vector<RawEvent>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  for (const RawEvent& e : events) {
    json j;
    j["user"] = id_to_json(e.user);
    j["item"] = id_to_json(e.item);
    j["category"] = id_to_json(e.category);
    j["ts"] = e.ts;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RawEvent> to_raw_events(const Dataset& ds) {
  std::vector<RawEvent> out;
  out.reserve(ds.events.size());
  for (const BehaviorEvent& e : ds.events)
    out.push_back({ds.users.raw(e.user), ds.items.raw(e.item), ds.categories.raw(e.category),
                   e.ts});
  return out;
}

SequenceBuild build_sequences(const std::vector<BehaviorEvent>& events, std::size_t max_len,
                              std::size_t min_len) {
  if (max_len == 0) throw std::invalid_argument("build_sequences: max_len must be positive");
  // group by user, input order preserved
  std::map<std::uint32_t, std::vector<BehaviorEvent>> per_user;
  for (const BehaviorEvent& e : events) per_user[e.user].push_back(e);

  SequenceBuild out;
  for (auto& [user, evs] : per_user) {
    std::stable_sort(evs.begin(), evs.end(),
                     [](const BehaviorEvent& a, const BehaviorEvent& b) { return a.ts < b.ts; });
    if (evs.size() < min_len + 1) {
      ++out.dropped_users;
      continue;
    }
    BehaviorSequence s;
    s.user = user;
    const BehaviorEvent& target = evs.back();
    s.target_item = target.item;
    s.target_category = target.category;
    s.target_time = target.ts;
    s.label = 1;
    const std::size_t n_hist = std::min(max_len, evs.size() - 1);
    s.history.assign(evs.end() - 1 - n_hist, evs.end() - 1);
    out.sequences.push_back(std::move(s));
  }
  return out;
}

std::optional<BehaviorSequence> sample_negative(const BehaviorSequence& positive,
                                                const Dataset& ds, Rng& rng) {
  const std::size_t n_items = ds.items.size();  // includes pad slot 0
  if (n_items < 3) throw std::invalid_argument("sample_negative: item vocabulary too small");
  std::unordered_set<std::uint32_t> excluded;
  excluded.insert(positive.target_item);
  for (const BehaviorEvent& e : positive.history) excluded.insert(e.item);

  std::uint32_t picked = 0;
  if (excluded.size() + 1 >= n_items) {
    // user has seen (almost) the whole catalog; enumerate what is left
    std::vector<std::uint32_t> pool;
    for (std::uint32_t i = 1; i < n_items; ++i)
      if (!excluded.count(i)) pool.push_back(i);
    if (pool.empty()) return std::nullopt;
    picked = pool[rng.below(pool.size())];
  } else {
    do {
      picked = static_cast<std::uint32_t>(1 + rng.below(n_items - 1));
    } while (excluded.count(picked));
  }
  BehaviorSequence neg = positive;
  neg.target_item = picked;
  neg.target_category = ds.item_category.at(picked);
  neg.label = 0;
  return neg;
}

// ---- synthetic generation ----

void SyntheticSpec::auto_patterns() {
  static const double periods[] = {3.0, 7.0, 10.0, 14.0};
  patterns.clear();
  for (std::size_t c = 0; c < n_categories; ++c) {
    CategoryPattern p;
    const double period = periods[(c / 3) % 4];
    const int block_start = static_cast<int>((5 * (c / 3) + 7 * c) % 21);
    std::set<int> hours = {block_start, block_start + 1, block_start + 2};
    switch (c % 3) {
      case 0:
        p.period_days = period;
        break;
      case 1:
        p.active_hours = hours;
        break;
      default:
        p.period_days = period;
        p.active_hours = hours;
        break;
    }
    patterns[c] = p;
  }
}

std::pair<std::size_t, std::size_t> SyntheticSpec::item_range(std::size_t category) const {
  const std::size_t base = n_items / n_categories;
  const std::size_t rem = n_items % n_categories;
  const std::size_t begin = category * base + std::min(category, rem);
  const std::size_t count = base + (category < rem ? 1 : 0);
  return {begin, begin + count};
}

static Timestamp floor_day(Timestamp t) { return (t / 86400) * 86400; }

static Timestamp place_in_hours(Timestamp t, const std::set<int>& hours, Rng& rng) {
  std::vector<int> pool(hours.begin(), hours.end());
  const int h = pool[rng.below(pool.size())];
  return floor_day(t) + h * 3600 + static_cast<Timestamp>(rng.below(60)) * 60 +
         static_cast<Timestamp>(rng.below(60));
}

std::vector<RawEvent> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_categories == 0 || spec.n_items < spec.n_categories || spec.n_users == 0)
    throw std::invalid_argument("generate_synthetic: need at least one category and one item per category");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0)
    throw std::invalid_argument("generate_synthetic: noise_rate outside [0,1]");
  for (const auto& [c, p] : spec.patterns) {
    if (c >= spec.n_categories)
      throw std::invalid_argument("generate_synthetic: pattern for unknown category " +
                                  std::to_string(c));
    if (!p.period_days && !p.active_hours)
      throw std::invalid_argument("generate_synthetic: empty pattern for category " +
                                  std::to_string(c));
    if (p.period_days && *p.period_days <= 0.0)
      throw std::invalid_argument("generate_synthetic: non-positive period");
    if (p.active_hours)
      for (int h : *p.active_hours)
        if (h < 0 || h > 23)
          throw std::invalid_argument("generate_synthetic: active hour outside 0..23");
  }

  const Timestamp t_end = spec.start_ts + static_cast<Timestamp>(spec.horizon_days * 86400.0);

  struct PendingEvent {
    Timestamp ts;
    std::size_t user, item, category;
  };
  std::vector<PendingEvent> all;

  std::vector<std::size_t> cat_order(spec.n_categories);
  for (std::size_t c = 0; c < spec.n_categories; ++c) cat_order[c] = c;

  for (std::size_t u = 0; u < spec.n_users; ++u) {
    // per-user stream: a user's base events do not depend on other users or
    // on the noise setting
    Rng rng(fnv1a64(spec.seed * 0x9e3779b97f4a7c15ULL + u));
    const std::size_t n_pref = 2 + rng.below(3);  // 2..4
    std::vector<std::size_t> shuffled = cat_order;
    rng.shuffle(shuffled);
    shuffled.resize(std::min(n_pref, shuffled.size()));

    std::vector<PendingEvent> user_events;
    for (std::size_t cat : shuffled) {
      auto [lo, hi] = spec.item_range(cat);
      std::vector<std::size_t> favorites;
      const std::size_t n_fav = std::min(spec.favorites_per_category, hi - lo);
      std::vector<std::size_t> pool;
      for (std::size_t i = lo; i < hi; ++i) pool.push_back(i);
      rng.shuffle(pool);
      favorites.assign(pool.begin(), pool.begin() + n_fav);

      CategoryPattern pat;  // unpatterned categories follow the hours-only cadence, any hour
      if (auto it = spec.patterns.find(cat); it != spec.patterns.end()) pat = it->second;

      const double period = pat.period_days.value_or(spec.hours_only_gap_days);
      Timestamp t = spec.start_ts + static_cast<Timestamp>(rng.uniform(0.0, period) * 86400.0);
      while (t < t_end) {
        Timestamp ts = t;
        if (pat.active_hours) ts = place_in_hours(t, *pat.active_hours, rng);
        if (ts >= spec.start_ts && ts < t_end)
          user_events.push_back({ts, u, favorites[rng.below(favorites.size())], cat});
        double gap_days;
        if (pat.period_days)
          gap_days = *pat.period_days + rng.uniform(-0.1, 0.1) * *pat.period_days;
        else
          gap_days = spec.hours_only_gap_days * rng.uniform(0.5, 1.5);
        t += static_cast<Timestamp>(std::llround(gap_days * 86400.0));
      }
    }

    // noise: keep the timestamp, swap the item to a non-preferred category
    if (spec.noise_rate > 0.0 && spec.n_categories > shuffled.size()) {
      std::vector<std::size_t> others;
      for (std::size_t c = 0; c < spec.n_categories; ++c)
        if (std::find(shuffled.begin(), shuffled.end(), c) == shuffled.end()) others.push_back(c);
      for (PendingEvent& e : user_events) {
        if (rng.uniform() < spec.noise_rate) {
          const std::size_t cat = others[rng.below(others.size())];
          auto [lo, hi] = spec.item_range(cat);
          e.item = lo + rng.below(hi - lo);
          e.category = cat;
        }
      }
    }
    all.insert(all.end(), user_events.begin(), user_events.end());
  }

  std::stable_sort(all.begin(), all.end(),
                   [](const PendingEvent& a, const PendingEvent& b) { return a.ts < b.ts; });

  std::vector<RawEvent> out;
  out.reserve(all.size());
  for (const PendingEvent& e : all)
    out.push_back({std::to_string(e.user), std::to_string(e.item), std::to_string(e.category),
                   e.ts});
  return out;
}

std::optional<std::string> validate_synthetic(const std::vector<RawEvent>& events,
                                              const SyntheticSpec& spec) {
  std::map<std::pair<std::string, std::string>, std::vector<Timestamp>> groups;
  for (const RawEvent& e : events) groups[{e.user, e.category}].push_back(e.ts);

  const double eps = 1e-9;
  for (auto& [key, times] : groups) {
    const std::size_t cat = std::stoull(key.second);
    auto it = spec.patterns.find(cat);
    if (it == spec.patterns.end()) continue;
    const CategoryPattern& pat = it->second;
    std::sort(times.begin(), times.end());

    if (pat.active_hours) {
      for (Timestamp t : times) {
        const int hour = decompose(t).hour;
        if (!pat.active_hours->count(hour))
          return "user " + key.first + " category " + key.second + ": hour " +
                 std::to_string(hour) + " outside active set";
      }
    }
    if (pat.period_days) {
      const double p = *pat.period_days;
      // hour placement may move an event across a day boundary
      const double slack_days = pat.active_hours ? 1.0 : 0.0;
      for (std::size_t i = 1; i < times.size(); ++i) {
        const double gap_days = static_cast<double>(times[i] - times[i - 1]) / 86400.0;
        if (gap_days < 0.9 * p - slack_days - eps || gap_days > 1.1 * p + slack_days + eps)
          return "user " + key.first + " category " + key.second + ": gap " +
                 std::to_string(gap_days) + "d outside [" + std::to_string(0.9 * p) + ", " +
                 std::to_string(1.1 * p) + "] +-" + std::to_string(slack_days) + "d";
      }
    }
  }
  return std::nullopt;
}

}  // namespace tlsi
