#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tlsi/rng.hpp"
#include "tlsi/temporal.hpp"

namespace tlsi {

// An event as it appears on disk, before id remapping.
struct RawEvent {
  std::string user;
  std::string item;
  std::string category;
  Timestamp ts = 0;
};

// Bijective raw-id <-> dense-index map. Index 0 is reserved for padding /
// unknown; real ids occupy 1..size()-1.
class Vocabulary {
 public:
  Vocabulary() : to_raw_{"<pad>"} {}

  std::uint32_t intern(const std::string& raw);
  std::optional<std::uint32_t> lookup(const std::string& raw) const;
  const std::string& raw(std::uint32_t index) const { return to_raw_.at(index); }
  std::size_t size() const { return to_raw_.size(); }  // includes the pad slot

 private:
  std::unordered_map<std::string, std::uint32_t> to_index_;
  std::vector<std::string> to_raw_;
};

struct BehaviorEvent {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint32_t category = 0;
  Timestamp ts = 0;
};

// Events plus everything derived from them at load time.
struct Dataset {
  std::vector<BehaviorEvent> events;  // input order preserved
  Vocabulary users, items, categories;
  std::vector<std::uint32_t> item_category;  // item index -> category index
  DatasetClock clock;
  std::size_t malformed_lines = 0;

  static Dataset from_raw(const std::vector<RawEvent>& raw, std::size_t malformed = 0);
};

// JSONL ({"user":..,"item":..,"category":..,"ts":..} per line) or CSV with
// header user,item,category,ts. Malformed lines are counted and skipped;
// more than 1% malformed is a hard failure.
Dataset load_behavior_log(const std::string& path);

void write_jsonl(const std::string& path, const std::vector<RawEvent>& events);
std::vector<RawEvent> to_raw_events(const Dataset& ds);

struct BehaviorSequence {
  std::uint32_t user = 0;
  std::vector<BehaviorEvent> history;  // chronological, non-empty
  std::uint32_t target_item = 0;
  std::uint32_t target_category = 0;
  Timestamp target_time = 0;
  int label = 1;
};

struct SequenceBuild {
  std::vector<BehaviorSequence> sequences;  // positives only, label 1
  std::size_t dropped_users = 0;
};

// Per user: the last event becomes the target, the most recent max_len
// preceding events become the history. Users with fewer than min_len + 1
// events are dropped. Equal timestamps keep input order.
SequenceBuild build_sequences(const std::vector<BehaviorEvent>& events, std::size_t max_len,
                              std::size_t min_len);

// Uniform over items excluding the positive target and the user's history
// items; the copy keeps the positive's target_time. Returns nullopt when no
// eligible item exists.
std::optional<BehaviorSequence> sample_negative(const BehaviorSequence& positive,
                                                const Dataset& ds, Rng& rng);

// ---- synthetic generation ----

struct CategoryPattern {
  std::optional<double> period_days;     // inter-click period, +-10% jitter
  std::optional<std::set<int>> active_hours;  // subset of 0..23
};

struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_items = 500;
  std::size_t n_categories = 25;
  double noise_rate = 0.0;
  std::uint64_t seed = 1;
  Timestamp start_ts = 1609718400;  // 2021-01-04 Mon 00:00 UTC
  double horizon_days = 90.0;
  std::size_t favorites_per_category = 4;  // per-user favorite items in a category
  double hours_only_gap_days = 3.0;        // mean cadence for hour-pattern-only categories
  // category index -> pattern; categories not present are unpatterned.
  std::map<std::size_t, CategoryPattern> patterns;

  // Assigns a strong pattern to every category: by index mod 3, periodic,
  // active-hour block, or both.
  void auto_patterns();
  // Item ids belonging to a category under the even partition.
  std::pair<std::size_t, std::size_t> item_range(std::size_t category) const;
};

std::vector<RawEvent> generate_synthetic(const SyntheticSpec& spec);

// Checks the planted constraints (hour membership, period gap bounds) on a
// noise-free dataset. Returns a human-readable violation, or nullopt if clean.
std::optional<std::string> validate_synthetic(const std::vector<RawEvent>& events,
                                              const SyntheticSpec& spec);

}  // namespace tlsi
