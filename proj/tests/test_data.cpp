#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "tlsi/data.hpp"

using namespace tlsi;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("vocabulary interns densely from 1 and round-trips") {
  Vocabulary v;
  CHECK(v.size() == 1);  // pad slot
  CHECK(v.intern("a") == 1);
  CHECK(v.intern("b") == 2);
  CHECK(v.intern("a") == 1);
  CHECK(v.raw(1) == "a");
  CHECK(v.raw(0) == "<pad>");
  CHECK(v.lookup("b").value() == 2);
  CHECK_FALSE(v.lookup("zzz").has_value());
  for (std::uint32_t i = 1; i < v.size(); ++i) CHECK(v.lookup(v.raw(i)).value() == i);
}

TEST_CASE("jsonl loading: events, clock, malformed accounting") {
  const std::string path = temp_path("tlsi_test_events.jsonl");
  write_file(path,
             R"({"user":"u1","item":"i1","category":"c1","ts":100}
{"user":"u1","item":"i2","category":"c1","ts":200}
{"user":2,"item":3,"category":4,"ts":50}
)");
  Dataset ds = load_behavior_log(path);
  CHECK(ds.events.size() == 3);
  CHECK(ds.malformed_lines == 0);
  CHECK(ds.clock.t_start == 50);
  CHECK(ds.clock.span_seconds == 150);
  CHECK(ds.users.size() == 3);  // pad + u1 + 2
  CHECK(ds.item_category.size() == ds.items.size());
  CHECK(ds.item_category[ds.items.lookup("i2").value()] == ds.categories.lookup("c1").value());

  SUBCASE("empty file loads as an empty dataset") {
    const std::string empty = temp_path("tlsi_test_empty.jsonl");
    write_file(empty, "");
    Dataset e = load_behavior_log(empty);
    CHECK(e.events.empty());
    CHECK_THROWS(build_sequences(e.events, 100, 1).sequences.at(0));
  }

  SUBCASE("a line missing its timestamp is counted and skipped") {
    const std::string bad = temp_path("tlsi_test_bad.jsonl");
    std::string content;
    for (int i = 0; i < 200; ++i)
      content += R"({"user":"u","item":"i)" + std::to_string(i) + R"(","category":"c","ts":)" +
                 std::to_string(1000 + i) + "}\n";
    content += R"({"user":"u","item":"x","category":"c"})" "\n";
    write_file(bad, content);
    Dataset d = load_behavior_log(bad);
    CHECK(d.malformed_lines == 1);
    CHECK(d.events.size() == 200);
  }

  SUBCASE("more than 1% malformed lines is a hard failure") {
    const std::string junk = temp_path("tlsi_test_junk.jsonl");
    write_file(junk, "not json at all\n{\"user\":1,\"item\":1,\"category\":1,\"ts\":5}\n");
    CHECK_THROWS_AS(load_behavior_log(junk), std::runtime_error);
  }

  SUBCASE("missing file") { CHECK_THROWS(load_behavior_log(temp_path("no_such_file.jsonl"))); }
}

TEST_CASE("csv loading with the fixed header") {
  const std::string path = temp_path("tlsi_test_events.csv");
  write_file(path, "user,item,category,ts\nu1,i1,c1,100\nu1,i2,c2,200\n");
  Dataset ds = load_behavior_log(path);
  CHECK(ds.events.size() == 2);
  CHECK(ds.events[1].ts == 200);
}

TEST_CASE("jsonl round-trip preserves events") {
  const std::string path = temp_path("tlsi_test_rt.jsonl");
  write_file(path,
             R"({"user":7,"item":1,"category":2,"ts":100}
{"user":7,"item":"strid","category":2,"ts":200}
)");
  Dataset ds = load_behavior_log(path);
  const std::string path2 = temp_path("tlsi_test_rt2.jsonl");
  write_jsonl(path2, to_raw_events(ds));
  Dataset ds2 = load_behavior_log(path2);
  REQUIRE(ds2.events.size() == ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    CHECK(ds.users.raw(ds.events[i].user) == ds2.users.raw(ds2.events[i].user));
    CHECK(ds.items.raw(ds.events[i].item) == ds2.items.raw(ds2.events[i].item));
    CHECK(ds.events[i].ts == ds2.events[i].ts);
  }
}

namespace {

BehaviorEvent ev(std::uint32_t user, std::uint32_t item, std::uint32_t cat, Timestamp ts) {
  return {user, item, cat, ts};
}

}  // namespace

TEST_CASE("build_sequences implements leave-last-out") {
  std::vector<BehaviorEvent> events = {ev(1, 10, 1, 100), ev(1, 11, 1, 200), ev(1, 12, 1, 300)};
  SequenceBuild b = build_sequences(events, 100, 1);
  REQUIRE(b.sequences.size() == 1);
  const BehaviorSequence& s = b.sequences[0];
  CHECK(s.history.size() == 2);
  CHECK(s.history[0].item == 10);
  CHECK(s.history[1].item == 11);
  CHECK(s.target_item == 12);
  CHECK(s.target_time == 300);
  CHECK(s.label == 1);

  SUBCASE("a single-event user is dropped") {
    std::vector<BehaviorEvent> one = {ev(2, 10, 1, 100)};
    SequenceBuild d = build_sequences(one, 100, 1);
    CHECK(d.sequences.empty());
    CHECK(d.dropped_users == 1);
  }

  SUBCASE("long histories keep the most recent max_len events") {
    std::vector<BehaviorEvent> many;
    for (int i = 0; i < 150; ++i) many.push_back(ev(3, 100 + i, 1, 1000 + i));
    SequenceBuild d = build_sequences(many, 100, 1);
    REQUIRE(d.sequences.size() == 1);
    CHECK(d.sequences[0].history.size() == 100);
    CHECK(d.sequences[0].history.front().item == 100 + 49);  // events 49..148
    CHECK(d.sequences[0].history.back().item == 100 + 148);
    CHECK(d.sequences[0].target_item == 100 + 149);
  }

  SUBCASE("equal timestamps keep input order") {
    std::vector<BehaviorEvent> tied = {ev(4, 1, 1, 100), ev(4, 2, 1, 100), ev(4, 3, 1, 100)};
    SequenceBuild d = build_sequences(tied, 100, 1);
    REQUIRE(d.sequences.size() == 1);
    CHECK(d.sequences[0].history[0].item == 1);
    CHECK(d.sequences[0].history[1].item == 2);
    CHECK(d.sequences[0].target_item == 3);
  }

  SUBCASE("histories are chronological") {
    std::vector<BehaviorEvent> mixed = {ev(5, 1, 1, 300), ev(5, 2, 1, 100), ev(5, 3, 1, 200),
                                        ev(5, 4, 1, 400)};
    SequenceBuild d = build_sequences(mixed, 100, 1);
    REQUIRE(d.sequences.size() == 1);
    for (std::size_t i = 1; i < d.sequences[0].history.size(); ++i)
      CHECK(d.sequences[0].history[i - 1].ts <= d.sequences[0].history[i].ts);
    CHECK(d.sequences[0].target_item == 4);
  }
}

TEST_CASE("negative sampling: exclusion, determinism, uniformity") {
  // catalog {A,B,C}: history {A}, positive C -> only B is eligible
  std::vector<RawEvent> raw = {{"u", "A", "c", 100}, {"u", "C", "c", 200},
                               {"v", "B", "c", 100}, {"v", "A", "c", 150}};
  Dataset ds = Dataset::from_raw(raw);
  SequenceBuild b = build_sequences(ds.events, 100, 1);
  const BehaviorSequence& pos = b.sequences[0];  // user u: history [A], target C
  REQUIRE(ds.users.raw(pos.user) == "u");
  Rng rng(1);
  auto neg = sample_negative(pos, ds, rng);
  REQUIRE(neg.has_value());
  CHECK(ds.items.raw(neg->target_item) == "B");
  CHECK(neg->label == 0);
  CHECK(neg->target_time == pos.target_time);
  CHECK(neg->target_category == ds.item_category[neg->target_item]);

  SUBCASE("fixed seed reproduces the same negative") {
    Rng r1(77), r2(77);
    auto n1 = sample_negative(pos, ds, r1);
    auto n2 = sample_negative(pos, ds, r2);
    CHECK(n1->target_item == n2->target_item);
  }

  SUBCASE("exhausted catalog yields nullopt") {
    std::vector<RawEvent> tiny = {{"u", "A", "c", 100}, {"u", "B", "c", 150}, {"u", "C", "c", 200}};
    Dataset d2 = Dataset::from_raw(tiny);
    SequenceBuild b2 = build_sequences(d2.events, 100, 1);
    Rng r(5);
    CHECK_FALSE(sample_negative(b2.sequences[0], d2, r).has_value());
  }

  SUBCASE("negatives are uniform over the eligible catalog (chi-square, p>0.01)") {
    std::vector<RawEvent> big;
    for (int i = 0; i < 20; ++i)
      big.push_back({"filler" + std::to_string(i), "I" + std::to_string(i),
                     "c" + std::to_string(i % 3), 100 + i});
    big.push_back({"u", "I0", "c0", 500});
    big.push_back({"u", "I1", "c1", 600});
    Dataset d3 = Dataset::from_raw(big);
    SequenceBuild b3 = build_sequences(d3.events, 100, 1);
    const BehaviorSequence* posu = nullptr;
    for (const auto& s : b3.sequences)
      if (d3.users.raw(s.user) == "u") posu = &s;
    REQUIRE(posu);  // history {I0}, target I1 -> 18 eligible items
    Rng r(2024);
    std::map<std::uint32_t, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      auto n = sample_negative(*posu, d3, r);
      REQUIRE(n.has_value());
      CHECK(n->target_item != posu->target_item);
      ++counts[n->target_item];
    }
    CHECK(counts.size() == 18);
    const double expected = draws / 18.0;
    double chi2 = 0.0;
    for (const auto& [item, c] : counts) {
      const double d = c - expected;
      chi2 += d * d / expected;
    }
    // chi-square upper 1% critical value, 17 degrees of freedom
    CHECK(chi2 < 33.40866360500461);
  }
}

TEST_CASE("synthetic generation: determinism and planted patterns") {
  SyntheticSpec spec;
  spec.n_users = 30;
  spec.n_items = 60;
  spec.n_categories = 6;
  spec.noise_rate = 0.0;
  spec.seed = 42;
  spec.horizon_days = 60.0;
  spec.patterns[0] = {7.0, std::nullopt};                 // weekly
  spec.patterns[1] = {std::nullopt, std::set<int>{20}};   // evenings only
  spec.patterns[2] = {14.0, std::set<int>{8, 9, 10}};     // biweekly mornings

  auto events = generate_synthetic(spec);
  CHECK(!events.empty());
  CHECK_FALSE(validate_synthetic(events, spec).has_value());

  SUBCASE("the same seed reproduces the byte-identical event list") {
    auto again = generate_synthetic(spec);
    REQUIRE(again.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(events[i].user == again[i].user);
      CHECK(events[i].item == again[i].item);
      CHECK(events[i].ts == again[i].ts);
    }
  }

  SUBCASE("weekly gaps stay within ten percent of the period") {
    std::map<std::string, std::vector<Timestamp>> per_user;
    for (const auto& e : events)
      if (e.category == "0") per_user[e.user].push_back(e.ts);
    bool saw_any = false;
    for (auto& [u, ts] : per_user) {
      std::sort(ts.begin(), ts.end());
      for (std::size_t i = 1; i < ts.size(); ++i) {
        const double gap = static_cast<double>(ts[i] - ts[i - 1]) / 86400.0;
        CHECK(gap >= 6.3 - 1e-9);
        CHECK(gap <= 7.7 + 1e-9);
        saw_any = true;
      }
    }
    CHECK(saw_any);
  }

  SUBCASE("hour-locked categories only fire inside their hour set") {
    bool saw_any = false;
    for (const auto& e : events)
      if (e.category == "1") {
        CHECK(decompose(e.ts).hour == 20);
        saw_any = true;
      }
    CHECK(saw_any);
  }

  SUBCASE("noise events move to non-preferred categories but keep timestamps") {
    SyntheticSpec noisy = spec;
    noisy.noise_rate = 0.5;
    auto noisy_events = generate_synthetic(noisy);
    CHECK(noisy_events.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) CHECK(noisy_events[i].ts == events[i].ts);
  }

  SUBCASE("a spec without categories is rejected") {
    SyntheticSpec bad;
    bad.n_categories = 0;
    CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
  }

  SUBCASE("items stay inside their category's partition slot") {
    for (const auto& e : events) {
      const std::size_t item = std::stoull(e.item);
      const std::size_t cat = std::stoull(e.category);
      auto [lo, hi] = spec.item_range(cat);
      CHECK(item >= lo);
      CHECK(item < hi);
    }
  }
}

TEST_CASE("auto_patterns covers every category with a strong pattern") {
  SyntheticSpec spec;
  spec.n_categories = 12;
  spec.auto_patterns();
  CHECK(spec.patterns.size() == 12);
  for (const auto& [c, p] : spec.patterns) {
    CHECK((p.period_days.has_value() || p.active_hours.has_value()));
    if (p.active_hours)
      for (int h : *p.active_hours) {
        CHECK(h >= 0);
        CHECK(h <= 23);
      }
  }
}

TEST_CASE("noise-free synthetic data passes its validator across seeds") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    SyntheticSpec spec;
    spec.n_users = 20;
    spec.n_items = 120;
    spec.n_categories = 12;
    spec.noise_rate = 0.0;
    spec.seed = seed;
    spec.horizon_days = 45.0;
    spec.auto_patterns();
    auto events = generate_synthetic(spec);
    auto violation = validate_synthetic(events, spec);
    if (violation) FAIL(*violation);
  }
}
