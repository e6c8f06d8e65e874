#include "tlsi/pipeline.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace tlsi {

using nlohmann::json;

static std::uint64_t fnv1a64_str(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// All events except each user's chronologically last one.
static std::vector<BehaviorEvent> drop_last_per_user(const std::vector<BehaviorEvent>& events) {
  std::map<std::uint32_t, std::vector<BehaviorEvent>> per_user;
  for (const BehaviorEvent& e : events) per_user[e.user].push_back(e);
  std::vector<BehaviorEvent> out;
  out.reserve(events.size());
  for (auto& [user, evs] : per_user) {
    std::stable_sort(evs.begin(), evs.end(),
                     [](const BehaviorEvent& a, const BehaviorEvent& b) { return a.ts < b.ts; });
    evs.pop_back();
    out.insert(out.end(), evs.begin(), evs.end());
  }
  return out;
}

static void append_with_negatives(const std::vector<BehaviorSequence>& positives,
                                  const Dataset& ds, Rng& rng,
                                  std::vector<BehaviorSequence>& out,
                                  std::size_t& skipped) {
  for (const BehaviorSequence& pos : positives) {
    auto neg = sample_negative(pos, ds, rng);
    if (!neg) {
      ++skipped;
      continue;
    }
    out.push_back(pos);
    out.push_back(std::move(*neg));
  }
}

ExperimentData build_experiment(const Dataset& ds, const TrainConfig& cfg) {
  if (ds.events.empty()) throw std::invalid_argument("build_experiment: no events");
  const std::size_t window = std::max(cfg.model.max_len, cfg.model.max_len_long);

  SequenceBuild test_build = build_sequences(ds.events, window, cfg.min_len);
  const std::vector<BehaviorEvent> train_events = drop_last_per_user(ds.events);
  SequenceBuild train_build = build_sequences(train_events, window, cfg.min_len);

  std::vector<BehaviorSequence> train_pos, val_pos;
  for (BehaviorSequence& s : train_build.sequences) {
    const bool held_out = fnv1a64_str(ds.users.raw(s.user)) % 10 == 0;
    (held_out ? val_pos : train_pos).push_back(std::move(s));
  }

  ExperimentData out;
  out.dropped_test_users = test_build.dropped_users;
  out.dropped_train_users = train_build.dropped_users;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  append_with_negatives(train_pos, ds, rng, out.train, out.skipped_negatives);
  append_with_negatives(val_pos, ds, rng, out.val, out.skipped_negatives);
  append_with_negatives(test_build.sequences, ds, rng, out.test, out.skipped_negatives);
  return out;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["min_len"] = cfg.min_len;
  j["seed"] = cfg.seed;
  j["lr"] = cfg.adam.lr;
  j["beta1"] = cfg.adam.beta1;
  j["beta2"] = cfg.adam.beta2;
  j["adam_eps"] = cfg.adam.eps;
  j["clip_norm"] = cfg.clip_norm;
  j["item_dim"] = cfg.model.item_dim;
  j["cat_dim"] = cfg.model.cat_dim;
  j["hidden_dim"] = cfg.model.hidden_dim;
  j["mlp_hidden"] = cfg.model.mlp_hidden;
  j["max_len"] = cfg.model.max_len;
  j["max_len_long"] = cfg.model.max_len_long;
  j["variant"] = variant_name(cfg.model.variant);
  j["activation"] = cfg.model.activation == Activation::Dice ? "dice" : "prelu";
  j["standardize_head_input"] = cfg.model.standardize_head_input;
  j["init_scale"] = cfg.model.init_scale;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.at("epochs").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.min_len = j.at("min_len").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.adam.lr = j.at("lr").get<double>();
  cfg.adam.beta1 = j.at("beta1").get<double>();
  cfg.adam.beta2 = j.at("beta2").get<double>();
  cfg.adam.eps = j.at("adam_eps").get<double>();
  cfg.clip_norm = j.at("clip_norm").get<double>();
  cfg.model.item_dim = j.at("item_dim").get<std::size_t>();
  cfg.model.cat_dim = j.at("cat_dim").get<std::size_t>();
  cfg.model.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  cfg.model.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  cfg.model.max_len = j.at("max_len").get<std::size_t>();
  cfg.model.max_len_long = j.at("max_len_long").get<std::size_t>();
  const auto v = parse_variant(j.at("variant").get<std::string>());
  if (!v) throw std::runtime_error("unknown variant in config: " + j.at("variant").dump());
  cfg.model.variant = *v;
  const std::string act = j.at("activation").get<std::string>();
  if (act == "dice")
    cfg.model.activation = Activation::Dice;
  else if (act == "prelu")
    cfg.model.activation = Activation::Prelu;
  else
    throw std::runtime_error("unknown activation in config: " + act);
  cfg.model.standardize_head_input = j.at("standardize_head_input").get<bool>();
  cfg.model.init_scale = j.at("init_scale").get<double>();
  return cfg;
}

}  // namespace tlsi
