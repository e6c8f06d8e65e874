#pragma once

#include <json.hpp>

#include "tlsi/data.hpp"
#include "tlsi/train.hpp"

namespace tlsi {

// Leave-last-out protocol: each user's final event is the test target; the
// event before it is that user's training target. Ten percent of training
// users (by hash of the raw user id) are held out for per-epoch diagnostics.
// Every positive is followed by one sampled negative.
struct ExperimentData {
  std::vector<BehaviorSequence> train, val, test;
  std::size_t dropped_test_users = 0;
  std::size_t dropped_train_users = 0;
  std::size_t skipped_negatives = 0;  // users whose catalog was exhausted
};

ExperimentData build_experiment(const Dataset& ds, const TrainConfig& cfg);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace tlsi
