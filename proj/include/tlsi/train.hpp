#pragma once

#include <string>
#include <vector>

#include "tlsi/data.hpp"
#include "tlsi/metrics.hpp"
#include "tlsi/model.hpp"

namespace tlsi {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over every trainable parameter of a store. step()
// consumes and zeroes accumulated gradients.
class Adam {
 public:
  Adam(ParameterStore& store, const AdamConfig& cfg);

  // Throws if a trainable parameter never received a gradient (a detached
  // subgraph would otherwise silently stop training).
  void step();
  std::size_t step_count() const { return t_; }

 private:
  ParameterStore& store_;
  AdamConfig cfg_;
  std::vector<Array> m_, v_;  // store order, trainable slots only are used
  std::size_t t_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::size_t min_len = 5;
  std::uint64_t seed = 42;
  AdamConfig adam;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
  ModelConfig model;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  bool has_val = false;
  double val_auc = 0.0;
  double val_logloss = 0.0;
};

struct GateRecord {
  std::size_t example_id;
  double alpha_mean;
  double recency_seconds;
};

struct AttentionRecord {
  std::size_t example_id;
  std::size_t position;
  double a_c;
  double a_t;
};

struct MetricsReport {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<GateRecord> gates;           // filled on request
  std::vector<AttentionRecord> attention;  // filled on request
};

struct EvalOptions {
  bool dump_gates = false;
  bool dump_attention = false;
};

class Trainer {
 public:
  Trainer(TlsiModel& model, const TrainConfig& cfg, const DatasetClock& clock);

  // One pass over the training set in a fixed shuffled order; returns the
  // mean per-example loss. Throws with diagnostics when the loss goes
  // non-finite.
  double run_epoch(const std::vector<BehaviorSequence>& train, std::size_t epoch_index);

  std::vector<EpochStats> fit(const std::vector<BehaviorSequence>& train,
                              const std::vector<BehaviorSequence>& val);

 private:
  TlsiModel& model_;
  TrainConfig cfg_;
  DatasetClock clock_;
  Adam adam_;
  Rng shuffle_rng_;
};

MetricsReport evaluate(const TlsiModel& model, const std::vector<BehaviorSequence>& examples,
                       const DatasetClock& clock, const EvalOptions& opts = {});

}  // namespace tlsi
