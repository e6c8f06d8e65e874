#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tlsi/data.hpp"
#include "tlsi/graph.hpp"
#include "tlsi/rng.hpp"
#include "tlsi/temporal.hpp"

namespace tlsi {

// Model variants: the full model, its ablations, and the two internal
// baselines (vanilla LSTM on the last hidden state, mean pooling).
enum class Variant {
  Tlsi,      // full model
  TlsiWoTp,  // calendar components replaced by all-ones placeholders
  TlsiL,     // final interest = long-term vector (both attentions)
  TlsiLC,    // long-term with content-based attention only
  TlsiLT,    // long-term with temporal-based attention only
  TlsiS,     // final interest = short-term vector
  TlsiF,     // final interest = fused vector
  Lstm,      // vanilla LSTM, last hidden state
  MeanPool,  // mean of behavior embeddings
};

const char* variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);

enum class Activation { Dice, Prelu };

struct ModelConfig {
  std::size_t item_dim = 18;
  std::size_t cat_dim = 18;
  std::size_t hidden_dim = 36;
  std::size_t mlp_hidden = 64;
  std::size_t max_len = 100;       // history window for the short-term module
  std::size_t max_len_long = 100;  // history window for the long-term module
  Variant variant = Variant::Tlsi;
  Activation activation = Activation::Dice;
  bool standardize_head_input = true;
  double init_scale = 0.05;
  // Diagnostic switch: replaces both time gates by constant ones while
  // keeping the modified cell/output structure, so that (with the extra
  // output-gate matrices zeroed) the recurrence reduces to a vanilla LSTM.
  bool force_unit_time_gates = false;

  std::size_t behavior_dim() const { return item_dim + cat_dim; }
  std::size_t context_dim() const { return behavior_dim() + kTimeFeatureDim + 1; }
  std::size_t final_dim() const;
  std::size_t head_input_dim() const { return final_dim() + behavior_dim(); }

  bool uses_long() const;
  bool uses_short() const;
  bool uses_pooling() const;  // short-term attention pooling (off for Lstm)
  bool uses_time_gates() const;
  bool uses_fusion() const;
  bool wo_tp() const { return variant == Variant::TlsiWoTp; }

  void validate() const;  // throws on inconsistent dimensions
};

// Per-example artifacts a caller may want besides the prediction.
struct ForwardTrace {
  Node* yhat = nullptr;            // [1x1], set by finish_forward
  Node* preact = nullptr;          // MLP hidden pre-activation [h1 x 1]
  Node* raw_head_input = nullptr;  // [p_final, x_p] before standardization
  Node* content_weights = nullptr;   // a^c [n x 1] when the long-term module ran
  Node* temporal_weights = nullptr;  // a^t [n x 1]
  Node* pooling_weights = nullptr;   // a^s [n x 1]
  Node* fusion_gate = nullptr;       // alpha [d x 1] when fusion ran
  Node* p_long = nullptr;
  Node* p_short = nullptr;
  Node* p_fused = nullptr;
  Node* p_final = nullptr;
  std::vector<Node*> hidden_states;  // h_1..h_n when the recurrent module ran
  std::vector<Node*> cell_states;    // c_1..c_n
};

// Constant statistics baked into a graph (not differentiated through).
struct NormStats {
  Array mean;
  Array var;
};

class TlsiModel {
 public:
  TlsiModel(const ModelConfig& cfg, std::size_t n_items, std::size_t n_categories,
            std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Builds the graph up to the MLP hidden pre-activation. finish_forward
  // completes it; the split exists so a trainer can compute mini-batch
  // activation statistics before applying the adaptive activation.
  ForwardTrace build_forward(Graph& g, const BehaviorSequence& seq,
                             const DatasetClock& clock) const;
  // dice_stats is ignored for the parametric-rectifier activation. A null
  // dice_stats (or a zero-variance feature) degenerates to p = 0.5.
  Node* finish_forward(Graph& g, ForwardTrace& trace, const NormStats* dice_stats) const;

  // Convenience: full forward in one call using the running statistics.
  Node* forward(Graph& g, const BehaviorSequence& seq, const DatasetClock& clock,
                ForwardTrace* trace_out = nullptr) const;

  // Hidden and cell states h_1..h_n, c_1..c_n of the recurrent module.
  struct UnrolledStates {
    std::vector<Array> h, c;
  };
  UnrolledStates unroll_states(const BehaviorSequence& seq, const DatasetClock& clock) const;

  // The time-aware feature vectors, evaluated with the current parameters.
  Array adjacent_feature(Timestamp t_prev, Timestamp t_k, const DatasetClock& clock) const;
  Array span_feature(Timestamp t_k, Timestamp t_p, const DatasetClock& clock) const;

  // Per-example negative log-likelihood node on top of yhat.
  Node* loss(Graph& g, Node* yhat, int label) const;

  // Normalized time features as the model consumes them (calendar components
  // become 1.0 for the wo-tp variant).
  std::array<double, kTimeFeatureDim> effective_features(Timestamp t,
                                                         const DatasetClock& clock) const;
  std::array<double, kTimeFeatureDim> effective_sim(Timestamp t1, Timestamp t2,
                                                    const DatasetClock& clock) const;

  // Running statistics (updated by the trainer, read at evaluation).
  NormStats head_input_stats() const;
  NormStats dice_stats() const;
  void update_head_input_stats(const std::vector<const Array*>& batch_inputs);
  void update_dice_stats(const NormStats& batch);

  static constexpr double kStatsMomentum = 0.99;
  static constexpr double kNormEps = 1e-8;

 private:
  Node* behavior_embedding(Graph& g, std::uint32_t item, std::uint32_t category) const;
  Node* column(Graph& g, Node* flat) const;

  ModelConfig cfg_;
  ParameterStore params_;

  Parameter* item_emb_ = nullptr;
  Parameter* cat_emb_ = nullptr;
  // long-term attention
  Parameter* long_wc_ = nullptr;
  Parameter* long_wt_ = nullptr;
  // LSTM
  Parameter *w_f_ = nullptr, *u_f_ = nullptr, *b_f_ = nullptr;
  Parameter *w_i_ = nullptr, *u_i_ = nullptr, *b_i_ = nullptr;
  Parameter *w_c_ = nullptr, *u_c_ = nullptr, *b_c_ = nullptr;
  Parameter *w_o_ = nullptr, *u_o_ = nullptr, *b_o_ = nullptr;
  // temporal features and gates
  Parameter *w_delta_ = nullptr, *b_delta_ = nullptr;
  Parameter *w_span_ = nullptr, *b_span_ = nullptr;
  Parameter *w_xd_ = nullptr, *w_td_ = nullptr, *b_td_ = nullptr;
  Parameter *w_xs_ = nullptr, *w_ts_ = nullptr, *b_ts_ = nullptr;
  Parameter *w_do_ = nullptr, *w_so_ = nullptr;
  // short-term pooling
  Parameter* pool_wh_ = nullptr;
  // fusion
  Parameter *fuse_wg_ = nullptr, *fuse_bg_ = nullptr;
  // head
  Parameter *head_w1_ = nullptr, *head_b1_ = nullptr;
  Parameter* head_alpha_ = nullptr;
  Parameter *head_w2_ = nullptr, *head_b2_ = nullptr;
  // running statistics (not trainable)
  Parameter *in_mean_ = nullptr, *in_var_ = nullptr;
  Parameter *dice_mean_ = nullptr, *dice_var_ = nullptr;
};

}  // namespace tlsi
