#include "tlsi/train.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tlsi {

Adam::Adam(ParameterStore& store, const AdamConfig& cfg) : store_(store), cfg_(cfg) {
  for (const auto& p : store_) {
    m_.push_back(Array::zeros(p->value.shape()));
    v_.push_back(Array::zeros(p->value.shape()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t idx = 0;
  for (const auto& p : store_) {
    if (p->trainable) {
      if (!p->grad_touched)
        throw std::runtime_error("adam: trainable parameter '" + p->name +
                                 "' received no gradient (detached subgraph?)");
      Array& m = m_[idx];
      Array& v = v_[idx];
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        p->value[i] -= cfg_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      }
      p->zero_grad();
    }
    ++idx;
  }
}

Trainer::Trainer(TlsiModel& model, const TrainConfig& cfg, const DatasetClock& clock)
    : model_(model), cfg_(cfg), clock_(clock), adam_(model.params(), cfg.adam),
      shuffle_rng_(cfg.seed ^ 0x5eedf00d) {}

static void clip_gradients(ParameterStore& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    if (p->trainable)
      for (std::size_t i = 0; i < p->grad.size(); ++i) sq += p->grad[i] * p->grad[i];
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (const auto& p : params)
    if (p->trainable)
      for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= s;
}

double Trainer::run_epoch(const std::vector<BehaviorSequence>& train, std::size_t epoch_index) {
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng_.shuffle(order);

  const bool dice = model_.config().activation == Activation::Dice;
  double loss_sum = 0.0;
  std::size_t seen = 0;

  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t bsz = std::min(cfg_.batch_size, order.size() - start);

    // Phase 1: per-example graphs up to the MLP hidden pre-activation, so the
    // adaptive activation can use this batch's statistics.
    std::vector<std::unique_ptr<Graph>> graphs(bsz);
    std::vector<ForwardTrace> traces(bsz);
    for (std::size_t b = 0; b < bsz; ++b) {
      graphs[b] = std::make_unique<Graph>();
      traces[b] = model_.build_forward(*graphs[b], train[order[start + b]], clock_);
    }

    NormStats batch_stats;
    if (dice) {
      const std::size_t h1 = model_.config().mlp_hidden;
      batch_stats.mean = Array::zeros({h1, 1});
      batch_stats.var = Array::zeros({h1, 1});
      if (bsz >= 2) {
        for (std::size_t i = 0; i < h1; ++i) {
          double m = 0.0;
          for (std::size_t b = 0; b < bsz; ++b) m += traces[b].preact->value[i];
          m /= static_cast<double>(bsz);
          double var = 0.0;
          for (std::size_t b = 0; b < bsz; ++b) {
            const double d = traces[b].preact->value[i] - m;
            var += d * d;
          }
          batch_stats.mean[i] = m;
          batch_stats.var[i] = var / static_cast<double>(bsz);
        }
        model_.update_dice_stats(batch_stats);
      }
    }

    // Phase 2: finish each graph, backprop, accumulate.
    std::vector<const Array*> head_inputs;
    head_inputs.reserve(bsz);
    for (std::size_t b = 0; b < bsz; ++b) {
      const BehaviorSequence& ex = train[order[start + b]];
      Graph& g = *graphs[b];
      Node* yhat = model_.finish_forward(g, traces[b], dice ? &batch_stats : nullptr);
      Node* l = model_.loss(g, yhat, ex.label);
      const double lv = l->value[0];
      if (!std::isfinite(lv)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch_index << ", batch " << start / cfg_.batch_size
            << ", example " << order[start + b] << "; parameter norms:";
        for (const auto& p : model_.params()) {
          double sq = 0.0;
          for (std::size_t i = 0; i < p->value.size(); ++i) sq += p->value[i] * p->value[i];
          msg << ' ' << p->name << '=' << std::sqrt(sq);
        }
        throw std::runtime_error(msg.str());
      }
      loss_sum += lv;
      g.backward(l);
      head_inputs.push_back(&traces[b].raw_head_input->value);
    }
    seen += bsz;

    // mean over the batch
    const double inv_b = 1.0 / static_cast<double>(bsz);
    for (const auto& p : model_.params())
      if (p->trainable)
        for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= inv_b;
    if (cfg_.clip_norm > 0.0) clip_gradients(model_.params(), cfg_.clip_norm);

    model_.update_head_input_stats(head_inputs);
    adam_.step();
  }
  return loss_sum / static_cast<double>(seen);
}

std::vector<EpochStats> Trainer::fit(const std::vector<BehaviorSequence>& train,
                                     const std::vector<BehaviorSequence>& val) {
  std::vector<EpochStats> trace;
  for (std::size_t e = 0; e < cfg_.epochs; ++e) {
    EpochStats st;
    st.epoch = e;
    st.train_loss = run_epoch(train, e);
    if (!val.empty()) {
      const MetricsReport r = evaluate(model_, val, clock_);
      st.has_val = true;
      st.val_auc = r.auc;
      st.val_logloss = r.logloss;
    }
    trace.push_back(st);
  }
  return trace;
}

MetricsReport evaluate(const TlsiModel& model, const std::vector<BehaviorSequence>& examples,
                       const DatasetClock& clock, const EvalOptions& opts) {
  if (examples.empty()) throw std::invalid_argument("evaluate: empty example set");
  std::vector<int> labels;
  std::vector<double> scores;
  labels.reserve(examples.size());
  scores.reserve(examples.size());

  MetricsReport report;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const BehaviorSequence& ex = examples[i];
    Graph g(/*grad_enabled=*/false);
    ForwardTrace tr;
    Node* yhat = model.forward(g, ex, clock, &tr);
    labels.push_back(ex.label);
    scores.push_back(yhat->value[0]);

    if (opts.dump_gates && tr.fusion_gate) {
      double mean = 0.0;
      for (std::size_t j = 0; j < tr.fusion_gate->value.size(); ++j)
        mean += tr.fusion_gate->value[j];
      mean /= static_cast<double>(tr.fusion_gate->value.size());
      report.gates.push_back(
          {i, mean, static_cast<double>(ex.target_time - ex.history.back().ts)});
    }
    if (opts.dump_attention && (tr.content_weights || tr.temporal_weights)) {
      const std::size_t n = tr.content_weights ? tr.content_weights->value.size()
                                               : tr.temporal_weights->value.size();
      for (std::size_t k = 0; k < n; ++k)
        report.attention.push_back({i, k,
                                    tr.content_weights ? tr.content_weights->value[k] : 0.0,
                                    tr.temporal_weights ? tr.temporal_weights->value[k] : 0.0});
    }
  }
  for (int y : labels) (y > 0 ? report.n_pos : report.n_neg)++;
  report.auc = auc(labels, scores);
  report.logloss = logloss(labels, scores);
  return report;
}

}  // namespace tlsi
