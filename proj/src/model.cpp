#include "tlsi/model.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace tlsi {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Tlsi: return "tlsi";
    case Variant::TlsiWoTp: return "tlsi-wo-tp";
    case Variant::TlsiL: return "tlsi-l";
    case Variant::TlsiLC: return "tlsi-l-c";
    case Variant::TlsiLT: return "tlsi-l-t";
    case Variant::TlsiS: return "tlsi-s";
    case Variant::TlsiF: return "tlsi-f";
    case Variant::Lstm: return "lstm";
    case Variant::MeanPool: return "meanpool";
  }
  return "?";
}

std::optional<Variant> parse_variant(const std::string& name) {
  for (Variant v : {Variant::Tlsi, Variant::TlsiWoTp, Variant::TlsiL, Variant::TlsiLC,
                    Variant::TlsiLT, Variant::TlsiS, Variant::TlsiF, Variant::Lstm,
                    Variant::MeanPool})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

bool ModelConfig::uses_long() const {
  switch (variant) {
    case Variant::Tlsi:
    case Variant::TlsiWoTp:
    case Variant::TlsiL:
    case Variant::TlsiLC:
    case Variant::TlsiLT:
    case Variant::TlsiF:
      return true;
    default:
      return false;
  }
}

bool ModelConfig::uses_short() const {
  switch (variant) {
    case Variant::Tlsi:
    case Variant::TlsiWoTp:
    case Variant::TlsiS:
    case Variant::TlsiF:
    case Variant::Lstm:
      return true;
    default:
      return false;
  }
}

bool ModelConfig::uses_pooling() const { return uses_short() && variant != Variant::Lstm; }

bool ModelConfig::uses_time_gates() const { return uses_short() && variant != Variant::Lstm; }

bool ModelConfig::uses_fusion() const {
  return variant == Variant::Tlsi || variant == Variant::TlsiWoTp || variant == Variant::TlsiF;
}

std::size_t ModelConfig::final_dim() const {
  switch (variant) {
    case Variant::Tlsi:
    case Variant::TlsiWoTp:
      return 3 * behavior_dim();
    case Variant::TlsiL:
    case Variant::TlsiLC:
    case Variant::TlsiLT:
    case Variant::MeanPool:
      return behavior_dim();
    case Variant::TlsiS:
    case Variant::Lstm:
      return hidden_dim;
    case Variant::TlsiF:
      return behavior_dim();
  }
  return 0;
}

void ModelConfig::validate() const {
  if (item_dim == 0 || cat_dim == 0 || hidden_dim == 0 || mlp_hidden == 0)
    throw std::invalid_argument("ModelConfig: zero dimension");
  if (max_len == 0 || max_len_long == 0)
    throw std::invalid_argument("ModelConfig: zero sequence window");
  if (uses_fusion() && hidden_dim != behavior_dim())
    throw std::invalid_argument(
        "ModelConfig: fusing variants need hidden_dim == item_dim + cat_dim (" +
        std::to_string(hidden_dim) + " vs " + std::to_string(behavior_dim()) + ")");
}

static Array uniform_init(Rng& rng, std::vector<std::size_t> shape, double scale) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-scale, scale);
  return a;
}

// QR of a square Gaussian matrix via modified Gram-Schmidt, diag(R) > 0.
static Array orthogonal_init(Rng& rng, std::size_t d) {
  Array q({d, d});
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = rng.normal();
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += q.at(i, j) * q.at(i, k);
      for (std::size_t i = 0; i < d; ++i) q.at(i, j) -= dot * q.at(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += q.at(i, j) * q.at(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    const double s = (q.at(j, j) >= 0.0 ? 1.0 : -1.0) / norm;
    for (std::size_t i = 0; i < d; ++i) q.at(i, j) *= s;
  }
  return q;
}

TlsiModel::TlsiModel(const ModelConfig& cfg, std::size_t n_items, std::size_t n_categories,
                     std::uint64_t init_seed)
    : cfg_(cfg) {
  cfg_.validate();
  if (n_items < 2 || n_categories < 1) throw std::invalid_argument("TlsiModel: empty vocabulary");
  Rng rng(init_seed);
  const std::size_t db = cfg_.behavior_dim(), dh = cfg_.hidden_dim;
  const double s = cfg_.init_scale;

  auto uni = [&](const std::string& name, std::vector<std::size_t> shape) {
    return &params_.create(name, uniform_init(rng, std::move(shape), s));
  };
  auto zeros = [&](const std::string& name, std::vector<std::size_t> shape) {
    return &params_.create(name, Array::zeros(std::move(shape)));
  };
  auto ortho = [&](const std::string& name) {
    return &params_.create(name, orthogonal_init(rng, dh));
  };

  item_emb_ = uni("emb.item", {n_items, cfg_.item_dim});
  cat_emb_ = uni("emb.category", {n_categories, cfg_.cat_dim});

  if (cfg_.uses_long()) {
    if (cfg_.variant != Variant::TlsiLT) long_wc_ = uni("long.W_c", {db, db});
    if (cfg_.variant != Variant::TlsiLC)
      long_wt_ = uni("long.W_t", {kTimeFeatureDim, kTimeFeatureDim});
  }

  if (cfg_.uses_short()) {
    w_f_ = uni("lstm.W_f", {dh, db});
    u_f_ = ortho("lstm.U_f");
    b_f_ = &params_.create("lstm.b_f", Array::full({dh, 1}, 1.0));
    w_i_ = uni("lstm.W_i", {dh, db});
    u_i_ = ortho("lstm.U_i");
    b_i_ = zeros("lstm.b_i", {dh, 1});
    w_c_ = uni("lstm.W_c", {dh, db});
    u_c_ = ortho("lstm.U_c");
    b_c_ = zeros("lstm.b_c", {dh, 1});
    w_o_ = uni("lstm.W_o", {dh, db});
    u_o_ = ortho("lstm.U_o");
    b_o_ = zeros("lstm.b_o", {dh, 1});
    if (cfg_.uses_time_gates()) {
      w_delta_ = uni("time.W_delta", {dh, kTimeFeatureDim});
      b_delta_ = zeros("time.b_delta", {dh, 1});
      w_span_ = uni("time.W_s", {dh, kTimeFeatureDim});
      b_span_ = zeros("time.b_s", {dh, 1});
      w_xd_ = uni("gate.W_xd", {dh, db});
      w_td_ = uni("gate.W_td", {dh, dh});
      b_td_ = zeros("gate.b_td", {dh, 1});
      w_xs_ = uni("gate.W_xs", {dh, db});
      w_ts_ = uni("gate.W_ts", {dh, dh});
      b_ts_ = zeros("gate.b_ts", {dh, 1});
      w_do_ = uni("gate.W_do", {dh, dh});
      w_so_ = uni("gate.W_so", {dh, dh});
    }
    if (cfg_.uses_pooling()) pool_wh_ = uni("pool.W_h", {dh, db});
  }

  if (cfg_.uses_fusion()) {
    fuse_wg_ = uni("fuse.W_g", {db, db + dh + cfg_.context_dim()});
    fuse_bg_ = zeros("fuse.b_g", {db, 1});
  }

  head_w1_ = uni("head.W1", {cfg_.mlp_hidden, cfg_.head_input_dim()});
  head_b1_ = zeros("head.b1", {cfg_.mlp_hidden, 1});
  const double alpha0 = cfg_.activation == Activation::Prelu ? 0.25 : 0.0;
  head_alpha_ = &params_.create("head.alpha", Array::full({cfg_.mlp_hidden, 1}, alpha0));
  head_w2_ = uni("head.W2", {1, cfg_.mlp_hidden});
  head_b2_ = zeros("head.b2", {1, 1});

  if (cfg_.standardize_head_input) {
    in_mean_ = &params_.create("stats.input_mean", Array::zeros({cfg_.head_input_dim(), 1}), false);
    in_var_ = &params_.create("stats.input_var", Array::full({cfg_.head_input_dim(), 1}, 1.0), false);
  }
  if (cfg_.activation == Activation::Dice) {
    dice_mean_ = &params_.create("stats.dice_mean", Array::zeros({cfg_.mlp_hidden, 1}), false);
    dice_var_ = &params_.create("stats.dice_var", Array::full({cfg_.mlp_hidden, 1}, 1.0), false);
  }
}

std::array<double, kTimeFeatureDim> TlsiModel::effective_features(
    Timestamp t, const DatasetClock& clock) const {
  auto f = time_features(t, clock).normalized;
  if (cfg_.wo_tp())
    for (std::size_t i = 1; i < kTimeFeatureDim; ++i) f[i] = 1.0;
  return f;
}

std::array<double, kTimeFeatureDim> TlsiModel::effective_sim(Timestamp t1, Timestamp t2,
                                                             const DatasetClock& clock) const {
  const auto a = effective_features(t1, clock);
  const auto b = effective_features(t2, clock);
  std::array<double, kTimeFeatureDim> out;
  for (std::size_t i = 0; i < kTimeFeatureDim; ++i) out[i] = std::fabs(a[i] - b[i]);
  return out;
}

Node* TlsiModel::column(Graph& g, Node* flat) const {
  return g.reshape(flat, {flat->value.size(), 1});
}

Node* TlsiModel::behavior_embedding(Graph& g, std::uint32_t item, std::uint32_t category) const {
  Node* xi = g.gather(*item_emb_, item);
  Node* xc = g.gather(*cat_emb_, category);
  return g.concat({xi, xc}, 0);  // [d_b]
}

namespace {

Node* feature_column(Graph& g, const std::array<double, kTimeFeatureDim>& f) {
  return g.input(Array({kTimeFeatureDim, 1}, std::vector<double>(f.begin(), f.end())));
}

struct AffineParams {
  Parameter *w, *u, *b;
};

}  // namespace

ForwardTrace TlsiModel::build_forward(Graph& g, const BehaviorSequence& seq,
                                      const DatasetClock& clock) const {
  if (seq.history.empty()) throw std::invalid_argument("forward: empty history");
  ForwardTrace trace;
  const std::size_t db = cfg_.behavior_dim(), dh = cfg_.hidden_dim;
  const std::size_t n = seq.history.size();
  const std::size_t n_long = std::min(n, cfg_.max_len_long);
  const std::size_t n_short = std::min(n, cfg_.max_len);

  // behavior embeddings for the window that any submodule can see
  const std::size_t n_all = std::max(n_long, n_short);
  std::vector<Node*> x;  // [d_b] each, oldest first, last n_all events
  x.reserve(n_all);
  for (std::size_t k = n - n_all; k < n; ++k)
    x.push_back(behavior_embedding(g, seq.history[k].item, seq.history[k].category));
  auto event_at = [&](std::size_t offset_from_end) -> const BehaviorEvent& {
    return seq.history[n - 1 - offset_from_end];
  };
  auto x_at = [&](std::size_t offset_from_end) { return x[n_all - 1 - offset_from_end]; };

  Node* xp_flat = behavior_embedding(g, seq.target_item, seq.target_category);
  Node* xp = column(g, xp_flat);  // [d_b, 1]
  const auto tp_features = effective_features(seq.target_time, clock);

  Node* p_long = nullptr;
  if (cfg_.uses_long()) {
    std::vector<Node*> rows(n_long);
    for (std::size_t k = 0; k < n_long; ++k)
      rows[k] = g.reshape(x_at(n_long - 1 - k), {1, db});
    Node* hist = g.concat(std::span<Node* const>(rows.data(), rows.size()), 0);  // [n_long, d_b]

    Node* weights = nullptr;
    if (long_wc_) {
      Node* logits_c = g.matmul(g.matmul(hist, g.param(*long_wc_)), xp);
      trace.content_weights = g.softmax(logits_c);
      weights = trace.content_weights;
    }
    if (long_wt_) {
      Array tmat({n_long, kTimeFeatureDim});
      for (std::size_t k = 0; k < n_long; ++k) {
        const auto f = effective_features(seq.history[n - n_long + k].ts, clock);
        for (std::size_t j = 0; j < kTimeFeatureDim; ++j) tmat.at(k, j) = f[j];
      }
      Node* logits_t = g.matmul(g.matmul(g.input(std::move(tmat)), g.param(*long_wt_)),
                                feature_column(g, tp_features));
      trace.temporal_weights = g.softmax(logits_t);
      weights = weights ? g.add(weights, trace.temporal_weights) : trace.temporal_weights;
    }
    p_long = g.reshape(g.matmul(g.reshape(weights, {1, n_long}), hist), {db, 1});
  }

  Node* p_short = nullptr;
  if (cfg_.uses_short()) {
    Node* h = g.input(Array::zeros({dh, 1}));
    Node* c = g.input(Array::zeros({dh, 1}));
    const bool time_aware = cfg_.uses_time_gates();
    std::vector<Node*> hidden;
    hidden.reserve(n_short);

    auto gate = [&](const AffineParams& p, Node* xk, Node* extra1 = nullptr,
                    Node* extra2 = nullptr) {
      Node* z = g.add(g.matmul(g.param(*p.w), xk), g.matmul(g.param(*p.u), h));
      if (extra1) z = g.add(z, extra1);
      if (extra2) z = g.add(z, extra2);
      return g.add(z, g.param(*p.b));
    };

    for (std::size_t k = 0; k < n_short; ++k) {
      const BehaviorEvent& ev = seq.history[n - n_short + k];
      Node* xk = column(g, x_at(n_short - 1 - k));

      Node *t_delta = nullptr, *t_span = nullptr, *delta = nullptr, *span = nullptr;
      if (time_aware) {
        // first step: sim with itself, i.e. a zero vector
        const Timestamp t_prev = k == 0 ? ev.ts : seq.history[n - n_short + k - 1].ts;
        delta = g.tanh(g.add(g.matmul(g.param(*w_delta_),
                                      feature_column(g, effective_sim(t_prev, ev.ts, clock))),
                             g.param(*b_delta_)));
        span = g.tanh(g.add(g.matmul(g.param(*w_span_),
                                     feature_column(g, effective_sim(ev.ts, seq.target_time, clock))),
                            g.param(*b_span_)));
        if (cfg_.force_unit_time_gates) {
          t_delta = g.input(Array::full({dh, 1}, 1.0));
          t_span = g.input(Array::full({dh, 1}, 1.0));
        } else {
          t_delta = g.sigmoid(g.add(g.add(g.matmul(g.param(*w_xd_), xk),
                                          g.matmul(g.param(*w_td_), delta)),
                                    g.param(*b_td_)));
          t_span = g.sigmoid(g.add(g.add(g.matmul(g.param(*w_xs_), xk),
                                         g.matmul(g.param(*w_ts_), span)),
                                   g.param(*b_ts_)));
        }
      }

      Node* f = g.sigmoid(gate({w_f_, u_f_, b_f_}, xk));
      Node* i = g.sigmoid(gate({w_i_, u_i_, b_i_}, xk));
      Node* cand = g.tanh(gate({w_c_, u_c_, b_c_}, xk));
      Node* o;
      if (time_aware) {
        c = g.add(g.mul(g.mul(f, t_delta), c), g.mul(g.mul(i, t_span), cand));
        o = g.sigmoid(gate({w_o_, u_o_, b_o_}, xk, g.matmul(g.param(*w_do_), delta),
                           g.matmul(g.param(*w_so_), span)));
      } else {
        c = g.add(g.mul(f, c), g.mul(i, cand));
        o = g.sigmoid(gate({w_o_, u_o_, b_o_}, xk));
      }
      h = g.mul(o, g.tanh(c));
      hidden.push_back(h);
    }
    trace.hidden_states = hidden;

    if (cfg_.uses_pooling()) {
      std::vector<Node*> rows(n_short);
      for (std::size_t k = 0; k < n_short; ++k) rows[k] = g.reshape(hidden[k], {1, dh});
      Node* hs = g.concat(std::span<Node* const>(rows.data(), rows.size()), 0);  // [n_short, d_h]
      Node* logits = g.matmul(g.matmul(hs, g.param(*pool_wh_)), xp);
      trace.pooling_weights = g.softmax(logits);
      p_short = g.reshape(g.matmul(g.reshape(trace.pooling_weights, {1, n_short}), hs), {dh, 1});
    } else {
      p_short = hidden.back();
    }
  }

  Node* p_final = nullptr;
  if (cfg_.uses_fusion()) {
    const double recency = static_cast<double>(seq.target_time - seq.history.back().ts) /
                           static_cast<double>(clock.span_seconds);
    Node* ctx = g.concat({xp, feature_column(g, tp_features),
                          g.input(Array({1, 1}, {recency}))},
                         0);
    Node* gin = g.concat({p_long, p_short, ctx}, 0);
    Node* alpha = g.sigmoid(g.add(g.matmul(g.param(*fuse_wg_), gin), g.param(*fuse_bg_)));
    trace.fusion_gate = alpha;
    Node* ones = g.input(Array::full({db, 1}, 1.0));
    Node* p_fused = g.add(g.mul(alpha, p_long), g.mul(g.sub(ones, alpha), p_short));
    if (cfg_.variant == Variant::TlsiF)
      p_final = p_fused;
    else
      p_final = g.concat({p_long, p_short, p_fused}, 0);
  } else {
    switch (cfg_.variant) {
      case Variant::TlsiL:
      case Variant::TlsiLC:
      case Variant::TlsiLT:
        p_final = p_long;
        break;
      case Variant::TlsiS:
      case Variant::Lstm:
        p_final = p_short;
        break;
      case Variant::MeanPool: {
        std::vector<Node*> rows(n_long);
        for (std::size_t k = 0; k < n_long; ++k)
          rows[k] = g.reshape(x_at(n_long - 1 - k), {1, db});
        Node* hist = g.concat(std::span<Node* const>(rows.data(), rows.size()), 0);
        Node* mean_w = g.input(Array::full({1, n_long}, 1.0 / static_cast<double>(n_long)));
        p_final = g.reshape(g.matmul(mean_w, hist), {db, 1});
        break;
      }
      default:
        throw std::logic_error("forward: variant without a final interest vector");
    }
  }

  Node* z = g.concat({p_final, xp}, 0);  // [final + d_b, 1]
  trace.raw_head_input = z;
  if (cfg_.standardize_head_input) {
    const NormStats st = head_input_stats();
    Array inv({z->value.size(), 1});
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / std::sqrt(st.var[i] + kNormEps);
    Array mean({z->value.size(), 1}, st.mean.values());
    z = g.mul(g.sub(z, g.input(std::move(mean))), g.input(std::move(inv)));
  }
  trace.preact = g.add(g.matmul(g.param(*head_w1_), z), g.param(*head_b1_));
  return trace;
}

Node* TlsiModel::finish_forward(Graph& g, ForwardTrace& trace, const NormStats* stats) const {
  Node* xact = trace.preact;
  Node* out = nullptr;
  if (cfg_.activation == Activation::Dice) {
    const std::size_t h1 = cfg_.mlp_hidden;
    Array mean({h1, 1});
    Array inv({h1, 1});
    if (stats) {
      for (std::size_t i = 0; i < h1; ++i) {
        mean[i] = stats->mean[i];
        // zero batch variance (e.g. a batch of one) pins p at sigmoid(0) = 0.5
        inv[i] = stats->var[i] > 0.0 ? 1.0 / std::sqrt(stats->var[i] + kNormEps) : 0.0;
      }
    }  // no stats: mean 0, inv 0 -> p = 0.5
    Node* p = g.sigmoid(g.mul(g.sub(xact, g.input(std::move(mean))), g.input(std::move(inv))));
    Node* ones = g.input(Array::full({h1, 1}, 1.0));
    out = g.add(g.mul(p, xact), g.mul(g.mul(g.sub(ones, p), g.param(*head_alpha_)), xact));
  } else {
    Node* a = g.abs(xact);
    Node* pos = g.scale(g.add(xact, a), 0.5);
    Node* neg = g.scale(g.sub(xact, a), 0.5);
    out = g.add(pos, g.mul(g.param(*head_alpha_), neg));
  }
  Node* logit = g.add(g.matmul(g.param(*head_w2_), out), g.param(*head_b2_));
  trace.yhat = g.sigmoid(logit);
  return trace.yhat;
}

Node* TlsiModel::forward(Graph& g, const BehaviorSequence& seq, const DatasetClock& clock,
                         ForwardTrace* trace_out) const {
  ForwardTrace trace = build_forward(g, seq, clock);
  NormStats st;
  const NormStats* stp = nullptr;
  if (cfg_.activation == Activation::Dice) {
    st = dice_stats();
    stp = &st;
  }
  Node* yhat = finish_forward(g, trace, stp);
  if (trace_out) *trace_out = trace;
  return yhat;
}

std::vector<Array> TlsiModel::unroll_states(const BehaviorSequence& seq,
                                            const DatasetClock& clock) const {
  if (!cfg_.uses_short()) throw std::logic_error("unroll_states: variant has no recurrent module");
  Graph g(/*grad_enabled=*/false);
  ForwardTrace trace = build_forward(g, seq, clock);
  std::vector<Array> out;
  out.reserve(trace.hidden_states.size());
  for (Node* h : trace.hidden_states) out.push_back(h->value);
  return out;
}

Node* TlsiModel::loss(Graph& g, Node* yhat, int label) const {
  constexpr double eps = 1e-7;
  Node* p = yhat;
  if (label == 0) p = g.sub(g.input(Array::scalar(1.0)), yhat);
  return g.scale(g.log(g.clip(p, eps, 1.0 - eps)), -1.0);
}

NormStats TlsiModel::head_input_stats() const {
  if (!in_mean_) throw std::logic_error("head input standardization is disabled");
  return {in_mean_->value, in_var_->value};
}

NormStats TlsiModel::dice_stats() const {
  if (!dice_mean_) throw std::logic_error("dice statistics unavailable for this activation");
  return {dice_mean_->value, dice_var_->value};
}

static void update_running(Parameter& mean, Parameter& var,
                           const std::vector<const Array*>& batch, double momentum) {
  const std::size_t b = batch.size();
  if (b < 2) return;  // a single example carries no spread information
  const std::size_t d = mean.value.size();
  for (std::size_t i = 0; i < d; ++i) {
    double m = 0.0;
    for (const Array* a : batch) m += (*a)[i];
    m /= static_cast<double>(b);
    double v = 0.0;
    for (const Array* a : batch) {
      const double dlt = (*a)[i] - m;
      v += dlt * dlt;
    }
    v /= static_cast<double>(b);
    mean.value[i] = momentum * mean.value[i] + (1.0 - momentum) * m;
    var.value[i] = momentum * var.value[i] + (1.0 - momentum) * v;
  }
}

void TlsiModel::update_head_input_stats(const std::vector<const Array*>& batch_inputs) {
  if (!in_mean_) return;
  update_running(*in_mean_, *in_var_, batch_inputs, kStatsMomentum);
}

void TlsiModel::update_dice_stats(const NormStats& batch) {
  if (!dice_mean_) return;
  for (std::size_t i = 0; i < dice_mean_->value.size(); ++i) {
    dice_mean_->value[i] = kStatsMomentum * dice_mean_->value[i] + (1.0 - kStatsMomentum) * batch.mean[i];
    dice_var_->value[i] = kStatsMomentum * dice_var_->value[i] + (1.0 - kStatsMomentum) * batch.var[i];
  }
}

}  // namespace tlsi
