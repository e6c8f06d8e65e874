#include "tlsi/gradcheck.hpp"

#include <cmath>

#include "tlsi/graph.hpp"

namespace tlsi {

double grad_rel_err(double fd, double analytic) {
  return std::fabs(fd - analytic) / std::max({1e-3, std::fabs(fd), std::fabs(analytic)});
}

bool grad_matches(double fd, double analytic, double rtol) {
  return grad_rel_err(fd, analytic) <= rtol;
}

GradCheckReport gradcheck_model(const GradCheckOptions& opts) {
  ModelConfig mc;
  mc.item_dim = opts.item_dim;
  mc.cat_dim = opts.cat_dim;
  mc.hidden_dim = opts.hidden_dim;
  mc.mlp_hidden = opts.mlp_hidden;
  mc.variant = opts.variant;
  mc.activation = opts.activation;

  const std::size_t n_items = 8, n_cats = 4;
  TlsiModel model(mc, n_items, n_cats, opts.seed);

  Rng rng(opts.seed * 2654435761ULL + 1);
  DatasetClock clock;
  clock.t_start = 1609718400;
  clock.span_seconds = 30LL * 86400;

  BehaviorSequence seq;
  seq.user = 1;
  Timestamp t = clock.t_start;
  for (std::size_t k = 0; k < opts.seq_len; ++k) {
    t += static_cast<Timestamp>(rng.below(3 * 86400)) + 1;
    BehaviorEvent ev;
    ev.user = 1;
    ev.item = 1 + static_cast<std::uint32_t>(rng.below(n_items - 1));
    ev.category = 1 + static_cast<std::uint32_t>(rng.below(n_cats - 1));
    ev.ts = t;
    seq.history.push_back(ev);
  }
  seq.target_item = 1 + static_cast<std::uint32_t>(rng.below(n_items - 1));
  seq.target_category = 1 + static_cast<std::uint32_t>(rng.below(n_cats - 1));
  seq.target_time = t + static_cast<Timestamp>(rng.below(2 * 86400)) + 1;
  seq.label = 1;

  auto loss_value = [&]() {
    Graph g(/*grad_enabled=*/false);
    Node* yhat = model.forward(g, seq, clock);
    return model.loss(g, yhat, seq.label)->value[0];
  };

  // analytic gradients
  model.params().zero_grads();
  {
    Graph g;
    Node* yhat = model.forward(g, seq, clock);
    g.backward(model.loss(g, yhat, seq.label));
  }

  GradCheckReport report;
  for (const auto& p : model.params()) {
    if (!p->trainable) continue;
    GradCheckGroup group;
    group.name = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + opts.step;
      const double f_plus = loss_value();
      p->value[i] = saved - opts.step;
      const double f_minus = loss_value();
      p->value[i] = saved;
      const double fd = (f_plus - f_minus) / (2.0 * opts.step);
      const double err = grad_rel_err(fd, p->grad[i]);
      group.max_rel_err = std::max(group.max_rel_err, err);
      ++group.checked;
    }
    group.pass = group.max_rel_err <= opts.rtol;
    report.worst_rel_err = std::max(report.worst_rel_err, group.max_rel_err);
    report.all_pass = report.all_pass && group.pass;
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace tlsi
