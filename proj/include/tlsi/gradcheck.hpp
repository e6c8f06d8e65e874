#pragma once

#include <string>
#include <vector>

#include "tlsi/model.hpp"

namespace tlsi {

struct GradCheckOptions {
  std::size_t item_dim = 2;
  std::size_t cat_dim = 2;
  std::size_t hidden_dim = 4;  // equals item_dim + cat_dim for fusing variants
  std::size_t mlp_hidden = 6;
  std::size_t seq_len = 3;
  std::uint64_t seed = 7;
  double rtol = 1e-4;
  double step = 1e-3;
  Variant variant = Variant::Tlsi;
  Activation activation = Activation::Dice;
};

struct GradCheckGroup {
  std::string name;
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  bool all_pass = true;
  double worst_rel_err = 0.0;
};

// |fd - an| <= rtol * max(1e-3, |fd|, |an|); the floor keeps finite-difference
// round-off from failing near-zero gradients.
bool grad_matches(double fd, double analytic, double rtol);
double grad_rel_err(double fd, double analytic);

// Central finite differences of the full-model loss against the reverse-mode
// gradients, element by element, for every trainable parameter.
GradCheckReport gradcheck_model(const GradCheckOptions& opts);

}  // namespace tlsi
