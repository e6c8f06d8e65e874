#include "tlsi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tlsi {

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc: size mismatch");
  const std::size_t n = labels.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y > 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: needs at least one positive and one negative");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average rank over each tie group; U statistic over positives
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] > 0) pos_rank_sum += avg_rank;
    i = j;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(const std::vector<int>& labels, const std::vector<double>& predictions,
               double eps) {
  if (labels.size() != predictions.size()) throw std::invalid_argument("logloss: size mismatch");
  if (labels.empty()) throw std::invalid_argument("logloss: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(predictions[i], eps, 1.0 - eps);
    sum += labels[i] > 0 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(labels.size());
}

}  // namespace tlsi
