#pragma once

#include <cstddef>
#include <vector>

namespace tlsi {

// Rank-based AUC; tied scores contribute half credit per pair. Throws when
// either class is empty.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

// Mean negative log-likelihood with predictions clipped to [eps, 1-eps].
double logloss(const std::vector<int>& labels, const std::vector<double>& predictions,
               double eps = 1e-7);

}  // namespace tlsi
