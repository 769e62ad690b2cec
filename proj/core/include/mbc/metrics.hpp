#ifndef MBC_METRICS_HPP_
#define MBC_METRICS_HPP_

#include <vector>

namespace mbc {

// Mann-Whitney rank AUC. Tied scores contribute half a win per tied
// positive-negative pair (average-rank convention). Throws
// UndefinedMetricError when only one class is present.
double auc(const std::vector<double>& scores,
           const std::vector<double>& labels);

// Mean BCE over samples, with the shared probability clamp.
double logloss(const std::vector<double>& probabilities,
               const std::vector<double>& labels);

}  // namespace mbc

#endif  // MBC_METRICS_HPP_
