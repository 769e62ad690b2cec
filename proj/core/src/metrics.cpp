#include "mbc/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mbc/errors.hpp"
#include "mbc/tape.hpp"

namespace mbc {

double auc(const std::vector<double>& scores,
           const std::vector<double>& labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("auc: scores/labels length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (double y : labels) n_pos += y == 1.0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError(
        "auc undefined: input contains a single class (" +
        std::to_string(n_pos) + " positives, " + std::to_string(n_neg) +
        " negatives)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Average ranks over tie runs; 1-based ranks.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // (i+1+j)/2
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1.0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) *
                       static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(const std::vector<double>& probabilities,
               const std::vector<double>& labels) {
  if (probabilities.size() != labels.size()) {
    throw ConfigError("logloss: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    s += bce_scalar(probabilities[i], labels[i]);
  return s / static_cast<double>(probabilities.size());
}

}  // namespace mbc
