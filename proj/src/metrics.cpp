#include "tglink/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tglink {

double roc_auc(const std::vector<double>& positive_scores,
               const std::vector<double>& negative_scores) {
  const size_t n_pos = positive_scores.size();
  const size_t n_neg = negative_scores.size();
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: empty input");

  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> all;
  all.reserve(n_pos + n_neg);
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Rank sum with average ranks over tie groups == U statistic with
  // half-credit for ties.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (size_t k = i; k < j; ++k) {
      if (all[k].positive) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace tglink
