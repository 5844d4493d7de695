#pragma once

#include <vector>

namespace tglink {

// ROC-AUC of positive scores vs negative scores, ties counted 1/2
// (Mann-Whitney convention). Throws on empty input.
double roc_auc(const std::vector<double>& positive_scores,
               const std::vector<double>& negative_scores);

// Result of scoring one split: every positive paired with one seeded
// negative.
struct EvalReport {
  double auc = 0.0;
  double loss = 0.0;
  double seconds = 0.0;
  int epoch = 0;
};

}  // namespace tglink
