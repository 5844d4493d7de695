#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tglink/config.hpp"
#include "tglink/graph.hpp"
#include "tglink/metrics.hpp"
#include "tglink/pipeline.hpp"

namespace tglink {

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRow> rows;
  int best_epoch = 0;
  double best_val_auc = 0.0;
};

double resolve_time_scale(const TemporalGraph& g, const DatasetSplit& split,
                          const RunConfig& cfg);

std::unique_ptr<Pipeline<float>> make_pipeline(const TemporalGraph& g,
                                               const DatasetSplit& split, const RunConfig& cfg,
                                               const NetSpec& netspec = NetSpec{});

// Full training loop: shuffled batches of (positive, fresh negative) pairs,
// cross-entropy, Adam, per-epoch validation AUC against fixed negatives,
// early stopping, best-checkpoint restore. If run_dir is non-empty, writes
// metrics.csv, checkpoint.bin and config.json there.
using EpochCallback = std::function<void(const EpochRow&)>;
TrainResult train_model(const TemporalGraph& g, const DatasetSplit& split,
                        const RunConfig& cfg, Pipeline<float>& pipe,
                        const std::string& run_dir = "", const EpochCallback& on_epoch = {});

// Scores every link in [begin, end) plus one seeded negative each.
EvalReport evaluate_range(const TemporalGraph& g, size_t begin, size_t end,
                          Pipeline<float>& pipe, uint64_t seed);

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t parameters_checked = 0;
};

// Central finite differences vs analytic gradients on a reduced double
// precision pipeline. corrupt_one_gradient injects a known error into one
// convolution gradient as a negative control.
GradCheckReport gradient_check(bool corrupt_one_gradient = false);

}  // namespace tglink
