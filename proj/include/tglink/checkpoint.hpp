#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tglink/config.hpp"
#include "tglink/pipeline.hpp"

namespace tglink {

// A loaded checkpoint: the config snapshot it was trained with, the resolved
// time scale, the architecture, the node-id map it is bound to, and the
// reconstructed pipeline (parameters restored bit-exactly).
struct Checkpoint {
  RunConfig config;
  double time_scale = 1.0;
  NetSpec netspec;
  std::vector<std::string> node_labels;
  std::unique_ptr<Pipeline<float>> pipeline;
};

void save_checkpoint(const std::string& path, const RunConfig& config, double time_scale,
                     const std::vector<std::string>& node_labels, Pipeline<float>& pipeline);

Checkpoint load_checkpoint(const std::string& path);

// Throws if the checkpoint's node map does not match the dataset's.
void require_compatible(const Checkpoint& ck, const std::vector<std::string>& dataset_labels);

}  // namespace tglink
