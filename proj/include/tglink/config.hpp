#pragma once

#include <cstdint>
#include <string>

namespace tglink {

// Flat key/value run configuration. Unknown keys are rejected; every field
// has a documented default. `time_scale` 0 means auto (train-split mean
// inter-event time).
struct RunConfig {
  std::string dataset;
  std::string output_dir = "runs";
  int epochs = 50;
  int batch_size = 128;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
  int patience = 3;
  int n_nearest = 12;
  int p_parametric = 0;
  int m_candidates = 0;  // 0 = auto (4 * n_nearest)
  double alpha = 5.0;
  int embed_dim = 64;
  double time_scale = 0.0;  // 0 = auto
  double train_fraction = 0.7;
  double val_fraction = 0.1;

  int resolved_m() const { return m_candidates > 0 ? m_candidates : 4 * n_nearest; }

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json() const;
  void validate() const;

  // Short stable digest of the serialized config, used for run dir names.
  std::string digest() const;
};

}  // namespace tglink
