#include "tglink/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "tglink/checkpoint.hpp"
#include "tglink/metrics.hpp"
#include "tglink/optimizer.hpp"

namespace tglink {

namespace {

constexpr uint64_t kValNegTag = 0x56414c;  // validation negative stream
constexpr uint64_t kEpochTag = 0x455050;   // per-epoch shuffle + fresh negatives

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<LinkSequence> build_sequences(const TemporalGraph& g, const Pipeline<float>& pipe,
                                          const std::vector<Link>& queries) {
  std::vector<LinkSequence> seqs(queries.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int64_t i = 0; i < static_cast<int64_t>(queries.size()); ++i) {
    seqs[static_cast<size_t>(i)] =
        pipe.build_sequence_for(g, queries[static_cast<size_t>(i)]);
  }
  return seqs;
}

// Shared by per-epoch validation (fixed negatives) and standalone evaluation.
EvalReport evaluate_with_negatives(const TemporalGraph& g, size_t begin, size_t end,
                                   Pipeline<float>& pipe, const std::vector<NodeId>& neg_dst) {
  const auto t0 = std::chrono::steady_clock::now();
  if (end <= begin) throw std::invalid_argument("evaluate: empty range");
  std::vector<double> pos_scores, neg_scores;
  pos_scores.reserve(end - begin);
  neg_scores.reserve(end - begin);
  double loss_sum = 0.0;

  const size_t chunk = 128;  // queries per forward (2x images)
  for (size_t c0 = begin; c0 < end; c0 += chunk) {
    const size_t c1 = std::min(end, c0 + chunk);
    const size_t m = c1 - c0;
    std::vector<Link> queries;
    queries.reserve(2 * m);
    std::vector<int> labels(2 * m, 0);
    for (size_t i = c0; i < c1; ++i) queries.push_back(g.links()[i]);
    for (size_t i = c0; i < c1; ++i) {
      Link neg = g.links()[i];
      neg.destination = neg_dst[i - begin];
      queries.push_back(neg);
    }
    std::fill(labels.begin(), labels.begin() + static_cast<ptrdiff_t>(m), 1);

    const auto seqs = build_sequences(g, pipe, queries);
    const MatX<float> input = pipe.encode(seqs);
    const MatX<float>& logits = pipe.forward(input, static_cast<int>(2 * m), false);
    loss_sum += Pipeline<float>::mean_cross_entropy(logits, labels) * static_cast<double>(2 * m);
    const auto scores = Pipeline<float>::positive_scores(logits);
    for (size_t i = 0; i < m; ++i) pos_scores.push_back(scores[i]);
    for (size_t i = 0; i < m; ++i) neg_scores.push_back(scores[m + i]);
  }

  EvalReport report;
  report.auc = roc_auc(pos_scores, neg_scores);
  report.loss = loss_sum / static_cast<double>(2 * (end - begin));
  report.seconds = elapsed_seconds(t0);
  return report;
}

using Snapshot = std::vector<std::vector<float>>;

Snapshot take_snapshot(Pipeline<float>& pipe) {
  Snapshot snap;
  for (const auto& r : pipe.trainable_params()) {
    snap.emplace_back(r.value, r.value + r.size);
  }
  for (const auto& r : pipe.state_buffers()) {
    snap.emplace_back(r.value, r.value + r.size);
  }
  return snap;
}

void restore_snapshot(Pipeline<float>& pipe, const Snapshot& snap) {
  size_t k = 0;
  for (auto& r : pipe.trainable_params()) {
    std::copy(snap[k].begin(), snap[k].end(), r.value);
    ++k;
  }
  for (auto& r : pipe.state_buffers()) {
    std::copy(snap[k].begin(), snap[k].end(), r.value);
    ++k;
  }
}

}  // namespace

double resolve_time_scale(const TemporalGraph& g, const DatasetSplit& split,
                          const RunConfig& cfg) {
  if (cfg.time_scale > 0.0) return cfg.time_scale;
  return g.mean_inter_event_time(split.train_begin, split.train_end);
}

std::unique_ptr<Pipeline<float>> make_pipeline(const TemporalGraph& g,
                                               const DatasetSplit& split, const RunConfig& cfg,
                                               const NetSpec& netspec) {
  SamplingConfig sampling;
  sampling.n_nearest = cfg.n_nearest;
  sampling.p_parametric = cfg.p_parametric;
  sampling.m_candidates = cfg.resolved_m();
  sampling.alpha = cfg.alpha;
  sampling.time_scale = resolve_time_scale(g, split, cfg);
  return std::make_unique<Pipeline<float>>(netspec, sampling, g.node_count(), cfg.embed_dim,
                                           cfg.seed);
}

TrainResult train_model(const TemporalGraph& g, const DatasetSplit& split,
                        const RunConfig& cfg, Pipeline<float>& pipe,
                        const std::string& run_dir, const EpochCallback& on_epoch) {
  cfg.validate();
  if (split.train_count() == 0) throw std::invalid_argument("train split is empty");
  if (split.val_count() == 0) throw std::invalid_argument("validation split is empty");

  const std::vector<NodeId> val_negs =
      seeded_negative_destinations(g, split.train_end, split.val_end,
                                   Rng::derive_seed(cfg.seed, kValNegTag));

  Adam<float> opt(cfg.learning_rate);
  const auto params = pipe.trainable_params();

  std::vector<size_t> order(split.train_count());
  std::iota(order.begin(), order.end(), split.train_begin);

  TrainResult result;
  result.best_val_auc = -1.0;
  Snapshot best;
  int no_improve = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng erng(Rng::derive_seed(cfg.seed, kEpochTag + static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[erng.uniform_index(i)]);
    }

    double loss_sum = 0.0;
    size_t example_count = 0;
    const size_t bs = static_cast<size_t>(cfg.batch_size);
    for (size_t start = 0; start < order.size(); start += bs) {
      const size_t stop = std::min(order.size(), start + bs);
      const size_t m = stop - start;
      std::vector<Link> queries;
      queries.reserve(2 * m);
      std::vector<int> labels(2 * m, 0);
      for (size_t i = start; i < stop; ++i) queries.push_back(g.links()[order[i]]);
      for (size_t i = start; i < stop; ++i) {
        queries.push_back(sample_negative(g, g.links()[order[i]], erng));
      }
      std::fill(labels.begin(), labels.begin() + static_cast<ptrdiff_t>(m), 1);

      const auto seqs = build_sequences(g, pipe, queries);
      const MatX<float> input = pipe.encode(seqs);
      const MatX<float>& logits = pipe.forward(input, static_cast<int>(2 * m), true);
      const double loss = Pipeline<float>::mean_cross_entropy(logits, labels);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(start / bs));
      }
      loss_sum += loss * static_cast<double>(2 * m);
      example_count += 2 * m;

      pipe.zero_grad();
      const MatX<float> d_logits = Pipeline<float>::cross_entropy_backward(logits, labels);
      pipe.backward(d_logits, seqs);
      opt.step(params);
    }

    const EvalReport val =
        evaluate_with_negatives(g, split.train_end, split.val_end, pipe, val_negs);

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(example_count);
    row.val_auc = val.auc;
    row.seconds = elapsed_seconds(t0);
    result.rows.push_back(row);
    if (on_epoch) on_epoch(row);

    if (val.auc > result.best_val_auc) {
      result.best_val_auc = val.auc;
      result.best_epoch = epoch;
      best = take_snapshot(pipe);
      no_improve = 0;
    } else if (++no_improve >= cfg.patience) {
      break;
    }
  }

  if (!best.empty()) restore_snapshot(pipe, best);

  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    write_metrics_csv(run_dir + "/metrics.csv", result.rows);
    save_checkpoint(run_dir + "/checkpoint.bin", cfg, pipe.sampling().time_scale,
                    g.node_labels(), pipe);
    std::ofstream cfg_out(run_dir + "/config.json");
    cfg_out << cfg.to_json() << '\n';
  }
  return result;
}

EvalReport evaluate_range(const TemporalGraph& g, size_t begin, size_t end,
                          Pipeline<float>& pipe, uint64_t seed) {
  return evaluate_with_negatives(g, begin, end, pipe,
                                 seeded_negative_destinations(g, begin, end, seed));
}

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << "epoch,train_loss,val_auc,epoch_seconds\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.3f\n", r.epoch, r.train_loss, r.val_auc,
                  r.seconds);
    out << buf;
  }
}

GradCheckReport gradient_check(bool corrupt_one_gradient) {
  // Small graph with repeat interactions so identity channels are non-trivial.
  const std::vector<Link> links = {
      {0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}, {0, 2, 4.0}, {3, 1, 5.0},
      {1, 0, 6.0}, {2, 0, 7.0}, {4, 2, 8.0}, {0, 3, 9.0}, {3, 4, 10.0},
  };
  const TemporalGraph g = TemporalGraph::from_links(links);

  NetSpec ns;
  ns.in_channels = kNumChannels;
  ns.width = 4;
  ns.head_channels = 6;
  ns.stage1_layers = 1;
  ns.stage2_layers = 1;
  ns.stage2_expansion = 2;

  SamplingConfig sampling;
  sampling.n_nearest = 4;  // l = 5
  sampling.p_parametric = 0;
  sampling.alpha = 5.0;
  sampling.time_scale = 1.0;

  Pipeline<double> pipe(ns, sampling, g.node_count(), /*embed_dim=*/3, /*seed=*/42);

  // Fixed batch: four positives from the tail, one negative each.
  Rng neg_rng(7);
  std::vector<Link> queries;
  std::vector<int> labels;
  for (size_t i = 6; i < 10; ++i) {
    queries.push_back(g.links()[i]);
    labels.push_back(1);
    queries.push_back(sample_negative(g, g.links()[i], neg_rng));
    labels.push_back(0);
  }
  std::vector<LinkSequence> seqs(queries.size());
  for (size_t i = 0; i < queries.size(); ++i) seqs[i] = pipe.build_sequence_for(g, queries[i]);

  const auto loss_of = [&]() {
    const MatX<double> input = pipe.encode(seqs);
    const MatX<double>& logits =
        pipe.forward(input, static_cast<int>(queries.size()), true, false);
    return Pipeline<double>::mean_cross_entropy(logits, labels);
  };

  // Analytic gradients.
  pipe.zero_grad();
  {
    const MatX<double> input = pipe.encode(seqs);
    const MatX<double>& logits =
        pipe.forward(input, static_cast<int>(queries.size()), true, false);
    const MatX<double> d_logits = Pipeline<double>::cross_entropy_backward(logits, labels);
    pipe.backward(d_logits, seqs);
  }
  auto params = pipe.trainable_params();
  std::vector<std::vector<double>> analytic;
  for (const auto& r : params) analytic.emplace_back(r.grad, r.grad + r.size);

  if (corrupt_one_gradient) {
    for (size_t k = 0; k < params.size(); ++k) {
      if (params[k].name == "stem.conv.weight") {
        analytic[k][0] += 0.05 * (std::abs(analytic[k][0]) + 1.0);
        break;
      }
    }
  }

  GradCheckReport report;
  for (size_t k = 0; k < params.size(); ++k) {
    double* v = params[k].value;
    for (Eigen::Index j = 0; j < params[k].size; ++j) {
      const double old = v[j];
      const double h = 1e-6 * std::max(1.0, std::abs(old));
      v[j] = old + h;
      const double lp = loss_of();
      v[j] = old - h;
      const double lm = loss_of();
      v[j] = old;
      const double fd = (lp - lm) / (2.0 * h);
      const double a = analytic[k][static_cast<size_t>(j)];
      const double rel = std::abs(a - fd) / std::max(1e-3, std::abs(a) + std::abs(fd));
      ++report.parameters_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[k].name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return report;
}

}  // namespace tglink
