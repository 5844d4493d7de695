#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tglink/checkpoint.hpp"
#include "tglink/edgebank.hpp"
#include "tglink/metrics.hpp"
#include "tglink/model.hpp"
#include "tglink/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using nlohmann::json;
using namespace tglink;

std::string resolve_output_dir(const std::string& configured) {
  if (const char* env = std::getenv("TGLINK_OUTPUT_ROOT"); env && *env) return env;
  return configured;
}

std::pair<size_t, size_t> split_range(const DatasetSplit& split, const std::string& which) {
  if (which == "val") return {split.train_end, split.val_end};
  if (which == "test") return {split.val_end, split.test_end};
  throw std::runtime_error("unknown split: " + which);
}

void write_eval_csv(const std::string& path, const std::string& split,
                    const std::vector<std::pair<uint64_t, EvalReport>>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "split,seed,auc,loss,seconds\n";
  char buf[160];
  for (const auto& [seed, r] : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%.9g,%.9g,%.3f\n", split.c_str(),
                  static_cast<unsigned long long>(seed), r.auc, r.loss, r.seconds);
    out << buf;
  }
}

int cmd_train(const std::string& config_path) {
  RunConfig cfg = RunConfig::from_json_file(config_path);
  if (cfg.dataset.empty()) throw std::runtime_error("config is missing \"dataset\"");

  const TemporalGraph g = TemporalGraph::load_csv(cfg.dataset);
  std::fprintf(stderr, "dataset: %zu links, %zu nodes\n", g.links().size(), g.node_count());
  const DatasetSplit split = chronological_split(g, cfg.train_fraction, cfg.val_fraction);

  auto pipe = make_pipeline(g, split, cfg);
  const std::string out_root = resolve_output_dir(cfg.output_dir);
  const std::string run_dir =
      out_root + "/run-" + cfg.digest() + "-s" + std::to_string(cfg.seed);
  std::fprintf(stderr, "run dir: %s\n", run_dir.c_str());

  const TrainResult result = train_model(g, split, cfg, *pipe, run_dir, [](const EpochRow& r) {
    std::fprintf(stderr, "epoch %d  train_loss %.4f  val_auc %.4f  (%.1fs)\n", r.epoch,
                 r.train_loss, r.val_auc, r.seconds);
  });
  std::printf("best epoch %d, validation auc %.4f\n", result.best_epoch, result.best_val_auc);
  std::printf("artifacts: %s/{metrics.csv,checkpoint.bin,config.json}\n", run_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& ck_path, const std::string& dataset, const std::string& which,
             uint64_t seed, int repeats, const std::string& out_csv) {
  Checkpoint ck = load_checkpoint(ck_path);
  const TemporalGraph g = TemporalGraph::load_csv(dataset, /*write_sidecar=*/false);
  require_compatible(ck, g.node_labels());
  const DatasetSplit split =
      chronological_split(g, ck.config.train_fraction, ck.config.val_fraction);
  const auto [begin, end] = split_range(split, which);

  std::vector<std::pair<uint64_t, EvalReport>> reports;
  std::vector<double> aucs;
  for (int r = 0; r < repeats; ++r) {
    const uint64_t s = seed + static_cast<uint64_t>(r);
    EvalReport rep = evaluate_range(g, begin, end, *ck.pipeline, s);
    reports.emplace_back(s, rep);
    aucs.push_back(rep.auc);
    std::printf("%s seed=%llu auc=%.4f loss=%.4f (%.1fs)\n", which.c_str(),
                static_cast<unsigned long long>(s), rep.auc, rep.loss, rep.seconds);
  }
  if (repeats > 1) {
    double mean = 0.0;
    for (double a : aucs) mean += a;
    mean /= static_cast<double>(aucs.size());
    double var = 0.0;
    for (double a : aucs) var += (a - mean) * (a - mean);
    var /= static_cast<double>(aucs.size() - 1);
    std::printf("%s auc over %d seeds: %.4f (std %.4f)\n", which.c_str(), repeats, mean,
                std::sqrt(var));
  }
  if (!out_csv.empty()) write_eval_csv(out_csv, which, reports);
  return 0;
}

void write_heatmap_pgm(const std::string& path, const MatX<float>& cam) {
  const int l = static_cast<int>(cam.rows());
  const int scale = 16;
  const float lo = cam.minCoeff();
  const float hi = cam.maxCoeff();
  const float range = (hi - lo) > 0 ? (hi - lo) : 1.0f;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "P5\n" << l * scale << ' ' << l * scale << "\n255\n";
  for (int i = 0; i < l * scale; ++i) {
    for (int j = 0; j < l * scale; ++j) {
      const float v = (cam(i / scale, j / scale) - lo) / range;
      out.put(static_cast<char>(static_cast<int>(v * 255.0f)));
    }
  }
}

int cmd_explain(const std::string& ck_path, const std::string& dataset, int64_t index,
                const std::string& src_label, const std::string& dst_label,
                std::optional<double> time, const std::string& out_path,
                const std::string& heatmap_path, const std::string& cam_class) {
  Checkpoint ck = load_checkpoint(ck_path);
  const TemporalGraph g = TemporalGraph::load_csv(dataset, /*write_sidecar=*/false);
  require_compatible(ck, g.node_labels());

  Link query;
  if (index >= 0) {
    if (static_cast<size_t>(index) >= g.links().size()) {
      throw std::runtime_error("query not found: index " + std::to_string(index) +
                               " out of range (dataset has " +
                               std::to_string(g.links().size()) + " links)");
    }
    query = g.links()[static_cast<size_t>(index)];
  } else {
    const int64_t s = g.id_of(src_label);
    const int64_t o = g.id_of(dst_label);
    if (s < 0) throw std::runtime_error("query not found: unknown node label '" + src_label + "'");
    if (o < 0) throw std::runtime_error("query not found: unknown node label '" + dst_label + "'");
    if (!time) throw std::runtime_error("--time is required with --source/--dest");
    query = {static_cast<NodeId>(s), static_cast<NodeId>(o), *time};
  }

  Pipeline<float>& pipe = *ck.pipeline;
  const LinkSequence seq = pipe.build_sequence_for(g, query);
  const std::vector<LinkSequence> seqs{seq};
  const MatX<float> input = pipe.encode(seqs);
  const MatX<float>& logits = pipe.forward(input, 1, false);
  const double score = Pipeline<float>::positive_scores(logits)[0];

  const int cls = cam_class == "negative" ? 0 : 1;
  const MatX<float> cam = pipe.net().cam_map(cls, 0);
  const auto importance = link_importance(cam, seq.pad_count);

  json j;
  j["query"] = {{"source", g.label_of(query.source)},
                {"destination", g.label_of(query.destination)},
                {"timestamp", query.timestamp}};
  j["score"] = score;
  j["logits"] = {static_cast<double>(logits(0, 0)), static_cast<double>(logits(1, 0))};
  j["cam_class"] = cls == 1 ? "positive" : "negative";
  j["sequence_length"] = seq.length();
  json rows = json::array();
  for (int i = 0; i < seq.length(); ++i) {
    const SeqSlot& slot = seq.slots[static_cast<size_t>(i)];
    json row;
    row["slot"] = i;
    switch (slot.origin) {
      case SlotOrigin::Pad: row["origin"] = "pad"; break;
      case SlotOrigin::Nearest: row["origin"] = "nearest"; break;
      case SlotOrigin::Parametric: row["origin"] = "parametric"; break;
      case SlotOrigin::Query: row["origin"] = "query"; break;
    }
    if (slot.origin == SlotOrigin::Pad) {
      row["importance"] = nullptr;
    } else {
      row["source"] = g.label_of(slot.link.source);
      row["destination"] = g.label_of(slot.link.destination);
      row["timestamp"] = slot.link.timestamp;
      if (slot.stream_index >= 0) row["stream_index"] = slot.stream_index;
      row["importance"] = *importance[static_cast<size_t>(i)];
    }
    rows.push_back(row);
  }
  j["links"] = rows;

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  out << j.dump(2) << '\n';
  if (!heatmap_path.empty()) write_heatmap_pgm(heatmap_path, cam);
  std::printf("score %.4f, explanation written to %s\n", score, out_path.c_str());
  return 0;
}

int cmd_baseline(const std::string& dataset, uint64_t seed, bool undirected,
                 const std::string& out_csv) {
  const TemporalGraph g = TemporalGraph::load_csv(dataset, /*write_sidecar=*/false);
  const DatasetSplit split = chronological_split(g);
  const EvalReport rep = edgebank_eval(g, split, seed, !undirected);
  std::printf("edgebank auc=%.4f over %zu test links (%.2fs)\n", rep.auc, split.test_count(),
              rep.seconds);
  if (!out_csv.empty()) write_eval_csv(out_csv, "test", {{seed, rep}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal link prediction via attention-channel images"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker thread count (0 = library default)");

  std::string config_path;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "JSON config file")->required();

  std::string ck_path, dataset, which = "test", out_csv;
  uint64_t seed = 1;
  int repeats = 1;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ck_path, "checkpoint file")->required();
  eval->add_option("--dataset", dataset, "dataset csv")->required();
  eval->add_option("--split", which, "val or test")->check(CLI::IsMember({"val", "test"}));
  eval->add_option("--seed", seed, "negative-sampling seed");
  eval->add_option("--repeats", repeats, "average over this many seeds")
      ->check(CLI::PositiveNumber);
  eval->add_option("--out", out_csv, "write per-seed results csv");

  std::string ex_ck, ex_dataset, ex_src, ex_dst, ex_out = "explanation.json", ex_heatmap,
              ex_class = "positive";
  int64_t ex_index = -1;
  double ex_time = 0.0;
  auto* explain = app.add_subcommand("explain", "explain one prediction via CAM");
  explain->add_option("--checkpoint", ex_ck)->required();
  explain->add_option("--dataset", ex_dataset)->required();
  explain->add_option("--index", ex_index, "link index in the dataset");
  explain->add_option("--source", ex_src, "source node label");
  explain->add_option("--dest", ex_dst, "destination node label");
  auto* topt = explain->add_option("--time", ex_time, "query timestamp");
  explain->add_option("--out", ex_out, "output json path");
  explain->add_option("--heatmap", ex_heatmap, "optional CAM heatmap (pgm)");
  explain->add_option("--cam-class", ex_class)->check(CLI::IsMember({"positive", "negative"}));

  std::string b_dataset, b_out;
  uint64_t b_seed = 1;
  bool b_undirected = false;
  auto* baseline = app.add_subcommand("baseline", "EdgeBank memory baseline");
  baseline->add_option("--dataset", b_dataset)->required();
  baseline->add_option("--seed", b_seed, "negative-sampling seed");
  baseline->add_flag("--undirected", b_undirected, "treat pairs as undirected");
  baseline->add_option("--out", b_out, "write results csv");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Eigen::setNbThreads(threads);
  }

  try {
    if (*train) return cmd_train(config_path);
    if (*eval) return cmd_eval(ck_path, dataset, which, seed, repeats, out_csv);
    if (*explain) {
      std::optional<double> t;
      if (topt->count() > 0) t = ex_time;
      return cmd_explain(ex_ck, ex_dataset, ex_index, ex_src, ex_dst, t, ex_out, ex_heatmap,
                         ex_class);
    }
    if (*baseline) return cmd_baseline(b_dataset, b_seed, b_undirected, b_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
