#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tglink/rng.hpp"

namespace tglink {

using NodeId = int32_t;

// One timestamped directed interaction.
struct Link {
  NodeId source = 0;
  NodeId destination = 0;
  double timestamp = 0.0;

  friend bool operator==(const Link&, const Link&) = default;
};

// Contiguous chronological index ranges over TemporalGraph::links().
struct DatasetSplit {
  size_t train_begin = 0;
  size_t train_end = 0;  // == val_begin
  size_t val_end = 0;    // == test_begin
  size_t test_end = 0;

  size_t train_count() const { return train_end - train_begin; }
  size_t val_count() const { return val_end - train_end; }
  size_t test_count() const { return test_end - val_end; }
};

// Immutable, chronologically sorted link store with per-node incidence
// indexes. Node ids are contiguous 0..node_count()-1, assigned by first
// appearance in the time-sorted stream so that save/load round-trips.
class TemporalGraph {
 public:
  // Parses `source,destination,timestamp` rows. A non-numeric first row is
  // treated as a header. Writes the label->id mapping to `<path>.nodemap.csv`
  // unless write_sidecar is false.
  static TemporalGraph load_csv(const std::string& path, bool write_sidecar = true);

  // Builds a graph from labeled rows (label strings, arbitrary order).
  static TemporalGraph from_rows(std::vector<std::string> sources,
                                 std::vector<std::string> destinations,
                                 std::vector<double> timestamps);

  // Convenience for tests and synthetic data: integer-labeled links.
  static TemporalGraph from_links(const std::vector<Link>& links);

  void save_csv(const std::string& path) const;
  void save_nodemap(const std::string& path) const;

  const std::vector<Link>& links() const { return links_; }
  size_t node_count() const { return labels_.size(); }
  const std::vector<std::string>& node_labels() const { return labels_; }
  const std::string& label_of(NodeId id) const { return labels_[static_cast<size_t>(id)]; }
  // -1 if the label is unknown.
  int64_t id_of(const std::string& label) const;

  // Link indices (ascending) in which `node` appears as source or destination.
  const std::vector<int64_t>& incident(NodeId node) const {
    return incidence_[static_cast<size_t>(node)];
  }

  // The k most recent links with timestamp strictly before t that touch any
  // node in `nodes`, as ascending stream indices. Ties at equal timestamp
  // keep original stream order.
  std::vector<int64_t> history_before(std::span<const NodeId> nodes, double t,
                                      size_t k) const;

  // Mean inter-event time over links [begin, end); 1.0 for degenerate ranges.
  double mean_inter_event_time(size_t begin, size_t end) const;

 private:
  std::vector<Link> links_;
  std::vector<std::string> labels_;
  std::vector<std::vector<int64_t>> incidence_;

  void build_incidence();
};

// 70/10/20 chronological split (floor for the train and validation
// boundaries, remainder to test). Throws if the graph has fewer than 10 links.
DatasetSplit chronological_split(const TemporalGraph& g, double train_fraction = 0.7,
                                 double val_fraction = 0.1);

// Corrupts the destination: (s, o_neg, t) with o_neg uniform over all nodes.
Link sample_negative(const TemporalGraph& g, const Link& positive, Rng& rng);

// One uniformly drawn negative destination per link in [begin, end), in index
// order. The same (graph, range, seed) always yields the same stream; the
// trained model and the EdgeBank baseline share it, so their AUCs are
// directly comparable.
std::vector<NodeId> seeded_negative_destinations(const TemporalGraph& g, size_t begin,
                                                 size_t end, uint64_t seed);

}  // namespace tglink
