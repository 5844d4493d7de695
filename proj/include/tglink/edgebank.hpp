#pragma once

#include <cstdint>
#include <unordered_set>

#include "tglink/graph.hpp"
#include "tglink/metrics.hpp"

namespace tglink {

// Set of (source, destination) pairs observed so far. Grows monotonically as
// links stream in.
class EdgeMemory {
 public:
  explicit EdgeMemory(bool directed = true) : directed_(directed) {}

  void insert(NodeId source, NodeId destination) { pairs_.insert(key(source, destination)); }

  bool contains(NodeId source, NodeId destination) const {
    return pairs_.count(key(source, destination)) > 0;
  }

  size_t size() const { return pairs_.size(); }

 private:
  uint64_t key(NodeId a, NodeId b) const {
    if (!directed_ && a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
           static_cast<uint64_t>(static_cast<uint32_t>(b));
  }

  bool directed_;
  std::unordered_set<uint64_t> pairs_;
};

// 1 if the query pair has been seen before, else 0.
inline int edgebank_score(const EdgeMemory& memory, const Link& query) {
  return memory.contains(query.source, query.destination) ? 1 : 0;
}

// Streams links chronologically, scoring each test positive and its seeded
// negative against the memory of all strictly earlier links (train +
// validation + preceding test links).
EvalReport edgebank_eval(const TemporalGraph& g, const DatasetSplit& split, uint64_t seed,
                         bool directed = true);

}  // namespace tglink
