#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "tglink/encoder.hpp"
#include "tglink/graph.hpp"

namespace tglink {

enum class SlotOrigin { Pad, Nearest, Parametric, Query };

struct SeqSlot {
  Link link{};
  int64_t stream_index = -1;  // index into TemporalGraph::links(); -1 for pad/query
  SlotOrigin origin = SlotOrigin::Pad;
};

// Exactly l = n + p + 1 slots in ascending timestamp order. Pad slots occupy
// the earliest positions; the query is always last.
struct LinkSequence {
  std::vector<SeqSlot> slots;
  int pad_count = 0;

  int length() const { return static_cast<int>(slots.size()); }
  bool is_pad(int i) const { return slots[static_cast<size_t>(i)].origin == SlotOrigin::Pad; }
  const SeqSlot& query() const { return slots.back(); }
};

// The n most recent links incident to the query endpoints before the query
// timestamp, as ascending stream indices.
inline std::vector<int64_t> nearest_sample(const TemporalGraph& g, const Link& query,
                                           size_t n) {
  const std::array<NodeId, 2> endpoints{query.source, query.destination};
  return g.history_before(endpoints, query.timestamp, n);
}

// Scores the m most recent incident links (minus those already taken by
// nearest sampling) by closeness to the query embedding and keeps the top p.
// Hard selection: gradients flow only through the chosen links downstream.
// Ties in closeness break toward more recent links. Returned ascending.
template <typename T>
std::vector<int64_t> parametric_sample(const TemporalGraph& g, const Link& query, size_t m,
                                       size_t p, const EncoderParams<T>& enc,
                                       double time_scale, size_t n_nearest) {
  if (m < p) throw std::invalid_argument("parametric_sample: m < p");
  if (p == 0) return {};
  const std::array<NodeId, 2> endpoints{query.source, query.destination};
  std::vector<int64_t> pool = g.history_before(endpoints, query.timestamp, m);
  // history_before returns ascending; the trailing n_nearest entries are
  // exactly the nearest sample for this query.
  const size_t drop = std::min(n_nearest, pool.size());
  pool.resize(pool.size() - drop);
  if (pool.empty()) return {};

  const VecX<T> q = link_embed(enc, query, query.timestamp, time_scale);
  std::vector<std::pair<T, int64_t>> scored;
  scored.reserve(pool.size());
  for (int64_t idx : pool) {
    const Link& h = g.links()[static_cast<size_t>(idx)];
    scored.emplace_back(closeness(q, link_embed(enc, h, query.timestamp, time_scale)), idx);
  }
  const size_t keep = std::min(p, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<ptrdiff_t>(keep),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second > b.second;  // recency tie-break
                    });
  std::vector<int64_t> chosen;
  chosen.reserve(keep);
  for (size_t i = 0; i < keep; ++i) chosen.push_back(scored[i].second);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Merges the two samples, left-pads to n + p slots and appends the query.
inline LinkSequence build_sequence(const TemporalGraph& g,
                                   const std::vector<int64_t>& nearest,
                                   const std::vector<int64_t>& parametric, const Link& query,
                                   size_t n, size_t p) {
  if (nearest.size() > n || parametric.size() > p) {
    throw std::invalid_argument("build_sequence: more sampled links than slots");
  }
  std::vector<SeqSlot> history;
  history.reserve(nearest.size() + parametric.size());
  for (int64_t idx : nearest) {
    history.push_back({g.links()[static_cast<size_t>(idx)], idx, SlotOrigin::Nearest});
  }
  for (int64_t idx : parametric) {
    if (std::find(nearest.begin(), nearest.end(), idx) != nearest.end()) {
      throw std::logic_error("build_sequence: link sampled by both nearest and parametric");
    }
    history.push_back({g.links()[static_cast<size_t>(idx)], idx, SlotOrigin::Parametric});
  }
  // Stream index orders chronologically with stable ties.
  std::sort(history.begin(), history.end(),
            [](const SeqSlot& a, const SeqSlot& b) { return a.stream_index < b.stream_index; });

  LinkSequence seq;
  const size_t l = n + p + 1;
  seq.pad_count = static_cast<int>(n + p - history.size());
  seq.slots.reserve(l);
  for (int i = 0; i < seq.pad_count; ++i) seq.slots.push_back(SeqSlot{});
  for (auto& s : history) seq.slots.push_back(std::move(s));
  seq.slots.push_back({query, -1, SlotOrigin::Query});
  return seq;
}

// One-call pipeline: nearest + parametric + assembly.
template <typename T>
LinkSequence sample_sequence(const TemporalGraph& g, const Link& query, size_t n, size_t p,
                             size_t m, const EncoderParams<T>& enc, double time_scale) {
  std::vector<int64_t> near = nearest_sample(g, query, n);
  std::vector<int64_t> para;
  if (p > 0) {
    para = parametric_sample(g, query, m, p, enc, time_scale, n);
  }
  return build_sequence(g, near, para, query, n, p);
}

}  // namespace tglink
