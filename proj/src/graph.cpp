#include "tglink/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace tglink {

namespace {

struct RawRow {
  std::string source;
  std::string destination;
  double timestamp;
};

bool parse_double(std::string_view s, double& out) {
  // from_chars<double> handles plain and scientific notation, no locale.
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

TemporalGraph TemporalGraph::from_rows(std::vector<std::string> sources,
                                       std::vector<std::string> destinations,
                                       std::vector<double> timestamps) {
  const size_t n = timestamps.size();
  if (sources.size() != n || destinations.size() != n) {
    throw std::invalid_argument("from_rows: column lengths differ");
  }
  if (n < 2) {
    throw std::invalid_argument("dataset needs at least 2 links");
  }
  for (double t : timestamps) {
    if (!std::isfinite(t)) throw std::invalid_argument("non-finite timestamp");
  }

  // Stable sort by timestamp; ties keep input order.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return timestamps[a] < timestamps[b]; });

  // Ids follow first appearance in the sorted stream, so re-serializing the
  // sorted links and reloading reproduces the same ids.
  TemporalGraph g;
  std::unordered_map<std::string, NodeId> to_id;
  to_id.reserve(n * 2);
  g.links_.reserve(n);
  auto intern = [&](std::string& label) -> NodeId {
    auto it = to_id.find(label);
    if (it != to_id.end()) return it->second;
    NodeId id = static_cast<NodeId>(g.labels_.size());
    to_id.emplace(label, id);
    g.labels_.push_back(std::move(label));
    return id;
  };
  for (size_t idx : order) {
    Link link;
    link.source = intern(sources[idx]);
    link.destination = intern(destinations[idx]);
    link.timestamp = timestamps[idx];
    g.links_.push_back(link);
  }
  g.build_incidence();
  return g;
}

TemporalGraph TemporalGraph::from_links(const std::vector<Link>& links) {
  std::vector<std::string> src, dst;
  std::vector<double> ts;
  src.reserve(links.size());
  dst.reserve(links.size());
  ts.reserve(links.size());
  for (const Link& l : links) {
    src.push_back(std::to_string(l.source));
    dst.push_back(std::to_string(l.destination));
    ts.push_back(l.timestamp);
  }
  return from_rows(std::move(src), std::move(dst), std::move(ts));
}

TemporalGraph TemporalGraph::load_csv(const std::string& path, bool write_sidecar) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::vector<std::string> sources, destinations;
  std::vector<double> timestamps;
  std::string line;
  size_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto fields = split_fields(sv);
    if (fields.size() < 3) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected source,destination,timestamp");
    }
    double t;
    if (!parse_double(trim(fields[2]), t)) {
      if (first_data_line) {
        // Non-numeric timestamp column on the first row: header, skip it.
        first_data_line = false;
        continue;
      }
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad timestamp '" + std::string(trim(fields[2])) + "'");
    }
    if (!std::isfinite(t)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-finite timestamp");
    }
    first_data_line = false;
    sources.emplace_back(trim(fields[0]));
    destinations.emplace_back(trim(fields[1]));
    timestamps.push_back(t);
  }
  if (timestamps.empty()) throw std::runtime_error("empty dataset file: " + path);
  if (timestamps.size() < 2) throw std::runtime_error("dataset needs at least 2 links: " + path);

  TemporalGraph g = from_rows(std::move(sources), std::move(destinations), std::move(timestamps));
  if (write_sidecar) {
    g.save_nodemap(path + ".nodemap.csv");
  }
  return g;
}

void TemporalGraph::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "source,destination,timestamp\n";
  char buf[32];
  for (const Link& l : links_) {
    std::snprintf(buf, sizeof(buf), "%.17g", l.timestamp);
    out << labels_[static_cast<size_t>(l.source)] << ','
        << labels_[static_cast<size_t>(l.destination)] << ',' << buf << '\n';
  }
}

void TemporalGraph::save_nodemap(const std::string& path) const {
  std::ofstream out(path);
  if (!out) return;  // sidecar is best-effort (read-only dataset dirs)
  out << "original_label,assigned_id\n";
  for (size_t id = 0; id < labels_.size(); ++id) {
    out << labels_[id] << ',' << id << '\n';
  }
}

int64_t TemporalGraph::id_of(const std::string& label) const {
  for (size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int64_t>(i);
  }
  return -1;
}

void TemporalGraph::build_incidence() {
  incidence_.assign(labels_.size(), {});
  for (size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    incidence_[static_cast<size_t>(l.source)].push_back(static_cast<int64_t>(i));
    if (l.destination != l.source) {
      incidence_[static_cast<size_t>(l.destination)].push_back(static_cast<int64_t>(i));
    }
  }
}

std::vector<int64_t> TemporalGraph::history_before(std::span<const NodeId> nodes, double t,
                                                   size_t k) const {
  if (k == 0) return {};

  // Per-node cursor into its incidence list, positioned at the last link with
  // timestamp < t. Incidence lists are ascending in stream index, hence in
  // time, so a binary search on the link timestamps applies.
  std::vector<std::pair<const std::vector<int64_t>*, ptrdiff_t>> cursors;
  cursors.reserve(nodes.size());
  for (size_t ni = 0; ni < nodes.size(); ++ni) {
    NodeId node = nodes[ni];
    bool dup = false;
    for (size_t nj = 0; nj < ni; ++nj) {
      if (nodes[nj] == node) { dup = true; break; }
    }
    if (dup) continue;
    const auto& list = incidence_[static_cast<size_t>(node)];
    auto it = std::lower_bound(list.begin(), list.end(), t, [&](int64_t idx, double tt) {
      return links_[static_cast<size_t>(idx)].timestamp < tt;
    });
    ptrdiff_t end = it - list.begin();  // first index with timestamp >= t
    if (end > 0) cursors.emplace_back(&list, end - 1);
  }

  // Reverse merge by stream index (stream order == chronological order with
  // stable ties); equal indices across endpoint lists collapse.
  std::vector<int64_t> picked;
  picked.reserve(std::min(k, size_t{64}));
  while (picked.size() < k) {
    int best = -1;
    int64_t best_idx = -1;
    for (size_t c = 0; c < cursors.size(); ++c) {
      if (cursors[c].second < 0) continue;
      int64_t idx = (*cursors[c].first)[static_cast<size_t>(cursors[c].second)];
      if (idx > best_idx) {
        best_idx = idx;
        best = static_cast<int>(c);
      }
    }
    if (best < 0) break;
    picked.push_back(best_idx);
    for (auto& [list, pos] : cursors) {
      if (pos >= 0 && (*list)[static_cast<size_t>(pos)] == best_idx) --pos;
    }
  }
  std::reverse(picked.begin(), picked.end());
  return picked;
}

double TemporalGraph::mean_inter_event_time(size_t begin, size_t end) const {
  if (end <= begin + 1) return 1.0;
  const double span = links_[end - 1].timestamp - links_[begin].timestamp;
  const double mean = span / static_cast<double>(end - begin - 1);
  return mean > 0.0 ? mean : 1.0;
}

DatasetSplit chronological_split(const TemporalGraph& g, double train_fraction,
                                 double val_fraction) {
  const size_t n = g.links().size();
  if (n < 10) throw std::invalid_argument("graph too small to split (need >= 10 links)");
  if (train_fraction <= 0 || val_fraction < 0 || train_fraction + val_fraction >= 1.0) {
    throw std::invalid_argument("invalid split fractions");
  }
  DatasetSplit s;
  s.train_begin = 0;
  s.train_end = static_cast<size_t>(std::floor(static_cast<double>(n) * train_fraction));
  s.val_end = s.train_end +
              static_cast<size_t>(std::floor(static_cast<double>(n) * val_fraction));
  s.test_end = n;
  return s;
}

Link sample_negative(const TemporalGraph& g, const Link& positive, Rng& rng) {
  Link neg = positive;
  neg.destination = static_cast<NodeId>(rng.uniform_index(g.node_count()));
  return neg;
}

std::vector<NodeId> seeded_negative_destinations(const TemporalGraph& g, size_t begin,
                                                 size_t end, uint64_t seed) {
  Rng rng(Rng::derive_seed(seed, 0x4e4547));  // "NEG"
  std::vector<NodeId> out;
  out.reserve(end - begin);
  for (size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<NodeId>(rng.uniform_index(g.node_count())));
  }
  return out;
}

}  // namespace tglink
