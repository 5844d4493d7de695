#include "tglink/edgebank.hpp"

#include <chrono>
#include <limits>

#include "tglink/metrics.hpp"

namespace tglink {

EvalReport edgebank_eval(const TemporalGraph& g, const DatasetSplit& split, uint64_t seed,
                         bool directed) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& links = g.links();
  const size_t begin = split.val_end;
  const size_t end = split.test_end;
  const std::vector<NodeId> neg_dst = seeded_negative_destinations(g, begin, end, seed);

  EdgeMemory memory(directed);
  size_t cursor = 0;
  std::vector<double> pos_scores, neg_scores;
  pos_scores.reserve(end - begin);
  neg_scores.reserve(end - begin);
  for (size_t i = begin; i < end; ++i) {
    const Link& q = links[i];
    while (cursor < links.size() && links[cursor].timestamp < q.timestamp) {
      memory.insert(links[cursor].source, links[cursor].destination);
      ++cursor;
    }
    pos_scores.push_back(edgebank_score(memory, q));
    Link neg = q;
    neg.destination = neg_dst[i - begin];
    neg_scores.push_back(edgebank_score(memory, neg));
  }

  EvalReport report;
  report.auc = roc_auc(pos_scores, neg_scores);
  report.loss = std::numeric_limits<double>::quiet_NaN();  // no likelihood for a memory
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace tglink
