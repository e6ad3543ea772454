#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "capse/dataset.hpp"
#include "capse/triple.hpp"

namespace capse {

enum class ScoreDirection { HigherIsBetter, LowerIsBetter };

// A scoring function paired with its direction. The function must be safe to
// call concurrently.
struct Scorer {
  ScoreDirection direction = ScoreDirection::HigherIsBetter;
  std::function<double(const Triple&)> score;
};

struct RankOutcome {
  Triple triple;
  Side side = Side::Head;
  std::int64_t rank = 1;            // 1 <= rank <= num_candidates + 1
  std::int64_t num_candidates = 0;  // filtered candidates ranked against
};

// Filtered rank of t against all corruptions on the chosen side:
//   rank = 1 + #strictly_better + ceil(#tied / 2)
// the mean of the optimistic and pessimistic tie placements.
RankOutcome rank_triple(const Triple& t, Side side, const Scorer& scorer,
                        std::size_t num_entities,
                        const TripleMembership& known);

struct Aggregate {
  double mr = 0.0;
  double mrr = 0.0;
  std::map<int, double> hits;  // k -> fraction of ranks <= k
  std::int64_t count = 0;
};

struct MetricsReport {
  Aggregate overall;
  std::map<Index, Aggregate> per_relation;
  std::map<std::pair<RelationCategory, Side>, Aggregate> per_category;
  std::vector<RankOutcome> outcomes;  // two per test triple, head then tail
};

inline const std::vector<int> kDefaultHitsAt = {1, 3, 10};

struct EvaluateOptions {
  std::vector<int> hits_at = kDefaultHitsAt;
  int threads = 1;
  bool keep_outcomes = true;
};

// Filtered-ranking evaluation: head-side and tail-side rank per test triple,
// aggregated overall, per relation, and per (category, side).
MetricsReport evaluate(const TripleSet& test, const Scorer& scorer,
                       const TripleMembership& known,
                       const RelationStats& stats, std::size_t num_entities,
                       const EvaluateOptions& opts = {});

// Report writers: a human-readable table and a machine-readable TSV.
void write_metrics(std::ostream& out, const MetricsReport& report,
                   const Vocab& vocab);
void write_metrics_tsv(std::ostream& out, const MetricsReport& report,
                       const Vocab& vocab);

}  // namespace capse
