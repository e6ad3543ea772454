#include "capse/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

#include "capse/error.hpp"

namespace capse {

RankOutcome rank_triple(const Triple& t, Side side, const Scorer& scorer,
                        std::size_t num_entities,
                        const TripleMembership& known) {
  // Lower-is-better scorers are negated so "better" is always "greater".
  const double sign =
      scorer.direction == ScoreDirection::HigherIsBetter ? 1.0 : -1.0;
  const double target = sign * scorer.score(t);

  std::int64_t better = 0, tied = 0, candidates = 0;
  const Index original = side == Side::Head ? t.s : t.o;
  Triple c = t;
  for (std::size_t e = 0; e < num_entities; ++e) {
    const auto id = static_cast<Index>(e);
    if (id == original) continue;
    (side == Side::Head ? c.s : c.o) = id;
    if (known.contains(c)) continue;
    ++candidates;
    const double s = sign * scorer.score(c);
    if (s > target) {
      ++better;
    } else if (s == target) {
      ++tied;
    }
  }

  RankOutcome out;
  out.triple = t;
  out.side = side;
  out.num_candidates = candidates;
  out.rank = 1 + better + (tied + 1) / 2;  // ceil(tied / 2)
  return out;
}

namespace {

struct Accumulator {
  double rank_sum = 0.0;
  double reciprocal_sum = 0.0;
  std::map<int, std::int64_t> hits_count;
  std::int64_t count = 0;

  void add(const RankOutcome& o, const std::vector<int>& hits_at) {
    rank_sum += static_cast<double>(o.rank);
    reciprocal_sum += 1.0 / static_cast<double>(o.rank);
    for (int k : hits_at) {
      if (o.rank <= k) ++hits_count[k];
    }
    ++count;
  }

  Aggregate finish(const std::vector<int>& hits_at) const {
    Aggregate a;
    a.count = count;
    if (count == 0) return a;
    a.mr = rank_sum / static_cast<double>(count);
    a.mrr = reciprocal_sum / static_cast<double>(count);
    for (int k : hits_at) {
      auto it = hits_count.find(k);
      const double h = it == hits_count.end()
                           ? 0.0
                           : static_cast<double>(it->second);
      a.hits[k] = h / static_cast<double>(count);
    }
    return a;
  }
};

void check_aggregate(const Aggregate& a) {
  if (a.count == 0) return;
  if (a.mr < 1.0) throw NumericError("metrics: MR < 1");
  if (a.mrr <= 0.0 || a.mrr > 1.0) throw NumericError("metrics: MRR out of (0,1]");
  double prev = 0.0;
  for (const auto& [k, h] : a.hits) {
    if (h < prev - 1e-15 || h < 0.0 || h > 1.0) {
      throw NumericError("metrics: Hits@k not nondecreasing in k");
    }
    prev = h;
  }
}

}  // namespace

MetricsReport evaluate(const TripleSet& test, const Scorer& scorer,
                       const TripleMembership& known,
                       const RelationStats& stats, std::size_t num_entities,
                       const EvaluateOptions& opts) {
  const std::vector<Triple>& triples = test.triples();
  std::vector<RankOutcome> outcomes(triples.size() * 2);

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      outcomes[2 * i] =
          rank_triple(triples[i], Side::Head, scorer, num_entities, known);
      outcomes[2 * i + 1] =
          rank_triple(triples[i], Side::Tail, scorer, num_entities, known);
    }
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1 || triples.size() < 2) {
    worker(0, triples.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (triples.size() + static_cast<std::size_t>(threads) - 1) /
        static_cast<std::size_t>(threads);
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      const std::size_t end = std::min(triples.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  // Fixed-order aggregation: results do not depend on the thread count.
  Accumulator overall;
  std::map<Index, Accumulator> per_relation;
  std::map<std::pair<RelationCategory, Side>, Accumulator> per_category;
  for (const RankOutcome& o : outcomes) {
    overall.add(o, opts.hits_at);
    per_relation[o.triple.r].add(o, opts.hits_at);
    per_category[{stats.at(o.triple.r).category, o.side}].add(o, opts.hits_at);
  }

  MetricsReport report;
  report.overall = overall.finish(opts.hits_at);
  check_aggregate(report.overall);
  for (const auto& [r, acc] : per_relation) {
    report.per_relation[r] = acc.finish(opts.hits_at);
    check_aggregate(report.per_relation[r]);
  }
  for (const auto& [key, acc] : per_category) {
    report.per_category[key] = acc.finish(opts.hits_at);
    check_aggregate(report.per_category[key]);
  }
  if (opts.keep_outcomes) report.outcomes = std::move(outcomes);
  return report;
}

namespace {

void write_hits_header(std::ostream& out, const Aggregate& a) {
  for (const auto& [k, _] : a.hits) out << "\tHits@" << k;
}

void write_aggregate_row(std::ostream& out, const Aggregate& a) {
  out << a.count << '\t' << a.mr << '\t' << a.mrr;
  for (const auto& [_, h] : a.hits) out << '\t' << h;
}

}  // namespace

void write_metrics_tsv(std::ostream& out, const MetricsReport& report,
                       const Vocab& vocab) {
  out << std::setprecision(6) << std::fixed;
  out << "section\tname\tside\tcount\tMR\tMRR";
  write_hits_header(out, report.overall);
  out << '\n';

  out << "overall\tall\tboth\t";
  write_aggregate_row(out, report.overall);
  out << '\n';
  for (const auto& [r, agg] : report.per_relation) {
    out << "relation\t" << vocab.relations.name(r) << "\tboth\t";
    write_aggregate_row(out, agg);
    out << '\n';
  }
  for (const auto& [key, agg] : report.per_category) {
    out << "category\t" << category_label(key.first) << '\t'
        << side_label(key.second) << '\t';
    write_aggregate_row(out, agg);
    out << '\n';
  }
}

void write_metrics(std::ostream& out, const MetricsReport& report,
                   const Vocab& vocab) {
  out << std::setprecision(4) << std::fixed;
  out << "overall (" << report.overall.count << " ranks): MR "
      << report.overall.mr << ", MRR " << report.overall.mrr;
  for (const auto& [k, h] : report.overall.hits) {
    out << ", Hits@" << k << ' ' << 100.0 * h << '%';
  }
  out << '\n';

  if (!report.per_category.empty()) {
    out << "\nby relation category and prediction side:\n";
    for (const auto& [key, agg] : report.per_category) {
      out << "  " << std::setw(3) << category_label(key.first) << ' '
          << std::setw(4) << side_label(key.second) << ": MRR " << agg.mrr;
      for (const auto& [k, h] : agg.hits) {
        out << ", Hits@" << k << ' ' << 100.0 * h << '%';
      }
      out << "  (" << agg.count << ")\n";
    }
  }

  if (!report.per_relation.empty()) {
    out << "\nby relation:\n";
    for (const auto& [r, agg] : report.per_relation) {
      out << "  " << vocab.relations.name(r) << ": MR " << agg.mr << ", MRR "
          << agg.mrr;
      for (const auto& [k, h] : agg.hits) {
        out << ", Hits@" << k << ' ' << 100.0 * h << '%';
      }
      out << "  (" << agg.count << ")\n";
    }
  }
}

}  // namespace capse
