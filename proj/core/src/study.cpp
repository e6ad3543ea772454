#include "capse/study.hpp"

#include <iomanip>
#include <ostream>

#include "capse/capsule.hpp"

namespace capse {

RoutingStudyResult routing_study(const TripleSet& train,
                                 const TripleSet& valid,
                                 const EmbeddingTable& init,
                                 const RelationStats& stats,
                                 const TripleMembership& known,
                                 std::size_t num_entities,
                                 const RoutingStudyConfig& cfg) {
  RoutingStudyResult result;
  result.routing_iterations = cfg.routing_grid;

  const int cadence = cfg.train.eval_every > 0 ? cfg.train.eval_every : 1;
  for (int epoch = cadence; epoch <= cfg.train.epochs; epoch += cadence) {
    result.epochs.push_back(epoch);
  }
  if (cfg.train.epochs == 0) result.epochs.push_back(0);

  for (int m : cfg.routing_grid) {
    EmbeddingTable emb = init;
    CapsEParams params = init_capse_params(init.dim(), cfg.n_filters, cfg.d, m,
                                           Rng::derive(cfg.train.seed, 900));
    std::vector<double> row;

    auto eval_hits = [&](const EmbeddingTable& e, const CapsEParams& p) {
      Scorer scorer{ScoreDirection::HigherIsBetter,
                    [&e, &p](const Triple& t) {
                      thread_local ScoreWorkspace ws;
                      return capse_score_fast(t, e, p, ws);
                    }};
      EvaluateOptions opts;
      opts.hits_at = {cfg.hits_k};
      opts.threads = cfg.eval_threads;
      opts.keep_outcomes = false;
      const MetricsReport rep =
          evaluate(valid, scorer, known, stats, num_entities, opts);
      return 100.0 * rep.overall.hits.at(cfg.hits_k);
    };

    if (cfg.train.epochs == 0) {
      row.push_back(eval_hits(emb, params));
    } else {
      train_capse(train, emb, params, stats, cfg.train,
                  [&](const CheckpointInfo& info, const EmbeddingTable& e,
                      const CapsEParams& p) {
                    if (info.epoch % cadence == 0)
                      row.push_back(eval_hits(e, p));
                  });
    }
    result.hits.push_back(std::move(row));
  }
  return result;
}

void write_routing_study(std::ostream& out, const RoutingStudyResult& result) {
  out << std::setprecision(2) << std::fixed;
  out << "m";
  for (int e : result.epochs) out << '\t' << e;
  out << '\n';
  for (std::size_t row = 0; row < result.routing_iterations.size(); ++row) {
    out << result.routing_iterations[row];
    for (double h : result.hits[row]) out << '\t' << h;
    out << '\n';
  }
}

}  // namespace capse
