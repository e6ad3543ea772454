#pragma once

#include <iosfwd>
#include <vector>

#include "capse/dataset.hpp"
#include "capse/embedding.hpp"
#include "capse/evaluate.hpp"
#include "capse/trainer.hpp"

namespace capse {

struct RoutingStudyConfig {
  std::vector<int> routing_grid = {1, 3, 5, 7};
  std::size_t n_filters = 50;
  std::size_t d = 10;
  CapsETrainConfig train;  // epochs/eval_every define the checkpoint columns
  int hits_k = 10;
  int eval_threads = 1;
};

struct RoutingStudyResult {
  std::vector<int> epochs;              // checkpoint columns
  std::vector<int> routing_iterations;  // grid rows
  std::vector<std::vector<double>> hits;  // hits[row][col], percent
};

// Trains one model per routing-iteration setting from a shared initial
// embedding table and records validation Hits@k at every checkpoint.
RoutingStudyResult routing_study(const TripleSet& train,
                                 const TripleSet& valid,
                                 const EmbeddingTable& init,
                                 const RelationStats& stats,
                                 const TripleMembership& known,
                                 std::size_t num_entities,
                                 const RoutingStudyConfig& cfg);

void write_routing_study(std::ostream& out, const RoutingStudyResult& result);

}  // namespace capse
