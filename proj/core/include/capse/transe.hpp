#pragma once

#include <cstdint>
#include <vector>

#include "capse/dataset.hpp"
#include "capse/embedding.hpp"
#include "capse/triple.hpp"

namespace capse {

enum class Norm { L1, L2 };

// ||v_s + v_r - v_o|| under the chosen norm. Lower is better.
double transe_score(const Triple& t, const EmbeddingTable& emb, Norm norm);

// Hinge term of the margin ranking loss.
inline double margin_loss_term(double margin, double pos_score,
                               double neg_score) {
  const double v = margin + pos_score - neg_score;
  return v > 0.0 ? v : 0.0;
}

struct TransEConfig {
  double margin = 5.0;
  double lr = 5e-3;
  Norm norm = Norm::L1;
  int epochs = 500;
  std::uint64_t seed = 1;
};

struct TransEResult {
  std::vector<double> epoch_loss;  // summed hinge loss per epoch
};

// Margin-based SGD with one Bernoulli corruption per positive per epoch.
// Entity rows are renormalized to unit L2 at the start of every epoch.
TransEResult transe_train(const TripleSet& train, EmbeddingTable& emb,
                          const RelationStats& stats, const TransEConfig& cfg);

}  // namespace capse
