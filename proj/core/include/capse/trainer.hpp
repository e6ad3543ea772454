#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "capse/adam.hpp"
#include "capse/capsule.hpp"
#include "capse/dataset.hpp"
#include "capse/embedding.hpp"

namespace capse {

struct CapsETrainConfig {
  double lr = 1e-5;
  std::size_t batch_size = 128;  // positives per batch; each brings 1 negative
  int epochs = 50;
  int eval_every = 10;  // checkpoint callback cadence; <= 0 disables
  std::uint64_t seed = 1;
  UpdateMask update_embeddings;  // rerank freezes the entity side
  // Also evaluate the loss on a fixed probe set (positives plus one frozen
  // negative batch) after every epoch. Epoch losses are computed on freshly
  // resampled negatives and are not comparable across epochs; the probe
  // curve is.
  bool track_probe_loss = false;
};

struct CheckpointInfo {
  int epoch = 0;          // 1-based
  double epoch_loss = 0;  // mean batch loss of this epoch
};

// Called after each eval_every-th epoch and after the final one.
using CheckpointCallback = std::function<void(
    const CheckpointInfo& info, const EmbeddingTable& emb,
    const CapsEParams& params)>;

struct CapsETrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<double> probe_loss;  // per epoch, when track_probe_loss is set
};

// Trains on positives paired with fresh Bernoulli corruptions every epoch.
CapsETrainResult train_capse(const TripleSet& train, EmbeddingTable& emb,
                             CapsEParams& params, const RelationStats& stats,
                             const CapsETrainConfig& cfg,
                             const CheckpointCallback& on_checkpoint = {});

// Same loop over a fixed labeled triple list (explicit negatives supplied by
// the dataset; no corruption sampling).
CapsETrainResult train_capse_labeled(const std::vector<LabeledTriple>& data,
                                     EmbeddingTable& emb, CapsEParams& params,
                                     const CapsETrainConfig& cfg,
                                     const CheckpointCallback& on_checkpoint = {});

}  // namespace capse
