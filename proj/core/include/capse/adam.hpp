#pragma once

#include <cstdint>
#include <vector>

#include "capse/capsule.hpp"
#include "capse/embedding.hpp"

namespace capse {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators matching the trainable tensors.
// Embedding moments are full tables; rows are updated lazily when touched.
struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m_filters, v_filters;
  std::vector<double> m_biases, v_biases;
  std::vector<double> m_weights, v_weights;
  std::vector<double> m_entities, v_entities;
  std::vector<double> m_relations, v_relations;

  static AdamState zeros_like(const CapsEParams& params,
                              const EmbeddingTable& emb);
};

struct UpdateMask {
  bool entities = true;
  bool relations = true;
};

// One bias-corrected Adam step over params and the touched embedding rows.
// Increments state.step.
void adam_step(CapsEParams& params, EmbeddingTable& emb,
               const CapsEGrads& grads, AdamState& state,
               const AdamConfig& cfg, const UpdateMask& mask = {});

}  // namespace capse
