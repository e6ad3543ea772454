#include "capse/adam.hpp"

#include <cmath>

namespace capse {

namespace {

void dense_update(std::vector<double>& param, const std::vector<double>& grad,
                  std::vector<double>& m, std::vector<double>& v,
                  const AdamConfig& cfg, double bc1, double bc2) {
  for (std::size_t j = 0; j < param.size(); ++j) {
    const double g = grad[j];
    m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
    v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[j] / bc1;
    const double v_hat = v[j] / bc2;
    param[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void row_update(std::vector<double>& table, std::size_t dim, Index row,
                const std::vector<double>& grad, std::vector<double>& m,
                std::vector<double>& v, const AdamConfig& cfg, double bc1,
                double bc2) {
  const std::size_t base = static_cast<std::size_t>(row) * dim;
  for (std::size_t j = 0; j < dim; ++j) {
    const double g = grad[j];
    m[base + j] = cfg.beta1 * m[base + j] + (1.0 - cfg.beta1) * g;
    v[base + j] = cfg.beta2 * v[base + j] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[base + j] / bc1;
    const double v_hat = v[base + j] / bc2;
    table[base + j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace

AdamState AdamState::zeros_like(const CapsEParams& params,
                                const EmbeddingTable& emb) {
  AdamState s;
  s.m_filters.assign(params.filters.size(), 0.0);
  s.v_filters.assign(params.filters.size(), 0.0);
  s.m_biases.assign(params.biases.size(), 0.0);
  s.v_biases.assign(params.biases.size(), 0.0);
  s.m_weights.assign(params.capsule_weights.size(), 0.0);
  s.v_weights.assign(params.capsule_weights.size(), 0.0);
  s.m_entities.assign(emb.entity_data().size(), 0.0);
  s.v_entities.assign(emb.entity_data().size(), 0.0);
  s.m_relations.assign(emb.relation_data().size(), 0.0);
  s.v_relations.assign(emb.relation_data().size(), 0.0);
  return s;
}

void adam_step(CapsEParams& params, EmbeddingTable& emb,
               const CapsEGrads& grads, AdamState& state,
               const AdamConfig& cfg, const UpdateMask& mask) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  dense_update(params.filters, grads.filters, state.m_filters, state.v_filters,
               cfg, bc1, bc2);
  dense_update(params.biases, grads.biases, state.m_biases, state.v_biases,
               cfg, bc1, bc2);
  dense_update(params.capsule_weights, grads.capsule_weights, state.m_weights,
               state.v_weights, cfg, bc1, bc2);

  if (mask.entities) {
    for (const auto& [row, grad] : grads.entity_rows) {
      row_update(emb.entity_data(), emb.dim(), row, grad, state.m_entities,
                 state.v_entities, cfg, bc1, bc2);
    }
  }
  if (mask.relations) {
    for (const auto& [row, grad] : grads.relation_rows) {
      row_update(emb.relation_data(), emb.dim(), row, grad, state.m_relations,
                 state.v_relations, cfg, bc1, bc2);
    }
  }
}

}  // namespace capse
