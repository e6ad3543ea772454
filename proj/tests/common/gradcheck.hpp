#pragma once

// Central-difference gradient verification against the naive oracle with the
// final-iteration couplings held fixed (the library's stated convention).

#include <cmath>
#include <cstddef>
#include <vector>

#include "capse/capse.hpp"
#include "naive_oracles.hpp"

namespace capse::testing {

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped_kink = 0;  // perturbation crossed a ReLU kink
  double max_rel_err = 0.0;
};

namespace detail {

inline double frozen_batch_loss(
    const std::vector<LabeledTriple>& batch, const EmbeddingTable& emb,
    const CapsEParams& params,
    const std::vector<std::vector<double>>& couplings,
    std::vector<std::vector<char>>* patterns) {
  double total = 0.0;
  if (patterns) patterns->resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += naive_loss_frozen(batch[i], emb, params, couplings[i],
                               patterns ? &(*patterns)[i] : nullptr);
  }
  return total / static_cast<double>(batch.size());
}

inline void record(GradCheckResult& result, double analytic, double fd,
                   bool kink_crossed) {
  if (kink_crossed) {
    ++result.skipped_kink;
    return;
  }
  ++result.checked;
  const double scale = std::max(std::fabs(analytic), std::fabs(fd));
  const double abs_err = std::fabs(analytic - fd);
  if (abs_err <= 1e-7) return;  // both at the finite-difference noise floor
  const double rel = abs_err / scale;
  result.max_rel_err = std::max(result.max_rel_err, rel);
}

}  // namespace detail

// Verifies capse_backward for one batch. h is the central-difference step.
inline GradCheckResult gradient_check(const std::vector<LabeledTriple>& batch,
                                      const EmbeddingTable& emb,
                                      const CapsEParams& params,
                                      double h = 1e-4) {
  // Analytic gradients from the implementation under test.
  std::vector<ForwardTrace> traces;
  traces.reserve(batch.size());
  for (const LabeledTriple& lt : batch) {
    traces.push_back(capse_forward(lt.triple, emb, params));
  }
  const CapsEGrads grads = capse_backward(batch, emb, params, traces);

  // Oracle couplings from the naive routing pass, frozen across the
  // perturbations (exact for m = 1 where couplings are constant anyway).
  std::vector<std::vector<double>> couplings;
  bool near_kink_at_base = false;
  for (const LabeledTriple& lt : batch) {
    const NaiveSample ns = naive_capse_score(lt.triple, emb, params);
    couplings.push_back(ns.couplings);
    if (ns.min_abs_preact <= 1e-6) near_kink_at_base = true;
  }

  GradCheckResult result;
  if (near_kink_at_base) {
    // The whole instance sits on a kink; nothing trustworthy to check.
    result.skipped_kink = 1;
    return result;
  }

  std::vector<std::vector<char>> plus_pat, minus_pat;
  auto fd_of = [&](EmbeddingTable& e, CapsEParams& p, double& coord) {
    const double saved = coord;
    coord = saved + h;
    const double lp =
        detail::frozen_batch_loss(batch, e, p, couplings, &plus_pat);
    coord = saved - h;
    const double lm =
        detail::frozen_batch_loss(batch, e, p, couplings, &minus_pat);
    coord = saved;
    return (lp - lm) / (2.0 * h);
  };
  auto patterns_differ = [&]() { return plus_pat != minus_pat; };

  EmbeddingTable emb_copy = emb;
  CapsEParams params_copy = params;

  for (std::size_t j = 0; j < params.filters.size(); ++j) {
    const double fd = fd_of(emb_copy, params_copy, params_copy.filters[j]);
    detail::record(result, grads.filters[j], fd, patterns_differ());
  }
  for (std::size_t j = 0; j < params.biases.size(); ++j) {
    const double fd = fd_of(emb_copy, params_copy, params_copy.biases[j]);
    detail::record(result, grads.biases[j], fd, patterns_differ());
  }
  for (std::size_t j = 0; j < params.capsule_weights.size(); ++j) {
    const double fd =
        fd_of(emb_copy, params_copy, params_copy.capsule_weights[j]);
    detail::record(result, grads.capsule_weights[j], fd, patterns_differ());
  }
  for (const auto& [row, grad] : grads.entity_rows) {
    for (std::size_t j = 0; j < grad.size(); ++j) {
      double& coord = emb_copy.entity(row)[j];
      const double fd = fd_of(emb_copy, params_copy, coord);
      detail::record(result, grad[j], fd, patterns_differ());
    }
  }
  for (const auto& [row, grad] : grads.relation_rows) {
    for (std::size_t j = 0; j < grad.size(); ++j) {
      double& coord = emb_copy.relation(row)[j];
      const double fd = fd_of(emb_copy, params_copy, coord);
      detail::record(result, grad[j], fd, patterns_differ());
    }
  }
  return result;
}

}  // namespace capse::testing
