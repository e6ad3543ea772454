#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "capse/embedding.hpp"
#include "capse/triple.hpp"

namespace capse {

// Parameters of the capsule scorer: a bank of 1x3 convolution filters with
// biases, and one d x N weight matrix per embedding dimension.
struct CapsEParams {
  std::size_t k = 0;  // embedding dimension = number of first-layer capsules
  std::size_t n_filters = 0;       // N, neurons per first-layer capsule
  std::size_t d = 0;               // output capsule size
  int routing_iterations = 1;      // m

  std::vector<double> filters;          // N x 3, row-major
  std::vector<double> biases;           // N
  std::vector<double> capsule_weights;  // k matrices W_i, each d x N row-major

  double& filter(std::size_t f, std::size_t c) { return filters[f * 3 + c]; }
  double filter(std::size_t f, std::size_t c) const { return filters[f * 3 + c]; }
  double& weight(std::size_t i, std::size_t a, std::size_t b) {
    return capsule_weights[(i * d + a) * n_filters + b];
  }
  double weight(std::size_t i, std::size_t a, std::size_t b) const {
    return capsule_weights[(i * d + a) * n_filters + b];
  }

  bool all_finite() const;
};

// Filters and capsule weights from uniform(-0.1, 0.1), biases zero.
CapsEParams init_capse_params(std::size_t k, std::size_t n_filters,
                              std::size_t d, int routing_iterations,
                              std::uint64_t seed);

// Intermediate values of one scoring pass, retained for backprop.
struct ForwardTrace {
  std::vector<double> input;         // A, k x 3 row-major
  std::vector<double> feature_maps;  // N x k row-major (q)
  std::vector<double> capsules;      // u, k x N row-major (transpose of q)
  std::vector<double> u_hat;         // k x d row-major
  std::vector<double> couplings;     // c, length k
  std::vector<double> s_vec;         // length d
  std::vector<double> e_vec;         // length d
  double score = 0.0;
};

// q[f][i] = ReLU(w_f . A_i + b_f). A is k x 3 row-major; result N x k.
std::vector<double> conv_forward(const std::vector<double>& a, std::size_t k,
                                 const CapsEParams& params);

// Regroups feature maps into k capsules of N neurons: u[i][f] = q[f][i].
std::vector<double> build_capsules(const std::vector<double>& feature_maps,
                                   std::size_t n_filters, std::size_t k);

// squash(s) = (|s|^2 / (1 + |s|^2)) * s/|s|; returns 0 for |s| < 1e-12.
std::vector<double> squash(const std::vector<double>& s);

struct RoutingResult {
  std::vector<double> e;          // length d
  std::vector<double> couplings;  // length k
};

// Iterative routing: logits start at zero; each iteration softmaxes over the
// k input capsules, forms s = sum_i c_i u_hat_i, squashes, and adds the
// agreement u_hat_i . e to the logits.
RoutingResult route(const std::vector<double>& u_hat, std::size_t k,
                    std::size_t d, int iterations);

// Full scoring pass. Higher is better; the score is |e| and is < 1.
ForwardTrace capse_forward(const Triple& t, const EmbeddingTable& emb,
                           const CapsEParams& params);
inline double capse_score(const Triple& t, const EmbeddingTable& emb,
                          const CapsEParams& params) {
  return capse_forward(t, emb, params).score;
}

// Scratch buffers for the allocation-free scoring path used in evaluation.
struct ScoreWorkspace {
  std::vector<double> input, feature_maps, u_hat, u_scratch, logits, couplings,
      s, e;
};

double capse_score_fast(const Triple& t, const EmbeddingTable& emb,
                        const CapsEParams& params, ScoreWorkspace& ws);

struct LabeledTriple {
  Triple triple;
  int label = 1;  // +1 valid, -1 corrupted
};

// softplus(-t * f), numerically stable.
double capse_loss_term(double score, int label);

// Mean of capse_loss_term over the batch.
double capse_loss(const std::vector<LabeledTriple>& batch,
                  const EmbeddingTable& emb, const CapsEParams& params);

// Gradients of the mean batch loss. Embedding gradients are sparse and keyed
// by row index; map keys are ordered so downstream updates are deterministic.
struct CapsEGrads {
  std::vector<double> filters;          // N x 3
  std::vector<double> biases;           // N
  std::vector<double> capsule_weights;  // k x d x N
  std::map<Index, std::vector<double>> entity_rows;
  std::map<Index, std::vector<double>> relation_rows;
};

// Reverse-mode gradients of capse_loss. The couplings of the final routing
// iteration are treated as constants (exact for m = 1, where the couplings
// are uniform regardless of the input).
CapsEGrads capse_backward(const std::vector<LabeledTriple>& batch,
                          const EmbeddingTable& emb, const CapsEParams& params,
                          const std::vector<ForwardTrace>& traces);

// ConvKB-style baseline: feature maps concatenated (filter-major) and dotted
// with a weight vector of length N*k. Higher is better.
struct ConvKBParams {
  std::size_t k = 0;
  std::size_t n_filters = 0;
  std::vector<double> filters;  // N x 3
  std::vector<double> biases;   // N
  std::vector<double> weights;  // N * k
};

double convkb_score(const Triple& t, const EmbeddingTable& emb,
                    const ConvKBParams& params);

}  // namespace capse
