#include "capse/capsule.hpp"

#include <algorithm>
#include <cmath>

#include "capse/error.hpp"

namespace capse {

namespace {

void check_shapes(const EmbeddingTable& emb, const CapsEParams& params) {
  if (emb.dim() != params.k) {
    throw ShapeError("embedding dimension " + std::to_string(emb.dim()) +
                     " does not match scorer k=" + std::to_string(params.k));
  }
  if (params.filters.size() != params.n_filters * 3 ||
      params.biases.size() != params.n_filters ||
      params.capsule_weights.size() !=
          params.k * params.d * params.n_filters) {
    throw ShapeError("capsule parameter buffers do not match (k, N, d)");
  }
}

void fill_input(const Triple& t, const EmbeddingTable& emb,
                std::vector<double>& a) {
  const std::size_t k = emb.dim();
  const auto vs = emb.entity(t.s);
  const auto vr = emb.relation(t.r);
  const auto vo = emb.entity(t.o);
  a.resize(k * 3);
  for (std::size_t i = 0; i < k; ++i) {
    a[i * 3 + 0] = vs[i];
    a[i * 3 + 1] = vr[i];
    a[i * 3 + 2] = vo[i];
  }
}

void conv_into(const std::vector<double>& a, std::size_t k,
               const std::vector<double>& filters,
               const std::vector<double>& biases, std::vector<double>& q) {
  const std::size_t n = biases.size();
  q.resize(n * k);
  for (std::size_t f = 0; f < n; ++f) {
    const double w0 = filters[f * 3 + 0];
    const double w1 = filters[f * 3 + 1];
    const double w2 = filters[f * 3 + 2];
    const double b = biases[f];
    for (std::size_t i = 0; i < k; ++i) {
      const double z =
          w0 * a[i * 3 + 0] + w1 * a[i * 3 + 1] + w2 * a[i * 3 + 2] + b;
      q[f * k + i] = z > 0.0 ? z : 0.0;
    }
  }
}

// u_hat[i] = W_i u_i, reading u_i[f] = q[f][i] straight from the maps.
// The capsule vector is gathered once so every dot product runs over
// contiguous memory.
void uhat_into(const std::vector<double>& q, const CapsEParams& params,
               std::vector<double>& u_hat, std::vector<double>& u_scratch) {
  const std::size_t k = params.k, d = params.d, n = params.n_filters;
  u_hat.resize(k * d);
  u_scratch.resize(n);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t b = 0; b < n; ++b) u_scratch[b] = q[b * k + i];
    const double* w_row = params.capsule_weights.data() + i * d * n;
    for (std::size_t a = 0; a < d; ++a, w_row += n) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) acc += w_row[b] * u_scratch[b];
      u_hat[i * d + a] = acc;
    }
  }
}

void softmax_into(const std::vector<double>& logits, std::vector<double>& out) {
  out.resize(logits.size());
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& c : out) c /= sum;
}

void squash_into(const std::vector<double>& s, std::vector<double>& e) {
  e.resize(s.size());
  double n2 = 0.0;
  for (double x : s) n2 += x * x;
  if (n2 < 1e-24) {  // |s| < 1e-12: removable singularity, define as 0
    std::fill(e.begin(), e.end(), 0.0);
    return;
  }
  const double factor = n2 / (1.0 + n2) / std::sqrt(n2);
  for (std::size_t j = 0; j < s.size(); ++j) e[j] = factor * s[j];
}

void route_into(const std::vector<double>& u_hat, std::size_t k, std::size_t d,
                int iterations, std::vector<double>& logits,
                std::vector<double>& couplings, std::vector<double>& s,
                std::vector<double>& e) {
  logits.assign(k, 0.0);
  for (int iter = 0; iter < iterations; ++iter) {
    softmax_into(logits, couplings);
    s.assign(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double c = couplings[i];
      for (std::size_t a = 0; a < d; ++a) s[a] += c * u_hat[i * d + a];
    }
    squash_into(s, e);
    for (std::size_t i = 0; i < k; ++i) {
      double agreement = 0.0;
      for (std::size_t a = 0; a < d; ++a) agreement += u_hat[i * d + a] * e[a];
      logits[i] += agreement;
    }
  }
}

double norm(const std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  return std::sqrt(n2);
}

}  // namespace

bool CapsEParams::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  return finite(filters) && finite(biases) && finite(capsule_weights);
}

CapsEParams init_capse_params(std::size_t k, std::size_t n_filters,
                              std::size_t d, int routing_iterations,
                              std::uint64_t seed) {
  if (k < 1 || n_filters < 1 || d < 1 || routing_iterations < 1) {
    throw ShapeError("capsule parameters require k, N, d, m >= 1");
  }
  CapsEParams p;
  p.k = k;
  p.n_filters = n_filters;
  p.d = d;
  p.routing_iterations = routing_iterations;
  p.filters.resize(n_filters * 3);
  p.biases.assign(n_filters, 0.0);
  p.capsule_weights.resize(k * d * n_filters);
  Rng rng(seed);
  for (double& x : p.filters) x = rng.uniform(-0.1, 0.1);
  for (double& x : p.capsule_weights) x = rng.uniform(-0.1, 0.1);
  return p;
}

std::vector<double> conv_forward(const std::vector<double>& a, std::size_t k,
                                 const CapsEParams& params) {
  if (a.size() != k * 3) {
    throw ShapeError("conv_forward: input is not a k x 3 matrix");
  }
  std::vector<double> q;
  conv_into(a, k, params.filters, params.biases, q);
  return q;
}

std::vector<double> build_capsules(const std::vector<double>& feature_maps,
                                   std::size_t n_filters, std::size_t k) {
  if (feature_maps.size() != n_filters * k) {
    throw ShapeError("build_capsules: feature maps are not N x k");
  }
  std::vector<double> u(k * n_filters);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t f = 0; f < n_filters; ++f) {
      u[i * n_filters + f] = feature_maps[f * k + i];
    }
  }
  return u;
}

std::vector<double> squash(const std::vector<double>& s) {
  std::vector<double> e;
  squash_into(s, e);
  return e;
}

RoutingResult route(const std::vector<double>& u_hat, std::size_t k,
                    std::size_t d, int iterations) {
  if (u_hat.size() != k * d) throw ShapeError("route: u_hat is not k x d");
  if (iterations < 1) throw ShapeError("route: iterations must be >= 1");
  RoutingResult res;
  std::vector<double> logits, s;
  route_into(u_hat, k, d, iterations, logits, res.couplings, s, res.e);
  return res;
}

ForwardTrace capse_forward(const Triple& t, const EmbeddingTable& emb,
                           const CapsEParams& params) {
  check_shapes(emb, params);
  ForwardTrace tr;
  fill_input(t, emb, tr.input);
  conv_into(tr.input, params.k, params.filters, params.biases, tr.feature_maps);
  tr.capsules = build_capsules(tr.feature_maps, params.n_filters, params.k);
  std::vector<double> u_scratch;
  uhat_into(tr.feature_maps, params, tr.u_hat, u_scratch);
  std::vector<double> logits;
  route_into(tr.u_hat, params.k, params.d, params.routing_iterations, logits,
             tr.couplings, tr.s_vec, tr.e_vec);
  tr.score = norm(tr.e_vec);
  return tr;
}

double capse_score_fast(const Triple& t, const EmbeddingTable& emb,
                        const CapsEParams& params, ScoreWorkspace& ws) {
  check_shapes(emb, params);
  fill_input(t, emb, ws.input);
  conv_into(ws.input, params.k, params.filters, params.biases, ws.feature_maps);
  uhat_into(ws.feature_maps, params, ws.u_hat, ws.u_scratch);
  route_into(ws.u_hat, params.k, params.d, params.routing_iterations,
             ws.logits, ws.couplings, ws.s, ws.e);
  return norm(ws.e);
}

double capse_loss_term(double score, int label) {
  // log(1 + exp(-t * f)) via the stable softplus form.
  const double x = -static_cast<double>(label) * score;
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double capse_loss(const std::vector<LabeledTriple>& batch,
                  const EmbeddingTable& emb, const CapsEParams& params) {
  if (batch.empty()) throw Error("capse_loss: empty batch");
  double total = 0.0;
  for (const LabeledTriple& lt : batch) {
    total += capse_loss_term(capse_score(lt.triple, emb, params), lt.label);
  }
  return total / static_cast<double>(batch.size());
}

CapsEGrads capse_backward(const std::vector<LabeledTriple>& batch,
                          const EmbeddingTable& emb, const CapsEParams& params,
                          const std::vector<ForwardTrace>& traces) {
  check_shapes(emb, params);
  if (batch.size() != traces.size()) {
    throw ShapeError("capse_backward: batch and traces differ in length");
  }
  const std::size_t k = params.k, d = params.d, n = params.n_filters;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  CapsEGrads g;
  g.filters.assign(n * 3, 0.0);
  g.biases.assign(n, 0.0);
  g.capsule_weights.assign(k * d * n, 0.0);

  auto row_grad = [&](std::map<Index, std::vector<double>>& rows, Index id)
      -> std::vector<double>& {
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) it->second.assign(k, 0.0);
    return it->second;
  };

  std::vector<double> ds(d), duhat(d), du(n), dz(n * k), da(k * 3);

  for (std::size_t idx = 0; idx < batch.size(); ++idx) {
    const LabeledTriple& lt = batch[idx];
    const ForwardTrace& tr = traces[idx];

    // dL/df for the mean loss: -t * sigmoid(-t*f) / B
    const double t_label = static_cast<double>(lt.label);
    const double x = -t_label * tr.score;
    const double sigma = 1.0 / (1.0 + std::exp(-x));
    const double df = -t_label * sigma * inv_batch;

    // f = |s|^2 / (1 + |s|^2)  =>  df/ds = 2 s / (1 + |s|^2)^2
    double s_n2 = 0.0;
    for (double v : tr.s_vec) s_n2 += v * v;
    const double s_scale = 2.0 / ((1.0 + s_n2) * (1.0 + s_n2));
    for (std::size_t a = 0; a < d; ++a) ds[a] = df * s_scale * tr.s_vec[a];

    // Through s = sum_i c_i u_hat_i with couplings fixed, then u_hat = W u.
    std::fill(dz.begin(), dz.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double c = tr.couplings[i];
      for (std::size_t a = 0; a < d; ++a) duhat[a] = c * ds[a];

      std::fill(du.begin(), du.end(), 0.0);
      for (std::size_t a = 0; a < d; ++a) {
        const double duhat_a = duhat[a];
        if (duhat_a == 0.0) continue;
        for (std::size_t b = 0; b < n; ++b) {
          g.capsule_weights[(i * d + a) * n + b] +=
              duhat_a * tr.feature_maps[b * k + i];
          du[b] += params.weight(i, a, b) * duhat_a;
        }
      }
      // u_i[f] = q[f][i]; ReLU gate: q > 0 iff the preactivation was > 0.
      for (std::size_t f = 0; f < n; ++f) {
        if (tr.feature_maps[f * k + i] > 0.0) dz[f * k + i] = du[f];
      }
    }

    // Through the convolution into filters, biases, and the input matrix.
    std::fill(da.begin(), da.end(), 0.0);
    for (std::size_t f = 0; f < n; ++f) {
      double db = 0.0;
      const double w0 = params.filter(f, 0);
      const double w1 = params.filter(f, 1);
      const double w2 = params.filter(f, 2);
      for (std::size_t i = 0; i < k; ++i) {
        const double dzv = dz[f * k + i];
        if (dzv == 0.0) continue;
        db += dzv;
        g.filters[f * 3 + 0] += dzv * tr.input[i * 3 + 0];
        g.filters[f * 3 + 1] += dzv * tr.input[i * 3 + 1];
        g.filters[f * 3 + 2] += dzv * tr.input[i * 3 + 2];
        da[i * 3 + 0] += dzv * w0;
        da[i * 3 + 1] += dzv * w1;
        da[i * 3 + 2] += dzv * w2;
      }
      g.biases[f] += db;
    }

    std::vector<double>& gs = row_grad(g.entity_rows, lt.triple.s);
    std::vector<double>& gr = row_grad(g.relation_rows, lt.triple.r);
    std::vector<double>& go = row_grad(g.entity_rows, lt.triple.o);
    for (std::size_t i = 0; i < k; ++i) {
      gs[i] += da[i * 3 + 0];
      gr[i] += da[i * 3 + 1];
      go[i] += da[i * 3 + 2];
    }
  }

  for (double v : g.filters) {
    if (!std::isfinite(v)) throw NumericError("capse_backward: non-finite gradient");
  }
  return g;
}

double convkb_score(const Triple& t, const EmbeddingTable& emb,
                    const ConvKBParams& params) {
  if (emb.dim() != params.k) {
    throw ShapeError("convkb: embedding dimension mismatch");
  }
  if (params.filters.size() != params.n_filters * 3 ||
      params.biases.size() != params.n_filters ||
      params.weights.size() != params.n_filters * params.k) {
    throw ShapeError("convkb: parameter buffers do not match (k, N)");
  }
  std::vector<double> a;
  fill_input(t, emb, a);
  std::vector<double> q;
  conv_into(a, params.k, params.filters, params.biases, q);
  // Concatenation is filter-major, matching the N x k feature map layout.
  double score = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) score += params.weights[j] * q[j];
  return score;
}

}  // namespace capse
