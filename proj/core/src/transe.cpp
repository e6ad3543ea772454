#include "capse/transe.hpp"

#include <cmath>
#include <numeric>

#include "capse/error.hpp"

namespace capse {

namespace {

double norm_of(const std::vector<double>& diff, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L1) {
    for (double x : diff) acc += std::fabs(x);
    return acc;
  }
  for (double x : diff) acc += x * x;
  return std::sqrt(acc);
}

void diff_of(const Triple& t, const EmbeddingTable& emb,
             std::vector<double>& out) {
  const auto vs = emb.entity(t.s);
  const auto vr = emb.relation(t.r);
  const auto vo = emb.entity(t.o);
  out.resize(emb.dim());
  for (std::size_t j = 0; j < emb.dim(); ++j) out[j] = vs[j] + vr[j] - vo[j];
}

// d||x||/dx for the chosen norm; zero vector maps to zero subgradient.
void norm_grad(const std::vector<double>& diff, Norm norm,
               std::vector<double>& g) {
  g.resize(diff.size());
  if (norm == Norm::L1) {
    for (std::size_t j = 0; j < diff.size(); ++j)
      g[j] = diff[j] > 0.0 ? 1.0 : (diff[j] < 0.0 ? -1.0 : 0.0);
    return;
  }
  double n = 0.0;
  for (double x : diff) n += x * x;
  n = std::sqrt(n);
  if (n < 1e-12) {
    std::fill(g.begin(), g.end(), 0.0);
    return;
  }
  for (std::size_t j = 0; j < diff.size(); ++j) g[j] = diff[j] / n;
}

void renormalize_entities(EmbeddingTable& emb) {
  for (std::size_t e = 0; e < emb.num_entities(); ++e) {
    auto row = emb.entity(static_cast<Index>(e));
    double n = 0.0;
    for (double x : row) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-12) continue;
    for (double& x : row) x /= n;
  }
}

}  // namespace

double transe_score(const Triple& t, const EmbeddingTable& emb, Norm norm) {
  std::vector<double> diff;
  diff_of(t, emb, diff);
  return norm_of(diff, norm);
}

TransEResult transe_train(const TripleSet& train, EmbeddingTable& emb,
                          const RelationStats& stats,
                          const TransEConfig& cfg) {
  if (cfg.margin <= 0.0) throw Error("transe: margin must be > 0");
  if (cfg.lr <= 0.0) throw Error("transe: learning rate must be > 0");

  TransEResult result;
  const std::size_t dim = emb.dim();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> pos_diff, neg_diff, pos_grad, neg_grad;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    renormalize_entities(emb);
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Triple& pos = train.triples()[idx];
      const Triple neg = corrupt(pos, stats, train, emb.num_entities(), rng);

      diff_of(pos, emb, pos_diff);
      diff_of(neg, emb, neg_diff);
      const double pos_score = norm_of(pos_diff, cfg.norm);
      const double neg_score = norm_of(neg_diff, cfg.norm);
      const double term = margin_loss_term(cfg.margin, pos_score, neg_score);
      if (term <= 0.0) continue;
      epoch_loss += term;

      norm_grad(pos_diff, cfg.norm, pos_grad);
      norm_grad(neg_diff, cfg.norm, neg_grad);

      // d term/d theta = d pos_score - d neg_score; plain SGD step.
      auto vs = emb.entity(pos.s);
      auto vr = emb.relation(pos.r);
      auto vo = emb.entity(pos.o);
      for (std::size_t j = 0; j < dim; ++j) {
        const double g = cfg.lr * pos_grad[j];
        vs[j] -= g;
        vr[j] -= g;
        vo[j] += g;
      }
      auto ns = emb.entity(neg.s);
      auto nr = emb.relation(neg.r);
      auto no = emb.entity(neg.o);
      for (std::size_t j = 0; j < dim; ++j) {
        const double g = cfg.lr * neg_grad[j];
        ns[j] += g;
        nr[j] += g;
        no[j] -= g;
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("transe: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

}  // namespace capse
