#include "capse/capsule.hpp"

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "naive_oracles.hpp"
#include "test_util.hpp"

using namespace capse;
using namespace capse::testing;

namespace {

EmbeddingTable table_from(const std::vector<std::vector<double>>& ents,
                          const std::vector<std::vector<double>>& rels) {
  const std::size_t k = ents.empty() ? rels.at(0).size() : ents[0].size();
  EmbeddingTable emb(ents.size(), rels.size(), k);
  for (std::size_t i = 0; i < ents.size(); ++i) {
    auto row = emb.entity(static_cast<Index>(i));
    std::copy(ents[i].begin(), ents[i].end(), row.begin());
  }
  for (std::size_t i = 0; i < rels.size(); ++i) {
    auto row = emb.relation(static_cast<Index>(i));
    std::copy(rels[i].begin(), rels[i].end(), row.begin());
  }
  return emb;
}

CapsEParams zero_params(std::size_t k, std::size_t n, std::size_t d, int m) {
  CapsEParams p;
  p.k = k;
  p.n_filters = n;
  p.d = d;
  p.routing_iterations = m;
  p.filters.assign(n * 3, 0.0);
  p.biases.assign(n, 0.0);
  p.capsule_weights.assign(k * d * n, 0.0);
  return p;
}

double norm_of(const std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  return std::sqrt(n2);
}

}  // namespace

TEST_CASE("conv_forward zero filters and biases give a zero map") {
  CapsEParams p = zero_params(4, 2, 2, 1);
  std::vector<double> a(4 * 3, 0.7);
  const auto q = conv_forward(a, 4, p);
  REQUIRE(q.size() == 2 * 4);
  for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("conv_forward computes ReLU(w . row + b)") {
  CapsEParams p = zero_params(1, 1, 1, 1);
  p.filters = {1.0, -1.0, 0.0};
  std::vector<double> a = {0.3, 0.1, 0.5};
  const auto q = conv_forward(a, 1, p);
  CHECK(q[0] == doctest::Approx(0.2).epsilon(1e-12));

  // negative preactivation is clamped
  p.filters = {-1.0, 0.0, 0.0};
  const auto q2 = conv_forward(a, 1, p);
  CHECK(q2[0] == 0.0);
}

TEST_CASE("conv_forward rejects a malformed input matrix") {
  CapsEParams p = zero_params(4, 2, 2, 1);
  std::vector<double> bad(4 * 2, 0.0);
  CHECK_THROWS_AS(conv_forward(bad, 4, p), ShapeError);
}

TEST_CASE("build_capsules transposes the feature maps") {
  // N=2, k=2 identity-like maps
  const std::vector<double> maps = {1.0, 0.0,   // filter 0 over rows
                                    0.0, 1.0};  // filter 1 over rows
  const auto u = build_capsules(maps, 2, 2);
  // capsule 0 = (q0[0], q1[0]) = (1, 0); capsule 1 = (0, 1)
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 0.0);
  CHECK(u[2] == 0.0);
  CHECK(u[3] == 1.0);

  SUBCASE("single filter degenerates to one neuron per capsule") {
    const std::vector<double> one = {0.5, 0.25};
    const auto v = build_capsules(one, 1, 2);
    CHECK(v[0] == 0.5);
    CHECK(v[1] == 0.25);
  }
  SUBCASE("zero maps give zero capsules") {
    const std::vector<double> z(6, 0.0);
    for (double x : build_capsules(z, 3, 2)) CHECK(x == 0.0);
  }
}

TEST_CASE("squash matches hand-evaluated values") {
  SUBCASE("zero vector is guarded") {
    const auto e = squash({0.0, 0.0, 0.0});
    for (double x : e) CHECK(x == 0.0);
  }
  SUBCASE("unit norm scales by one half") {
    const auto e = squash({1.0, 0.0});
    CHECK(e[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(e[1] == 0.0);
  }
  SUBCASE("(3,4) maps to 25/26 of its unit direction") {
    const auto e = squash({3.0, 4.0});
    CHECK(e[0] == doctest::Approx(0.576923076923077).epsilon(1e-12));
    CHECK(e[1] == doctest::Approx(0.769230769230769).epsilon(1e-12));
  }
}

TEST_CASE("squash norm is |s|^2/(1+|s|^2), increasing, direction-preserving") {
  Rng rng(11);
  double prev_norm = -1.0;
  for (double scale : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3, 1e6}) {
    std::vector<double> s(3);
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
    double n = norm_of(s);
    for (double& x : s) x = x / n * scale;  // norm exactly `scale`-ish

    const auto e = squash(s);
    const double en = norm_of(e);
    const double sn = norm_of(s);
    CHECK(en == doctest::Approx(sn * sn / (1.0 + sn * sn)).epsilon(1e-12));
    CHECK(en < 1.0);
    CHECK(en > prev_norm);  // strictly increasing in |s|
    prev_norm = en;

    // same direction
    for (std::size_t j = 0; j < s.size(); ++j) {
      CHECK(e[j] * sn == doctest::Approx(s[j] * en).epsilon(1e-9));
    }
  }
}

TEST_CASE("route with one iteration is squash of the capsule mean") {
  Rng rng(22);
  const std::size_t k = 5, d = 3;
  std::vector<double> uhat(k * d);
  for (double& x : uhat) x = rng.uniform(-2.0, 2.0);

  const RoutingResult res = route(uhat, k, d, 1);
  for (double c : res.couplings) {
    CHECK(c == doctest::Approx(1.0 / static_cast<double>(k)).epsilon(1e-15));
  }
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t a = 0; a < d; ++a)
      mean[a] += uhat[i * d + a] / static_cast<double>(k);
  const auto expect = squash(mean);
  for (std::size_t a = 0; a < d; ++a) {
    CHECK(std::fabs(res.e[a] - expect[a]) <= 1e-12);
  }
}

TEST_CASE("route with a single capsule pins the coupling to one") {
  std::vector<double> uhat = {0.4, -0.2};
  for (int m : {1, 3, 7}) {
    const RoutingResult res = route(uhat, 1, 2, m);
    CHECK(res.couplings.size() == 1);
    CHECK(res.couplings[0] == doctest::Approx(1.0).epsilon(1e-15));
    const auto expect = squash(uhat);
    for (std::size_t a = 0; a < 2; ++a) {
      CHECK(res.e[a] == doctest::Approx(expect[a]).epsilon(1e-12));
    }
  }
}

TEST_CASE("route hand example: two orthogonal capsules, one iteration") {
  const std::vector<double> uhat = {1.0, 0.0, 0.0, 1.0};
  const RoutingResult res = route(uhat, 2, 2, 1);
  CHECK(res.e[0] == doctest::Approx(0.23570226).epsilon(1e-7));
  CHECK(res.e[1] == doctest::Approx(0.23570226).epsilon(1e-7));
}

TEST_CASE("routing couplings sum to one at every iteration count") {
  Rng rng(33);
  for (int m : {1, 2, 3, 5, 7}) {
    const std::size_t k = 1 + rng.below(8), d = 1 + rng.below(3);
    std::vector<double> uhat(k * d);
    for (double& x : uhat) x = rng.uniform(-3.0, 3.0);
    const RoutingResult res = route(uhat, k, d, m);
    double sum = 0.0;
    for (double c : res.couplings) sum += c;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("capse_forward shapes follow the k=4, N=5, d=2 layout") {
  ToyKG kg = make_random_kg(3, 1, 2, 5);
  EmbeddingTable emb = init_random(kg.vocab, 4, 7);
  CapsEParams p = init_capse_params(4, 5, 2, 1, 9);

  const ForwardTrace tr = capse_forward(kg.train.triples()[0], emb, p);
  CHECK(tr.input.size() == 4 * 3);
  CHECK(tr.feature_maps.size() == 5 * 4);  // 5 maps of length 4
  CHECK(tr.capsules.size() == 4 * 5);      // 4 capsules of 5 neurons
  CHECK(tr.u_hat.size() == 4 * 2);         // 4 vectors of length d=2
  CHECK(tr.couplings.size() == 4);
  CHECK(tr.e_vec.size() == 2);
  CHECK(tr.score == doctest::Approx(norm_of(tr.e_vec)).epsilon(1e-15));
}

TEST_CASE("capse score is zero for zero filters and below one always") {
  ToyKG kg = make_random_kg(4, 2, 4, 6);
  EmbeddingTable emb = init_random(kg.vocab, 6, 8);

  CapsEParams zero = zero_params(6, 3, 2, 1);
  CHECK(capse_score(kg.train.triples()[0], emb, zero) == 0.0);

  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    CapsEParams p =
        init_capse_params(6, 3, 2, 1 + static_cast<int>(rng.below(3)),
                          rng.raw());
    // scale some parameters up to push |s| high
    for (double& x : p.capsule_weights) x *= 50.0;
    const double f = capse_score(kg.train.triples()[0], emb, p);
    CHECK(f >= 0.0);
    CHECK(f < 1.0);
  }
}

TEST_CASE("capse score mismatched shapes throw") {
  ToyKG kg = make_random_kg(3, 1, 2, 5);
  EmbeddingTable emb = init_random(kg.vocab, 4, 7);
  CapsEParams p = init_capse_params(5, 2, 2, 1, 9);  // k=5 vs dim 4
  CHECK_THROWS_AS(capse_score(kg.train.triples()[0], emb, p), ShapeError);
}

TEST_CASE("fast scorer agrees with the traced forward") {
  ToyKG kg = make_random_kg(6, 2, 10, 16);
  EmbeddingTable emb = init_random(kg.vocab, 5, 17);
  ScoreWorkspace ws;
  for (int m : {1, 2, 3}) {
    CapsEParams p = init_capse_params(5, 4, 3, m, 18 + m);
    for (const Triple& t : kg.train.triples()) {
      CHECK(capse_score_fast(t, emb, p, ws) ==
            doctest::Approx(capse_forward(t, emb, p).score).epsilon(1e-15));
    }
  }
}

TEST_CASE("score is invariant under matched filter and W column permutation") {
  ToyKG kg = make_random_kg(5, 2, 6, 26);
  EmbeddingTable emb = init_random(kg.vocab, 4, 27);
  CapsEParams p = init_capse_params(4, 5, 3, 2, 28);

  // permutation of the N filters
  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  CapsEParams pp = p;
  for (std::size_t f = 0; f < perm.size(); ++f) {
    for (std::size_t c = 0; c < 3; ++c) pp.filter(f, c) = p.filter(perm[f], c);
    pp.biases[f] = p.biases[perm[f]];
    for (std::size_t i = 0; i < p.k; ++i) {
      for (std::size_t a = 0; a < p.d; ++a) {
        pp.weight(i, a, f) = p.weight(i, a, perm[f]);
      }
    }
  }
  for (const Triple& t : kg.train.triples()) {
    CHECK(capse_score(t, emb, pp) ==
          doctest::Approx(capse_score(t, emb, p)).epsilon(1e-12));
  }
}

TEST_CASE("loss terms match softplus arithmetic") {
  CHECK(capse_loss_term(0.0, +1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(capse_loss_term(0.0, -1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(capse_loss_term(0.9, +1) == doctest::Approx(0.34115387).epsilon(1e-7));
  // positive always
  for (double f : {0.0, 0.1, 0.5, 0.99}) {
    CHECK(capse_loss_term(f, +1) > 0.0);
    CHECK(capse_loss_term(f, -1) > 0.0);
  }
}

TEST_CASE("batch loss is the mean over samples") {
  ToyKG kg = make_random_kg(5, 2, 6, 36);
  EmbeddingTable emb = init_random(kg.vocab, 4, 37);
  CapsEParams p = init_capse_params(4, 3, 2, 1, 38);

  const Triple t = kg.train.triples()[0];
  const std::vector<LabeledTriple> single = {{t, +1}};
  const std::vector<LabeledTriple> doubled = {{t, +1}, {t, +1}};
  CHECK(capse_loss(single, emb, p) ==
        doctest::Approx(capse_loss(doubled, emb, p)).epsilon(1e-15));
  CHECK_THROWS_AS(capse_loss({}, emb, p), Error);
}

TEST_CASE("backward: duplicated sample leaves mean-loss gradients unchanged") {
  ToyKG kg = make_random_kg(5, 2, 6, 46);
  EmbeddingTable emb = init_random(kg.vocab, 4, 47);
  CapsEParams p = init_capse_params(4, 3, 2, 1, 48);
  const Triple t = kg.train.triples()[0];

  const std::vector<LabeledTriple> single = {{t, +1}};
  const std::vector<LabeledTriple> doubled = {{t, +1}, {t, +1}};
  std::vector<ForwardTrace> tr1 = {capse_forward(t, emb, p)};
  std::vector<ForwardTrace> tr2 = {capse_forward(t, emb, p),
                                   capse_forward(t, emb, p)};
  const CapsEGrads g1 = capse_backward(single, emb, p, tr1);
  const CapsEGrads g2 = capse_backward(doubled, emb, p, tr2);
  for (std::size_t j = 0; j < g1.filters.size(); ++j) {
    CHECK(g1.filters[j] == doctest::Approx(g2.filters[j]).epsilon(1e-12));
  }
  for (std::size_t j = 0; j < g1.capsule_weights.size(); ++j) {
    CHECK(g1.capsule_weights[j] ==
          doctest::Approx(g2.capsule_weights[j]).epsilon(1e-12));
  }
}

TEST_CASE("backward: dead ReLU region zeroes filter gradients, not biases") {
  // Zero filters with negative biases keep every preactivation below zero,
  // so filter gradients vanish; with zero biases the preactivations sit at
  // zero and the ReLU subgradient is also off.
  ToyKG kg = make_random_kg(4, 1, 3, 56);
  EmbeddingTable emb = init_random(kg.vocab, 4, 57);
  CapsEParams p = zero_params(4, 3, 2, 1);
  const Triple t = kg.train.triples()[0];

  const std::vector<LabeledTriple> batch = {{t, +1}};
  std::vector<ForwardTrace> traces = {capse_forward(t, emb, p)};
  const CapsEGrads g = capse_backward(batch, emb, p, traces);
  for (double v : g.filters) CHECK(v == 0.0);
  for (double v : g.biases) CHECK(v == 0.0);

  // with positive biases the maps are active: bias gradients turn on
  CapsEParams p2 = p;
  p2.biases.assign(3, 0.5);
  for (double& w : p2.capsule_weights) w = 0.3;
  std::vector<ForwardTrace> traces2 = {capse_forward(t, emb, p2)};
  const CapsEGrads g2 = capse_backward(batch, emb, p2, traces2);
  double bias_mag = 0.0;
  for (double v : g2.biases) bias_mag += std::fabs(v);
  CHECK(bias_mag > 0.0);
}

TEST_CASE("convkb score: zero weights, hand dot product, zero filters") {
  ToyKG kg = make_random_kg(3, 1, 2, 66);
  const Triple t = kg.train.triples()[0];

  SUBCASE("zero weight vector gives zero") {
    EmbeddingTable emb = init_random(kg.vocab, 4, 67);
    ConvKBParams p;
    p.k = 4;
    p.n_filters = 2;
    p.filters.assign(6, 0.3);
    p.biases.assign(2, 0.1);
    p.weights.assign(8, 0.0);
    CHECK(convkb_score(t, emb, p) == 0.0);
  }
  SUBCASE("N=1, k=1: w . map") {
    EmbeddingTable emb = table_from({{0.1}, {0.4}, {0.1}}, {{0.2}});
    // preactivation 1*0.1 + 0*0.2 + 1*... choose filter (1, 0, 1), bias 0
    ConvKBParams p;
    p.k = 1;
    p.n_filters = 1;
    p.filters = {1.0, 0.0, 1.0};
    p.biases = {0.0};
    p.weights = {3.0};
    // map value = relu(0.1 + 0.1) = 0.2; score = 3 * 0.2
    const Triple first{0, 0, 2};
    CHECK(convkb_score(first, emb, p) == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("zero filters reduce to w . ReLU(b) broadcast") {
    EmbeddingTable emb = init_random(kg.vocab, 3, 68);
    ConvKBParams p;
    p.k = 3;
    p.n_filters = 2;
    p.filters.assign(6, 0.0);
    p.biases = {0.5, -0.25};
    p.weights.assign(6, 1.0);
    // maps: filter 0 -> 0.5 at every position, filter 1 -> 0
    CHECK(convkb_score(t, emb, p) == doctest::Approx(1.5).epsilon(1e-12));
  }
}
