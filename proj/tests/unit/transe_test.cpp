#include "capse/transe.hpp"

#include <cmath>

#include "capse/evaluate.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace capse;
using namespace capse::testing;

TEST_CASE("transe_score hand examples") {
  Vocab vocab;
  vocab.entities.add("s");
  vocab.entities.add("o");
  vocab.relations.add("r");
  EmbeddingTable emb(2, 1, 2);
  emb.entity(0)[0] = 1.0;
  emb.entity(0)[1] = 0.0;
  emb.relation(0)[0] = 0.0;
  emb.relation(0)[1] = 1.0;
  // v_o = 0
  const Triple t{0, 0, 1};
  CHECK(transe_score(t, emb, Norm::L1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(transe_score(t, emb, Norm::L2) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // exact translation scores zero
  emb.entity(1)[0] = 1.0;
  emb.entity(1)[1] = 1.0;
  CHECK(transe_score(t, emb, Norm::L1) == 0.0);
  CHECK(transe_score(t, emb, Norm::L2) == 0.0);
}

TEST_CASE("transe_score is translation consistent") {
  Vocab vocab;
  vocab.entities.add("s");
  vocab.entities.add("o");
  vocab.relations.add("r");
  Rng rng(3);
  EmbeddingTable emb = init_random(vocab, 6, 31);
  const Triple t{0, 0, 1};
  for (Norm norm : {Norm::L1, Norm::L2}) {
    const double base = transe_score(t, emb, norm);
    EmbeddingTable shifted = emb;
    for (std::size_t j = 0; j < 6; ++j) {
      const double c = rng.uniform(-2.0, 2.0);
      shifted.entity(0)[j] = emb.entity(0)[j] + c;
      shifted.entity(1)[j] = emb.entity(1)[j] + c;
    }
    CHECK(transe_score(t, shifted, norm) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("margin loss term arithmetic") {
  CHECK(margin_loss_term(5.0, 0.0, 6.0) == 0.0);  // hinge off
  CHECK(margin_loss_term(5.0, 1.0, 2.0) == doctest::Approx(4.0));
  CHECK(margin_loss_term(1.0, 0.5, 3.0) == 0.0);
}

TEST_CASE("transe_train keeps shapes, unit entity rows, and finite values") {
  ToyKG kg = make_random_kg(10, 2, 20, 808);
  EmbeddingTable emb = init_random(kg.vocab, 8, 809);
  TransEConfig cfg;
  cfg.margin = 1.0;
  cfg.lr = 0.02;
  cfg.epochs = 5;
  cfg.seed = 810;
  transe_train(kg.train, emb, kg.stats, cfg);
  CHECK(emb.dim() == 8);
  CHECK(emb.num_entities() == 10);
  CHECK(emb.all_finite());

  // one more epoch of zero learning: renormalization happens at epoch start
  TransEConfig probe = cfg;
  probe.epochs = 1;
  probe.lr = 1e-12;
  transe_train(kg.train, emb, kg.stats, probe);
  for (std::size_t e = 0; e < emb.num_entities(); ++e) {
    double n = 0.0;
    for (double x : emb.entity(static_cast<Index>(e))) n += x * x;
    CHECK(std::fabs(std::sqrt(n) - 1.0) <= 1e-6);
  }
}

TEST_CASE("transe_train is deterministic for a fixed seed") {
  ToyKG kg = make_random_kg(8, 2, 16, 909);
  EmbeddingTable a = init_random(kg.vocab, 6, 910);
  EmbeddingTable b = a;
  TransEConfig cfg;
  cfg.margin = 2.0;
  cfg.lr = 0.05;
  cfg.epochs = 10;
  cfg.seed = 911;
  transe_train(kg.train, a, kg.stats, cfg);
  transe_train(kg.train, b, kg.stats, cfg);
  CHECK(a.entity_data() == b.entity_data());
  CHECK(a.relation_data() == b.relation_data());
}

TEST_CASE("transe memorizes a 20-triple toy KG: filtered MRR >= 0.9") {
  // 10 entities, 2 relations, one object per (subject, relation) pair.
  ToyKG kg = make_functional_kg(10, 2, 2718);
  REQUIRE(kg.train.size() == 20);

  EmbeddingTable emb = init_random(kg.vocab, 32, 5150);
  TransEConfig cfg;
  cfg.margin = 0.5;
  cfg.lr = 0.005;
  cfg.norm = Norm::L1;
  cfg.epochs = 500;
  cfg.seed = 5151;
  transe_train(kg.train, emb, kg.stats, cfg);

  TripleMembership known;
  known.insert_all(kg.train.triples());
  Scorer scorer{ScoreDirection::LowerIsBetter, [&](const Triple& t) {
                  return transe_score(t, emb, Norm::L1);
                }};
  const MetricsReport rep =
      evaluate(kg.train, scorer, known, kg.stats, 10);
  CHECK(rep.overall.mrr >= 0.9);
}
