#include "capse/config.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace capse;
using namespace capse::testing;

TEST_CASE("config files parse key=value lines with comments") {
  TempDir dir("cfg");
  write_file(dir.file("run.conf"),
             "# comment line\n"
             "lr = 0.001   # trailing comment\n"
             "n_filters=64\n"
             "\n"
             "init = pretrained:emb.txt\n");
  RunConfig cfg;
  apply_key_values(cfg, parse_config_file(dir.file("run.conf")));
  CHECK(cfg.lr == doctest::Approx(0.001));
  CHECK(cfg.n_filters == 64);
  CHECK(cfg.init == "pretrained:emb.txt");
  validate(cfg);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_key_values(cfg, {{"no_such_key", "1"}}), Error);
  CHECK_THROWS_AS(apply_key_values(cfg, {{"lr", "fast"}}), Error);

  TempDir dir("cfgbad");
  write_file(dir.file("bad.conf"), "lr 0.column1\n");
  CHECK_THROWS_AS(parse_config_file(dir.file("bad.conf")), ParseError);
}

TEST_CASE("later keys override earlier ones (precedence chain)") {
  RunConfig cfg;
  apply_key_values(cfg, {{"lr", "0.1"}, {"lr", "0.2"}});
  CHECK(cfg.lr == doctest::Approx(0.2));
}

TEST_CASE("dataset profiles carry the tuned per-dataset values") {
  RunConfig wn;
  REQUIRE(apply_dataset_profile(wn, "WN18RR"));
  CHECK(wn.n_filters == 400);
  CHECK(wn.m == 1);
  CHECK(wn.lr == doctest::Approx(1e-5));
  CHECK(wn.k == 100);

  RunConfig fb;
  REQUIRE(apply_dataset_profile(fb, "fb15k-237"));
  CHECK(fb.n_filters == 50);
  CHECK(fb.m == 1);
  CHECK(fb.lr == doctest::Approx(1e-4));

  RunConfig sp;
  REQUIRE(apply_dataset_profile(sp, "search17"));
  CHECK(sp.task == "rerank");
  CHECK(sp.n_filters == 400);
  CHECK(sp.lr == doctest::Approx(5e-5));
  CHECK(sp.epochs == 200);
  CHECK(sp.k == 200);

  RunConfig other;
  CHECK(!apply_dataset_profile(other, "mystery"));
}

TEST_CASE("shipped defaults files are honored when present") {
  TempDir dir("cfgdir");
  write_file(dir.file("toyset.conf"), "n_filters=7\nlr=0.5\n");
  RunConfig cfg;
  CHECK(apply_dataset_defaults_file(cfg, dir.path(), "TOYSET"));
  CHECK(cfg.n_filters == 7);
  CHECK(!apply_dataset_defaults_file(cfg, dir.path(), "absent"));
}

TEST_CASE("validation enforces the documented invariants") {
  RunConfig cfg;
  validate(cfg);

  RunConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.delta = 1.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.task = "paint";
  CHECK_THROWS_AS(validate(bad), Error);
  bad = cfg;
  bad.init = "telepathy";
  CHECK_THROWS_AS(validate(bad), Error);
}
