// capse: triple-scoring toolkit CLI.
//
// Subcommands: pretrain, train, eval, analyze, rerank, routing-study.
// Configuration precedence: CLI flag > --config file > shipped per-dataset
// defaults (configs/<name>.conf or the built-in profile) > built-in defaults.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "capse/capse.hpp"

namespace fs = std::filesystem;
using namespace capse;

namespace {

struct CliOverrides {
  std::string config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::optional<std::int64_t> k, n_filters, d, m, batch, epochs, eval_every;
  std::optional<std::int64_t> seed, threads;
  std::optional<double> lr, margin, delta;
  std::optional<std::string> init;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--dataset", o.dataset, "dataset directory");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--k", o.k, "embedding dimension");
  cmd->add_option("--n-filters", o.n_filters, "number of convolution filters");
  cmd->add_option("--d", o.d, "output capsule size");
  cmd->add_option("--m", o.m, "routing iterations");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--batch", o.batch, "batch size");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--eval-every", o.eval_every,
                  "validation cadence in epochs");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--threads", o.threads, "evaluation threads (0 = all)");
  cmd->add_option("--init", o.init,
                  "random | transe | pretrained:PATH | synset:PATH");
  cmd->add_option("--margin", o.margin, "margin of the pretraining loss");
  cmd->add_option("--delta", o.delta, "decay for query/profile embeddings");
}

fs::path executable_dir() {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return fs::current_path();
  buf[n] = '\0';
  return fs::path(buf).parent_path();
}

fs::path shipped_config_dir() {
  if (const char* env = std::getenv("CAPSE_CONFIG_DIR")) return fs::path(env);
  const fs::path beside = executable_dir() / "configs";
  if (fs::exists(beside)) return beside;
  const fs::path installed =
      executable_dir().parent_path() / "share" / "capse" / "configs";
  if (fs::exists(installed)) return installed;
  return {};
}

std::string dataset_basename(const std::string& dataset_dir) {
  fs::path p(dataset_dir);
  if (p.filename().empty()) p = p.parent_path();  // trailing slash
  std::string name = p.filename().string();
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return name;
}

// Applies the precedence chain for one command invocation. `task` pins the
// command's task regardless of profiles.
RunConfig resolve_config(const CliOverrides& o, const std::string& task) {
  RunConfig cfg;

  KeyValues file_kvs;
  if (!o.config_path.empty()) {
    file_kvs = parse_config_file(o.config_path);
  }
  std::string dataset_dir = cfg.dataset_dir;
  for (const auto& [key, value] : file_kvs) {
    if (key == "dataset_dir") dataset_dir = value;
  }
  if (o.dataset) dataset_dir = *o.dataset;

  if (!dataset_dir.empty()) {
    const std::string name = dataset_basename(dataset_dir);
    apply_dataset_profile(cfg, name);
    apply_dataset_defaults_file(cfg, shipped_config_dir(), name);
  }
  apply_key_values(cfg, file_kvs);

  cfg.dataset_dir = dataset_dir;
  if (o.out) cfg.out_dir = *o.out;
  if (o.k) cfg.k = static_cast<std::size_t>(*o.k);
  if (o.n_filters) cfg.n_filters = static_cast<std::size_t>(*o.n_filters);
  if (o.d) cfg.d = static_cast<std::size_t>(*o.d);
  if (o.m) cfg.m = static_cast<int>(*o.m);
  if (o.batch) cfg.batch_size = static_cast<std::size_t>(*o.batch);
  if (o.epochs) cfg.epochs = static_cast<int>(*o.epochs);
  if (o.eval_every) cfg.eval_every = static_cast<int>(*o.eval_every);
  if (o.seed) cfg.seed = static_cast<std::uint64_t>(*o.seed);
  if (o.threads) cfg.threads = static_cast<int>(*o.threads);
  if (o.lr) cfg.lr = *o.lr;
  if (o.margin) cfg.margin = *o.margin;
  if (o.delta) cfg.delta = *o.delta;
  if (o.init) cfg.init = *o.init;

  cfg.task = task;
  validate(cfg);
  if (cfg.dataset_dir.empty()) {
    throw Error("no dataset directory given (--dataset or config)");
  }
  return cfg;
}

int effective_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// The pretrain command reuses --lr/--epochs for the TransE settings.
void fold_pretrain_flags(const CliOverrides& o, RunConfig& cfg) {
  if (o.lr) cfg.transe_lr = *o.lr;
  if (o.epochs) cfg.transe_epochs = static_cast<int>(*o.epochs);
}

EmbeddingTable initial_embeddings(const RunConfig& cfg, const Dataset& ds,
                                  const RelationStats& stats,
                                  std::ostream& log) {
  if (cfg.init == "random") {
    return init_random(ds.vocab, cfg.k, cfg.seed);
  }
  if (cfg.init.rfind("pretrained:", 0) == 0) {
    const std::string path = cfg.init.substr(std::string("pretrained:").size());
    EmbeddingTable emb = load_embeddings(path, ds.vocab);
    if (emb.dim() != cfg.k) {
      throw ShapeError("pretrained embeddings have k=" +
                       std::to_string(emb.dim()) + ", configured k=" +
                       std::to_string(cfg.k));
    }
    log << "loaded pretrained embeddings from " << path << "\n";
    return emb;
  }

  EmbeddingTable emb(0, 0, 0);
  if (cfg.init.rfind("synset:", 0) == 0) {
    const std::string path = cfg.init.substr(std::string("synset:").size());
    const auto words = load_word_vectors(path);
    if (!words.empty() && words.begin()->second.size() != cfg.k) {
      throw ShapeError("word vectors have k=" +
                       std::to_string(words.begin()->second.size()) +
                       ", configured k=" + std::to_string(cfg.k));
    }
    std::map<std::string, std::vector<std::string>> entity_words;
    for (const std::string& name : ds.vocab.entities.names()) {
      entity_words[name] = surface_form_tokens(name);
    }
    SynsetInitReport report;
    emb = synset_init(words, entity_words, ds.vocab, cfg.k, cfg.seed, &report);
    log << "synset init: " << report.entities_covered << " entities covered, "
        << report.entities_fallback << " random fallbacks\n";
  } else {  // "transe"
    emb = init_random(ds.vocab, cfg.k, cfg.seed);
  }

  if (cfg.init == "transe" || cfg.init.rfind("synset:", 0) == 0) {
    TransEConfig tcfg;
    tcfg.margin = cfg.margin;
    tcfg.lr = cfg.transe_lr;
    tcfg.norm = cfg.transe_norm == "l2" ? Norm::L2 : Norm::L1;
    tcfg.epochs = cfg.transe_epochs;
    tcfg.seed = Rng::derive(cfg.seed, 1);
    log << "pretraining embeddings with the translation model for "
        << tcfg.epochs << " epochs\n";
    transe_train(ds.train, emb, stats, tcfg);
  }
  return emb;
}

Scorer capse_scorer(const EmbeddingTable& emb, const CapsEParams& params) {
  return Scorer{ScoreDirection::HigherIsBetter,
                [&emb, &params](const Triple& t) {
                  thread_local ScoreWorkspace ws;
                  return capse_score_fast(t, emb, params, ws);
                }};
}

int cmd_pretrain(const CliOverrides& o) {
  RunConfig cfg = resolve_config(o, "kg");
  fold_pretrain_flags(o, cfg);
  const Dataset ds = load_dataset(cfg.dataset_dir);
  std::vector<std::string> warnings;
  const RelationStats stats = relation_stats(ds.train, ds.vocab, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  EmbeddingTable emb =
      cfg.init.rfind("synset:", 0) == 0
          ? initial_embeddings(cfg, ds, stats, std::cout)
          : init_random(ds.vocab, cfg.k, cfg.seed);
  if (cfg.init.rfind("synset:", 0) != 0) {
    TransEConfig tcfg;
    tcfg.margin = cfg.margin;
    tcfg.lr = cfg.transe_lr;
    tcfg.norm = cfg.transe_norm == "l2" ? Norm::L2 : Norm::L1;
    tcfg.epochs = cfg.transe_epochs;
    tcfg.seed = Rng::derive(cfg.seed, 1);
    std::cout << "pretraining for " << tcfg.epochs << " epochs on "
              << ds.train.size() << " triples\n";
    transe_train(ds.train, emb, stats, tcfg);
  }

  fs::create_directories(cfg.out_dir);
  const fs::path out = fs::path(cfg.out_dir) / "transe.emb";
  save_embeddings(out, emb, ds.vocab);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_analyze(const CliOverrides& o) {
  const RunConfig cfg = resolve_config(o, "kg");
  const Dataset ds = load_dataset(cfg.dataset_dir);
  std::vector<std::string> warnings;
  const RelationStats stats = relation_stats(ds.train, ds.vocab, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(cfg.out_dir);
  const fs::path out = fs::path(cfg.out_dir) / "relation_stats.tsv";
  std::ofstream file(out);
  write_relation_stats(file, stats, ds.vocab);

  std::size_t counts[4] = {0, 0, 0, 0};
  for (const RelationStat& st : stats.per_relation) {
    ++counts[static_cast<int>(st.category)];
  }
  std::size_t test_counts[4] = {0, 0, 0, 0};
  for (const Triple& t : ds.test.triples()) {
    ++test_counts[static_cast<int>(stats.at(t.r).category)];
  }

  std::cout << ds.vocab.num_entities() << " entities, "
            << ds.vocab.num_relations() << " relations; triples "
            << ds.train.size() << "/" << ds.valid.size() << "/"
            << ds.test.size() << " (train/valid/test)\n";
  std::cout << "relation categories:";
  const RelationCategory cats[4] = {
      RelationCategory::OneToOne, RelationCategory::OneToMany,
      RelationCategory::ManyToOne, RelationCategory::ManyToMany};
  for (RelationCategory c : cats) {
    std::cout << ' ' << category_label(c) << '='
              << counts[static_cast<int>(c)];
  }
  std::cout << "\ntest triples per category:";
  std::cout << std::fixed << std::setprecision(1);
  for (RelationCategory c : cats) {
    const double frac =
        ds.test.size() == 0
            ? 0.0
            : 100.0 * static_cast<double>(test_counts[static_cast<int>(c)]) /
                  static_cast<double>(ds.test.size());
    std::cout << ' ' << category_label(c) << '=' << frac << '%';
  }
  std::cout << "\nwrote " << out.string() << "\n";
  return 0;
}

int cmd_train(const CliOverrides& o) {
  const RunConfig cfg = resolve_config(o, "kg");
  const Dataset ds = load_dataset(cfg.dataset_dir);
  std::vector<std::string> warnings;
  const RelationStats stats = relation_stats(ds.train, ds.vocab, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  const TripleMembership known = ds.all_known();

  EmbeddingTable emb = initial_embeddings(cfg, ds, stats, std::cout);
  CapsEParams params = init_capse_params(cfg.k, cfg.n_filters, cfg.d, cfg.m,
                                         Rng::derive(cfg.seed, 2));

  fs::create_directories(cfg.out_dir);
  std::ofstream log(fs::path(cfg.out_dir) / "train_log.tsv");
  log << "epoch\tloss\tvalid_hits10\n" << std::setprecision(10);

  CapsETrainConfig tcfg;
  tcfg.lr = cfg.lr;
  tcfg.batch_size = cfg.batch_size;
  tcfg.epochs = cfg.epochs;
  tcfg.eval_every = cfg.eval_every;
  tcfg.seed = Rng::derive(cfg.seed, 3);

  double best_hits = -1.0;
  const auto on_checkpoint = [&](const CheckpointInfo& info,
                                 const EmbeddingTable& e,
                                 const CapsEParams& p) {
    EvaluateOptions opts;
    opts.hits_at = {10};
    opts.threads = effective_threads(cfg);
    opts.keep_outcomes = false;
    const MetricsReport rep = evaluate(ds.valid, capse_scorer(e, p), known,
                                       stats, ds.vocab.num_entities(), opts);
    const double hits10 = 100.0 * rep.overall.hits.at(10);
    log << info.epoch << '\t' << info.epoch_loss << '\t' << hits10 << '\n'
        << std::flush;
    std::cout << "epoch " << info.epoch << ": loss " << info.epoch_loss
              << ", valid Hits@10 " << hits10 << "%\n";
    Checkpoint ckpt{e, p, info.epoch};
    save_checkpoint(fs::path(cfg.out_dir) / "checkpoint_last.capse", ckpt,
                    ds.vocab);
    if (hits10 > best_hits) {
      best_hits = hits10;
      save_checkpoint(fs::path(cfg.out_dir) / "checkpoint_best.capse", ckpt,
                      ds.vocab);
      std::cout << "  new best validation Hits@10; checkpoint saved\n";
    }
  };

  train_capse(ds.train, emb, params, stats, tcfg, on_checkpoint);

  std::cout << "training done; best validation Hits@10 " << best_hits
            << "%\n";
  return 0;
}

int cmd_eval(const CliOverrides& o, const std::string& checkpoint_path) {
  const RunConfig cfg = resolve_config(o, "kg");
  const Dataset ds = load_dataset(cfg.dataset_dir);
  std::vector<std::string> warnings;
  const RelationStats stats = relation_stats(ds.train, ds.vocab, &warnings);
  const TripleMembership known = ds.all_known();

  const Checkpoint ckpt = load_checkpoint(checkpoint_path, ds.vocab);

  EvaluateOptions opts;
  opts.hits_at = {1, 3, 10};
  opts.threads = effective_threads(cfg);
  opts.keep_outcomes = false;
  const MetricsReport rep =
      evaluate(ds.test, capse_scorer(ckpt.embeddings, ckpt.params), known,
               stats, ds.vocab.num_entities(), opts);

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream tsv(fs::path(cfg.out_dir) / "metrics.tsv");
    write_metrics_tsv(tsv, rep, ds.vocab);
    std::ofstream txt(fs::path(cfg.out_dir) / "metrics.txt");
    write_metrics(txt, rep, ds.vocab);
  }
  write_metrics(std::cout, rep, ds.vocab);
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "metrics.tsv").string()
            << "\n";
  return 0;
}

int cmd_routing_study(const CliOverrides& o, std::vector<int> grid) {
  const RunConfig cfg = resolve_config(o, "kg");
  const Dataset ds = load_dataset(cfg.dataset_dir);
  std::vector<std::string> warnings;
  const RelationStats stats = relation_stats(ds.train, ds.vocab, &warnings);
  const TripleMembership known = ds.all_known();

  const EmbeddingTable init = initial_embeddings(cfg, ds, stats, std::cout);

  RoutingStudyConfig scfg;
  if (!grid.empty()) scfg.routing_grid = std::move(grid);
  scfg.n_filters = cfg.n_filters;
  scfg.d = cfg.d;
  scfg.train.lr = cfg.lr;
  scfg.train.batch_size = cfg.batch_size;
  scfg.train.epochs = cfg.epochs;
  scfg.train.eval_every = cfg.eval_every;
  scfg.train.seed = Rng::derive(cfg.seed, 4);
  scfg.eval_threads = effective_threads(cfg);

  const RoutingStudyResult res = routing_study(
      ds.train, ds.valid, init, stats, known, ds.vocab.num_entities(), scfg);

  fs::create_directories(cfg.out_dir);
  std::ofstream file(fs::path(cfg.out_dir) / "routing_study.tsv");
  write_routing_study(file, res);
  write_routing_study(std::cout, res);
  return 0;
}

int cmd_rerank(const CliOverrides& o) {
  const RunConfig cfg = resolve_config(o, "rerank");
  const SearchLog log = load_search_dataset(cfg.dataset_dir);
  const auto topics =
      load_topic_embeddings(fs::path(cfg.dataset_dir) / "doc_topics.txt");
  const std::size_t topic_k = topics.begin()->second.size();
  if (topic_k != cfg.k) {
    std::cout << "using topic dimension k=" << topic_k
              << " from doc_topics.txt\n";
  }

  RerankModelConfig mcfg;
  mcfg.n_filters = cfg.n_filters;
  mcfg.d = cfg.d;
  mcfg.routing_iterations = cfg.m;
  mcfg.delta = cfg.delta;
  mcfg.seed = Rng::derive(cfg.seed, 5);
  RerankBuildReport report;
  RerankModel model = build_rerank_model(log, topics, mcfg, &report);
  if (report.users_without_history > 0) {
    std::cerr << "warning: " << report.users_without_history
              << " users have no training clicks; uniform profiles used\n";
  }

  CapsETrainConfig tcfg;
  tcfg.lr = cfg.lr;
  tcfg.batch_size = cfg.batch_size;
  tcfg.epochs = cfg.epochs;
  tcfg.eval_every = cfg.eval_every;
  tcfg.seed = Rng::derive(cfg.seed, 6);

  double best_mrr = -1.0;
  CapsEParams best_params = model.params;
  std::vector<double> best_users = model.emb.relation_data();

  train_rerank(model, log.train, tcfg,
               [&](const CheckpointInfo& info, const EmbeddingTable&,
                   const CapsEParams&) {
                 const RerankMetrics m = eval_rerank(log.valid, model);
                 std::cout << "epoch " << info.epoch << ": valid MRR " << m.mrr
                           << ", Hits@1 " << 100.0 * m.hits1 << "%\n";
                 if (m.mrr > best_mrr) {
                   best_mrr = m.mrr;
                   best_params = model.params;
                   best_users = model.emb.relation_data();
                 }
               });
  if (best_mrr >= 0.0) {
    model.params = best_params;
    model.emb.relation_data() = best_users;
  }

  const RerankMetrics se = eval_identity(log.test);
  const RerankMetrics ours = eval_rerank(log.test, model);

  fs::create_directories(cfg.out_dir);
  std::ofstream out(fs::path(cfg.out_dir) / "rerank_metrics.tsv");
  out << std::setprecision(6) << std::fixed;
  out << "method\tMRR\tHits@1\tevaluated\tskipped\n";
  out << "search_engine\t" << se.mrr << '\t' << se.hits1 << '\t'
      << se.evaluated << '\t' << se.skipped << '\n';
  out << "capse\t" << ours.mrr << '\t' << ours.hits1 << '\t' << ours.evaluated
      << '\t' << ours.skipped << '\n';

  std::cout << std::setprecision(4) << std::fixed;
  std::cout << "search-engine order: MRR " << se.mrr << ", Hits@1 "
            << 100.0 * se.hits1 << "%\n";
  std::cout << "re-ranked:           MRR " << ours.mrr << ", Hits@1 "
            << 100.0 * ours.hits1 << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capse: capsule-network triple scoring toolkit"};
  app.require_subcommand(1);

  CliOverrides o;
  std::string checkpoint_path;
  std::vector<int> grid;

  CLI::App* pretrain = app.add_subcommand(
      "pretrain", "train translation embeddings for initialization");
  add_common_options(pretrain, o);

  CLI::App* train =
      app.add_subcommand("train", "train the capsule scorer on a KG");
  add_common_options(train, o);

  CLI::App* eval =
      app.add_subcommand("eval", "filtered-ranking evaluation on test");
  add_common_options(eval, o);
  eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();

  CLI::App* analyze = app.add_subcommand(
      "analyze", "relation statistics and category breakdown");
  add_common_options(analyze, o);

  CLI::App* rerank_cmd = app.add_subcommand(
      "rerank", "search personalization: train and re-rank query logs");
  add_common_options(rerank_cmd, o);

  CLI::App* study = app.add_subcommand(
      "routing-study", "validation Hits@10 across routing iteration counts");
  add_common_options(study, o);
  study->add_option("--grid", grid, "routing iteration grid (default 1 3 5 7)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed()) return cmd_pretrain(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o, checkpoint_path);
    if (analyze->parsed()) return cmd_analyze(o);
    if (rerank_cmd->parsed()) return cmd_rerank(o);
    if (study->parsed()) return cmd_routing_study(o, grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
