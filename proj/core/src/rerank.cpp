#include "capse/rerank.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "capse/error.hpp"

namespace capse {

namespace {

struct PendingEntry {
  LogEntry entry;
  std::vector<bool> rank_seen;
  std::size_t filled = 0;
};

}  // namespace

std::vector<LogEntry> load_search_log(const std::filesystem::path& path,
                                      StringIndex& users, StringIndex& queries,
                                      StringIndex& docs) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open query log: " + path.string());

  // Entries keep first-appearance order; lines of one entry may interleave.
  std::vector<PendingEntry> pending;
  std::map<std::tuple<Index, Index, std::int64_t>, std::size_t> position;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream ss(line);
    std::string user_s, query_s, doc_s, label_s, rank_s, ts_s;
    if (!std::getline(ss, user_s, '\t') || !std::getline(ss, query_s, '\t') ||
        !std::getline(ss, doc_s, '\t') || !std::getline(ss, label_s, '\t') ||
        !std::getline(ss, rank_s, '\t') || !std::getline(ss, ts_s)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 6 tab-separated fields");
    }

    int label = 0;
    long rank = 0;
    long long ts = 0;
    try {
      label = std::stoi(label_s);
      rank = std::stol(rank_s);
      ts = std::stoll(ts_s);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": bad numeric field");
    }
    if (label != 0 && label != 1) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": label must be 0 or 1");
    }
    if (rank < 1 || rank > static_cast<long>(kResultListSize)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": orig_rank must be in 1..10");
    }

    const Index user = users.add(user_s);
    const Index query = queries.add(query_s);
    const Index doc = docs.add(doc_s);

    const auto key = std::make_tuple(user, query, static_cast<std::int64_t>(ts));
    auto [it, inserted] = position.try_emplace(key, pending.size());
    if (inserted) {
      PendingEntry pe;
      pe.entry.user = user;
      pe.entry.query = query;
      pe.entry.timestamp = ts;
      pe.entry.ranked_docs.assign(kResultListSize, -1);
      pe.entry.relevant.assign(kResultListSize, false);
      pe.rank_seen.assign(kResultListSize, false);
      pending.push_back(std::move(pe));
    }
    PendingEntry& pe = pending[it->second];
    const auto slot = static_cast<std::size_t>(rank - 1);
    if (pe.rank_seen[slot]) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": duplicate orig_rank " + std::to_string(rank) +
                       " within one entry");
    }
    pe.rank_seen[slot] = true;
    pe.entry.ranked_docs[slot] = doc;
    pe.entry.relevant[slot] = label == 1;
    ++pe.filled;
  }

  std::vector<LogEntry> entries;
  entries.reserve(pending.size());
  for (PendingEntry& pe : pending) {
    if (pe.filled != kResultListSize) {
      throw ParseError(path.string() + ": entry (user " +
                       users.name(pe.entry.user) + ", query " +
                       queries.name(pe.entry.query) + ", t " +
                       std::to_string(pe.entry.timestamp) + ") has " +
                       std::to_string(pe.filled) + " of 10 ranks");
    }
    entries.push_back(std::move(pe.entry));
  }
  return entries;
}

SearchLog load_search_dataset(const std::filesystem::path& dir) {
  SearchLog log;
  log.train = load_search_log(dir / "train.txt", log.users, log.queries,
                              log.docs);
  log.valid = load_search_log(dir / "valid.txt", log.users, log.queries,
                              log.docs);
  log.test = load_search_log(dir / "test.txt", log.users, log.queries,
                             log.docs);
  return log;
}

std::map<std::string, std::vector<double>> load_topic_embeddings(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topic embeddings: " + path.string());

  std::map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream ss(line);
    std::string doc;
    ss >> doc;
    std::vector<double> vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (doc.empty() || vec.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'doc_id p1 ... pk'");
    }
    if (dim == 0) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": dimension " + std::to_string(vec.size()) +
                       " != " + std::to_string(dim));
    }
    double sum = 0.0;
    for (double v : vec) {
      if (v < 0.0) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": negative topic proportion");
      }
      sum += v;
    }
    if (sum < 1.0 - 1e-3 || sum > 1.0 + 1e-3) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": topic proportions sum to " + std::to_string(sum));
    }
    for (double& v : vec) v /= sum;
    out[doc] = std::move(vec);
  }
  return out;
}

namespace {

std::vector<double> decay_combination(
    const std::vector<std::vector<double>>& vectors, double delta) {
  if (vectors.empty()) throw Error("decay combination over an empty list");
  if (delta <= 0.0 || delta >= 1.0) {
    throw Error("decay delta must be in (0, 1)");
  }
  const std::size_t k = vectors.front().size();
  double norm = 0.0;
  double w = 1.0;
  for (std::size_t i = 0; i < vectors.size(); ++i, w *= delta) norm += w;

  std::vector<double> out(k, 0.0);
  w = 1.0;
  for (const std::vector<double>& v : vectors) {
    if (v.size() != k) throw ShapeError("decay combination: mixed dimensions");
    const double lambda = w / norm;
    for (std::size_t j = 0; j < k; ++j) out[j] += lambda * v[j];
    w *= delta;
  }
  return out;
}

}  // namespace

std::vector<double> query_embedding(
    const std::vector<std::vector<double>>& top_docs, double delta) {
  return decay_combination(top_docs, delta);
}

std::vector<double> user_profile_init(
    const std::vector<std::vector<double>>& clicked_newest_first, double delta,
    std::size_t k, bool* fell_back) {
  if (clicked_newest_first.empty()) {
    if (fell_back) *fell_back = true;
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
  }
  if (fell_back) *fell_back = false;
  return decay_combination(clicked_newest_first, delta);
}

RerankModel build_rerank_model(
    const SearchLog& log,
    const std::map<std::string, std::vector<double>>& doc_topics,
    const RerankModelConfig& cfg, RerankBuildReport* report) {
  if (doc_topics.empty()) throw Error("rerank: no topic embeddings");
  const std::size_t k = doc_topics.begin()->second.size();

  RerankModel model;
  model.delta = cfg.delta;
  model.num_queries = log.queries.size();
  const std::size_t num_entities = log.queries.size() + log.docs.size();
  model.emb = EmbeddingTable(num_entities, log.users.size(), k);
  model.params = init_capse_params(k, cfg.n_filters, cfg.d,
                                   cfg.routing_iterations, cfg.seed);

  auto topic_of = [&](Index doc) -> const std::vector<double>& {
    auto it = doc_topics.find(log.docs.name(doc));
    if (it == doc_topics.end()) {
      throw LookupError("no topic embedding for document " +
                        log.docs.name(doc));
    }
    return it->second;
  };

  // Document rows come straight from the topic model.
  for (std::size_t d = 0; d < log.docs.size(); ++d) {
    const auto doc = static_cast<Index>(d);
    const std::vector<double>& v = topic_of(doc);
    auto row = model.emb.entity(model.doc_entity(doc));
    std::copy(v.begin(), v.end(), row.begin());
  }

  // Query rows from the first impression of each query, decay-weighted.
  std::vector<bool> query_done(log.queries.size(), false);
  auto fill_queries = [&](const std::vector<LogEntry>& entries) {
    for (const LogEntry& entry : entries) {
      if (query_done[static_cast<std::size_t>(entry.query)]) continue;
      query_done[static_cast<std::size_t>(entry.query)] = true;
      std::vector<std::vector<double>> top;
      top.reserve(entry.ranked_docs.size());
      for (Index doc : entry.ranked_docs) top.push_back(topic_of(doc));
      const std::vector<double> vq = query_embedding(top, cfg.delta);
      auto row = model.emb.entity(model.query_entity(entry.query));
      std::copy(vq.begin(), vq.end(), row.begin());
    }
  };
  fill_queries(log.train);
  fill_queries(log.valid);
  fill_queries(log.test);

  // User rows from training-split clicks, newest first.
  std::vector<const LogEntry*> train_entries;
  train_entries.reserve(log.train.size());
  for (const LogEntry& e : log.train) train_entries.push_back(&e);
  std::stable_sort(train_entries.begin(), train_entries.end(),
                   [](const LogEntry* a, const LogEntry* b) {
                     return a->timestamp > b->timestamp;
                   });
  std::vector<std::vector<std::vector<double>>> clicks(log.users.size());
  for (const LogEntry* e : train_entries) {
    for (std::size_t pos = 0; pos < e->ranked_docs.size(); ++pos) {
      if (!e->relevant[pos]) continue;
      clicks[static_cast<std::size_t>(e->user)].push_back(
          topic_of(e->ranked_docs[pos]));
    }
  }
  for (std::size_t u = 0; u < log.users.size(); ++u) {
    bool fell_back = false;
    const std::vector<double> profile =
        user_profile_init(clicks[u], cfg.delta, k, &fell_back);
    if (fell_back && report) ++report->users_without_history;
    auto row = model.emb.relation(static_cast<Index>(u));
    std::copy(profile.begin(), profile.end(), row.begin());
  }
  return model;
}

std::vector<LabeledTriple> rerank_triples(
    const RerankModel& model, const std::vector<LogEntry>& entries) {
  std::vector<LabeledTriple> out;
  out.reserve(entries.size() * kResultListSize);
  for (const LogEntry& entry : entries) {
    for (std::size_t pos = 0; pos < entry.ranked_docs.size(); ++pos) {
      out.push_back(
          {model.make_triple(entry.query, entry.user, entry.ranked_docs[pos]),
           entry.relevant[pos] ? +1 : -1});
    }
  }
  return out;
}

CapsETrainResult train_rerank(RerankModel& model,
                              const std::vector<LogEntry>& train_entries,
                              const CapsETrainConfig& cfg,
                              const CheckpointCallback& on_checkpoint) {
  CapsETrainConfig frozen = cfg;
  frozen.update_embeddings.entities = false;  // queries and documents fixed
  frozen.update_embeddings.relations = true;
  const std::vector<LabeledTriple> data = rerank_triples(model, train_entries);
  return train_capse_labeled(data, model.emb, model.params, frozen,
                             on_checkpoint);
}

std::vector<Index> rerank(const RerankModel& model, const LogEntry& entry) {
  const auto num_entities = static_cast<Index>(model.emb.num_entities());
  const auto num_users = static_cast<Index>(model.emb.num_relations());
  if (entry.user < 0 || entry.user >= num_users) {
    throw LookupError("unknown user id " + std::to_string(entry.user));
  }
  if (entry.query < 0 || model.query_entity(entry.query) >=
                             static_cast<Index>(model.num_queries)) {
    throw LookupError("unknown query id " + std::to_string(entry.query));
  }

  ScoreWorkspace ws;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(entry.ranked_docs.size());
  for (std::size_t pos = 0; pos < entry.ranked_docs.size(); ++pos) {
    const Index doc = entry.ranked_docs[pos];
    if (doc < 0 || model.doc_entity(doc) >= num_entities) {
      throw LookupError("unknown document id " + std::to_string(doc));
    }
    const Triple t = model.make_triple(entry.query, entry.user, doc);
    scored.emplace_back(capse_score_fast(t, model.emb, model.params, ws), pos);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first;  // ties keep original order
                   });
  std::vector<Index> out;
  out.reserve(scored.size());
  for (const auto& [score, pos] : scored) out.push_back(entry.ranked_docs[pos]);
  return out;
}

RerankMetrics eval_rerank(const std::vector<LogEntry>& entries,
                          const Reranker& reranker) {
  RerankMetrics metrics;
  double reciprocal_sum = 0.0;
  std::size_t first_hits = 0;
  for (const LogEntry& entry : entries) {
    if (!entry.has_relevant()) {
      ++metrics.skipped;
      continue;
    }
    const std::vector<Index> order = reranker(entry);
    std::size_t rank = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const Index doc = order[pos];
      bool rel = false;
      for (std::size_t j = 0; j < entry.ranked_docs.size(); ++j) {
        if (entry.ranked_docs[j] == doc && entry.relevant[j]) {
          rel = true;
          break;
        }
      }
      if (rel) {
        rank = pos + 1;
        break;
      }
    }
    if (rank == 0) {
      // relevant docs exist but the re-ranker dropped them; treat as miss
      ++metrics.skipped;
      continue;
    }
    reciprocal_sum += 1.0 / static_cast<double>(rank);
    if (rank == 1) ++first_hits;
    ++metrics.evaluated;
  }
  if (metrics.evaluated > 0) {
    metrics.mrr = reciprocal_sum / static_cast<double>(metrics.evaluated);
    metrics.hits1 =
        static_cast<double>(first_hits) / static_cast<double>(metrics.evaluated);
  }
  return metrics;
}

RerankMetrics eval_rerank(const std::vector<LogEntry>& entries,
                          const RerankModel& model) {
  return eval_rerank(entries, [&model](const LogEntry& e) {
    return rerank(model, e);
  });
}

RerankMetrics eval_identity(const std::vector<LogEntry>& entries) {
  return eval_rerank(entries,
                     [](const LogEntry& e) { return e.ranked_docs; });
}

}  // namespace capse
