#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "capse/capsule.hpp"
#include "capse/embedding.hpp"
#include "capse/trainer.hpp"
#include "capse/triple.hpp"

namespace capse {

inline constexpr std::size_t kResultListSize = 10;

// One query impression: the top-10 list returned by the search engine and
// the SAT-click relevance labels.
struct LogEntry {
  Index user = 0;
  Index query = 0;
  std::vector<Index> ranked_docs;  // exactly 10, search-engine order
  std::vector<bool> relevant;      // parallel to ranked_docs
  std::int64_t timestamp = 0;

  bool has_relevant() const {
    for (bool b : relevant)
      if (b) return true;
    return false;
  }
};

struct SearchLog {
  StringIndex users, queries, docs;
  std::vector<LogEntry> train, valid, test;
};

// Lines "user<TAB>query<TAB>doc<TAB>label<TAB>orig_rank<TAB>timestamp",
// grouped into entries by (user, query, timestamp). Each group must supply
// ranks 1..10 exactly once.
std::vector<LogEntry> load_search_log(const std::filesystem::path& path,
                                      StringIndex& users, StringIndex& queries,
                                      StringIndex& docs);

// train.txt / valid.txt / test.txt in one directory, shared id spaces.
SearchLog load_search_dataset(const std::filesystem::path& dir);

// Topic proportion vectors: "doc_id p1 ... pk" lines. Entries must be
// nonnegative and sum to 1 within 1e-3 (rows are renormalized exactly).
std::map<std::string, std::vector<double>> load_topic_embeddings(
    const std::filesystem::path& path);

// v_q = sum_i lambda_i d_i with lambda_i = delta^(i-1) / sum_j delta^(j-1),
// over the top-ranked documents in order.
std::vector<double> query_embedding(
    const std::vector<std::vector<double>>& top_docs, double delta);

// Decay-weighted profile over clicked documents, newest first. An empty
// history falls back to the uniform distribution (counted by the caller via
// fallback flag).
std::vector<double> user_profile_init(
    const std::vector<std::vector<double>>& clicked_newest_first, double delta,
    std::size_t k, bool* fell_back = nullptr);

// CapsE over (query, user, document) mapped onto (s, r, o). Entity rows
// [0, num_queries) are queries, the rest documents; relations are users.
struct RerankModel {
  EmbeddingTable emb;
  CapsEParams params;
  std::size_t num_queries = 0;
  double delta = 0.8;

  Index query_entity(Index query) const { return query; }
  Index doc_entity(Index doc) const {
    return static_cast<Index>(num_queries) + doc;
  }
  Triple make_triple(Index query, Index user, Index doc) const {
    return Triple{query_entity(query), user, doc_entity(doc)};
  }
};

struct RerankBuildReport {
  std::size_t users_without_history = 0;  // uniform-profile fallbacks
};

struct RerankModelConfig {
  std::size_t n_filters = 400;
  std::size_t d = 10;
  int routing_iterations = 1;
  double delta = 0.8;
  std::uint64_t seed = 1;
};

// Builds the frozen query/document rows and the trainable user rows.
// Query rows use each query's first log entry; user rows use the user's
// relevant documents in the training split, newest first.
RerankModel build_rerank_model(
    const SearchLog& log,
    const std::map<std::string, std::vector<double>>& doc_topics,
    const RerankModelConfig& cfg, RerankBuildReport* report = nullptr);

// Labeled triples of a split: +1 per relevant document, -1 otherwise.
std::vector<LabeledTriple> rerank_triples(const RerankModel& model,
                                          const std::vector<LogEntry>& entries);

// Training with query/document rows frozen (only user rows and the scorer
// parameters move). Negatives come from the dataset labels, not corruption.
CapsETrainResult train_rerank(RerankModel& model,
                              const std::vector<LogEntry>& train_entries,
                              const CapsETrainConfig& cfg,
                              const CheckpointCallback& on_checkpoint = {});

// Stable sort of the entry's documents by descending score: ties keep the
// search-engine order.
std::vector<Index> rerank(const RerankModel& model, const LogEntry& entry);

struct RerankMetrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // entries without any relevant document
};

using Reranker = std::function<std::vector<Index>(const LogEntry&)>;

// Rank of the first relevant document after re-ordering each entry.
RerankMetrics eval_rerank(const std::vector<LogEntry>& entries,
                          const Reranker& reranker);

// Model and identity (search-engine order) conveniences.
RerankMetrics eval_rerank(const std::vector<LogEntry>& entries,
                          const RerankModel& model);
RerankMetrics eval_identity(const std::vector<LogEntry>& entries);

}  // namespace capse
