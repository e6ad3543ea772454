#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "capse/error.hpp"
#include "capse/rng.hpp"
#include "capse/triple.hpp"

namespace capse {

// k-dimensional vectors for entities and relations, row-major.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t num_entities, std::size_t num_relations,
                 std::size_t dim)
      : dim_(dim),
        num_entities_(num_entities),
        num_relations_(num_relations),
        entities_(num_entities * dim, 0.0),
        relations_(num_relations * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }

  std::span<double> entity(Index i) {
    check_entity(i);
    return {entities_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }
  std::span<const double> entity(Index i) const {
    check_entity(i);
    return {entities_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }
  std::span<double> relation(Index i) {
    check_relation(i);
    return {relations_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }
  std::span<const double> relation(Index i) const {
    check_relation(i);
    return {relations_.data() + static_cast<std::size_t>(i) * dim_, dim_};
  }

  std::vector<double>& entity_data() { return entities_; }
  const std::vector<double>& entity_data() const { return entities_; }
  std::vector<double>& relation_data() { return relations_; }
  const std::vector<double>& relation_data() const { return relations_; }

  bool all_finite() const;

 private:
  void check_entity(Index i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= num_entities_)
      throw VocabError("entity index out of range: " + std::to_string(i));
  }
  void check_relation(Index i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= num_relations_)
      throw VocabError("relation index out of range: " + std::to_string(i));
  }

  std::size_t dim_ = 0;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<double> entities_;
  std::vector<double> relations_;
};

// Uniform(-6/sqrt(k), +6/sqrt(k)) initialization, deterministic per seed.
EmbeddingTable init_random(const Vocab& vocab, std::size_t k,
                           std::uint64_t seed);

// "word v1 ... vk" per line, space-separated. All lines must agree on k.
std::map<std::string, std::vector<double>> load_word_vectors(
    const std::filesystem::path& path);

struct SynsetInitReport {
  std::size_t entities_covered = 0;  // entities with >= 1 known token
  std::size_t entities_fallback = 0; // random rows
};

// Entity vectors as the mean of the word vectors of their in-vocabulary
// tokens; entities without any known token fall back to the random init.
// Relation vectors are random.
EmbeddingTable synset_init(
    const std::map<std::string, std::vector<double>>& word_vecs,
    const std::map<std::string, std::vector<std::string>>& entity_words,
    const Vocab& vocab, std::size_t k, std::uint64_t seed,
    SynsetInitReport* report = nullptr);

// Tokenizer for WordNet-style entity names: split on '_', drop trailing
// sense-number and part-of-speech tokens, lowercase the rest.
std::vector<std::string> surface_form_tokens(const std::string& entity_name);

// Text format:
//   entities <N> <k>
//   <name> v1 ... vk            (N lines)
//   relations <M> <k>
//   <name> v1 ... vk            (M lines)
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& emb, const Vocab& vocab);
void write_embeddings(std::ostream& out, const EmbeddingTable& emb,
                      const Vocab& vocab);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const Vocab& vocab);
EmbeddingTable read_embeddings(std::istream& in, const Vocab& vocab);

}  // namespace capse
