#include "capse/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace capse {

bool EmbeddingTable::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  return finite(entities_) && finite(relations_);
}

EmbeddingTable init_random(const Vocab& vocab, std::size_t k,
                           std::uint64_t seed) {
  if (k < 1) throw ShapeError("embedding dimension must be >= 1");
  EmbeddingTable emb(vocab.num_entities(), vocab.num_relations(), k);
  Rng rng(seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(k));
  for (double& x : emb.entity_data()) x = rng.uniform(-bound, bound);
  for (double& x : emb.relation_data()) x = rng.uniform(-bound, bound);
  return emb;
}

std::map<std::string, std::vector<double>> load_word_vectors(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open word vector file: " + path.string());

  std::map<std::string, std::vector<double>> vecs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (word.empty() || vec.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'word v1 ... vk'");
    }
    if (dim == 0) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": dimension " + std::to_string(vec.size()) +
                       " != " + std::to_string(dim));
    }
    vecs[word] = std::move(vec);
  }
  return vecs;
}

std::vector<std::string> surface_form_tokens(const std::string& entity_name) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : entity_name) {
    if (ch == '_') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);

  auto is_sense_number = [](const std::string& t) {
    return !t.empty() &&
           std::all_of(t.begin(), t.end(),
                       [](unsigned char c) { return std::isdigit(c); });
  };
  auto is_pos_tag = [](const std::string& t) {
    return t == "NN" || t == "VB" || t == "JJ" || t == "RB";
  };
  while (!tokens.empty() &&
         (is_sense_number(tokens.back()) || is_pos_tag(tokens.back()))) {
    tokens.pop_back();
  }
  for (std::string& t : tokens) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
  }
  return tokens;
}

EmbeddingTable synset_init(
    const std::map<std::string, std::vector<double>>& word_vecs,
    const std::map<std::string, std::vector<std::string>>& entity_words,
    const Vocab& vocab, std::size_t k, std::uint64_t seed,
    SynsetInitReport* report) {
  if (!word_vecs.empty() && word_vecs.begin()->second.size() != k) {
    throw ShapeError("word vector dimension " +
                     std::to_string(word_vecs.begin()->second.size()) +
                     " does not match k=" + std::to_string(k));
  }
  // Start from the random table so fallback rows and relations are covered.
  EmbeddingTable emb = init_random(vocab, k, seed);

  for (std::size_t e = 0; e < vocab.num_entities(); ++e) {
    const std::string& name = vocab.entities.name(static_cast<Index>(e));
    auto words_it = entity_words.find(name);
    std::size_t hits = 0;
    std::vector<double> mean(k, 0.0);
    if (words_it != entity_words.end()) {
      for (const std::string& w : words_it->second) {
        auto vec_it = word_vecs.find(w);
        if (vec_it == word_vecs.end()) continue;
        ++hits;
        for (std::size_t j = 0; j < k; ++j) mean[j] += vec_it->second[j];
      }
    }
    if (hits == 0) {
      if (report) ++report->entities_fallback;
      continue;
    }
    if (report) ++report->entities_covered;
    auto row = emb.entity(static_cast<Index>(e));
    for (std::size_t j = 0; j < k; ++j)
      row[j] = mean[j] / static_cast<double>(hits);
  }
  return emb;
}

namespace {

void write_section(std::ostream& out, const char* header,
                   const StringIndex& names, const std::vector<double>& data,
                   std::size_t dim) {
  out << header << ' ' << names.size() << ' ' << dim << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names.name(static_cast<Index>(i));
    for (std::size_t j = 0; j < dim; ++j) out << ' ' << data[i * dim + j];
    out << '\n';
  }
}

void read_section(std::istream& in, const char* header,
                  const StringIndex& names, std::vector<double>& data,
                  std::size_t expect_dim) {
  std::string word;
  std::size_t count = 0, dim = 0;
  if (!(in >> word >> count >> dim) || word != header) {
    throw ParseError(std::string("embedding file: expected '") + header +
                     " <count> <dim>' header");
  }
  if (count != names.size()) {
    throw ParseError(std::string("embedding file: ") + header + " count " +
                     std::to_string(count) + " does not match vocabulary " +
                     std::to_string(names.size()));
  }
  if (dim != expect_dim) {
    throw ParseError("embedding file: inconsistent dimension");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    if (!(in >> name)) throw ParseError("embedding file: truncated");
    const Index id = names.lookup(name);  // VocabError on mismatch
    for (std::size_t j = 0; j < dim; ++j) {
      if (!(in >> data[static_cast<std::size_t>(id) * dim + j]))
        throw ParseError("embedding file: truncated row for " + name);
    }
  }
}

}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingTable& emb,
                      const Vocab& vocab) {
  out << std::setprecision(17);
  write_section(out, "entities", vocab.entities, emb.entity_data(), emb.dim());
  write_section(out, "relations", vocab.relations, emb.relation_data(),
                emb.dim());
}

void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& emb, const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write embedding file: " + path.string());
  write_embeddings(out, emb, vocab);
}

EmbeddingTable read_embeddings(std::istream& in, const Vocab& vocab) {
  std::string peek_word;
  std::size_t count = 0, dim = 0;
  const auto pos = in.tellg();
  if (!(in >> peek_word >> count >> dim) || peek_word != "entities") {
    throw ParseError("embedding file: expected 'entities <count> <dim>'");
  }
  in.seekg(pos);
  EmbeddingTable emb(vocab.num_entities(), vocab.num_relations(), dim);
  read_section(in, "entities", vocab.entities, emb.entity_data(), dim);
  read_section(in, "relations", vocab.relations, emb.relation_data(), dim);
  return emb;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file: " + path.string());
  return read_embeddings(in, vocab);
}

}  // namespace capse
