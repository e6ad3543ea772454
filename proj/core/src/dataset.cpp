#include "capse/dataset.hpp"

#include <fstream>
#include <ostream>
#include <unordered_set>

namespace capse {

namespace {

// Splits on '\t' only; fields may contain spaces.
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

TripleSet load_triples(const std::filesystem::path& path, Vocab& vocab,
                       bool frozen_vocab, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open triple file: " + path.string());

  TripleSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (stats) ++stats->lines;

    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 3 tab-separated fields");
    }

    Triple t;
    if (frozen_vocab) {
      try {
        t.s = vocab.entities.lookup(fields[0]);
        t.r = vocab.relations.lookup(fields[1]);
        t.o = vocab.entities.lookup(fields[2]);
      } catch (const VocabError& e) {
        throw VocabError(path.string() + ":" + std::to_string(line_no) + ": " +
                         e.what());
      }
    } else {
      t.s = vocab.entities.add(fields[0]);
      t.r = vocab.relations.add(fields[1]);
      t.o = vocab.entities.add(fields[2]);
    }

    if (!out.add(t) && stats) ++stats->duplicates;
  }
  return out;
}

TripleMembership Dataset::all_known() const {
  TripleMembership known;
  known.insert_all(train.triples());
  known.insert_all(valid.triples());
  known.insert_all(test.triples());
  return known;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.train = load_triples(dir / "train.txt", ds.vocab);
  ds.valid = load_triples(dir / "valid.txt", ds.vocab);
  ds.test = load_triples(dir / "test.txt", ds.vocab);
  return ds;
}

RelationStats relation_stats(const TripleSet& train, const Vocab& vocab,
                             std::vector<std::string>* warnings) {
  const std::size_t num_rel = vocab.num_relations();
  std::vector<std::int64_t> triples(num_rel, 0);
  std::vector<std::unordered_set<Index>> heads(num_rel), tails(num_rel);

  for (const Triple& t : train.triples()) {
    const auto r = static_cast<std::size_t>(t.r);
    ++triples[r];
    heads[r].insert(t.s);
    tails[r].insert(t.o);
  }

  RelationStats stats;
  stats.per_relation.resize(num_rel);
  for (std::size_t r = 0; r < num_rel; ++r) {
    RelationStat& st = stats.per_relation[r];
    if (triples[r] == 0) {
      // Unseen in train: keep the M-M default and warn.
      if (warnings) {
        warnings->push_back("relation '" +
                            vocab.relations.name(static_cast<Index>(r)) +
                            "' has no training triples; defaulting to M-M");
      }
      continue;
    }
    st.seen_in_train = true;
    st.num_triples = triples[r];
    st.num_distinct_heads = static_cast<std::int64_t>(heads[r].size());
    st.num_distinct_tails = static_cast<std::int64_t>(tails[r].size());
    st.hpt = static_cast<double>(st.num_triples) /
             static_cast<double>(st.num_distinct_tails);
    st.tph = static_cast<double>(st.num_triples) /
             static_cast<double>(st.num_distinct_heads);
    if (st.hpt < 1.5 && st.tph < 1.5) {
      st.category = RelationCategory::OneToOne;
    } else if (st.hpt < 1.5) {
      st.category = RelationCategory::OneToMany;
    } else if (st.tph < 1.5) {
      st.category = RelationCategory::ManyToOne;
    } else {
      st.category = RelationCategory::ManyToMany;
    }
  }
  return stats;
}

void write_relation_stats(std::ostream& out, const RelationStats& stats,
                          const Vocab& vocab) {
  for (std::size_t r = 0; r < stats.size(); ++r) {
    const RelationStat& st = stats.per_relation[r];
    out << vocab.relations.name(static_cast<Index>(r)) << '\t' << st.hpt
        << '\t' << st.tph << '\t' << category_label(st.category) << '\n';
  }
}

Triple corrupt(const Triple& t, const RelationStats& stats,
               const TripleSet& train, std::size_t num_entities, Rng& rng) {
  if (num_entities < 2) {
    throw SamplingError("corrupt requires at least 2 entities");
  }
  const double p_head = stats.at(t.r).head_replace_prob();

  for (int attempt = 0; attempt < kCorruptRetryBound; ++attempt) {
    Triple c = t;
    const auto replacement = static_cast<Index>(rng.below(num_entities));
    if (rng.bernoulli(p_head)) {
      c.s = replacement;
    } else {
      c.o = replacement;
    }
    if (c == t) continue;  // the drawn entity was the original one
    if (!train.contains(c)) return c;
  }
  throw SamplingError("no valid corruption found within " +
                      std::to_string(kCorruptRetryBound) + " attempts");
}

std::vector<Triple> filtered_candidates(const Triple& t, Side side,
                                        std::size_t num_entities,
                                        const TripleMembership& known) {
  std::vector<Triple> out;
  out.reserve(num_entities > 0 ? num_entities - 1 : 0);
  const Index original = side == Side::Head ? t.s : t.o;
  for (std::size_t e = 0; e < num_entities; ++e) {
    const auto id = static_cast<Index>(e);
    if (id == original) continue;
    Triple c = t;
    (side == Side::Head ? c.s : c.o) = id;
    if (known.contains(c)) continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace capse
