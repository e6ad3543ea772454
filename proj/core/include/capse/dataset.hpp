#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capse/rng.hpp"
#include "capse/triple.hpp"

namespace capse {

struct LoadStats {
  std::size_t lines = 0;
  std::size_t duplicates = 0;  // repeated (s,r,o) within the split, dropped
};

// Reads a tab-separated triple file ("subject<TAB>relation<TAB>object" per
// line). With frozen_vocab the vocabulary is read-only and unseen names
// throw VocabError; otherwise vocab is extended in first-seen order.
TripleSet load_triples(const std::filesystem::path& path, Vocab& vocab,
                       bool frozen_vocab = false, LoadStats* stats = nullptr);

// A train/valid/test dataset directory (train.txt, valid.txt, test.txt).
struct Dataset {
  Vocab vocab;
  TripleSet train;
  TripleSet valid;
  TripleSet test;

  // Membership over train+valid+test, the filter set of the Filtered protocol.
  TripleMembership all_known() const;
};

// Loads the three splits. The vocabulary is built over all splits (the
// benchmark entity counts include entities that only occur in valid/test).
Dataset load_dataset(const std::filesystem::path& dir);

// Computes per-relation hpt/tph and the 1-1/1-M/M-1/M-M category using the
// 1.5 thresholds. Relations absent from train get flagged defaults (M-M,
// hpt = tph = 1) and a warning on warnings when provided.
RelationStats relation_stats(const TripleSet& train, const Vocab& vocab,
                             std::vector<std::string>* warnings = nullptr);

// Writes "relation<TAB>hpt<TAB>tph<TAB>category" lines.
void write_relation_stats(std::ostream& out, const RelationStats& stats,
                          const Vocab& vocab);

inline constexpr int kCorruptRetryBound = 100;

// Bernoulli negative sampling. Replaces the head with probability
// tph/(tph+hpt) for t.r, otherwise the tail; the replacement entity is
// uniform. Resamples until the corruption is outside train and different
// from t, and throws SamplingError after kCorruptRetryBound attempts.
Triple corrupt(const Triple& t, const RelationStats& stats,
               const TripleSet& train, std::size_t num_entities, Rng& rng);

enum class Side { Head, Tail };

inline const char* side_label(Side s) { return s == Side::Head ? "head" : "tail"; }

// All corruptions of t on the chosen side that do not appear in known.
// t itself is never included.
std::vector<Triple> filtered_candidates(const Triple& t, Side side,
                                        std::size_t num_entities,
                                        const TripleMembership& known);

}  // namespace capse
