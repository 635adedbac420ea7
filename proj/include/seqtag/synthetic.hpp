#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "seqtag/corpus.hpp"

namespace seqtag {

struct SyntheticOptions {
  std::size_t train_sentences = 2000;
  std::size_t dev_sentences = 200;
  std::size_t entities_per_class = 25;
  std::size_t name_pool = 40;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  /// Entity strings per class; no string belongs to two classes.
  std::map<EntityType, std::vector<std::vector<std::string>>> dictionaries;
};

/// Template sentences whose slots are filled from per-class entity
/// dictionaries. All dictionaries draw their words from one shared pool of
/// capitalized names, so a token alone does not reveal its class or its
/// B/I position; the surrounding template words do. Sentences carry a POS
/// column and ids "train-N" / "dev-N".
SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options);

}  // namespace seqtag
