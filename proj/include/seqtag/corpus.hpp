#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqtag {

enum class EntityType { PER, LOC, GRP, CORP, PROD, CW };

inline constexpr std::array<EntityType, 6> kAllEntityTypes = {
    EntityType::PER, EntityType::LOC, EntityType::GRP,
    EntityType::CORP, EntityType::PROD, EntityType::CW};

std::string_view to_string(EntityType t);
std::optional<EntityType> parse_entity_type(std::string_view s);

using TagSequence = std::vector<std::string>;

struct Sentence {
  std::vector<std::string> tokens;
  std::optional<TagSequence> gold_tags;
  std::optional<std::vector<std::string>> pos_tags;
  std::optional<std::string> id;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

/// Inclusive token interval [start, end] carrying an entity type.
struct EntitySpan {
  EntityType type;
  std::size_t start;
  std::size_t end;

  auto operator<=>(const EntitySpan&) const = default;
};

/// Tag strings <-> contiguous label indices. Index 0 is "O", followed by
/// B-X, I-X pairs in declaration order. The start and end states sit at
/// indices k and k+1 of the transition matrix and are never emitted.
class LabelVocab {
 public:
  explicit LabelVocab(std::vector<EntityType> types);
  static LabelVocab standard();

  std::size_t num_labels() const { return tags_.size(); }
  std::size_t start_state() const { return tags_.size(); }
  std::size_t end_state() const { return tags_.size() + 1; }
  std::size_t num_states() const { return tags_.size() + 2; }

  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<EntityType>& entity_types() const { return types_; }
  bool contains(std::string_view tag) const;
  /// Throws VocabError for tags outside the vocabulary.
  std::size_t index(std::string_view tag) const;
  const std::string& tag(std::size_t index) const { return tags_.at(index); }

  std::vector<std::size_t> encode(const TagSequence& tags) const;
  TagSequence decode(const std::vector<std::size_t>& labels) const;

  bool operator==(const LabelVocab& o) const { return types_ == o.types_; }

 private:
  std::vector<EntityType> types_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<Sentence> parse_conll(std::istream& in,
                                  const LabelVocab& vocab = LabelVocab::standard());
std::vector<Sentence> parse_conll(std::string_view text,
                                  const LabelVocab& vocab = LabelVocab::standard());
void write_conll(std::ostream& out, const std::vector<Sentence>& sentences);
std::string to_conll(const std::vector<Sentence>& sentences);

struct BioViolation {
  std::size_t position;
  std::string tag;
  bool operator==(const BioViolation&) const = default;
};

/// Empty result means the sequence is valid BIO.
std::vector<BioViolation> validate_bio(const TagSequence& tags, const LabelVocab& vocab);
bool is_valid_bio(const TagSequence& tags);
/// Rewrites every illegal I-X to B-X.
TagSequence repair_bio(const TagSequence& tags);

std::vector<EntitySpan> spans_from_bio(const TagSequence& tags);
TagSequence bio_from_spans(const std::vector<EntitySpan>& spans, std::size_t len);

}  // namespace seqtag
