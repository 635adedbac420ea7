#include "seqtag/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "seqtag/errors.hpp"

namespace seqtag {

namespace {

constexpr std::array<std::string_view, 6> kTypeNames = {"PER", "LOC", "GRP",
                                                        "CORP", "PROD", "CW"};

struct ParsedTag {
  char prefix;  // 'O', 'B' or 'I'
  std::string_view type;
};

std::optional<ParsedTag> split_tag(std::string_view tag) {
  if (tag == "O") return ParsedTag{'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return ParsedTag{tag[0], tag.substr(2)};
  return std::nullopt;
}

ParsedTag split_tag_or_throw(std::string_view tag) {
  auto p = split_tag(tag);
  if (!p) throw VocabError("malformed BIO tag '" + std::string(tag) + "'");
  return *p;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > b) out.emplace_back(line.substr(b, i - b));
  }
  return out;
}

}  // namespace

std::string_view to_string(EntityType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<EntityType> parse_entity_type(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i)
    if (kTypeNames[i] == s) return static_cast<EntityType>(i);
  return std::nullopt;
}

LabelVocab::LabelVocab(std::vector<EntityType> types) : types_(std::move(types)) {
  tags_.push_back("O");
  for (EntityType t : types_) {
    tags_.push_back("B-" + std::string(to_string(t)));
    tags_.push_back("I-" + std::string(to_string(t)));
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!index_.emplace(tags_[i], i).second)
      throw VocabError("duplicate entity type in label vocabulary: " + tags_[i]);
  }
}

LabelVocab LabelVocab::standard() {
  return LabelVocab({kAllEntityTypes.begin(), kAllEntityTypes.end()});
}

bool LabelVocab::contains(std::string_view tag) const {
  return index_.count(std::string(tag)) > 0;
}

std::size_t LabelVocab::index(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) throw VocabError("unknown tag '" + std::string(tag) + "'");
  return it->second;
}

std::vector<std::size_t> LabelVocab::encode(const TagSequence& tags) const {
  std::vector<std::size_t> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(index(t));
  return out;
}

TagSequence LabelVocab::decode(const std::vector<std::size_t>& labels) const {
  TagSequence out;
  out.reserve(labels.size());
  for (std::size_t l : labels) {
    if (l >= tags_.size()) throw VocabError("label index " + std::to_string(l) + " out of range");
    out.push_back(tags_[l]);
  }
  return out;
}

std::vector<Sentence> parse_conll(std::istream& in, const LabelVocab& vocab) {
  std::vector<Sentence> out;
  Sentence cur;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::string line;

  auto flush = [&] {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = Sentence{};
    columns = 0;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_ws(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    // Comments are only recognized before the first token of a sentence, and
    // a "#" token whose last column is a known tag is still a token.
    if (cur.tokens.empty() && line[0] == '#') {
      const bool id_line = fields.size() >= 3 && fields[0] == "#" && fields[1] == "id";
      if (id_line) {
        cur.id = fields[2];
        continue;
      }
      if (!(fields[0] == "#" && fields.size() >= 2 && vocab.contains(fields.back()))) continue;
    }

    if (columns == 0) {
      columns = fields.size();
    } else if (fields.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " columns, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    cur.tokens.push_back(fields[0]);
    if (columns >= 2) {
      const std::string& tag = fields.back();
      if (!vocab.contains(tag)) throw ParseError("unknown tag '" + tag + "'", line_no);
      if (!cur.gold_tags) cur.gold_tags.emplace();
      cur.gold_tags->push_back(tag);
    }
    if (columns >= 3) {
      if (!cur.pos_tags) cur.pos_tags.emplace();
      cur.pos_tags->push_back(fields[1]);
    }
  }
  flush();
  return out;
}

std::vector<Sentence> parse_conll(std::string_view text, const LabelVocab& vocab) {
  std::istringstream in{std::string(text)};
  return parse_conll(in, vocab);
}

void write_conll(std::ostream& out, const std::vector<Sentence>& sentences) {
  for (const auto& s : sentences) {
    if (s.id) out << "# id " << *s.id << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i];
      if (s.pos_tags) out << ' ' << (*s.pos_tags)[i];
      if (s.gold_tags) out << ' ' << (*s.gold_tags)[i];
      out << '\n';
    }
    out << '\n';
  }
}

std::string to_conll(const std::vector<Sentence>& sentences) {
  std::ostringstream out;
  write_conll(out, sentences);
  return out.str();
}

std::vector<BioViolation> validate_bio(const TagSequence& tags, const LabelVocab& vocab) {
  std::vector<BioViolation> violations;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    vocab.index(tags[i]);
    const auto cur = split_tag_or_throw(tags[i]);
    if (cur.prefix != 'I') continue;
    bool ok = false;
    if (i > 0) {
      const auto prev = split_tag_or_throw(tags[i - 1]);
      ok = prev.prefix != 'O' && prev.type == cur.type;
    }
    if (!ok) violations.push_back({i, tags[i]});
  }
  return violations;
}

bool is_valid_bio(const TagSequence& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto cur = split_tag_or_throw(tags[i]);
    if (cur.prefix != 'I') continue;
    if (i == 0) return false;
    const auto prev = split_tag_or_throw(tags[i - 1]);
    if (prev.prefix == 'O' || prev.type != cur.type) return false;
  }
  return true;
}

TagSequence repair_bio(const TagSequence& tags) {
  TagSequence out = tags;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto cur = split_tag_or_throw(out[i]);
    if (cur.prefix != 'I') continue;
    bool ok = false;
    if (i > 0) {
      const auto prev = split_tag_or_throw(out[i - 1]);
      ok = prev.prefix != 'O' && prev.type == cur.type;
    }
    if (!ok) out[i][0] = 'B';
  }
  return out;
}

std::vector<EntitySpan> spans_from_bio(const TagSequence& tags) {
  if (!is_valid_bio(tags))
    throw ContractError("spans_from_bio requires a valid BIO sequence; repair it first");
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto cur = split_tag_or_throw(tags[i]);
    if (cur.prefix == 'O') continue;
    auto type = parse_entity_type(cur.type);
    if (!type) throw VocabError("unknown entity type in tag '" + tags[i] + "'");
    if (cur.prefix == 'B') {
      spans.push_back({*type, i, i});
    } else {
      spans.back().end = i;
    }
  }
  return spans;
}

TagSequence bio_from_spans(const std::vector<EntitySpan>& spans, std::size_t len) {
  TagSequence out(len, "O");
  std::vector<EntitySpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  std::size_t next_free = 0;
  for (const auto& s : sorted) {
    if (s.start > s.end || s.end >= len)
      throw DomainError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                        "] outside sentence of length " + std::to_string(len));
    if (s.start < next_free) throw DomainError("overlapping entity spans");
    const std::string type(to_string(s.type));
    out[s.start] = "B-" + type;
    for (std::size_t i = s.start + 1; i <= s.end; ++i) out[i] = "I-" + type;
    next_free = s.end + 1;
  }
  return out;
}

}  // namespace seqtag
