#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "seqtag/corpus.hpp"
#include "seqtag/errors.hpp"

using namespace seqtag;

namespace {

TagSequence random_valid_tags(std::mt19937_64& rng, std::size_t len) {
  static const LabelVocab vocab = LabelVocab::standard();
  const auto& tags = vocab.tags();
  TagSequence raw;
  for (std::size_t i = 0; i < len; ++i) raw.push_back(tags[rng() % tags.size()]);
  return repair_bio(raw);
}

}  // namespace

TEST_CASE("label vocabulary layout") {
  const auto v = LabelVocab::standard();
  CHECK(v.num_labels() == 13);
  CHECK(v.num_states() == 15);
  CHECK(v.start_state() == 13);
  CHECK(v.end_state() == 14);
  CHECK(v.tag(0) == "O");
  CHECK(v.tag(1) == "B-PER");
  CHECK(v.tag(2) == "I-PER");
  CHECK(v.tag(3) == "B-LOC");
  CHECK(v.tag(11) == "B-CW");
  CHECK(v.tag(12) == "I-CW");
  for (std::size_t i = 0; i < v.num_labels(); ++i) CHECK(v.index(v.tag(i)) == i);
  CHECK_THROWS_AS(v.index("B-MISC"), VocabError);
}

TEST_CASE("parse_conll basic sentence") {
  const auto s = parse_conll(std::string_view("John B-PER\nsmiled O\n\n"));
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens == std::vector<std::string>{"John", "smiled"});
  CHECK(*s[0].gold_tags == TagSequence{"B-PER", "O"});
  CHECK_FALSE(s[0].pos_tags.has_value());
}

TEST_CASE("parse_conll creative work example") {
  const auto s = parse_conll(std::string_view("Let O\nus O\nplay O\nAmong B-CW\nUs I-CW\n\n"));
  REQUIRE(s.size() == 1);
  const auto spans = spans_from_bio(*s[0].gold_tags);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == EntitySpan{EntityType::CW, 3, 4});
}

TEST_CASE("parse_conll splits on blank lines, reads ids, POS and CRLF") {
  const std::string text =
      "# id s1\r\nJohn NNP B-PER\r\nsmiled VBD O\r\n\r\n# id s2\r\nParis NNP B-LOC\r\n";
  const auto s = parse_conll(std::string_view(text));
  REQUIRE(s.size() == 2);
  CHECK(*s[0].id == "s1");
  CHECK(*s[1].id == "s2");
  CHECK(*s[0].pos_tags == std::vector<std::string>{"NNP", "VBD"});
  CHECK(*s[1].gold_tags == TagSequence{"B-LOC"});
}

TEST_CASE("parse_conll reads four-column blocks with id metadata") {
  const std::string text =
      "# id 2b4f domain=en\nthe _ _ O\namong _ _ B-CW\nus _ _ I-CW\n\n";
  const auto s = parse_conll(std::string_view(text));
  REQUIRE(s.size() == 1);
  CHECK(*s[0].id == "2b4f");
  CHECK(*s[0].gold_tags == TagSequence{"O", "B-CW", "I-CW"});
}

TEST_CASE("parse_conll errors carry line numbers and tag names") {
  try {
    parse_conll(std::string_view("a O\nb NN O\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_conll(std::string_view("a O\nb B-MISC\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("B-MISC") != std::string::npos);
  }
}

TEST_CASE("a hash token with a tag is a token, not a comment") {
  const auto s = parse_conll(std::string_view("# O\nwins O\n\n"));
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens == std::vector<std::string>{"#", "wins"});
}

TEST_CASE("canonical CoNLL text round-trips byte for byte") {
  const std::string text =
      "# id a\nJohn NNP B-PER\nsmiled VBD O\n\nParis B-LOC\nis O\nbig O\n\nplain\ntokens\n\n";
  CHECK(to_conll(parse_conll(std::string_view(text))) == text);
}

TEST_CASE("validate_bio") {
  const auto v = LabelVocab::standard();
  CHECK(validate_bio({"B-PER", "I-PER", "O"}, v).empty());
  CHECK(validate_bio({"O", "I-LOC"}, v) == std::vector<BioViolation>{{1, "I-LOC"}});
  CHECK(validate_bio({"B-PER", "I-LOC"}, v) == std::vector<BioViolation>{{1, "I-LOC"}});
  CHECK(validate_bio({"I-PER"}, v) == std::vector<BioViolation>{{0, "I-PER"}});
  CHECK_THROWS_AS(validate_bio({"B-FOO"}, v), VocabError);
}

TEST_CASE("repair_bio") {
  CHECK(repair_bio({"O", "I-LOC"}) == TagSequence{"O", "B-LOC"});
  CHECK(repair_bio({"B-PER", "I-LOC"}) == TagSequence{"B-PER", "B-LOC"});
  CHECK(repair_bio({"B-PER", "I-PER"}) == TagSequence{"B-PER", "I-PER"});
  CHECK(repair_bio({"I-CW", "I-CW"}) == TagSequence{"B-CW", "I-CW"});
}

TEST_CASE("spans_from_bio") {
  CHECK(spans_from_bio({"B-PER", "I-PER", "O", "B-LOC"}) ==
        std::vector<EntitySpan>{{EntityType::PER, 0, 1}, {EntityType::LOC, 3, 3}});
  CHECK(spans_from_bio({"O", "O"}).empty());
  CHECK(spans_from_bio({"B-CW", "I-CW"}) == std::vector<EntitySpan>{{EntityType::CW, 0, 1}});
  CHECK(spans_from_bio({"B-PER", "B-PER"}).size() == 2);
  CHECK_THROWS_AS(spans_from_bio({"O", "I-LOC"}), ContractError);
}

TEST_CASE("bio_from_spans") {
  CHECK(bio_from_spans({{EntityType::PER, 0, 1}}, 3) == TagSequence{"B-PER", "I-PER", "O"});
  CHECK(bio_from_spans({}, 2) == TagSequence{"O", "O"});
  CHECK_THROWS_AS(bio_from_spans({{EntityType::PER, 0, 1}, {EntityType::LOC, 1, 2}}, 3),
                  DomainError);
  CHECK_THROWS_AS(bio_from_spans({{EntityType::PER, 2, 3}}, 3), DomainError);
}

TEST_CASE("property: span round trip and repair invariants") {
  std::mt19937_64 rng(42);
  const auto vocab = LabelVocab::standard();
  const auto& tags = vocab.tags();
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t len = 1 + rng() % 12;
    TagSequence raw;
    for (std::size_t i = 0; i < len; ++i) raw.push_back(tags[rng() % tags.size()]);
    const TagSequence fixed = repair_bio(raw);
    REQUIRE(validate_bio(fixed, vocab).empty());
    REQUIRE(repair_bio(fixed) == fixed);
    if (validate_bio(raw, vocab).empty()) REQUIRE(fixed == raw);

    const TagSequence valid = random_valid_tags(rng, len);
    REQUIRE(bio_from_spans(spans_from_bio(valid), len) == valid);
  }
}
