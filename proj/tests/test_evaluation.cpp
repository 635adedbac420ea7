#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "seqtag/errors.hpp"
#include "seqtag/evaluation.hpp"

using namespace seqtag;

namespace {

Sentence gold_sentence(TagSequence tags) {
  Sentence s;
  for (std::size_t i = 0; i < tags.size(); ++i) s.tokens.push_back("t" + std::to_string(i));
  s.gold_tags = std::move(tags);
  return s;
}

TagSequence random_tags(std::mt19937_64& rng, std::size_t len) {
  static const LabelVocab vocab = LabelVocab::standard();
  TagSequence t;
  for (std::size_t i = 0; i < len; ++i) t.push_back(vocab.tag(rng() % 13));
  return repair_bio(t);
}

}  // namespace

TEST_CASE("strict matching hand example") {
  const std::vector<Sentence> gold{gold_sentence({"B-PER", "I-PER", "O", "B-LOC", "O"})};
  const std::vector<TagSequence> pred{{"B-PER", "I-PER", "O", "O", "B-LOC"}};
  const auto r = score_sentences(gold, pred);
  const auto& per = r.at(EntityType::PER);
  const auto& loc = r.at(EntityType::LOC);
  CHECK(per.precision == 1.0);
  CHECK(per.recall == 1.0);
  CHECK(loc.precision == 0.0);
  CHECK(loc.recall == 0.0);
  CHECK(r.total_tp == 1);
  CHECK(r.total_fp == 1);
  CHECK(r.total_fn == 1);
}

TEST_CASE("identical prediction scores one everywhere") {
  std::vector<Sentence> gold;
  std::vector<TagSequence> pred;
  const std::array<const char*, 6> types{"PER", "LOC", "GRP", "CORP", "PROD", "CW"};
  for (const char* t : types) {
    gold.push_back(gold_sentence({"O", std::string("B-") + t, std::string("I-") + t}));
    pred.push_back(*gold.back().gold_tags);
  }
  const auto r = score_sentences(gold, pred);
  for (const auto& c : r.per_class) {
    CHECK(c.precision == 1.0);
    CHECK(c.recall == 1.0);
    CHECK(c.f1 == 1.0);
  }
  CHECK(r.macro_f1 == 1.0);
}

TEST_CASE("all-O prediction gives zero recall and zero precision") {
  const std::vector<Sentence> gold{gold_sentence({"B-PER", "O", "B-CW"})};
  const auto r = score_sentences(gold, {{"O", "O", "O"}});
  for (const auto& c : r.per_class) {
    CHECK(c.precision == 0.0);
    CHECK(c.recall == 0.0);
    CHECK(c.f1 == 0.0);
  }
}

TEST_CASE("misaligned input is rejected") {
  const std::vector<Sentence> gold{gold_sentence({"O", "O"}), gold_sentence({"O"})};
  CHECK_THROWS_AS(score_sentences(gold, {{"O", "O"}}), AlignmentError);
  try {
    score_sentences(gold, {{"O", "O"}, {"O", "O"}});
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.sentence() == 1);
  }
}

TEST_CASE("macro average of reference per-class scores") {
  const std::vector<double> dev{0.9224, 0.9708, 0.7834, 0.9039, 0.7955, 0.8789};
  CHECK(std::abs(macro_average(dev) - 0.8758) <= 5e-5);
  const std::vector<double> test{0.7449, 0.8848, 0.6755, 0.7107, 0.5888, 0.6998};
  CHECK(std::abs(macro_average(test) - 0.7174) <= 5e-5);
  CHECK(macro_average(std::vector<double>(6, 1.0)) == 1.0);
}

TEST_CASE("format_report layout") {
  const std::vector<Sentence> gold{gold_sentence({"B-PER", "O"})};
  const std::string perfect = format_report(score_sentences(gold, {{"B-PER", "O"}}));
  CHECK(perfect.rfind("class\tprec\trec\tf1\nPER\t1.0000\t1.0000\t1.0000\nLOC\t0.0000", 0) == 0);

  const std::string empty = format_report(score_sentences({}, {}));
  CHECK(empty ==
        "class\tprec\trec\tf1\n"
        "PER\t0.0000\t0.0000\t0.0000\n"
        "LOC\t0.0000\t0.0000\t0.0000\n"
        "GRP\t0.0000\t0.0000\t0.0000\n"
        "CORP\t0.0000\t0.0000\t0.0000\n"
        "PROD\t0.0000\t0.0000\t0.0000\n"
        "CW\t0.0000\t0.0000\t0.0000\n"
        "average\t0.0000\t0.0000\t0.0000\n");
}

TEST_CASE("reference scores survive format and parse") {
  // Reference per-class P/R/F1, rows in report order.
  EvalReport r;
  const std::vector<std::array<double, 3>> rows{
      {0.8776, 0.8922, 0.8848}, {0.7292, 0.7614, 0.7449}, {0.7699, 0.6600, 0.7107},
      {0.7253, 0.6759, 0.6998}, {0.7079, 0.6460, 0.6755}, {0.5527, 0.6299, 0.5888}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ClassScore c;
    c.type = kAllEntityTypes[i];
    c.precision = rows[i][0];
    c.recall = rows[i][1];
    c.f1 = rows[i][2];
    r.per_class.push_back(c);
  }
  r.macro_precision = 0.7271;
  r.macro_recall = 0.7109;
  r.macro_f1 = 0.7174;
  const std::string text = format_report(r);
  const EvalReport back = parse_report(text);
  REQUIRE(back.per_class.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.per_class[i].type == r.per_class[i].type);
    CHECK(back.per_class[i].precision == r.per_class[i].precision);
    CHECK(back.per_class[i].recall == r.per_class[i].recall);
    CHECK(back.per_class[i].f1 == r.per_class[i].f1);
  }
  CHECK(back.macro_f1 == 0.7174);
  CHECK(format_report(back) == text);
}

TEST_CASE("property: report invariants") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sentence> gold;
    std::vector<TagSequence> pred;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng() % 8;
      gold.push_back(gold_sentence(random_tags(rng, len)));
      pred.push_back(random_tags(rng, len));
    }
    const auto r = score_sentences(gold, pred);

    double lo = 1.0, hi = 0.0;
    for (const auto& c : r.per_class) {
      lo = std::min(lo, c.f1);
      hi = std::max(hi, c.f1);
    }
    CHECK(lo <= r.macro_f1 + 1e-15);
    CHECK(r.macro_f1 <= hi + 1e-15);

    // Permuting sentence order changes nothing.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Sentence> g2;
    std::vector<TagSequence> p2;
    for (std::size_t i : perm) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    CHECK(format_report(score_sentences(g2, p2)) == format_report(r));

    // Self-scoring is perfect for every class that occurs.
    const auto self = score_sentences(gold, [&] {
      std::vector<TagSequence> g;
      for (const auto& s : gold) g.push_back(*s.gold_tags);
      return g;
    }());
    for (const auto& c : self.per_class)
      if (c.tp + c.fn > 0) CHECK(c.f1 == 1.0);

    // A spurious span on an all-O stretch never raises precision or moves recall.
    for (std::size_t s = 0; s < n; ++s) {
      auto& tags = pred[s];
      for (std::size_t i = 0; i < tags.size(); ++i) {
        const bool free_here = tags[i] == "O" && (i + 1 == tags.size() || tags[i + 1][0] != 'I');
        if (!free_here) continue;
        auto extra = pred;
        extra[s][i] = "B-" + std::string(to_string(kAllEntityTypes[rng() % 6]));
        // Skip when the inserted span happens to be a gold span.
        const auto gs = spans_from_bio(*gold[s].gold_tags);
        const auto added = spans_from_bio(extra[s]);
        bool is_gold = false;
        for (const auto& sp : added)
          if (sp.start == i && std::find(gs.begin(), gs.end(), sp) != gs.end()) is_gold = true;
        if (is_gold) break;
        const auto r2 = score_sentences(gold, extra);
        for (std::size_t c = 0; c < 6; ++c) {
          CHECK(r2.per_class[c].precision <= r.per_class[c].precision + 1e-15);
          CHECK(r2.per_class[c].recall == r.per_class[c].recall);
        }
        break;
      }
    }
  }
}
