#include "seqtag/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "seqtag/errors.hpp"

namespace seqtag {

const ClassScore& EvalReport::at(EntityType t) const {
  for (const auto& c : per_class)
    if (c.type == t) return c;
  throw LookupError("entity type " + std::string(to_string(t)) + " not in report");
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void finalize_macro(EvalReport& r) {
  std::vector<double> p, rc, f;
  for (const auto& c : r.per_class) {
    p.push_back(c.precision);
    rc.push_back(c.recall);
    f.push_back(c.f1);
  }
  r.macro_precision = macro_average(p);
  r.macro_recall = macro_average(rc);
  r.macro_f1 = macro_average(f);
}

}  // namespace

void finalize(ClassScore& s) {
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
}

double macro_average(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

EvalReport score_spans(const std::vector<std::vector<EntitySpan>>& gold,
                       const std::vector<std::vector<EntitySpan>>& pred,
                       const std::vector<EntityType>& types) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                             std::to_string(pred.size()),
                         std::min(gold.size(), pred.size()));
  std::map<EntityType, ClassScore> counts;
  for (EntityType t : types) counts[t].type = t;

  for (std::size_t s = 0; s < gold.size(); ++s) {
    // Spans within one valid BIO sequence never overlap, so a set match is
    // exactly one-to-one.
    const std::set<EntitySpan> g(gold[s].begin(), gold[s].end());
    for (const auto& span : pred[s]) {
      auto it = counts.find(span.type);
      if (it == counts.end()) continue;
      if (g.count(span)) ++it->second.tp;
      else ++it->second.fp;
    }
    const std::set<EntitySpan> p(pred[s].begin(), pred[s].end());
    for (const auto& span : gold[s]) {
      auto it = counts.find(span.type);
      if (it != counts.end() && !p.count(span)) ++it->second.fn;
    }
  }

  EvalReport r;
  for (EntityType t : types) {
    ClassScore c = counts[t];
    finalize(c);
    r.total_tp += c.tp;
    r.total_fp += c.fp;
    r.total_fn += c.fn;
    r.per_class.push_back(c);
  }
  finalize_macro(r);
  return r;
}

EvalReport score_sentences(const std::vector<Sentence>& gold, const std::vector<TagSequence>& pred,
                           const LabelVocab& vocab) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                             std::to_string(pred.size()),
                         std::min(gold.size(), pred.size()));
  std::vector<std::vector<EntitySpan>> gs, ps;
  gs.reserve(gold.size());
  ps.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i].gold_tags) throw ContractError("gold sentence " + std::to_string(i) + " has no tags");
    if (gold[i].gold_tags->size() != pred[i].size())
      throw AlignmentError("sentence " + std::to_string(i) + ": gold has " +
                               std::to_string(gold[i].gold_tags->size()) + " tokens, prediction has " +
                               std::to_string(pred[i].size()),
                           i);
    gs.push_back(spans_from_bio(*gold[i].gold_tags));
    ps.push_back(spans_from_bio(pred[i]));
  }
  return score_spans(gs, ps, vocab.entity_types());
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char buf[96];
  out << "class\tprec\trec\tf1\n";
  for (const auto& c : report.per_class) {
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.4f\t%.4f\n", c.precision, c.recall, c.f1);
    out << to_string(c.type) << buf;
  }
  std::snprintf(buf, sizeof buf, "average\t%.4f\t%.4f\t%.4f\n", report.macro_precision,
                report.macro_recall, report.macro_f1);
  out << buf;
  return out.str();
}

EvalReport parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  EvalReport r;
  bool have_average = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    double p = 0, rc = 0, f = 0;
    ls >> name;
    if (line_no == 1) {
      if (line != "class\tprec\trec\tf1") throw ParseError("bad report header", line_no);
      continue;
    }
    if (!(ls >> p >> rc >> f)) throw ParseError("bad report row", line_no);
    if (name == "average") {
      r.macro_precision = p;
      r.macro_recall = rc;
      r.macro_f1 = f;
      have_average = true;
      continue;
    }
    auto t = parse_entity_type(name);
    if (!t) throw ParseError("unknown class '" + name + "'", line_no);
    ClassScore c;
    c.type = *t;
    c.precision = p;
    c.recall = rc;
    c.f1 = f;
    r.per_class.push_back(c);
  }
  if (!have_average) throw ParseError("report has no average row", line_no);
  return r;
}

}  // namespace seqtag
