#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqtag/corpus.hpp"

namespace seqtag {

struct ClassScore {
  EntityType type;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class strict-match scores in declaration order plus unweighted
/// macro averages. Micro counts are kept for diagnostics.
struct EvalReport {
  std::vector<ClassScore> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t total_tp = 0;
  std::size_t total_fp = 0;
  std::size_t total_fn = 0;

  const ClassScore& at(EntityType t) const;
};

/// Fills precision/recall/F1 from counts with the 0/0 -> 0 rule.
void finalize(ClassScore& score);

double macro_average(std::span<const double> values);

EvalReport score_spans(const std::vector<std::vector<EntitySpan>>& gold,
                       const std::vector<std::vector<EntitySpan>>& pred,
                       const std::vector<EntityType>& types);

/// Gold sentences must carry tags; predictions must be valid BIO and match
/// sentence lengths one to one.
EvalReport score_sentences(const std::vector<Sentence>& gold, const std::vector<TagSequence>& pred,
                           const LabelVocab& vocab = LabelVocab::standard());

/// TSV: "class\tprec\trec\tf1", one row per class, then "average".
std::string format_report(const EvalReport& report);
/// Reads back the rates written by format_report (counts are not stored).
EvalReport parse_report(const std::string& text);

}  // namespace seqtag
