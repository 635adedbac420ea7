#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/numeric.hpp"

namespace seqtag::crf {

/// Score given to forbidden transitions (into START, out of END, and
/// BIO-illegal moves when constrained). Frozen entries never train.
inline constexpr double kForbidden = -10000.0;

/// (k+2) x (k+2) transition scores; rows are the "from" state. Labels occupy
/// 0..k-1, START is k and END is k+1.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t num_labels);
  /// Wraps existing scores; the START column and END row are re-pinned.
  TransitionMatrix(std::size_t num_labels, Matrix scores);

  std::size_t num_labels() const { return num_labels_; }
  std::size_t start() const { return num_labels_; }
  std::size_t end() const { return num_labels_ + 1; }

  Matrix& scores() { return scores_; }
  const Matrix& scores() const { return scores_; }
  double operator()(std::size_t from, std::size_t to) const { return scores_(from, to); }

  bool frozen(std::size_t from, std::size_t to) const {
    return frozen_[from * scores_.cols() + to] != 0;
  }
  const std::vector<std::uint8_t>& frozen_mask() const { return frozen_; }
  void set_frozen_mask(std::vector<std::uint8_t> mask);

  /// Pins O->I-X, B-X->I-Y, I-X->I-Y (X != Y) and START->I-X to kForbidden.
  void constrain_bio(const LabelVocab& vocab);
  /// Rewrites every frozen entry to kForbidden.
  void repin();

 private:
  std::size_t num_labels_ = 0;
  Matrix scores_;
  std::vector<std::uint8_t> frozen_;
};

double sequence_score(const Matrix& emissions, const TransitionMatrix& transitions,
                      const std::vector<std::size_t>& labels);

double log_partition(const Matrix& emissions, const TransitionMatrix& transitions);

double crf_nll(const Matrix& emissions, const TransitionMatrix& transitions,
               const std::vector<std::size_t>& gold);

struct Marginals {
  Matrix unary;                 // m x k
  std::vector<Matrix> pairwise; // m-1 entries of k x k, P(y_i=a, y_{i+1}=b)
  double log_z = 0.0;
};

Marginals marginals(const Matrix& emissions, const TransitionMatrix& transitions);

struct CrfGradients {
  double loss = 0.0;
  Matrix emissions;    // m x k
  Matrix transitions;  // (k+2) x (k+2); frozen entries are zero
};

/// Expected counts minus gold counts, via forward-backward.
CrfGradients crf_gradients(const Matrix& emissions, const TransitionMatrix& transitions,
                           const std::vector<std::size_t>& gold);

struct ViterbiResult {
  std::vector<std::size_t> labels;
  double score = 0.0;
};

/// Max-scoring label sequence. Ties go to the lower label index, both when
/// choosing the final label and at every backpointer.
ViterbiResult viterbi_decode(const Matrix& emissions, const TransitionMatrix& transitions);

}  // namespace seqtag::crf
