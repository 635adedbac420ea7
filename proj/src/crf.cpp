#include "seqtag/crf.hpp"

#include <cmath>
#include <string>

#include "seqtag/errors.hpp"

namespace seqtag::crf {

namespace {

void check_shapes(const Matrix& emissions, const TransitionMatrix& transitions) {
  if (emissions.rows() == 0) throw ShapeError("emission matrix has no rows");
  if (emissions.cols() != transitions.num_labels()) {
    throw ShapeError("emissions " + emissions.shape_string() + " do not match " +
                     std::to_string(transitions.num_labels()) + " transition labels");
  }
}

void check_labels(const Matrix& emissions, const std::vector<std::size_t>& labels) {
  if (labels.size() != emissions.rows()) {
    throw ShapeError("label sequence of length " + std::to_string(labels.size()) +
                     " for " + std::to_string(emissions.rows()) + " tokens");
  }
  for (std::size_t y : labels) {
    if (y >= emissions.cols())
      throw DomainError("label index " + std::to_string(y) + " is not emittable (k = " +
                        std::to_string(emissions.cols()) + ")");
  }
}

// alpha(i, j): log-sum of all prefixes ending with label j at token i,
// including the START transition and emissions 0..i.
Matrix forward_scores(const Matrix& p, const TransitionMatrix& a) {
  const std::size_t m = p.rows(), k = p.cols();
  Matrix alpha(m, k);
  for (std::size_t j = 0; j < k; ++j) alpha(0, j) = a(a.start(), j) + p(0, j);
  std::vector<double> buf(k);
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t q = 0; q < k; ++q) buf[q] = alpha(i - 1, q) + a(q, j);
      alpha(i, j) = log_sum_exp(buf) + p(i, j);
    }
  }
  return alpha;
}

// beta(i, j): log-sum of all suffixes after token i given label j there,
// including the END transition but not emission i.
Matrix backward_scores(const Matrix& p, const TransitionMatrix& a) {
  const std::size_t m = p.rows(), k = p.cols();
  Matrix beta(m, k);
  for (std::size_t j = 0; j < k; ++j) beta(m - 1, j) = a(j, a.end());
  std::vector<double> buf(k);
  for (std::size_t i = m - 1; i-- > 0;) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t q = 0; q < k; ++q) buf[q] = a(j, q) + p(i + 1, q) + beta(i + 1, q);
      beta(i, j) = log_sum_exp(buf);
    }
  }
  return beta;
}

double final_log_z(const Matrix& alpha, const TransitionMatrix& a) {
  const std::size_t m = alpha.rows(), k = alpha.cols();
  std::vector<double> buf(k);
  for (std::size_t j = 0; j < k; ++j) buf[j] = alpha(m - 1, j) + a(j, a.end());
  return log_sum_exp(buf);
}

}  // namespace

TransitionMatrix::TransitionMatrix(std::size_t num_labels)
    : TransitionMatrix(num_labels, Matrix(num_labels + 2, num_labels + 2)) {}

TransitionMatrix::TransitionMatrix(std::size_t num_labels, Matrix scores)
    : num_labels_(num_labels), scores_(std::move(scores)) {
  const std::size_t n = num_labels + 2;
  if (scores_.rows() != n || scores_.cols() != n) {
    throw ShapeError("transition scores " + scores_.shape_string() + " for " +
                     std::to_string(num_labels) + " labels");
  }
  frozen_.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    frozen_[i * n + start()] = 1;
    frozen_[end() * n + i] = 1;
  }
  repin();
}

void TransitionMatrix::set_frozen_mask(std::vector<std::uint8_t> mask) {
  if (mask.size() != frozen_.size()) throw ShapeError("transition mask size mismatch");
  frozen_ = std::move(mask);
  repin();
}

void TransitionMatrix::constrain_bio(const LabelVocab& vocab) {
  if (vocab.num_labels() != num_labels_)
    throw ShapeError("label vocabulary does not match transition matrix");
  const std::size_t n = scores_.cols();
  const auto& tags = vocab.tags();
  for (std::size_t to = 0; to < num_labels_; ++to) {
    if (tags[to][0] != 'I') continue;
    const std::string type = tags[to].substr(2);
    frozen_[start() * n + to] = 1;
    for (std::size_t from = 0; from < num_labels_; ++from) {
      const bool legal = tags[from] != "O" && tags[from].substr(2) == type;
      if (!legal) frozen_[from * n + to] = 1;
    }
  }
  repin();
}

void TransitionMatrix::repin() {
  for (std::size_t i = 0; i < frozen_.size(); ++i)
    if (frozen_[i]) scores_.data()[i] = kForbidden;
}

double sequence_score(const Matrix& emissions, const TransitionMatrix& transitions,
                      const std::vector<std::size_t>& labels) {
  check_shapes(emissions, transitions);
  check_labels(emissions, labels);
  double s = transitions(transitions.start(), labels.front());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += emissions(i, labels[i]);
    if (i + 1 < labels.size()) s += transitions(labels[i], labels[i + 1]);
  }
  return s + transitions(labels.back(), transitions.end());
}

double log_partition(const Matrix& emissions, const TransitionMatrix& transitions) {
  check_shapes(emissions, transitions);
  return final_log_z(forward_scores(emissions, transitions), transitions);
}

double crf_nll(const Matrix& emissions, const TransitionMatrix& transitions,
               const std::vector<std::size_t>& gold) {
  const double gold_score = sequence_score(emissions, transitions, gold);
  // Clamp rounding noise: log Z >= score(gold) holds exactly in real arithmetic.
  return std::max(0.0, log_partition(emissions, transitions) - gold_score);
}

Marginals marginals(const Matrix& emissions, const TransitionMatrix& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t m = emissions.rows(), k = emissions.cols();
  const Matrix alpha = forward_scores(emissions, transitions);
  const Matrix beta = backward_scores(emissions, transitions);
  Marginals out;
  out.log_z = final_log_z(alpha, transitions);
  out.unary = Matrix(m, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      out.unary(i, j) = std::exp(alpha(i, j) + beta(i, j) - out.log_z);
  out.pairwise.reserve(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    Matrix pair(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        pair(a, b) = std::exp(alpha(i, a) + transitions(a, b) + emissions(i + 1, b) +
                              beta(i + 1, b) - out.log_z);
    out.pairwise.push_back(std::move(pair));
  }
  return out;
}

CrfGradients crf_gradients(const Matrix& emissions, const TransitionMatrix& transitions,
                           const std::vector<std::size_t>& gold) {
  check_shapes(emissions, transitions);
  check_labels(emissions, gold);
  const std::size_t m = emissions.rows(), k = emissions.cols();
  const Marginals mg = marginals(emissions, transitions);

  CrfGradients g;
  g.loss = std::max(0.0, mg.log_z - sequence_score(emissions, transitions, gold));
  g.emissions = mg.unary;
  for (std::size_t i = 0; i < m; ++i) g.emissions(i, gold[i]) -= 1.0;

  const std::size_t n = k + 2;
  g.transitions = Matrix(n, n);
  Matrix& ga = g.transitions;
  for (std::size_t j = 0; j < k; ++j) {
    ga(transitions.start(), j) += mg.unary(0, j);
    ga(j, transitions.end()) += mg.unary(m - 1, j);
  }
  ga(transitions.start(), gold.front()) -= 1.0;
  ga(gold.back(), transitions.end()) -= 1.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Matrix& pair = mg.pairwise[i];
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) ga(a, b) += pair(a, b);
    ga(gold[i], gold[i + 1]) -= 1.0;
  }
  for (std::size_t i = 0; i < n * n; ++i)
    if (transitions.frozen_mask()[i]) ga.data()[i] = 0.0;
  return g;
}

ViterbiResult viterbi_decode(const Matrix& emissions, const TransitionMatrix& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t m = emissions.rows(), k = emissions.cols();
  Matrix delta(m, k);
  std::vector<std::size_t> back(m * k, 0);
  for (std::size_t j = 0; j < k; ++j)
    delta(0, j) = transitions(transitions.start(), j) + emissions(0, j);
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t best = 0;
      double best_score = delta(i - 1, 0) + transitions(0, j);
      for (std::size_t q = 1; q < k; ++q) {
        const double s = delta(i - 1, q) + transitions(q, j);
        if (s > best_score) {
          best_score = s;
          best = q;
        }
      }
      delta(i, j) = best_score + emissions(i, j);
      back[i * k + j] = best;
    }
  }
  std::size_t last = 0;
  double best_total = delta(m - 1, 0) + transitions(0, transitions.end());
  for (std::size_t j = 1; j < k; ++j) {
    const double s = delta(m - 1, j) + transitions(j, transitions.end());
    if (s > best_total) {
      best_total = s;
      last = j;
    }
  }
  ViterbiResult out;
  out.labels.assign(m, 0);
  out.labels[m - 1] = last;
  for (std::size_t i = m - 1; i > 0; --i) out.labels[i - 1] = back[i * k + out.labels[i]];
  // Report the score of the decoded path term by term so it equals
  // sequence_score exactly rather than up to DP rounding.
  out.score = sequence_score(emissions, transitions, out.labels);
  return out;
}

}  // namespace seqtag::crf
