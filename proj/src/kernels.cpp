#include "seqtag/kernels.hpp"

#include <cmath>
#include <exception>

#include "seqtag/errors.hpp"

namespace seqtag {

namespace {

// Softmax cross-entropy averaged over tokens; fills dLoss/dlogits if asked.
double token_cross_entropy(const Matrix& logits, const std::vector<std::size_t>& gold,
                           Matrix* grad) {
  const std::size_t m = logits.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  double loss = 0.0;
  if (grad) *grad = Matrix(m, logits.cols());
  for (std::size_t i = 0; i < m; ++i) {
    auto row = logits.row(i);
    const double lse = log_sum_exp(row);
    loss += lse - row[gold[i]];
    if (grad) {
      for (std::size_t j = 0; j < row.size(); ++j) (*grad)(i, j) = std::exp(row[j] - lse) * inv_m;
      (*grad)(i, gold[i]) -= inv_m;
    }
  }
  return loss * inv_m;
}

std::vector<std::size_t> gold_labels(const Sentence& s, const ModelParams& params) {
  if (!s.gold_tags) throw ContractError("training sentence has no gold tags");
  if (s.gold_tags->size() != s.size()) throw ShapeError("gold tag count differs from token count");
  return params.labels.encode(*s.gold_tags);
}

}  // namespace

double loss_for_sentence(const Sentence& sentence, const ModelParams& params,
                         std::mt19937_64& rng) {
  const auto gold = gold_labels(sentence, params);
  const ForwardTrace t = forward(params, sentence, true, &rng);
  if (params.transitions) return crf::crf_nll(t.emissions(), *params.transitions, gold);
  return token_cross_entropy(t.emissions(), gold, nullptr);
}

SentenceGradient sentence_gradient(const Sentence& sentence, const ModelParams& params,
                                   std::mt19937_64& rng) {
  const auto gold = gold_labels(sentence, params);
  const ForwardTrace t = forward(params, sentence, true, &rng);

  SentenceGradient out;
  out.dense = Gradients::dense_zeros_like(params);
  Matrix d_emissions;
  if (params.transitions) {
    auto g = crf::crf_gradients(t.emissions(), *params.transitions, gold);
    out.loss = g.loss;
    d_emissions = std::move(g.emissions);
    out.dense.transitions = std::move(g.transitions);
  } else {
    out.loss = token_cross_entropy(t.emissions(), gold, &d_emissions);
  }

  Matrix d = linear_head_backward(t.head, params.head, d_emissions, out.dense.head);
  if (params.lstm) {
    if (!t.hidden_mask.empty()) d = hadamard(d, t.hidden_mask);
    d = bilstm_backward(*t.lstm, *params.lstm, d, *out.dense.lstm);
  }
  if (!t.input_mask.empty()) d = hadamard(d, t.input_mask);
  out.input_grad = std::move(d);
  out.rows = t.rows;
  return out;
}

void accumulate(const SentenceGradient& g, double scale, Gradients& total) {
  auto dst = total.tensors();
  const auto src = g.dense.tensors();
  const std::size_t offset = total.embeddings.empty() ? 0 : 1;
  if (dst.size() != src.size() + offset) throw ShapeError("gradient layout mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) axpy(scale, *src[i], *dst[i + offset]);
  if (offset == 1) {
    const std::size_t dim = total.embeddings.cols();
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
      auto out = total.embeddings.row(g.rows[i]);
      auto in = g.input_grad.row(i);
      for (std::size_t j = 0; j < dim; ++j) out[j] += scale * in[j];
    }
  }
}

std::uint64_t dropout_seed(std::uint64_t seed, std::size_t epoch, std::size_t sentence_index) {
  return mix_seed(mix_seed(mix_seed(seed) ^ static_cast<std::uint64_t>(epoch)) ^
                  static_cast<std::uint64_t>(sentence_index));
}

namespace {

BatchGradient reduce(const ModelParams& params, const std::vector<SentenceGradient>& parts) {
  BatchGradient out;
  out.grads = Gradients::zeros_like(params);
  const double scale = 1.0 / static_cast<double>(parts.size());
  for (const auto& p : parts) {
    out.loss_sum += p.loss;
    accumulate(p, scale, out.grads);
  }
  return out;
}

}  // namespace

BatchGradient batch_gradient_serial(const ModelParams& params, const std::vector<Sentence>& data,
                                    std::span<const std::size_t> batch, std::size_t epoch) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<SentenceGradient> parts;
  parts.reserve(batch.size());
  for (std::size_t idx : batch) {
    std::mt19937_64 rng(dropout_seed(params.config.seed, epoch, idx));
    parts.push_back(sentence_gradient(data.at(idx), params, rng));
  }
  return reduce(params, parts);
}

BatchGradient batch_gradient_parallel(const ModelParams& params, const std::vector<Sentence>& data,
                                      std::span<const std::size_t> batch, std::size_t epoch,
                                      int workers) {
  if (batch.empty()) throw ContractError("empty batch");
  const long n = static_cast<long>(batch.size());
  std::vector<SentenceGradient> parts(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (long b = 0; b < n; ++b) {
    try {
      const std::size_t idx = batch[static_cast<std::size_t>(b)];
      std::mt19937_64 rng(dropout_seed(params.config.seed, epoch, idx));
      parts[static_cast<std::size_t>(b)] = sentence_gradient(data.at(idx), params, rng);
    } catch (...) {
      errors[static_cast<std::size_t>(b)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return reduce(params, parts);
}

std::vector<TagSequence> predict_batch_serial(const ModelParams& params,
                                              const std::vector<Sentence>& sentences) {
  std::vector<TagSequence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(predict_tags(params, s));
  return out;
}

std::vector<TagSequence> predict_batch_parallel(const ModelParams& params,
                                                const std::vector<Sentence>& sentences,
                                                int workers) {
  const long n = static_cast<long>(sentences.size());
  std::vector<TagSequence> out(sentences.size());
  std::vector<std::exception_ptr> errors(sentences.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = predict_tags(params, sentences[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace seqtag
