#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/model.hpp"

namespace seqtag {

/// Loss and gradients of one sentence. The embedding table gradient is
/// carried as `input_grad` (m x feature_dim) plus the table rows it belongs
/// to, so per-sentence buffers stay small.
struct SentenceGradient {
  double loss = 0.0;
  Gradients dense;
  Matrix input_grad;
  std::vector<std::size_t> rows;
};

/// Token-averaged cross-entropy for the linear head, CRF negative
/// log-likelihood otherwise. Dropout is active and drawn from `rng`.
double loss_for_sentence(const Sentence& sentence, const ModelParams& params, std::mt19937_64& rng);
SentenceGradient sentence_gradient(const Sentence& sentence, const ModelParams& params,
                                   std::mt19937_64& rng);
/// Scatters `g` into `total` (embedding rows included) scaled by `scale`.
void accumulate(const SentenceGradient& g, double scale, Gradients& total);

/// Dropout stream for one sentence in one epoch; independent of which
/// worker computes it.
std::uint64_t dropout_seed(std::uint64_t seed, std::size_t epoch, std::size_t sentence_index);

struct BatchGradient {
  double loss_sum = 0.0;
  Gradients grads;  // averaged over the batch
};

/// Reference implementation: one sentence at a time.
BatchGradient batch_gradient_serial(const ModelParams& params, const std::vector<Sentence>& data,
                                    std::span<const std::size_t> batch, std::size_t epoch);
/// OpenMP over sentences; per-sentence buffers are reduced in batch order so
/// the result is bit-identical to the serial kernel for any worker count.
BatchGradient batch_gradient_parallel(const ModelParams& params, const std::vector<Sentence>& data,
                                      std::span<const std::size_t> batch, std::size_t epoch,
                                      int workers);

std::vector<TagSequence> predict_batch_serial(const ModelParams& params,
                                              const std::vector<Sentence>& sentences);
std::vector<TagSequence> predict_batch_parallel(const ModelParams& params,
                                                const std::vector<Sentence>& sentences,
                                                int workers);

}  // namespace seqtag
