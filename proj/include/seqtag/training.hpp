#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/evaluation.hpp"
#include "seqtag/kernels.hpp"
#include "seqtag/model.hpp"

namespace seqtag {

/// p <- p - lr * g for every tensor; frozen transition entries are skipped.
void sgd_step(ModelParams& params, const Gradients& grads, double lr);

/// Bias-corrected Adam moments for every trainable tensor.
class AdamState {
 public:
  explicit AdamState(const ModelParams& params);
  void step(ModelParams& params, const Gradients& grads, double lr);

 private:
  Gradients first_;
  Gradients second_;
  std::size_t t_ = 0;
};

double gradient_norm(const Gradients& grads);
/// Rescales so the global L2 norm is at most `max_norm` (0 disables).
void clip_gradients(Gradients& grads, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean per-sentence training loss
  bool has_dev = false;
  double dev_precision = 0.0;
  double dev_recall = 0.0;
  double dev_f1 = 0.0;
};

std::string format_epoch_header();
std::string format_epoch(const EpochRecord& r);

struct TrainOptions {
  int workers = 1;
  std::optional<EmbeddingProvider> precomputed;
  /// Called after every epoch, e.g. to stream the log.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 means the initial parameters were kept
};

/// Seeded shuffling per epoch, dev macro-F1 model selection and early
/// stopping after `patience` epochs without improvement.
TrainResult train(const std::vector<Sentence>& train_set, const std::vector<Sentence>& dev_set,
                  const TrainConfig& config, TrainOptions options = {});

/// Applies `steps` optimizer updates in place, cycling over `data` in order
/// with the configured batch size. No shuffling or model selection.
void train_steps(ModelParams& params, const std::vector<Sentence>& data, std::size_t steps,
                 int workers = 1);

EvalReport evaluate_model(const ModelParams& params, const std::vector<Sentence>& gold,
                          int workers = 1);

}  // namespace seqtag
