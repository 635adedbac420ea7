#include "seqtag/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "seqtag/errors.hpp"

namespace seqtag {

void sgd_step(ModelParams& params, const Gradients& grads, double lr) {
  if (!(lr > 0)) throw DomainError("learning rate must be positive");
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  if (ps.size() != gs.size()) throw ShapeError("parameter/gradient layout mismatch");
  const Matrix* frozen_target = params.transitions ? &params.transitions->scores() : nullptr;
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto& p = ps[t]->data();
    const auto& g = gs[t]->data();
    if (p.size() != g.size()) throw ShapeError("parameter/gradient shape mismatch");
    if (ps[t] == frozen_target) {
      const auto& mask = params.transitions->frozen_mask();
      for (std::size_t i = 0; i < p.size(); ++i)
        if (!mask[i]) p[i] -= lr * g[i];
    } else {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }
  }
}

AdamState::AdamState(const ModelParams& params)
    : first_(Gradients::zeros_like(params)), second_(Gradients::zeros_like(params)) {}

void AdamState::step(ModelParams& params, const Gradients& grads, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  auto ms = first_.tensors();
  auto vs = second_.tensors();
  const Matrix* frozen_target = params.transitions ? &params.transitions->scores() : nullptr;
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto& p = ps[t]->data();
    const auto& g = gs[t]->data();
    auto& m = ms[t]->data();
    auto& v = vs[t]->data();
    const bool masked = ps[t] == frozen_target;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (masked && params.transitions->frozen_mask()[i]) continue;
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

double gradient_norm(const Gradients& grads) {
  double s = 0.0;
  for (const Matrix* m : grads.tensors())
    for (double v : m->data()) s += v * v;
  return std::sqrt(s);
}

void clip_gradients(Gradients& grads, double max_norm) {
  if (max_norm <= 0) return;
  const double norm = gradient_norm(grads);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (Matrix* m : grads.tensors())
    for (double& v : m->data()) v *= scale;
}

std::string format_epoch_header() { return "epoch\tloss\tdev_p\tdev_r\tdev_f1"; }

std::string format_epoch(const EpochRecord& r) {
  char buf[160];
  if (r.has_dev)
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.4f\t%.4f\t%.4f", r.epoch, r.loss, r.dev_precision,
                  r.dev_recall, r.dev_f1);
  else
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t-\t-\t-", r.epoch, r.loss);
  return buf;
}

namespace {

void check_training_data(const std::vector<Sentence>& data, const LabelVocab& vocab) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].gold_tags) throw ConfigError("training sentence " + std::to_string(i) + " has no tags");
    for (const auto& t : *data[i].gold_tags) vocab.index(t);
  }
}

BatchGradient batch_gradient(const ModelParams& params, const std::vector<Sentence>& data,
                             std::span<const std::size_t> batch, std::size_t epoch, int workers) {
  return workers > 1 ? batch_gradient_parallel(params, data, batch, epoch, workers)
                     : batch_gradient_serial(params, data, batch, epoch);
}

class Updater {
 public:
  explicit Updater(const ModelParams& params) {
    if (params.config.optimizer == Optimizer::Adam) adam_.emplace(params);
  }
  void apply(ModelParams& params, Gradients& grads) {
    clip_gradients(grads, params.config.max_grad_norm);
    if (adam_) adam_->step(params, grads, params.config.learning_rate);
    else sgd_step(params, grads, params.config.learning_rate);
  }

 private:
  std::optional<AdamState> adam_;
};

}  // namespace

TrainResult train(const std::vector<Sentence>& train_set, const std::vector<Sentence>& dev_set,
                  const TrainConfig& config, TrainOptions options) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  check_training_data(train_set, LabelVocab::standard());

  TrainResult result{init_model(config, train_set, std::move(options.precomputed)), {}, 0};
  if (config.epochs == 0) return result;

  ModelParams params = result.params;
  Updater updater(params);
  std::mt19937_64 order_rng(mix_seed(config.seed ^ 0x5348554646ULL));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_f1 = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng() % i]);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      std::span<const std::size_t> batch(order.data() + b, e - b);
      BatchGradient g = batch_gradient(params, train_set, batch, epoch, options.workers);
      loss_sum += g.loss_sum;
      updater.apply(params, g.grads);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(train_set.size());
    if (!dev_set.empty()) {
      const EvalReport dev = evaluate_model(params, dev_set, options.workers);
      rec.has_dev = true;
      rec.dev_precision = dev.macro_precision;
      rec.dev_recall = dev.macro_recall;
      rec.dev_f1 = dev.macro_f1;
    }
    result.log.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (dev_set.empty()) {
      result.best_epoch = epoch;
      continue;
    }
    if (rec.dev_f1 > best_f1) {
      best_f1 = rec.dev_f1;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (dev_set.empty()) result.params = std::move(params);
  return result;
}

void train_steps(ModelParams& params, const std::vector<Sentence>& data, std::size_t steps,
                 int workers) {
  if (data.empty()) throw ConfigError("training set is empty");
  Updater updater(params);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = std::min(params.config.batch_size, data.size());
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < bs; ++i) batch.push_back(order[(cursor + i) % order.size()]);
    cursor = (cursor + bs) % order.size();
    BatchGradient g = batch_gradient(params, data, batch, s + 1, workers);
    updater.apply(params, g.grads);
  }
}

EvalReport evaluate_model(const ModelParams& params, const std::vector<Sentence>& gold,
                          int workers) {
  const auto pred = workers > 1 ? predict_batch_parallel(params, gold, workers)
                                : predict_batch_serial(params, gold);
  return score_sentences(gold, pred, params.labels);
}

}  // namespace seqtag
