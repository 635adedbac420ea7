#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/crf.hpp"
#include "seqtag/encoders.hpp"
#include "seqtag/numeric.hpp"

namespace seqtag {

enum class Architecture { Linear, Crf, BiLstmCrf };
enum class Optimizer { Sgd, Adam };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view s);
std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view s);

double default_learning_rate(Architecture a);
std::size_t default_epochs(Architecture a);

struct TrainConfig {
  Architecture architecture = Architecture::BiLstmCrf;
  std::size_t epochs = 20;
  double learning_rate = 0.01;
  double dropout = 0.3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t patience = 5;  // 0 disables early stopping
  bool pos_features = false;
  bool bio_mask = false;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  Optimizer optimizer = Optimizer::Sgd;
  double max_grad_norm = 5.0;  // 0 disables clipping

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Sets one field from its key=value spelling; throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Canonical key=value lines, one per field, in a fixed order.
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);

  bool operator==(const TrainConfig&) const = default;
};

/// Every trainable tensor plus the fixed vocabularies and config snapshot.
struct ModelParams {
  TrainConfig config;
  LabelVocab labels = LabelVocab::standard();
  EmbeddingProvider embeddings;
  StringIndex pos_vocab;
  std::optional<BiLstmParams> lstm;
  LinearHead head;
  std::optional<crf::TransitionMatrix> transitions;

  bool uses_crf() const { return transitions.has_value(); }
  std::size_t feature_dim() const;
  /// Trainable tensors in serialization order.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Same-shaped gradient storage for ModelParams.
struct Gradients {
  Matrix embeddings;
  std::optional<BiLstmParams> lstm;
  LinearHead head;
  Matrix transitions;

  static Gradients zeros_like(const ModelParams& params);
  /// Like zeros_like but without the embedding table; per-sentence gradients
  /// carry the input gradient instead and are scattered during reduction.
  static Gradients dense_zeros_like(const ModelParams& params);
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Fresh parameters for `config` over the training sentences. When
/// `precomputed` is given the embedding provider uses it and the table is
/// not trained.
ModelParams init_model(const TrainConfig& config, const std::vector<Sentence>& train,
                       std::optional<EmbeddingProvider> precomputed = std::nullopt);

struct ForwardTrace {
  Matrix features;          // m x feature_dim, before dropout
  std::vector<std::size_t> rows;  // embedding rows (trainable mode)
  Matrix input_mask;        // dropout scale on features
  std::optional<BiLstmTrace> lstm;
  Matrix hidden_mask;       // dropout scale on BiLSTM output
  LinearHeadTrace head;
  const Matrix& emissions() const { return head.output; }
};

/// Embeddings plus optional POS one-hot block.
Matrix token_features(const ModelParams& params, const Sentence& sentence);
/// `rng` may be null when `training` is false.
ForwardTrace forward(const ModelParams& params, const Sentence& sentence, bool training,
                     std::mt19937_64* rng);
Matrix emissions(const ModelParams& params, const Sentence& sentence);

/// Predicted tags, repaired to valid BIO.
TagSequence predict_tags(const ModelParams& params, const Sentence& sentence);

inline constexpr char kModelMagic[] = "SEQTAG/1";

void save_model(const ModelParams& params, std::ostream& out);
void save_model(const ModelParams& params, const std::filesystem::path& path);
std::string serialize_model(const ModelParams& params);
ModelParams load_model(std::istream& in);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace seqtag
