#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqtag/corpus.hpp"
#include "seqtag/numeric.hpp"

namespace seqtag {

/// String <-> index map with a reserved slot 0. For tokens slot 0 is UNK.
class StringIndex {
 public:
  StringIndex() = default;
  explicit StringIndex(std::vector<std::string> entries);

  std::size_t add(const std::string& s);
  std::optional<std::size_t> find(const std::string& s) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  bool operator==(const StringIndex& o) const { return entries_ == o.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::size_t kUnkRow = 0;
inline constexpr const char* kUnkToken = "<unk>";

/// Builds a token vocabulary over the sentences with <unk> at row 0.
StringIndex build_token_vocab(const std::vector<Sentence>& sentences);
/// POS tag vocabulary in first-seen order; no reserved slot.
StringIndex build_pos_vocab(const std::vector<Sentence>& sentences);

/// Stand-in for the contextual encoder: either a trainable lookup table or
/// vectors computed elsewhere and loaded per sentence id.
class EmbeddingProvider {
 public:
  enum class Mode { Trainable, Precomputed };

  static EmbeddingProvider trainable(StringIndex vocab, std::size_t dim, std::mt19937_64& rng,
                                     double scale = 0.1);
  static EmbeddingProvider trainable(StringIndex vocab, Matrix table);
  static EmbeddingProvider precomputed(std::size_t dim,
                                       std::unordered_map<std::string, Matrix> cache);

  Mode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }

  Matrix embed(const Sentence& sentence) const;
  /// Table rows used by embed() in trainable mode.
  std::vector<std::size_t> token_rows(const Sentence& sentence) const;

  Matrix& table() { return table_; }
  const Matrix& table() const { return table_; }
  const StringIndex& vocab() const { return vocab_; }
  const std::unordered_map<std::string, Matrix>& cache() const { return cache_; }
  void set_cache(std::unordered_map<std::string, Matrix> cache);

 private:
  Mode mode_ = Mode::Trainable;
  std::size_t dim_ = 0;
  StringIndex vocab_;
  Matrix table_;
  std::unordered_map<std::string, Matrix> cache_;
};

/// Reads the precomputed-embedding format: "dim=<d>", then blocks of
/// "# id <sentence-id>" followed by one line of d floats per token.
std::unordered_map<std::string, Matrix> read_precomputed_embeddings(std::istream& in,
                                                                    std::size_t* dim_out);
void write_precomputed_embeddings(std::ostream& out, std::size_t dim,
                                  const std::vector<std::pair<std::string, Matrix>>& blocks);

/// Appends a one-hot POS column block; unknown tags get an all-zero suffix.
Matrix concat_pos_features(const Matrix& emb, const std::vector<std::string>& pos_tags,
                           const StringIndex& pos_vocab);

// Gate column layout inside the 4h-wide blocks: input, forget, output, candidate.
struct LstmDirection {
  Matrix input_weights;   // input_dim x 4h
  Matrix hidden_weights;  // h x 4h
  Matrix bias;            // 1 x 4h
  bool operator==(const LstmDirection&) const = default;
};

struct BiLstmParams {
  LstmDirection forward;
  LstmDirection backward;

  static BiLstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  static BiLstmParams uniform(std::size_t input_dim, std::size_t hidden_dim,
                              std::mt19937_64& rng, double scale = 0.1);

  std::size_t input_dim() const { return forward.input_weights.rows(); }
  std::size_t hidden_dim() const { return forward.hidden_weights.rows(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }
  std::vector<Matrix*> tensors();
  bool operator==(const BiLstmParams&) const = default;
};

struct LstmDirectionTrace {
  Matrix inputs;  // in processing order
  Matrix gates;   // m x 4h, post-activation
  Matrix cells;   // m x h
  Matrix tanh_cells;
  Matrix hidden;  // m x h
};

struct BiLstmTrace {
  LstmDirectionTrace forward;
  LstmDirectionTrace backward;
  Matrix output;  // m x 2h
};

Matrix bilstm_forward(const Matrix& x, const BiLstmParams& params);
BiLstmTrace bilstm_forward_traced(const Matrix& x, const BiLstmParams& params);
/// Accumulates parameter gradients into `grads` and returns dLoss/dx.
Matrix bilstm_backward(const BiLstmTrace& trace, const BiLstmParams& params,
                       const Matrix& d_output, BiLstmParams& grads);

struct Affine {
  Matrix weights;  // in x out
  Matrix bias;     // 1 x out
  bool operator==(const Affine&) const = default;
};

/// One or two affine layers; a ReLU separates two layers.
struct LinearHead {
  std::vector<Affine> layers;

  static LinearHead uniform(const std::vector<std::size_t>& widths, std::mt19937_64& rng,
                            double scale = 0.1);
  static LinearHead zeros(const std::vector<std::size_t>& widths);

  std::size_t input_dim() const { return layers.front().weights.rows(); }
  std::size_t output_dim() const { return layers.back().weights.cols(); }
  std::vector<Matrix*> tensors();
  bool operator==(const LinearHead&) const = default;
};

struct LinearHeadTrace {
  std::vector<Matrix> layer_inputs;  // input to each layer (post-ReLU for hidden)
  std::vector<Matrix> pre_activations;
  Matrix output;
};

Matrix linear_head_forward(const Matrix& h, const LinearHead& head);
LinearHeadTrace linear_head_forward_traced(const Matrix& h, const LinearHead& head);
Matrix linear_head_backward(const LinearHeadTrace& trace, const LinearHead& head,
                            const Matrix& d_output, LinearHead& grads);

/// Per-token argmax, lowest index on ties. Output may be illegal BIO.
TagSequence softmax_decode(const Matrix& emissions, const LabelVocab& vocab);
std::vector<std::size_t> argmax_rows(const Matrix& emissions);

/// Inverted-dropout scale mask: 0 with probability `rate`, else 1/(1-rate).
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::mt19937_64& rng);
Matrix apply_dropout(const Matrix& x, double rate, std::mt19937_64& rng, bool training);
Matrix hadamard(const Matrix& a, const Matrix& b);

}  // namespace seqtag
