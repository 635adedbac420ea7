#include "seqtag/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "seqtag/errors.hpp"

namespace seqtag {

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::Linear: return "linear";
    case Architecture::Crf: return "crf";
    case Architecture::BiLstmCrf: return "bilstm-crf";
  }
  return "?";
}

Architecture parse_architecture(std::string_view s) {
  if (s == "linear") return Architecture::Linear;
  if (s == "crf") return Architecture::Crf;
  if (s == "bilstm-crf") return Architecture::BiLstmCrf;
  throw ConfigError("unknown architecture '" + std::string(s) +
                    "' (expected linear, crf or bilstm-crf)");
}

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

double default_learning_rate(Architecture a) {
  return a == Architecture::BiLstmCrf ? 0.01 : 0.05;
}

std::size_t default_epochs(Architecture a) { return a == Architecture::Linear ? 5 : 20; }

// ---- TrainConfig ----

namespace {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + value + "'");
  return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (embed_dim < 1) throw ConfigError("embedding dimension must be at least 1");
  if (hidden_dim < 1) throw ConfigError("hidden dimension must be at least 1");
  if (!(max_grad_norm >= 0)) throw ConfigError("max gradient norm must be non-negative");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "arch") architecture = parse_architecture(value);
  else if (key == "epochs") epochs = parse_count(key, value);
  else if (key == "lr") learning_rate = parse_double(key, value);
  else if (key == "dropout") dropout = parse_double(key, value);
  else if (key == "batch-size") batch_size = parse_count(key, value);
  else if (key == "seed") seed = parse_count(key, value);
  else if (key == "patience") patience = parse_count(key, value);
  else if (key == "pos-features") pos_features = parse_flag(key, value);
  else if (key == "bio-mask") bio_mask = parse_flag(key, value);
  else if (key == "embed-dim") embed_dim = parse_count(key, value);
  else if (key == "hidden-dim") hidden_dim = parse_count(key, value);
  else if (key == "optimizer") optimizer = parse_optimizer(value);
  else if (key == "max-grad-norm") max_grad_norm = parse_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "arch=" << to_string(architecture) << '\n'
      << "epochs=" << epochs << '\n'
      << "lr=" << format_double(learning_rate) << '\n'
      << "dropout=" << format_double(dropout) << '\n'
      << "batch-size=" << batch_size << '\n'
      << "seed=" << seed << '\n'
      << "patience=" << patience << '\n'
      << "pos-features=" << (pos_features ? 1 : 0) << '\n'
      << "bio-mask=" << (bio_mask ? 1 : 0) << '\n'
      << "embed-dim=" << embed_dim << '\n'
      << "hidden-dim=" << hidden_dim << '\n'
      << "optimizer=" << to_string(optimizer) << '\n'
      << "max-grad-norm=" << format_double(max_grad_norm) << '\n';
  return out.str();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad config line '" + line + "'");
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

// ---- ModelParams ----

std::size_t ModelParams::feature_dim() const {
  return embeddings.dim() + (config.pos_features ? pos_vocab.size() : 0);
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  if (embeddings.mode() == EmbeddingProvider::Mode::Trainable) out.push_back(&embeddings.table());
  if (lstm)
    for (Matrix* m : lstm->tensors()) out.push_back(m);
  for (Matrix* m : head.tensors()) out.push_back(m);
  if (transitions) out.push_back(&transitions->scores());
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

Gradients Gradients::dense_zeros_like(const ModelParams& params) {
  Gradients g;
  if (params.lstm) g.lstm = BiLstmParams::zeros(params.lstm->input_dim(), params.lstm->hidden_dim());
  for (const auto& layer : params.head.layers)
    g.head.layers.push_back({Matrix(layer.weights.rows(), layer.weights.cols()),
                             Matrix(1, layer.bias.cols())});
  if (params.transitions) {
    const auto& a = params.transitions->scores();
    g.transitions = Matrix(a.rows(), a.cols());
  }
  return g;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g = dense_zeros_like(params);
  if (params.embeddings.mode() == EmbeddingProvider::Mode::Trainable) {
    const auto& t = params.embeddings.table();
    g.embeddings = Matrix(t.rows(), t.cols());
  }
  return g;
}

std::vector<Matrix*> Gradients::tensors() {
  std::vector<Matrix*> out;
  if (!embeddings.empty()) out.push_back(&embeddings);
  if (lstm)
    for (Matrix* m : lstm->tensors()) out.push_back(m);
  for (Matrix* m : head.tensors()) out.push_back(m);
  if (!transitions.empty()) out.push_back(&transitions);
  return out;
}

std::vector<const Matrix*> Gradients::tensors() const {
  auto mut = const_cast<Gradients*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

namespace {

std::vector<std::size_t> head_widths(const TrainConfig& config, std::size_t in, std::size_t k) {
  switch (config.architecture) {
    case Architecture::Linear: return {in, config.hidden_dim, k};
    case Architecture::Crf: return {in, k};
    case Architecture::BiLstmCrf: return {2 * config.hidden_dim, k};
  }
  return {in, k};
}

// Builds shapes without drawing random values so load_model can fill them.
ModelParams skeleton(const TrainConfig& config, LabelVocab labels, EmbeddingProvider embeddings,
                     StringIndex pos_vocab) {
  ModelParams p;
  p.config = config;
  p.labels = std::move(labels);
  p.embeddings = std::move(embeddings);
  p.pos_vocab = std::move(pos_vocab);
  const std::size_t in = p.feature_dim();
  const std::size_t k = p.labels.num_labels();
  if (config.architecture == Architecture::BiLstmCrf)
    p.lstm = BiLstmParams::zeros(in, config.hidden_dim);
  p.head = LinearHead::zeros(head_widths(config, in, k));
  if (config.architecture != Architecture::Linear) {
    p.transitions = crf::TransitionMatrix(k);
    if (config.bio_mask) p.transitions->constrain_bio(p.labels);
  }
  return p;
}

}  // namespace

ModelParams init_model(const TrainConfig& config, const std::vector<Sentence>& train,
                       std::optional<EmbeddingProvider> precomputed) {
  config.validate();
  std::mt19937_64 rng(mix_seed(config.seed));
  EmbeddingProvider provider =
      precomputed ? std::move(*precomputed)
                  : EmbeddingProvider::trainable(build_token_vocab(train), config.embed_dim, rng, std::sqrt(3.0));
  StringIndex pos = config.pos_features ? build_pos_vocab(train) : StringIndex{};
  ModelParams p = skeleton(config, LabelVocab::standard(), std::move(provider), std::move(pos));
  const std::size_t in = p.feature_dim();
  const std::size_t k = p.labels.num_labels();
  if (p.lstm) p.lstm = BiLstmParams::uniform(in, config.hidden_dim, rng);
  p.head = LinearHead::uniform(head_widths(config, in, k), rng);
  return p;
}

// ---- forward ----

Matrix token_features(const ModelParams& params, const Sentence& sentence) {
  Matrix x = params.embeddings.embed(sentence);
  if (!params.config.pos_features) return x;
  if (!sentence.pos_tags)
    throw ContractError("model expects POS features but the input has no POS column");
  return concat_pos_features(x, *sentence.pos_tags, params.pos_vocab);
}

ForwardTrace forward(const ModelParams& params, const Sentence& sentence, bool training,
                     std::mt19937_64* rng) {
  if (sentence.tokens.empty()) throw ContractError("cannot tag an empty sentence");
  const bool drop = training && params.config.dropout > 0.0;
  if (drop && rng == nullptr) throw ContractError("training forward pass needs an rng");

  ForwardTrace t;
  t.features = token_features(params, sentence);
  if (params.embeddings.mode() == EmbeddingProvider::Mode::Trainable)
    t.rows = params.embeddings.token_rows(sentence);
  const std::size_t m = t.features.rows();

  Matrix x = t.features;
  if (drop) {
    t.input_mask = dropout_mask(m, x.cols(), params.config.dropout, *rng);
    x = hadamard(x, t.input_mask);
  }
  if (params.lstm) {
    t.lstm = bilstm_forward_traced(x, *params.lstm);
    x = t.lstm->output;
    if (drop) {
      t.hidden_mask = dropout_mask(m, x.cols(), params.config.dropout, *rng);
      x = hadamard(x, t.hidden_mask);
    }
  }
  t.head = linear_head_forward_traced(x, params.head);
  return t;
}

Matrix emissions(const ModelParams& params, const Sentence& sentence) {
  return forward(params, sentence, false, nullptr).head.output;
}

TagSequence predict_tags(const ModelParams& params, const Sentence& sentence) {
  const Matrix p = emissions(params, sentence);
  if (params.transitions)
    return repair_bio(params.labels.decode(crf::viterbi_decode(p, *params.transitions).labels));
  return repair_bio(softmax_decode(p, params.labels));
}

// ---- serialization ----
//
// Layout: magic "SEQTAG/1", then length-prefixed sections (u64 LE byte
// count + payload) in a fixed order: config text, entity types, token
// vocabulary, POS vocabulary, embedding metadata, tensors, transition mask.

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  void bytes(const std::string& s) { buf_.append(s); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Reader section() {
    const std::uint64_t n = u64();
    need(n);
    Reader r(data_.substr(pos_, n));
    pos_ += n;
    return r;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw CorruptionError("model file is truncated or corrupt");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_strings(Writer& w, const std::vector<std::string>& v) {
  w.u64(v.size());
  for (const auto& s : v) w.str(s);
}

std::vector<std::string> read_strings(Reader& r) {
  const std::uint64_t n = r.u64();
  std::vector<std::string> v;
  for (std::uint64_t i = 0; i < n; ++i) v.push_back(r.str());
  return v;
}

void section(Writer& out, const Writer& payload) {
  out.u64(payload.data().size());
  out.bytes(payload.data());
}

}  // namespace

std::string serialize_model(const ModelParams& params) {
  Writer out;
  out.bytes(std::string(kModelMagic, sizeof(kModelMagic) - 1));

  Writer config;
  config.str(params.config.to_text());
  section(out, config);

  Writer labels;
  std::vector<std::string> types;
  for (EntityType t : params.labels.entity_types()) types.emplace_back(to_string(t));
  write_strings(labels, types);
  section(out, labels);

  Writer tokens;
  write_strings(tokens, params.embeddings.vocab().entries());
  section(out, tokens);

  Writer pos;
  write_strings(pos, params.pos_vocab.entries());
  section(out, pos);

  Writer emb;
  emb.u8(params.embeddings.mode() == EmbeddingProvider::Mode::Trainable ? 0 : 1);
  emb.u64(params.embeddings.dim());
  section(out, emb);

  Writer tensors;
  const auto list = params.tensors();
  tensors.u64(list.size());
  for (const Matrix* m : list) {
    tensors.u64(m->rows());
    tensors.u64(m->cols());
    for (double v : m->data()) tensors.f64(v);
  }
  section(out, tensors);

  Writer mask;
  if (params.transitions) {
    const auto& fm = params.transitions->frozen_mask();
    mask.u64(fm.size());
    for (auto b : fm) mask.u8(b);
  } else {
    mask.u64(0);
  }
  section(out, mask);
  return out.data();
}

void save_model(const ModelParams& params, std::ostream& out) {
  const std::string bytes = serialize_model(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model");
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save_model(params, out);
}

ModelParams load_model(std::istream& in) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t magic_len = sizeof(kModelMagic) - 1;
  if (data.size() < magic_len || data.compare(0, magic_len, kModelMagic) != 0) {
    if (data.size() >= 7 && data.compare(0, 7, "SEQTAG/") == 0)
      throw FormatError("unsupported model format version");
    throw FormatError("not a model file (bad magic)");
  }
  Reader r(std::string_view(data).substr(magic_len));

  Reader config_sec = r.section();
  TrainConfig config;
  try {
    config = TrainConfig::from_text(config_sec.str());
  } catch (const ConfigError& e) {
    throw CorruptionError(std::string("bad config snapshot: ") + e.what());
  }

  Reader labels_sec = r.section();
  std::vector<EntityType> types;
  for (const auto& s : read_strings(labels_sec)) {
    auto t = parse_entity_type(s);
    if (!t) throw CorruptionError("unknown entity type '" + s + "' in model");
    types.push_back(*t);
  }

  Reader tokens_sec = r.section();
  StringIndex token_vocab(read_strings(tokens_sec));
  Reader pos_sec = r.section();
  StringIndex pos_vocab(read_strings(pos_sec));

  Reader emb_sec = r.section();
  const std::uint8_t mode = emb_sec.u8();
  const std::uint64_t dim = emb_sec.u64();
  const std::size_t vocab_size = token_vocab.size();
  EmbeddingProvider provider =
      mode == 0 ? EmbeddingProvider::trainable(std::move(token_vocab), Matrix(vocab_size, dim))
                : EmbeddingProvider::precomputed(dim, {});

  ModelParams p = skeleton(config, LabelVocab(types), std::move(provider), std::move(pos_vocab));
  if (p.head.output_dim() != p.labels.num_labels())
    throw CorruptionError("label vocabulary does not match the stored head");

  Reader tensor_sec = r.section();
  const auto list = p.tensors();
  if (tensor_sec.u64() != list.size()) throw CorruptionError("tensor count mismatch");
  for (Matrix* m : list) {
    const std::uint64_t rows = tensor_sec.u64(), cols = tensor_sec.u64();
    if (rows != m->rows() || cols != m->cols())
      throw CorruptionError("tensor shape mismatch: stored (" + std::to_string(rows) + "x" +
                            std::to_string(cols) + "), expected " + m->shape_string());
    for (double& v : m->data()) v = tensor_sec.f64();
  }

  Reader mask_sec = r.section();
  const std::uint64_t mask_len = mask_sec.u64();
  if (p.transitions) {
    std::vector<std::uint8_t> fm(mask_len);
    for (auto& b : fm) b = mask_sec.u8();
    p.transitions->set_frozen_mask(std::move(fm));
  } else if (mask_len != 0) {
    throw CorruptionError("transition mask present for a model without CRF");
  }
  if (!r.done()) throw CorruptionError("trailing bytes after model sections");
  return p;
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("no such file: '" + path.string() + "'");
  return load_model(in);
}

}  // namespace seqtag
