#include "seqtag/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "seqtag/errors.hpp"

namespace seqtag {

StringIndex::StringIndex(std::vector<std::string> entries) {
  for (auto& e : entries) add(e);
}

std::size_t StringIndex::add(const std::string& s) {
  auto [it, inserted] = index_.emplace(s, entries_.size());
  if (inserted) entries_.push_back(s);
  return it->second;
}

std::optional<std::size_t> StringIndex::find(const std::string& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

StringIndex build_token_vocab(const std::vector<Sentence>& sentences) {
  StringIndex v;
  v.add(kUnkToken);
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) v.add(t);
  return v;
}

StringIndex build_pos_vocab(const std::vector<Sentence>& sentences) {
  StringIndex v;
  for (const auto& s : sentences)
    if (s.pos_tags)
      for (const auto& t : *s.pos_tags) v.add(t);
  return v;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = (2.0 * uniform01(rng) - 1.0) * scale;
  return m;
}

}  // namespace

EmbeddingProvider EmbeddingProvider::trainable(StringIndex vocab, std::size_t dim,
                                               std::mt19937_64& rng, double scale) {
  if (vocab.size() == 0 || vocab.entries()[kUnkRow] != kUnkToken)
    throw ContractError("token vocabulary must reserve row 0 for " + std::string(kUnkToken));
  Matrix table = uniform_matrix(vocab.size(), dim, rng, scale);
  return trainable(std::move(vocab), std::move(table));
}

EmbeddingProvider EmbeddingProvider::trainable(StringIndex vocab, Matrix table) {
  if (table.rows() != vocab.size())
    throw ShapeError("embedding table " + table.shape_string() + " for vocabulary of " +
                     std::to_string(vocab.size()));
  EmbeddingProvider p;
  p.mode_ = Mode::Trainable;
  p.dim_ = table.cols();
  p.vocab_ = std::move(vocab);
  p.table_ = std::move(table);
  return p;
}

EmbeddingProvider EmbeddingProvider::precomputed(std::size_t dim,
                                                 std::unordered_map<std::string, Matrix> cache) {
  EmbeddingProvider p;
  p.mode_ = Mode::Precomputed;
  p.dim_ = dim;
  p.set_cache(std::move(cache));
  return p;
}

void EmbeddingProvider::set_cache(std::unordered_map<std::string, Matrix> cache) {
  for (const auto& [id, m] : cache)
    if (m.cols() != dim_)
      throw ShapeError("precomputed embedding for '" + id + "' has width " +
                       std::to_string(m.cols()) + ", expected " + std::to_string(dim_));
  cache_ = std::move(cache);
}

std::vector<std::size_t> EmbeddingProvider::token_rows(const Sentence& sentence) const {
  std::vector<std::size_t> rows;
  rows.reserve(sentence.size());
  for (const auto& t : sentence.tokens) rows.push_back(vocab_.find(t).value_or(kUnkRow));
  return rows;
}

Matrix EmbeddingProvider::embed(const Sentence& sentence) const {
  if (mode_ == Mode::Precomputed) {
    if (!sentence.id) throw LookupError("sentence without id cannot use precomputed embeddings");
    auto it = cache_.find(*sentence.id);
    if (it == cache_.end())
      throw LookupError("no precomputed embedding for sentence '" + *sentence.id + "'");
    if (it->second.rows() != sentence.size())
      throw ShapeError("precomputed embedding for '" + *sentence.id + "' has " +
                       std::to_string(it->second.rows()) + " rows, sentence has " +
                       std::to_string(sentence.size()) + " tokens");
    return it->second;
  }
  Matrix out(sentence.size(), dim_);
  const auto rows = token_rows(sentence);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = table_.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::unordered_map<std::string, Matrix> read_precomputed_embeddings(std::istream& in,
                                                                    std::size_t* dim_out) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("dim=", 0) != 0) throw ParseError("expected 'dim=<d>' header", line_no);
    try {
      dim = std::stoul(line.substr(4));
    } catch (const std::exception&) {
      throw ParseError("bad dimension in header '" + line + "'", line_no);
    }
    if (dim == 0) throw ParseError("embedding dimension must be positive", line_no);
    break;
  }
  if (dim == 0) throw ParseError("missing 'dim=<d>' header", line_no);

  std::unordered_map<std::string, Matrix> cache;
  std::optional<std::string> id;
  std::vector<double> values;
  auto flush = [&] {
    if (!id) return;
    const std::size_t rows = values.size() / dim;
    if (!cache.emplace(*id, Matrix(rows, dim, std::move(values))).second)
      throw ParseError("duplicate embedding block for '" + *id + "'", line_no);
    values = {};
    id.reset();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (line.rfind("# id ", 0) == 0) {
      flush();
      std::istringstream ls(line.substr(5));
      std::string name;
      ls >> name;
      id = name;
      continue;
    }
    if (!id) throw ParseError("vector line outside an '# id' block", line_no);
    std::istringstream ls(line);
    std::size_t count = 0;
    double v;
    while (ls >> v) {
      values.push_back(v);
      ++count;
    }
    if (!ls.eof() || count != dim)
      throw ParseError("expected " + std::to_string(dim) + " floats", line_no);
  }
  flush();
  if (dim_out) *dim_out = dim;
  return cache;
}

void write_precomputed_embeddings(std::ostream& out, std::size_t dim,
                                  const std::vector<std::pair<std::string, Matrix>>& blocks) {
  out << "dim=" << dim << '\n';
  out << std::setprecision(17);
  for (const auto& [id, m] : blocks) {
    out << "# id " << id << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
      out << '\n';
    }
    out << '\n';
  }
}

Matrix concat_pos_features(const Matrix& emb, const std::vector<std::string>& pos_tags,
                           const StringIndex& pos_vocab) {
  if (pos_tags.size() != emb.rows())
    throw ShapeError("POS tag count " + std::to_string(pos_tags.size()) + " for " +
                     std::to_string(emb.rows()) + " tokens");
  Matrix onehot(emb.rows(), pos_vocab.size());
  for (std::size_t i = 0; i < pos_tags.size(); ++i)
    if (auto idx = pos_vocab.find(pos_tags[i])) onehot(i, *idx) = 1.0;
  return hconcat(emb, onehot);
}

// ---- BiLSTM ----

BiLstmParams BiLstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  auto dir = [&] {
    return LstmDirection{Matrix(input_dim, 4 * hidden_dim), Matrix(hidden_dim, 4 * hidden_dim),
                         Matrix(1, 4 * hidden_dim)};
  };
  return {dir(), dir()};
}

BiLstmParams BiLstmParams::uniform(std::size_t input_dim, std::size_t hidden_dim,
                                   std::mt19937_64& rng, double scale) {
  auto dir = [&] {
    LstmDirection d;
    d.input_weights = uniform_matrix(input_dim, 4 * hidden_dim, rng, scale);
    d.hidden_weights = uniform_matrix(hidden_dim, 4 * hidden_dim, rng, scale);
    d.bias = uniform_matrix(1, 4 * hidden_dim, rng, scale);
    return d;
  };
  BiLstmParams p;
  p.forward = dir();
  p.backward = dir();
  return p;
}

std::vector<Matrix*> BiLstmParams::tensors() {
  return {&forward.input_weights,  &forward.hidden_weights,  &forward.bias,
          &backward.input_weights, &backward.hidden_weights, &backward.bias};
}

namespace {

LstmDirectionTrace run_direction(const Matrix& x, const LstmDirection& p, bool reverse) {
  const std::size_t m = x.rows();
  const std::size_t h = p.hidden_weights.rows();
  if (x.cols() != p.input_weights.rows())
    throw ShapeError("LSTM input " + x.shape_string() + " does not match input weights " +
                     p.input_weights.shape_string());

  LstmDirectionTrace t;
  t.inputs = Matrix(m, x.cols());
  for (std::size_t s = 0; s < m; ++s) {
    auto src = x.row(reverse ? m - 1 - s : s);
    std::copy(src.begin(), src.end(), t.inputs.row(s).begin());
  }
  t.gates = matmul(t.inputs, p.input_weights);
  add_row_bias(t.gates, p.bias);
  t.cells = Matrix(m, h);
  t.tanh_cells = Matrix(m, h);
  t.hidden = Matrix(m, h);

  for (std::size_t s = 0; s < m; ++s) {
    auto z = t.gates.row(s);
    if (s > 0) {
      auto hprev = t.hidden.row(s - 1);
      for (std::size_t a = 0; a < h; ++a) {
        const double hv = hprev[a];
        if (hv == 0.0) continue;
        auto wrow = p.hidden_weights.row(a);
        for (std::size_t c = 0; c < 4 * h; ++c) z[c] += hv * wrow[c];
      }
    }
    for (std::size_t a = 0; a < h; ++a) {
      const double ig = sigmoid(z[a]);
      const double fg = sigmoid(z[h + a]);
      const double og = sigmoid(z[2 * h + a]);
      const double gg = std::tanh(z[3 * h + a]);
      z[a] = ig;
      z[h + a] = fg;
      z[2 * h + a] = og;
      z[3 * h + a] = gg;
      const double cprev = s > 0 ? t.cells(s - 1, a) : 0.0;
      const double c = fg * cprev + ig * gg;
      t.cells(s, a) = c;
      t.tanh_cells(s, a) = std::tanh(c);
      t.hidden(s, a) = og * t.tanh_cells(s, a);
    }
  }
  return t;
}

// d_hidden is indexed in processing order. Returns dLoss/dinputs in
// processing order.
Matrix backprop_direction(const LstmDirectionTrace& t, const LstmDirection& p,
                          const Matrix& d_hidden, LstmDirection& g) {
  const std::size_t m = t.hidden.rows();
  const std::size_t h = t.hidden.cols();
  Matrix d_gates(m, 4 * h);
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);

  for (std::size_t s = m; s-- > 0;) {
    auto gate = t.gates.row(s);
    auto dz = d_gates.row(s);
    for (std::size_t a = 0; a < h; ++a) {
      const double ig = gate[a], fg = gate[h + a], og = gate[2 * h + a], gg = gate[3 * h + a];
      const double tc = t.tanh_cells(s, a);
      const double dh = d_hidden(s, a) + dh_next[a];
      const double dc = dc_next[a] + dh * og * (1.0 - tc * tc);
      const double cprev = s > 0 ? t.cells(s - 1, a) : 0.0;
      dz[a] = dc * gg * ig * (1.0 - ig);
      dz[h + a] = dc * cprev * fg * (1.0 - fg);
      dz[2 * h + a] = dh * tc * og * (1.0 - og);
      dz[3 * h + a] = dc * ig * (1.0 - gg * gg);
      dc_next[a] = dc * fg;
    }
    // dh_{s-1} = W_h * dz_s
    for (std::size_t a = 0; a < h; ++a) {
      auto wrow = p.hidden_weights.row(a);
      double acc = 0.0;
      for (std::size_t c = 0; c < 4 * h; ++c) acc += wrow[c] * dz[c];
      dh_next[a] = acc;
    }
  }

  axpy(1.0, matmul_at_b(t.inputs, d_gates), g.input_weights);
  if (m > 1) {
    Matrix prev_hidden(m - 1, h);
    std::copy(t.hidden.data().begin(), t.hidden.data().end() - static_cast<long>(h),
              prev_hidden.data().begin());
    Matrix later_gates(m - 1, 4 * h);
    std::copy(d_gates.data().begin() + static_cast<long>(4 * h), d_gates.data().end(),
              later_gates.data().begin());
    axpy(1.0, matmul_at_b(prev_hidden, later_gates), g.hidden_weights);
  }
  for (std::size_t s = 0; s < m; ++s)
    for (std::size_t c = 0; c < 4 * h; ++c) g.bias(0, c) += d_gates(s, c);
  return matmul_a_bt(d_gates, p.input_weights);
}

}  // namespace

BiLstmTrace bilstm_forward_traced(const Matrix& x, const BiLstmParams& params) {
  if (x.rows() == 0) throw ShapeError("BiLSTM input has no rows");
  BiLstmTrace t;
  t.forward = run_direction(x, params.forward, false);
  t.backward = run_direction(x, params.backward, true);
  const std::size_t m = x.rows(), h = params.hidden_dim();
  t.output = Matrix(m, 2 * h);
  for (std::size_t i = 0; i < m; ++i) {
    auto out = t.output.row(i);
    auto f = t.forward.hidden.row(i);
    auto b = t.backward.hidden.row(m - 1 - i);
    std::copy(f.begin(), f.end(), out.begin());
    std::copy(b.begin(), b.end(), out.begin() + static_cast<long>(h));
  }
  return t;
}

Matrix bilstm_forward(const Matrix& x, const BiLstmParams& params) {
  return bilstm_forward_traced(x, params).output;
}

Matrix bilstm_backward(const BiLstmTrace& trace, const BiLstmParams& params,
                       const Matrix& d_output, BiLstmParams& grads) {
  const std::size_t m = trace.output.rows(), h = params.hidden_dim();
  if (d_output.rows() != m || d_output.cols() != 2 * h)
    throw ShapeError("BiLSTM output gradient " + d_output.shape_string() + " vs output " +
                     trace.output.shape_string());
  Matrix d_fwd(m, h), d_bwd(m, h);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < h; ++a) {
      d_fwd(i, a) = d_output(i, a);
      d_bwd(m - 1 - i, a) = d_output(i, h + a);
    }
  Matrix dx = backprop_direction(trace.forward, params.forward, d_fwd, grads.forward);
  const Matrix dx_rev = backprop_direction(trace.backward, params.backward, d_bwd, grads.backward);
  for (std::size_t i = 0; i < m; ++i) {
    auto dst = dx.row(i);
    auto src = dx_rev.row(m - 1 - i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return dx;
}

// ---- Linear head ----

LinearHead LinearHead::uniform(const std::vector<std::size_t>& widths, std::mt19937_64& rng,
                               double scale) {
  if (widths.size() < 2 || widths.size() > 3)
    throw ConfigError("linear head takes one or two layers");
  LinearHead head;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    head.layers.push_back({uniform_matrix(widths[l], widths[l + 1], rng, scale),
                           uniform_matrix(1, widths[l + 1], rng, scale)});
  return head;
}

LinearHead LinearHead::zeros(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2 || widths.size() > 3)
    throw ConfigError("linear head takes one or two layers");
  LinearHead head;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    head.layers.push_back({Matrix(widths[l], widths[l + 1]), Matrix(1, widths[l + 1])});
  return head;
}

std::vector<Matrix*> LinearHead::tensors() {
  std::vector<Matrix*> out;
  for (auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

LinearHeadTrace linear_head_forward_traced(const Matrix& h, const LinearHead& head) {
  if (head.layers.empty()) throw ShapeError("linear head has no layers");
  LinearHeadTrace t;
  Matrix cur = h;
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    const auto& layer = head.layers[l];
    if (cur.cols() != layer.weights.rows())
      throw ShapeError("linear layer " + std::to_string(l) + " expects width " +
                       std::to_string(layer.weights.rows()) + ", got " + cur.shape_string());
    t.layer_inputs.push_back(cur);
    Matrix z = matmul(cur, layer.weights);
    add_row_bias(z, layer.bias);
    if (l + 1 < head.layers.size()) {
      t.pre_activations.push_back(z);
      for (double& v : z.data()) v = std::max(0.0, v);
    }
    cur = std::move(z);
  }
  t.output = std::move(cur);
  return t;
}

Matrix linear_head_forward(const Matrix& h, const LinearHead& head) {
  return linear_head_forward_traced(h, head).output;
}

Matrix linear_head_backward(const LinearHeadTrace& trace, const LinearHead& head,
                            const Matrix& d_output, LinearHead& grads) {
  Matrix d = d_output;
  for (std::size_t l = head.layers.size(); l-- > 0;) {
    if (l + 1 < head.layers.size()) {
      const Matrix& pre = trace.pre_activations[l];
      for (std::size_t i = 0; i < d.size(); ++i)
        if (pre.data()[i] <= 0.0) d.data()[i] = 0.0;
    }
    axpy(1.0, matmul_at_b(trace.layer_inputs[l], d), grads.layers[l].weights);
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j) grads.layers[l].bias(0, j) += d(i, j);
    d = matmul_a_bt(d, head.layers[l].weights);
  }
  return d;
}

std::vector<std::size_t> argmax_rows(const Matrix& emissions) {
  std::vector<std::size_t> out(emissions.rows(), 0);
  for (std::size_t i = 0; i < emissions.rows(); ++i) {
    auto r = emissions.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

TagSequence softmax_decode(const Matrix& emissions, const LabelVocab& vocab) {
  if (emissions.cols() != vocab.num_labels())
    throw ShapeError("emissions " + emissions.shape_string() + " for " +
                     std::to_string(vocab.num_labels()) + " labels");
  return vocab.decode(argmax_rows(emissions));
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
  Matrix mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.data()) v = uniform01(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

Matrix apply_dropout(const Matrix& x, double rate, std::mt19937_64& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  return hadamard(x, dropout_mask(x.rows(), x.cols(), rate, rng));
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("hadamard shape mismatch: " + a.shape_string() + " vs " + b.shape_string());
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

}  // namespace seqtag
