// Test-only reference computations. Nothing here calls into the CRF or
// encoder code it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "seqtag/numeric.hpp"

namespace oracle {

using seqtag::Matrix;

inline std::vector<std::vector<std::size_t>> all_sequences(std::size_t m, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(m, 0);
  while (true) {
    out.push_back(cur);
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (++cur[pos] < k) break;
      cur[pos] = 0;
      if (pos == 0) return out;
    }
    if (m == 0) return out;
  }
}

/// Term-by-term score with START = k and END = k + 1 rows/cols of `a`.
inline double score(const Matrix& p, const Matrix& a, const std::vector<std::size_t>& y) {
  const std::size_t k = p.cols();
  double transitions = a(k, y[0]) + a(y.back(), k + 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) transitions += a(y[i], y[i + 1]);
  double emissions = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) emissions += p(i, y[i]);
  return transitions + emissions;
}

inline double log_partition(const Matrix& p, const Matrix& a) {
  std::vector<double> scores;
  for (const auto& y : all_sequences(p.rows(), p.cols())) scores.push_back(score(p, a, y));
  const double mx = *std::max_element(scores.begin(), scores.end());
  long double s = 0.0L;
  for (double v : scores) s += std::exp(static_cast<long double>(v - mx));
  return mx + static_cast<double>(std::log(s));
}

/// First maximum in lexicographic order.
inline std::vector<std::size_t> argmax_sequence(const Matrix& p, const Matrix& a) {
  std::vector<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& y : all_sequences(p.rows(), p.cols())) {
    const double s = score(p, a, y);
    if (s > best_score) {
      best_score = s;
      best = y;
    }
  }
  return best;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = d(rng);
  return m;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM direction, every gate spelled out scalar by scalar.
/// w: in x 4h, u: h x 4h, b: 1 x 4h, gate blocks ordered i, f, o, g.
inline Matrix lstm_unrolled(const Matrix& x, const Matrix& w, const Matrix& u, const Matrix& b,
                            bool reverse) {
  const std::size_t m = x.rows(), in = x.cols(), h = u.rows();
  Matrix out(m, h);
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t t = reverse ? m - 1 - step : step;
    std::vector<double> nh(h), nc(h);
    for (std::size_t a = 0; a < h; ++a) {
      double zi = b(0, a), zf = b(0, h + a), zo = b(0, 2 * h + a), zg = b(0, 3 * h + a);
      for (std::size_t j = 0; j < in; ++j) {
        zi += x(t, j) * w(j, a);
        zf += x(t, j) * w(j, h + a);
        zo += x(t, j) * w(j, 2 * h + a);
        zg += x(t, j) * w(j, 3 * h + a);
      }
      for (std::size_t j = 0; j < h; ++j) {
        zi += hs[j] * u(j, a);
        zf += hs[j] * u(j, h + a);
        zo += hs[j] * u(j, 2 * h + a);
        zg += hs[j] * u(j, 3 * h + a);
      }
      nc[a] = sigm(zf) * cs[a] + sigm(zi) * std::tanh(zg);
      nh[a] = sigm(zo) * std::tanh(nc[a]);
    }
    hs = nh;
    cs = nc;
    for (std::size_t a = 0; a < h; ++a) out(t, a) = hs[a];
  }
  return out;
}

}  // namespace oracle
