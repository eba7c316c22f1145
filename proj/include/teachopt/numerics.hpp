#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "teachopt/errors.hpp"

namespace teachopt {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ln Gamma(x), Lanczos approximation (g = 7, 9 coefficients).
// Arguments below 0.5 are shifted up through Gamma(x+1) = x Gamma(x).
inline double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw DomainError("log_gamma: argument must be positive and finite");
  static constexpr double kCoef[9] = {
      0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
      771.32342877765313,       -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};
  double shift = 0.0;
  while (x < 0.5) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double z = x - 1.0;
  double sum = kCoef[0];
  for (int i = 1; i < 9; ++i) sum += kCoef[i] / (z + i);
  const double t = z + 7.5;  // g + 0.5
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(sum) + shift;
}

// Digamma psi(x): recurrence shift to x >= 10, then the asymptotic series
// psi(x) ~ ln x - 1/(2x) - sum_k B_{2k} / (2k x^{2k}).
inline double digamma(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw DomainError("digamma: argument must be positive and finite");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // B2/2, B4/4, B6/6, B8/8, B10/10, B12/12
  static constexpr double kB[6] = {1.0 / 12.0,  -1.0 / 120.0, 1.0 / 252.0,
                                   -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0};
  double series = 0.0;
  double p = inv2;
  for (double b : kB) {
    series += b * p;
    p *= inv2;
  }
  return acc + std::log(x) - 0.5 * inv - series;
}

// Dense symmetric matrix, row-major storage of the full square.
// Construction and mutation keep entries[i][j] == entries[j][i] exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, 0.0) {}

  // Symmetrizes an arbitrary row-major square array: (A + A^T) / 2.
  SymMatrix(int dim, const Vec& row_major) : SymMatrix(dim) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        a_[idx(i, j)] = 0.5 * (row_major[idx(i, j)] + row_major[idx(j, i)]);
  }

  static SymMatrix identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.a_[m.idx(i, i)] = 1.0;
    return m;
  }

  static SymMatrix diag(const Vec& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim_; ++i) m.a_[m.idx(i, i)] = d[i];
    return m;
  }

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return a_[idx(i, j)]; }

  void set(int i, int j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }
  void add(int i, int j, double v) { set(i, j, a_[idx(i, j)] + v); }

  const Vec& data() const { return a_; }

  friend SymMatrix operator+(const SymMatrix& x, const SymMatrix& y) {
    SymMatrix r(x.dim_);
    for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] = x.a_[k] + y.a_[k];
    return r;
  }
  friend SymMatrix operator-(const SymMatrix& x, const SymMatrix& y) {
    SymMatrix r(x.dim_);
    for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] = x.a_[k] - y.a_[k];
    return r;
  }
  friend SymMatrix operator*(double c, const SymMatrix& x) {
    SymMatrix r(x.dim_);
    for (std::size_t k = 0; k < r.a_.size(); ++k) r.a_[k] = c * x.a_[k];
    return r;
  }

  Vec mul(std::span<const double> v) const {
    Vec r(dim_, 0.0);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) r[i] += a_[idx(i, j)] * v[j];
    return r;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += a_[idx(i, i)];
    return t;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * dim_ + j; }
  int dim_ = 0;
  Vec a_;
};

// a b^T + b a^T
inline SymMatrix sym_outer(std::span<const double> a, std::span<const double> b) {
  const int d = static_cast<int>(a.size());
  SymMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m.set(i, j, a[i] * b[j] + a[j] * b[i]);
  return m;
}

inline SymMatrix outer(std::span<const double> a) {
  const int d = static_cast<int>(a.size());
  SymMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m.set(i, j, a[i] * a[j]);
  return m;
}

// Lower Cholesky factor; throws NotPositiveDefinite on a non-positive pivot.
inline Vec cholesky(const SymMatrix& m) {
  const int d = m.dim();
  Vec l(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      if (i == j) {
        if (s <= 0.0) throw NotPositiveDefinite("cholesky: non-positive pivot");
        l[i * d + i] = std::sqrt(s);
      } else {
        l[i * d + j] = s / l[j * d + j];
      }
    }
  }
  return l;
}

inline double log_det_pd(const SymMatrix& m) {
  const Vec l = cholesky(m);
  const int d = m.dim();
  double r = 0.0;
  for (int i = 0; i < d; ++i) r += std::log(l[i * d + i]);
  return 2.0 * r;
}

inline Vec solve_pd(const SymMatrix& m, const Vec& b) {
  const int d = m.dim();
  const Vec l = cholesky(m);
  Vec y(d), x(d);
  for (int i = 0; i < d; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i * d + k] * y[k];
    y[i] = s / l[i * d + i];
  }
  for (int i = d - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < d; ++k) s -= l[k * d + i] * x[k];
    x[i] = s / l[i * d + i];
  }
  return x;
}

inline SymMatrix inverse_pd(const SymMatrix& m) {
  const int d = m.dim();
  SymMatrix inv(d);
  Vec e(d, 0.0);
  for (int j = 0; j < d; ++j) {
    e[j] = 1.0;
    Vec col = solve_pd(m, e);
    for (int i = 0; i < d; ++i) inv.set(i, j, col[i]);
    e[j] = 0.0;
  }
  return SymMatrix(d, inv.data());
}

struct EigenSym {
  Vec values;   // ascending not guaranteed
  Vec vectors;  // column-major: vectors[i + dim*k] is component i of eigenvector k
};

// Cyclic Jacobi. Dimensions here are tiny, so robustness beats speed.
inline EigenSym eigh(const SymMatrix& m) {
  const int d = m.dim();
  Vec a = m.data();
  Vec v(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) v[i * d + i] = 1.0;
  auto at = [&](int i, int j) -> double& { return a[i * d + j]; };

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += at(i, j) * at(i, j);
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale += at(i, i) * at(i, i);
    if (off <= 1e-30 * std::max(scale, 1e-300) || off == 0.0) {
      EigenSym r;
      r.values.resize(d);
      for (int i = 0; i < d; ++i) r.values[i] = at(i, i);
      r.vectors.resize(v.size());
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) r.vectors[i + d * k] = v[i * d + k];
      return r;
    }
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = v[k * d + p], vkq = v[k * d + q];
          v[k * d + p] = c * vkp - s * vkq;
          v[k * d + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  throw std::runtime_error("eigh: Jacobi iteration did not converge");
}

// Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues.
inline SymMatrix project_psd(const SymMatrix& m) {
  const int d = m.dim();
  EigenSym es = eigh(m);
  SymMatrix r(d);
  for (int k = 0; k < d; ++k) {
    const double w = std::max(es.values[k], 0.0);
    if (w == 0.0) continue;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) r.add(i, j, w * es.vectors[i + d * k] * es.vectors[j + d * k]);
  }
  return r;
}

// ln det of a general square matrix via partially pivoted LU.
// Throws NotPositiveDefinite when det <= 0.
inline double log_det_lu(Vec a, int d) {
  double sign = 1.0, logdet = 0.0;
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
    if (a[piv * d + col] == 0.0) throw NotPositiveDefinite("log_det_lu: singular matrix");
    if (piv != col) {
      for (int k = 0; k < d; ++k) std::swap(a[piv * d + k], a[col * d + k]);
      sign = -sign;
    }
    const double p = a[col * d + col];
    if (p < 0.0) sign = -sign;
    logdet += std::log(std::abs(p));
    for (int r = col + 1; r < d; ++r) {
      const double f = a[r * d + col] / p;
      if (f == 0.0) continue;
      for (int k = col; k < d; ++k) a[r * d + k] -= f * a[col * d + k];
    }
  }
  if (sign < 0.0) throw NotPositiveDefinite("log_det_lu: non-positive determinant");
  return logdet;
}

}  // namespace teachopt
