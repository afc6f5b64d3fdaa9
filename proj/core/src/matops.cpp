#include "wdvv/matops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "wdvv/error.hpp"

namespace wdvv {

namespace {

void require_same_dim(const SquareMatrix& l, const SquareMatrix& r) {
  if (l.dim() != r.dim()) throw Error(ErrorKind::DimensionMismatch, "matrix dimensions differ");
}

}  // namespace

SquareMatrix::SquareMatrix(int dim, double fill)
    : dim_(dim), data_(static_cast<std::size_t>(dim * dim), fill) {
  if (dim < 0) throw Error(ErrorKind::InvalidArgument, "negative matrix dimension");
}

SquareMatrix::SquareMatrix(int dim, std::vector<double> entries)
    : dim_(dim), data_(std::move(entries)) {
  if (dim < 0 || data_.size() != static_cast<std::size_t>(dim * dim)) {
    throw Error(ErrorKind::DimensionMismatch, "entry count is not dim^2");
  }
  for (double x : data_) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "non-finite matrix entry");
  }
}

SquareMatrix SquareMatrix::identity(int dim) {
  SquareMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix SquareMatrix::ones(int dim) { return SquareMatrix(dim, 1.0); }

SquareMatrix SquareMatrix::transposed() const {
  SquareMatrix t(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

SquareMatrix& SquareMatrix::operator+=(const SquareMatrix& o) {
  require_same_dim(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

SquareMatrix& SquareMatrix::operator-=(const SquareMatrix& o) {
  require_same_dim(*this, o);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

SquareMatrix& SquareMatrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

SquareMatrix operator*(const SquareMatrix& l, const SquareMatrix& r) {
  require_same_dim(l, r);
  const int n = l.dim();
  SquareMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double lik = l(i, k);
      if (lik == 0.0) continue;
      for (int j = 0; j < n; ++j) out(i, j) += lik * r(k, j);
    }
  }
  return out;
}

LuFactorization::LuFactorization(const SquareMatrix& m, double reference_norm)
    : lu_(m), perm_(static_cast<std::size_t>(m.dim())) {
  const int n = m.dim();
  std::iota(perm_.begin(), perm_.end(), 0);
  const double threshold = kSingularPivotRatio * std::max(inf_norm(m), reference_norm);
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int r = k + 1; r < n; ++r) {
      if (std::abs(lu_(r, k)) > std::abs(lu_(pivot, k))) pivot = r;
    }
    if (!(std::abs(lu_(pivot, k)) > threshold)) {
      throw Error(ErrorKind::SingularMetric, "pivot below 1e-12 * ||B||_inf");
    }
    if (pivot != k) {
      for (int c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(pivot)]);
    }
    for (int r = k + 1; r < n; ++r) {
      const double f = lu_(r, k) / lu_(k, k);
      lu_(r, k) = f;
      for (int c = k + 1; c < n; ++c) lu_(r, c) -= f * lu_(k, c);
    }
  }
}

std::vector<double> LuFactorization::solve(std::span<const double> rhs) const {
  const int n = lu_.dim();
  if (static_cast<int>(rhs.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "right-hand side length differs from dim");
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
    for (int k = 0; k < i; ++k) s -= lu_(i, k) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= lu_(i, k) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / lu_(i, i);
  }
  return x;
}

SquareMatrix LuFactorization::solve(const SquareMatrix& rhs) const {
  require_same_dim(lu_, rhs);
  const int n = rhs.dim();
  SquareMatrix out(n);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = rhs(r, c);
    const auto x = solve(column);
    for (int r = 0; r < n; ++r) out(r, c) = x[static_cast<std::size_t>(r)];
  }
  return out;
}

SquareMatrix solve(const SquareMatrix& b_matrix, const SquareMatrix& rhs) {
  require_same_dim(b_matrix, rhs);
  return LuFactorization(b_matrix).solve(rhs);
}

SquareMatrix inverse(const SquareMatrix& m) {
  return LuFactorization(m).solve(SquareMatrix::identity(m.dim()));
}

SquareMatrix commutator(const SquareMatrix& p, const SquareMatrix& q) {
  require_same_dim(p, q);
  return p * q - q * p;
}

double inf_norm(const SquareMatrix& m) noexcept {
  double best = 0.0;
  for (int r = 0; r < m.dim(); ++r) {
    double s = 0.0;
    for (int c = 0; c < m.dim(); ++c) s += std::abs(m(r, c));
    best = std::max(best, s);
  }
  return best;
}

double max_abs_diff(const SquareMatrix& l, const SquareMatrix& r) {
  require_same_dim(l, r);
  double d = 0.0;
  for (std::size_t i = 0; i < l.entries().size(); ++i) {
    d = std::max(d, std::abs(l.entries()[i] - r.entries()[i]));
  }
  return d;
}

double max_abs_entry(const SquareMatrix& m) noexcept {
  double d = 0.0;
  for (double x : m.entries()) d = std::max(d, std::abs(x));
  return d;
}

}  // namespace wdvv
