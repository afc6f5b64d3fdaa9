#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wdvv {

/// Small dense row-major square matrix. Dimensions here never exceed ~13, so
/// everything is plain loops over a contiguous buffer.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int dim, double fill = 0.0);
  SquareMatrix(int dim, std::vector<double> entries);

  static SquareMatrix identity(int dim);
  static SquareMatrix ones(int dim);

  int dim() const noexcept { return dim_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r * dim_ + c)]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r * dim_ + c)]; }
  std::span<const double> entries() const noexcept { return data_; }

  SquareMatrix transposed() const;

  SquareMatrix& operator+=(const SquareMatrix& o);
  SquareMatrix& operator-=(const SquareMatrix& o);
  SquareMatrix& operator*=(double s);

  friend SquareMatrix operator+(SquareMatrix l, const SquareMatrix& r) { return l += r; }
  friend SquareMatrix operator-(SquareMatrix l, const SquareMatrix& r) { return l -= r; }
  friend SquareMatrix operator*(SquareMatrix m, double s) { return m *= s; }
  friend SquareMatrix operator*(double s, SquareMatrix m) { return m *= s; }
  friend SquareMatrix operator*(const SquareMatrix& l, const SquareMatrix& r);

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Throws Error(SingularMetric) when a pivot falls below
  /// 1e-12 * max(||m||_inf, reference_norm).
  explicit LuFactorization(const SquareMatrix& m, double reference_norm = 0.0);

  SquareMatrix solve(const SquareMatrix& rhs) const;
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  SquareMatrix lu_;
  std::vector<int> perm_;
};

inline constexpr double kSingularPivotRatio = 1e-12;

/// X with b_matrix * X = rhs.
SquareMatrix solve(const SquareMatrix& b_matrix, const SquareMatrix& rhs);
SquareMatrix inverse(const SquareMatrix& m);

/// p*q - q*p.
SquareMatrix commutator(const SquareMatrix& p, const SquareMatrix& q);

/// Maximum absolute row sum.
double inf_norm(const SquareMatrix& m) noexcept;

/// Largest entrywise |l - r|.
double max_abs_diff(const SquareMatrix& l, const SquareMatrix& r);
double max_abs_entry(const SquareMatrix& m) noexcept;

}  // namespace wdvv
