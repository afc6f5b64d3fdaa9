#pragma once

#include <span>
#include <vector>

#include "wdvv/matops.hpp"
#include "wdvv/model.hpp"

namespace wdvv {

/// coth(x) or 1/x. Throws Error(KernelSingularity) at x = 0.
double f_triple_prime(KernelKind kernel, double x);

/// The basis function itself.
///
/// Coth: f(x) = x^3/6 - Li_3(e^{-2x})/4, with the trilogarithm summed until the
/// next term drops below `tol` (at most 300 terms); requires x > 0.
/// Reciprocal: f(x) = x^2 (2 ln|x| - 3)/4, i.e. 1/x integrated three times with
/// all integration constants set to zero.
double f_value(KernelKind kernel, double x, double tol = 1e-18);

/// beta_ij, beta_k and K_k = sum_{q != k} beta_kq + beta_k for the first n
/// coordinates of a point.
struct BetaTable {
  SquareMatrix beta_offdiag;
  std::vector<double> beta_diag;
  std::vector<double> kk;

  int n() const noexcept { return beta_offdiag.dim(); }
};

BetaTable beta_table(const PrepotentialParams& params, const SamplePoint& point);

/// Dense rank-3 array of third derivatives F_klm.
class ThirdTensor {
 public:
  ThirdTensor() = default;
  explicit ThirdTensor(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim)) {}

  int dim() const noexcept { return dim_; }
  double& operator()(int k, int l, int m) { return data_[index(k, l, m)]; }
  double operator()(int k, int l, int m) const { return data_[index(k, l, m)]; }
  std::span<const double> entries() const noexcept { return data_; }

  /// (F_i)_{jk} = F_ijk.
  SquareMatrix slice(int i) const;
  std::vector<SquareMatrix> slices() const;

  double max_abs_entry() const noexcept;

 private:
  std::size_t index(int k, int l, int m) const noexcept {
    return static_cast<std::size_t>((k * dim_ + l) * dim_ + m);
  }

  int dim_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const ThirdTensor& l, const ThirdTensor& r);

/// F_klm = a + d_kl d_lm K_k + d_kl beta_mk + d_km beta_lk + d_lm beta_kl, plus
/// the gamma block (F_{n+1,i,j} = gamma d_ij, F_{n+1,n+1,n+1} = gamma).
ThirdTensor third_tensor(const PrepotentialParams& params, const SamplePoint& point);

/// Same assembly on raw coordinates; only checks that every kernel argument
/// with a nonzero coefficient is nonzero.
ThirdTensor third_tensor_at(const PrepotentialParams& params, std::span<const double> coords);

/// Full prepotential value F(coords). Coth kernels need the dominant chamber.
double prepotential_value(const PrepotentialParams& params, std::span<const double> coords);

inline constexpr double kDefaultFdStep = 1e-2;

/// Third derivatives of prepotential_value by composed central differences.
///
/// Each direction uses D f = (f(x+h) - f(x-h)) / 2h, so pure third
/// derivatives see the 4-point stencil (f(x+3h) - 3f(x+h) + 3f(x-h) - f(x-3h)) / 8h^3.
/// The O(h^2) estimates at h, h/2, h/4 are combined by two Richardson steps,
/// leaving an O(h^6) error.
///
/// Throws Error(StencilUnsafe) when some stencil point would come closer than
/// margin/2 to the singular locus of a kernel term with a nonzero coefficient.
ThirdTensor finite_difference_tensor(const PrepotentialParams& params, const SamplePoint& point,
                                     double step = kDefaultFdStep);

/// Coordinate change of the A-type reduction: a_i = x_i - x_{n+1} for i <= n,
/// a_{n+1} = x_1 + ... + x_{n+1}.
struct LinearChange {
  SquareMatrix matrix;  ///< maps x to a

  static LinearChange type_a(int n);
  SquareMatrix inverse() const;
};

/// Third derivatives of the SU(n+1) prepotential obtained by pulling the
/// (n+1)-variable function  sum_{i<j} f(x_i - x_j) + (n+1)/2 sum_{i<j<k} x_i x_j x_k
/// back through LinearChange at a_{n+1} = 0, restricted to the first n indices.
ThirdTensor reduce_type_a(int n, const SamplePoint& point);

/// Parameters of the (n+1)-variable A-type function in the x coordinates.
PrepotentialParams type_a_parent_params(int n);

}  // namespace wdvv
