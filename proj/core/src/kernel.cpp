#include "wdvv/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdvv/error.hpp"

namespace wdvv {

namespace {

constexpr int kMaxSeriesTerms = 300;

void require_point_fits(const PrepotentialParams& params, std::size_t size) {
  if (static_cast<int>(size) != params.dimension()) {
    std::ostringstream os;
    os << "point has " << size << " coordinates, family needs " << params.dimension();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

// Kernel terms with a zero coefficient are skipped.
double weighted_kernel(KernelKind kernel, double coefficient, double x) {
  return coefficient == 0.0 ? 0.0 : coefficient * f_triple_prime(kernel, x);
}

double weighted_f(KernelKind kernel, double coefficient, double x) {
  return coefficient == 0.0 ? 0.0 : coefficient * f_value(kernel, x);
}

BetaTable beta_table_at(const PrepotentialParams& params, std::span<const double> x) {
  const int n = params.n;
  BetaTable t{SquareMatrix(n), std::vector<double>(static_cast<std::size_t>(n)),
              std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double xi = x[static_cast<std::size_t>(i)];
      const double xj = x[static_cast<std::size_t>(j)];
      t.beta_offdiag(i, j) = weighted_kernel(params.kernel, params.alpha_minus, xi - xj) +
                             weighted_kernel(params.kernel, params.alpha_plus, xi + xj) + params.b;
    }
  }
  for (int k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    t.beta_diag[ku] = weighted_kernel(params.kernel, params.eta, x[ku]) + (4 - n) * params.b + params.c;
    double s = t.beta_diag[ku];
    for (int q = 0; q < n; ++q) {
      if (q != k) s += t.beta_offdiag(k, q);
    }
    t.kk[ku] = s;
  }
  return t;
}

ThirdTensor assemble(const PrepotentialParams& params, const BetaTable& t) {
  const int n = params.n;
  ThirdTensor f(params.dimension());
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      for (int m = 0; m < n; ++m) {
        double v = params.a;
        if (k == l && l == m) v += t.kk[static_cast<std::size_t>(k)];
        if (k == l) v += t.beta_offdiag(m, k);
        if (k == m) v += t.beta_offdiag(l, k);
        if (l == m) v += t.beta_offdiag(k, l);
        f(k, l, m) = v;
      }
    }
  }
  if (params.gamma) {
    const double g = *params.gamma;
    for (int i = 0; i < n; ++i) {
      f(n, i, i) = g;
      f(i, n, i) = g;
      f(i, i, n) = g;
    }
    f(n, n, n) = g;
  }
  return f;
}

}  // namespace

double f_triple_prime(KernelKind kernel, double x) {
  if (x == 0.0) throw Error(ErrorKind::KernelSingularity, "f''' evaluated at 0");
  if (kernel == KernelKind::Reciprocal) return 1.0 / x;
  // coth is odd; evaluated on |x| through expm1.
  const double e = std::expm1(-2.0 * std::abs(x));
  const double v = -(2.0 + e) / e;
  return x > 0 ? v : -v;
}

double f_value(KernelKind kernel, double x, double tol) {
  if (kernel == KernelKind::Reciprocal) {
    if (x == 0.0) throw Error(ErrorKind::KernelSingularity, "f evaluated at 0");
    return x * x * (2.0 * std::log(std::abs(x)) - 3.0) / 4.0;
  }
  if (!(x > 0.0)) {
    throw Error(ErrorKind::SeriesDomain, "trilogarithm series needs x > 0");
  }
  const double q = std::exp(-2.0 * x);
  double power = q;
  double li3 = 0.0;
  for (int k = 1; k <= kMaxSeriesTerms; ++k) {
    const double kd = k;
    const double term = power / (kd * kd * kd);
    li3 += term;
    power *= q;
    const double next = power / ((kd + 1) * (kd + 1) * (kd + 1));
    if (next < tol) break;
  }
  return x * x * x / 6.0 - li3 / 4.0;
}

SquareMatrix ThirdTensor::slice(int i) const {
  if (i < 0 || i >= dim_) throw Error(ErrorKind::IndexOutOfRange, "slice index");
  SquareMatrix s(dim_);
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < dim_; ++k) s(j, k) = (*this)(i, j, k);
  return s;
}

std::vector<SquareMatrix> ThirdTensor::slices() const {
  std::vector<SquareMatrix> out;
  out.reserve(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) out.push_back(slice(i));
  return out;
}

double ThirdTensor::max_abs_entry() const noexcept {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const ThirdTensor& l, const ThirdTensor& r) {
  if (l.dim() != r.dim()) throw Error(ErrorKind::DimensionMismatch, "tensor dimensions differ");
  double d = 0.0;
  for (std::size_t i = 0; i < l.entries().size(); ++i) {
    d = std::max(d, std::abs(l.entries()[i] - r.entries()[i]));
  }
  return d;
}

BetaTable beta_table(const PrepotentialParams& params, const SamplePoint& point) {
  params.validate();
  require_point_fits(params, point.size());
  return beta_table_at(params, point.coords());
}

ThirdTensor third_tensor_at(const PrepotentialParams& params, std::span<const double> coords) {
  params.validate();
  require_point_fits(params, coords.size());
  return assemble(params, beta_table_at(params, coords));
}

ThirdTensor third_tensor(const PrepotentialParams& params, const SamplePoint& point) {
  if (point.base_dim() != params.n) {
    throw Error(ErrorKind::DimensionMismatch, "point base dimension differs from n");
  }
  return third_tensor_at(params, point.coords());
}

double prepotential_value(const PrepotentialParams& params, std::span<const double> coords) {
  params.validate();
  require_point_fits(params, coords.size());
  const int n = params.n;
  const auto x = [&](int i) { return coords[static_cast<std::size_t>(i)]; };
  double v = 0.0;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      v += weighted_f(params.kernel, params.alpha_minus, x(i) - x(j));
      v += weighted_f(params.kernel, params.alpha_plus, x(i) + x(j));
    }
    v += weighted_f(params.kernel, params.eta, x(i));
    s1 += x(i);
    s2 += x(i) * x(i);
    s3 += x(i) * x(i) * x(i);
  }
  v += params.a / 6.0 * s1 * s1 * s1 + params.b / 2.0 * s1 * s2 + params.c / 6.0 * s3;
  if (params.gamma) {
    const double y = x(n);
    v += *params.gamma / 6.0 * (y * y * y + 3.0 * y * s2);
  }
  return v;
}

namespace {

// Composed central differences, O(h^2).
ThirdTensor central_third_differences(const PrepotentialParams& params,
                                      std::span<const double> coords, double h) {
  const int d = params.dimension();
  ThirdTensor out(d);
  std::vector<double> y(coords.begin(), coords.end());
  constexpr std::array<double, 2> signs{1.0, -1.0};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (double si : signs) {
          for (double sj : signs) {
            for (double sk : signs) {
              std::copy(coords.begin(), coords.end(), y.begin());
              y[static_cast<std::size_t>(i)] += si * h;
              y[static_cast<std::size_t>(j)] += sj * h;
              y[static_cast<std::size_t>(k)] += sk * h;
              acc += si * sj * sk * prepotential_value(params, y);
            }
          }
        }
        out(i, j, k) = acc / (8.0 * h * h * h);
      }
    }
  }
  return out;
}

double active_singular_distance(const PrepotentialParams& params, std::span<const double> coords) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < params.n; ++i) {
    if (params.eta != 0.0) d = std::min(d, std::abs(coords[i]));
    for (int j = i + 1; j < params.n; ++j) {
      if (params.alpha_minus != 0.0) d = std::min(d, std::abs(coords[i] - coords[j]));
      if (params.alpha_plus != 0.0) d = std::min(d, std::abs(coords[i] + coords[j]));
    }
  }
  return d;
}

ThirdTensor combine(const ThirdTensor& fine, const ThirdTensor& coarse, double factor) {
  ThirdTensor out(fine.dim());
  const int d = fine.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        out(i, j, k) = (factor * fine(i, j, k) - coarse(i, j, k)) / (factor - 1.0);
  return out;
}

}  // namespace

ThirdTensor finite_difference_tensor(const PrepotentialParams& params, const SamplePoint& point,
                                     double step) {
  params.validate();
  require_point_fits(params, point.size());
  if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  if (active_singular_distance(params, point.coords()) - 3.0 * step < point.margin() / 2.0) {
    std::ostringstream os;
    os << "step " << step << " brings the stencil within margin/2 of a singular locus";
    throw Error(ErrorKind::StencilUnsafe, os.str());
  }
  if (params.kernel == KernelKind::Coth && !point.dominant()) {
    throw Error(ErrorKind::StencilUnsafe, "full-F evaluation needs the dominant chamber");
  }
  const auto t1 = central_third_differences(params, point.coords(), step);
  const auto t2 = central_third_differences(params, point.coords(), step / 2);
  const auto t4 = central_third_differences(params, point.coords(), step / 4);
  const auto r12 = combine(t2, t1, 4.0);
  const auto r24 = combine(t4, t2, 4.0);
  return combine(r24, r12, 16.0);
}

LinearChange LinearChange::type_a(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  SquareMatrix m(n + 1);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    m(i, n) = -1.0;
  }
  for (int j = 0; j <= n; ++j) m(n, j) = 1.0;
  return LinearChange{m};
}

SquareMatrix LinearChange::inverse() const { return wdvv::inverse(matrix); }

PrepotentialParams type_a_parent_params(int n) {
  PrepotentialParams p;
  p.n = n + 1;
  p.alpha_minus = 1.0;
  // (n+1)/2 * e_3(x) = a/6 S^3 + b/2 S Q + c/6 P with these coefficients.
  p.a = (n + 1) / 2.0;
  p.b = -(n + 1) / 2.0;
  p.c = n + 1.0;
  return p;
}

ThirdTensor reduce_type_a(int n, const SamplePoint& point) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
  if (static_cast<int>(point.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "reduced point must have n coordinates");
  }
  const auto change = LinearChange::type_a(n);
  const SquareMatrix jac = change.inverse();  // dx_i / da_j

  std::vector<double> a(point.coords().begin(), point.coords().end());
  a.push_back(0.0);
  std::vector<double> x(static_cast<std::size_t>(n + 1), 0.0);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) x[static_cast<std::size_t>(i)] += jac(i, j) * a[static_cast<std::size_t>(j)];

  const ThirdTensor parent = third_tensor_at(type_a_parent_params(n), x);
  const int d = n + 1;

  // Contract one index at a time: T1_{a,j,k} = sum_i J_ia T_ijk, etc.
  ThirdTensor t1(d), t2(d), t3(d);
  for (int p = 0; p < d; ++p)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += jac(i, p) * parent(i, j, k);
        t1(p, j, k) = s;
      }
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += jac(j, q) * t1(p, j, k);
        t2(p, q, k) = s;
      }
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int r = 0; r < d; ++r) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += jac(k, r) * t2(p, q, k);
        t3(p, q, r) = s;
      }

  ThirdTensor out(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r) out(p, q, r) = t3(p, q, r);
  return out;
}

}  // namespace wdvv
