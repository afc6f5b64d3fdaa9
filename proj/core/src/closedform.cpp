#include "wdvv/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wdvv/error.hpp"
#include "wdvv/random.hpp"

namespace wdvv {

namespace {

bool is_zero(double x) noexcept { return std::abs(x) <= kBranchZeroTolerance; }

double na2b(const PrepotentialParams& p) noexcept { return p.n * p.a + 2.0 * p.b; }
double nbc(const PrepotentialParams& p) noexcept { return p.n * p.b + p.c; }

bool simplest_family(const PrepotentialParams& p, KernelKind kernel) noexcept {
  return p.kernel == kernel && p.alpha_minus == 1.0 && p.alpha_plus == 0.0 && p.eta == 0.0 &&
         !p.gamma;
}

bool family_matches(ConditionId id, const PrepotentialParams& p) noexcept {
  switch (id) {
    case ConditionId::T1Generic:
    case ConditionId::T1SpecialNa2b:
    case ConditionId::T1SpecialNbc:
    case ConditionId::T1DoublyDegenerate:
      return simplest_family(p, KernelKind::Coth);
    case ConditionId::T2TypeA:
      return p.kernel == KernelKind::Coth && p.alpha_minus == 1.0 && p.alpha_plus == 0.0 &&
             p.eta == 1.0 && !p.gamma;
    case ConditionId::T3BCD:
      return p.kernel == KernelKind::Coth && p.alpha_minus == 1.0 && p.alpha_plus == 1.0 &&
             p.a == 0.0 && p.b == 0.0 && p.c == 0.0 && !p.gamma;
    case ConditionId::T4Extended:
      return p.kernel == KernelKind::Coth && p.alpha_minus == 1.0 && p.alpha_plus == 1.0 &&
             p.gamma.has_value();
    case ConditionId::T5FourDim:
      return simplest_family(p, KernelKind::Reciprocal);
  }
  return false;
}

bool guard_holds(ConditionId id, const PrepotentialParams& p) noexcept {
  const bool p0 = is_zero(na2b(p));
  const bool q0 = is_zero(nbc(p));
  switch (id) {
    case ConditionId::T1Generic: return !p0 && !q0;
    case ConditionId::T1SpecialNa2b: return p0 && !q0;
    case ConditionId::T1SpecialNbc: return q0 && !p0;
    case ConditionId::T1DoublyDegenerate: return p0 && q0;
    case ConditionId::T5FourDim: return p.n >= 3;
    default: return true;
  }
}

void require_index(int i, int n, const char* what) {
  if (i < 0 || i >= n) {
    std::ostringstream os;
    os << what << " index " << i << " outside [0, " << n << ")";
    throw Error(ErrorKind::IndexOutOfRange, os.str());
  }
}

void require_simplest(const PrepotentialParams& p) {
  if (!simplest_family(p, KernelKind::Coth) && !simplest_family(p, KernelKind::Reciprocal)) {
    throw Error(ErrorKind::WrongFamily,
                "expected alpha_minus = 1, alpha_plus = 0, eta = 0 and no extra variable");
  }
}

class ViolationTracker {
 public:
  void add(double v) {
    worst_ = std::max(worst_, std::abs(v));
    ++count_;
  }
  double worst() const noexcept { return worst_; }
  long count() const noexcept { return count_; }

 private:
  double worst_ = 0.0;
  long count_ = 0;
};

IdentityResult make_result(std::string id, const ViolationTracker& t) {
  return IdentityResult{.id = std::move(id),
                        .max_violation = t.worst(),
                        .evaluations = t.count(),
                        .reading = {},
                        .rejected_violation = std::nullopt};
}

struct Reading {
  std::string label;
  ViolationTracker tracker;
};

IdentityResult pick_reading(std::string id, std::vector<Reading> readings) {
  auto best = std::min_element(readings.begin(), readings.end(), [](const Reading& l, const Reading& r) {
    return l.tracker.worst() < r.tracker.worst();
  });
  IdentityResult out = make_result(std::move(id), best->tracker);
  out.reading = best->label;
  for (const auto& r : readings) {
    if (&r == &*best) continue;
    if (!out.rejected_violation || r.tracker.worst() < *out.rejected_violation) {
      out.rejected_violation = r.tracker.worst();
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ConditionId id) noexcept {
  switch (id) {
    case ConditionId::T1Generic: return "t1";
    case ConditionId::T1SpecialNa2b: return "t1-na2b";
    case ConditionId::T1SpecialNbc: return "t1-nbc";
    case ConditionId::T1DoublyDegenerate: return "t1-degenerate";
    case ConditionId::T2TypeA: return "t2";
    case ConditionId::T3BCD: return "t3";
    case ConditionId::T4Extended: return "t4";
    case ConditionId::T5FourDim: return "t5";
  }
  return "unknown";
}

std::optional<ConditionId> parse_condition(std::string_view text) noexcept {
  for (auto id : {ConditionId::T1Generic, ConditionId::T1SpecialNa2b, ConditionId::T1SpecialNbc,
                  ConditionId::T1DoublyDegenerate, ConditionId::T2TypeA, ConditionId::T3BCD,
                  ConditionId::T4Extended, ConditionId::T5FourDim}) {
    if (to_string(id) == text) return id;
  }
  return std::nullopt;
}

std::string_view to_string(SimplestBranch branch) noexcept {
  switch (branch) {
    case SimplestBranch::Generic: return "generic";
    case SimplestBranch::SpecialNa2b: return "na+2b=0";
    case SimplestBranch::SpecialNbc: return "nb+c=0";
    case SimplestBranch::DoublyDegenerate: return "doubly-degenerate";
  }
  return "unknown";
}

SimplestBranch simplest_branch(const PrepotentialParams& params) noexcept {
  const bool p0 = is_zero(na2b(params));
  const bool q0 = is_zero(nbc(params));
  if (p0 && q0) return SimplestBranch::DoublyDegenerate;
  if (p0) return SimplestBranch::SpecialNa2b;
  if (q0) return SimplestBranch::SpecialNbc;
  return SimplestBranch::Generic;
}

ConditionId condition_for(SimplestBranch branch) noexcept {
  switch (branch) {
    case SimplestBranch::Generic: return ConditionId::T1Generic;
    case SimplestBranch::SpecialNa2b: return ConditionId::T1SpecialNa2b;
    case SimplestBranch::SpecialNbc: return ConditionId::T1SpecialNbc;
    case SimplestBranch::DoublyDegenerate: return ConditionId::T1DoublyDegenerate;
  }
  return ConditionId::T1Generic;
}

bool condition_applicable(ConditionId id, const PrepotentialParams& params) noexcept {
  return family_matches(id, params) && guard_holds(id, params);
}

double theorem_condition_value(ConditionId id, const PrepotentialParams& params) {
  params.validate();
  if (!family_matches(id, params)) {
    throw Error(ErrorKind::WrongFamily,
                "parameters are outside the family of condition " + std::string(to_string(id)));
  }
  if (!guard_holds(id, params)) {
    throw Error(ErrorKind::BranchGuard,
                "branch guard of condition " + std::string(to_string(id)) + " does not hold");
  }
  const double n = params.n;
  const double a = params.a;
  const double b = params.b;
  const double c = params.c;
  switch (id) {
    case ConditionId::T1Generic:
      return n * b * b * b + 3.0 * b * b * c - a * c * c + 3.0 * n * b + c + n * n * a;
    case ConditionId::T1SpecialNa2b: {
      const double h = n * a / 2.0;
      return 1.0 + h * h - a * c;
    }
    case ConditionId::T1SpecialNbc:
      return (n - 3.0) * (1.0 - b * b);
    case ConditionId::T1DoublyDegenerate:
      return std::numeric_limits<double>::quiet_NaN();
    case ConditionId::T2TypeA: {
      double best = std::numeric_limits<double>::infinity();
      for (double s : {1.0, -1.0}) {
        const double d = std::max({std::abs(a - s * 2.0 / (n + 1.0)), std::abs(b + s),
                                   std::abs(c - s * (n + 1.0))});
        best = std::min(best, d);
      }
      return best;
    }
    case ConditionId::T3BCD:
      return params.eta + 2.0 * (n - 2.0);
    case ConditionId::T4Extended: {
      const double g = *params.gamma;
      return params.eta + 2.0 * (n - 2.0) + g * g / 2.0;
    }
    case ConditionId::T5FourDim:
      return n * b * b * b + 3.0 * b * b * c - a * c * c;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

CommutatorConstants commutator_constants(const PrepotentialParams& params) {
  require_simplest(params);
  const double n = params.n;
  const double a = params.a;
  const double b = params.b;
  const double c = params.c;
  CommutatorConstants k;
  k.kernel = params.kernel;
  if (params.kernel == KernelKind::Coth) {
    k.alpha = b * b - 1.0 + a * c + n * a * b;
    k.beta = n + n * b * b + 2.0 * b * c;
  } else {
    k.alpha = b * b + a * c + n * a * b;
    k.beta = n * b * b + 2.0 * b * c;
  }
  const double p = na2b(params);
  if (is_zero(p)) {
    k.gamma_ratio = std::numeric_limits<double>::quiet_NaN();
    k.delta = std::numeric_limits<double>::quiet_NaN();
  } else {
    k.gamma_ratio = nbc(params) / p;
    k.delta = k.gamma_ratio * k.gamma_ratio;
  }
  return k;
}

SquareMatrix delta_pattern(int i, int m, int n, double edge, double corner) {
  require_index(i, n, "first");
  require_index(m, n, "second");
  SquareMatrix out(n);
  if (i == m) return out;
  for (int x = 0; x < n; ++x) {
    if (x == i || x == m) continue;
    out(i, x) = edge;
    out(x, m) = edge;
    out(m, x) = -edge;
    out(x, i) = -edge;
  }
  out(i, m) = corner;
  out(m, i) = -corner;
  return out;
}

SquareMatrix closedform_commutator(int i, int m, int n, const CommutatorConstants& consts) {
  return delta_pattern(i, m, n, consts.alpha, consts.beta + 2.0 * consts.alpha);
}

SimplestDecomposition simplest_case_decomposition(const ThirdTensor& tensor,
                                                  const PrepotentialParams& params,
                                                  const SamplePoint& point) {
  require_simplest(params);
  if (tensor.dim() != params.n || static_cast<int>(point.size()) != params.n) {
    throw Error(ErrorKind::DimensionMismatch, "tensor, point and parameters disagree on N");
  }
  SimplestDecomposition out{SquareMatrix::ones(params.n) * params.a, {}};
  out.v.reserve(static_cast<std::size_t>(params.n));
  for (int k = 0; k < params.n; ++k) out.v.push_back(tensor.slice(k) - out.a_u);
  return out;
}

SquareMatrix uv_product_closed_form(int m, const PrepotentialParams& params) {
  require_index(m, params.n, "slice");
  SquareMatrix out(params.n, 2.0 * params.b);
  for (int k = 0; k < params.n; ++k) out(k, m) += nbc(params);
  return out;
}

SquareMatrix simplest_case_metric(const PrepotentialParams& params) {
  return SquareMatrix::ones(params.n) * na2b(params) + SquareMatrix::identity(params.n) * nbc(params);
}

std::pair<double, double> b_quadratic_identity(int i, int m, int j, int n_idx,
                                               const PrepotentialParams& params) {
  require_simplest(params);
  const int n = params.n;
  for (int idx : {i, m, j, n_idx}) require_index(idx, n, "metric");
  const double p = na2b(params);
  if (is_zero(p)) throw Error(ErrorKind::BranchGuard, "N a + 2 b vanishes");
  const SquareMatrix b = simplest_case_metric(params);
  const double lhs = b(i, j) * b(m, n_idx) - b(m, j) * b(i, n_idx);
  const double g = nbc(params) / p;
  const double rhs = p * p * delta_pattern(i, m, n, g, g * g + 2.0 * g)(j, n_idx);
  return {lhs, rhs};
}

TypeAClosedForms type_a_closed_forms(TypeAVariant variant, const SamplePoint& point) {
  const int n = point.base_dim();
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) e[static_cast<std::size_t>(k)] = std::exp(2.0 * point[static_cast<std::size_t>(k)]);
  TypeAClosedForms out{SquareMatrix(n), std::vector<double>(e.size()), std::vector<double>(e.size())};
  const bool minus = variant == TypeAVariant::Minus;
  for (int i = 0; i < n; ++i) {
    const double ei = e[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ej = e[static_cast<std::size_t>(j)];
      out.beta_offdiag(i, j) = 2.0 * (minus ? ei : ej) / (ei - ej);
    }
    const auto iu = static_cast<std::size_t>(i);
    if (minus) {
      out.beta_diag[iu] = 2.0 / (1.0 - 1.0 / ei) - 2.0 * (n - 1);
      out.a_weights[iu] = 1.0 - 1.0 / ei;
    } else {
      out.beta_diag[iu] = -2.0 / (1.0 - ei) + 2.0 * (n - 1);
      out.a_weights[iu] = 1.0 - ei;
    }
  }
  return out;
}

std::vector<IdentityResult> identity_suite_type_a(TypeAVariant variant, const SamplePoint& point) {
  const int n = point.base_dim();
  const auto cf = type_a_closed_forms(variant, point);
  const auto& be = cf.beta_offdiag;
  auto A = [&](int k) { return cf.a_weights[static_cast<std::size_t>(k)]; };
  auto bk = [&](int k) { return cf.beta_diag[static_cast<std::size_t>(k)]; };
  auto E = [&](int k) { return std::exp(2.0 * point[static_cast<std::size_t>(k)]); };
  const bool minus = variant == TypeAVariant::Minus;
  const double nn = n;

  ViolationTracker r1, r2, r4, r7;
  Reading r3a{minus ? "4/e^{2a_m}" : "4e^{2a_m}", {}};
  Reading r3b{minus ? "4e^{2a_m}" : "4/e^{2a_m}", {}};
  Reading r5a{minus ? "8-4N" : "4N-8", {}};
  Reading r5b{minus ? "4N-8" : "8-4N", {}};
  Reading r6a{minus ? "4/e^{2a_i}+4/e^{2a_m}" : "4e^{2a_i}+4e^{2a_m}", {}};
  Reading r6b{minus ? "4e^{2a_i}+4e^{2a_m}" : "4/e^{2a_i}+4/e^{2a_m}", {}};

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ei = E(i);
      const double ej = E(j);
      const double rel1 = A(j) * be(i, j) + A(i) * be(j, i);
      r1.add(rel1 - (minus ? 2.0 - 2.0 / ei - 2.0 / ej : -2.0 + 2.0 * ei + 2.0 * ej));
      r2.add(A(i) * be(i, j) + A(j) * be(j, i) - (minus ? 2.0 : -2.0));
      const double rel5 = A(i) * bk(i) * be(i, j) + A(j) * bk(j) * be(j, i);
      r5a.tracker.add(rel5 - (minus ? 8.0 - 4.0 * nn : 4.0 * nn - 8.0));
      r5b.tracker.add(rel5 - (minus ? 4.0 * nn - 8.0 : 8.0 - 4.0 * nn));
      const double rel6 = A(i) * be(i, j) * be(i, j) + A(j) * be(j, i) * be(j, i) -
                          A(j) * be(i, j) * be(i, j) - A(i) * be(j, i) * be(j, i);
      const double mul6 = 4.0 * ei + 4.0 * ej;
      const double div6 = 4.0 / ei + 4.0 / ej;
      r6a.tracker.add(rel6 - (minus ? div6 : mul6));
      r6b.tracker.add(rel6 - (minus ? mul6 : div6));
      const double rel7 = A(j) * bk(j) + A(i) * bk(i);
      r7.add(rel7 - (minus ? 8.0 - 4.0 * nn + (2.0 * nn - 2.0) / ei + (2.0 * nn - 2.0) / ej
                           : 4.0 * nn - 8.0 - (2.0 * nn - 2.0) * ei - (2.0 * nn - 2.0) * ej));
      for (int m = 0; m < n; ++m) {
        if (m == i || m == j) continue;
        const double rel3 = A(i) * be(j, i) * be(i, m) + A(j) * be(i, j) * be(j, m) -
                            A(m) * be(j, m) * be(i, m);
        const double em = E(m);
        r3a.tracker.add(rel3 - (minus ? 4.0 / em : 4.0 * em));
        r3b.tracker.add(rel3 - (minus ? 4.0 * em : 4.0 / em));
        r4.add(A(i) * be(i, j) * be(i, m) + A(m) * be(m, j) * be(m, i) + A(j) * be(j, m) * be(j, i) - 4.0);
      }
    }
  }

  std::vector<IdentityResult> out;
  out.push_back(make_result("1", r1));
  out.push_back(make_result("2", r2));
  out.push_back(pick_reading("3", {r3a, r3b}));
  out.push_back(make_result("4", r4));
  out.push_back(pick_reading("5", {r5a, r5b}));
  out.push_back(pick_reading("6", {r6a, r6b}));
  out.push_back(make_result("7", r7));
  return out;
}

std::vector<IdentityResult> identity_suite_bcd(const SamplePoint& point, double eta) {
  const int n = point.base_dim();
  SquareMatrix be(n);
  std::vector<double> bk(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double xi = point[static_cast<std::size_t>(i)];
    bk[static_cast<std::size_t>(i)] = f_triple_prime(KernelKind::Coth, xi);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double xj = point[static_cast<std::size_t>(j)];
      be(i, j) = f_triple_prime(KernelKind::Coth, xi - xj) + f_triple_prime(KernelKind::Coth, xi + xj);
    }
  }
  std::vector<double> kk(bk.size());
  for (int k = 0; k < n; ++k) {
    double s = eta * bk[static_cast<std::size_t>(k)];
    for (int q = 0; q < n; ++q) {
      if (q != k) s += be(k, q);
    }
    kk[static_cast<std::size_t>(k)] = s;
  }

  ViolationTracker r1, r2, r3, r9;
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < n; ++m) {
      if (i == m) continue;
      const auto iu = static_cast<std::size_t>(i);
      const auto mu = static_cast<std::size_t>(m);
      r3.add(bk[iu] * be(i, m) + bk[mu] * be(m, i) - 2.0);
      double lhs9 = kk[iu] * be(i, m) + kk[mu] * be(m, i);
      for (int k = 0; k < n; ++k) {
        if (k == i || k == m) continue;
        lhs9 += be(k, m) * be(k, i);
        r1.add(be(k, i) * be(i, m) + be(i, k) * be(k, m) - be(k, m) * be(i, m));
        r2.add(be(i, k) * be(i, m) + be(m, k) * be(m, i) + be(k, m) * be(k, i) - 4.0);
      }
      r9.add(lhs9 - (be(i, m) * be(i, m) + be(m, i) * be(m, i) + 2.0 * (2.0 * (n - 2) + eta)));
    }
  }
  return {make_result("1", r1), make_result("2", r2), make_result("3", r3),
          make_result("diagonal-block", r9)};
}

IdentityResult three_term_identity(KernelKind kernel, const SamplePoint& point) {
  const int n = point.base_dim();
  const double target = kernel == KernelKind::Coth ? 1.0 : 0.0;
  auto beta = [&](int i, int j) {
    return f_triple_prime(kernel, point[static_cast<std::size_t>(i)] - point[static_cast<std::size_t>(j)]);
  };
  ViolationTracker t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        t.add(beta(i, j) * beta(i, k) + beta(i, j) * beta(k, j) + beta(i, k) * beta(j, k) - target);
      }
  return make_result(kernel == KernelKind::Coth ? "three-term(coth)" : "three-term(recip)", t);
}

SquareMatrix expanded_diagonal_product(const PrepotentialParams& params, const SamplePoint& point,
                                       std::span<const double> a_weights, int i, int m) {
  const int n = params.n;
  if (static_cast<int>(a_weights.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "one weight per base coordinate expected");
  }
  require_index(i, n, "first");
  require_index(m, n, "second");
  if (std::any_of(a_weights.begin(), a_weights.end(), [](double x) { return x == 0.0; })) {
    throw Error(ErrorKind::ZeroWeight, "diagonal weight A_k is zero");
  }
  const BetaTable t = beta_table(params, point);
  const auto& be = t.beta_offdiag;
  auto A = [&](int k) { return a_weights[static_cast<std::size_t>(k)]; };
  auto K = [&](int k) { return t.kk[static_cast<std::size_t>(k)]; };
  auto d = [](int x, int y) { return x == y ? 1.0 : 0.0; };
  const double a = params.a;

  double sum_a = 0.0;
  for (int k = 0; k < n; ++k) sum_a += A(k);
  auto col = [&](int c) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += A(k) * be(k, c);
    return s;
  };
  const double col_i = col(i);
  const double col_m = col(m);
  double cross = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k != i && k != m) cross += A(k) * be(k, m) * be(k, i);
  }

  SquareMatrix out(n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      double v = d(i, m) * (A(i) * be(j, i) * be(l, m) + d(i, j) * be(l, m) * A(i) * K(i) +
                            d(i, l) * be(j, i) * A(i) * K(i) + d(i, j) * d(l, m) * A(i) * K(i) * K(m));
      v += d(j, l) * (1 - d(l, m)) * A(j) * be(i, j) * be(m, j);
      v += d(j, l) * d(l, m) * A(m) * K(l) * be(i, m);
      v += d(i, j) * d(i, l) * A(i) * K(l) * be(m, i);
      v += d(i, l) * (1 - d(j, m)) * A(i) * be(j, i) * be(m, i);
      v += d(l, m) * (1 - d(i, j)) *
           (A(i) * be(j, i) * be(i, m) + A(j) * be(i, j) * be(j, m) + a * A(m) * K(m) + a * col_m);
      v += d(j, m) * (1 - d(i, l)) * A(j) * be(i, j) * be(l, j);
      v += d(i, j) * (1 - d(l, m)) *
           (A(l) * be(l, i) * be(m, l) + A(m) * be(m, i) * be(l, m) + a * A(i) * K(i) + a * col_i);
      v += d(i, j) * d(l, m) *
           (A(i) * K(i) * be(i, m) + A(m) * K(m) * be(m, i) + cross + a * A(m) * K(m) + a * col_m +
            a * A(i) * K(i) + a * col_i);
      v += d(j, m) * d(i, l) * (A(m) * be(i, m) * be(i, m) + A(i) * be(m, i) * be(m, i));
      v += a * a * sum_a + a * (A(j) * be(i, j) + A(i) * be(j, i)) + a * (A(m) * be(l, m) + A(l) * be(m, l));
      out(j, l) = v;
    }
  }
  return out;
}

std::vector<double> diagonal_inverse_weights(const SquareMatrix& metric, double tol) {
  const int n = metric.dim();
  const double scale = max_abs_entry(metric);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k != l && std::abs(metric(k, l)) > tol * scale) {
        throw Error(ErrorKind::InvalidArgument, "metric is not diagonal");
      }
    }
    if (metric(k, k) == 0.0) throw Error(ErrorKind::ZeroWeight, "zero diagonal entry in metric");
    out[static_cast<std::size_t>(k)] = 1.0 / metric(k, k);
  }
  return out;
}

std::string ExoticGrouping::describe() const {
  std::string s = scalar_inside ? "prod_{k!=j}((2-a(N-1))e^{2a_k})" : "(2-a(N-1))prod_{k!=j}e^{2a_k}";
  s += inner_skips_j ? " + a sum_{k!=j} prod_{i!=k,j} e^{2a_i}" : " + a sum_{k!=j} prod_{i!=k} e^{2a_i}";
  return s;
}

std::vector<double> exotic_weights(int b_sign, const PrepotentialParams& params,
                                   const SamplePoint& point, ExoticGrouping grouping) {
  const int n = params.n;
  if (static_cast<int>(point.size()) < n) {
    throw Error(ErrorKind::DimensionMismatch, "point shorter than N");
  }
  const double a = params.a;
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) e[static_cast<std::size_t>(k)] = std::exp(2.0 * point[static_cast<std::size_t>(k)]);
  std::vector<double> h(e.size());
  if (b_sign == 1) {
    double total = 0.0;
    for (double x : e) total += x;
    for (int j = 0; j < n; ++j) {
      const double ej = e[static_cast<std::size_t>(j)];
      h[static_cast<std::size_t>(j)] = -(2.0 + a * (n - 1)) * ej + a * (total - ej);
    }
    return h;
  }
  if (b_sign != -1) throw Error(ErrorKind::InvalidArgument, "b_sign must be +1 or -1");
  const double s = 2.0 - a * (n - 1);
  for (int j = 0; j < n; ++j) {
    double first = grouping.scalar_inside ? 1.0 : s;
    for (int k = 0; k < n; ++k) {
      if (k != j) first *= grouping.scalar_inside ? s * e[static_cast<std::size_t>(k)] : e[static_cast<std::size_t>(k)];
    }
    double second = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      double prod = 1.0;
      for (int i = 0; i < n; ++i) {
        if (i == k || (grouping.inner_skips_j && i == j)) continue;
        prod *= e[static_cast<std::size_t>(i)];
      }
      second += prod;
    }
    h[static_cast<std::size_t>(j)] = first + a * second;
  }
  return h;
}

double identity_deviation(const SquareMatrix& metric) {
  const int n = metric.dim();
  const double scale = max_abs_entry(metric);
  if (scale == 0.0) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const double target = k == l ? metric(0, 0) : 0.0;
      worst = std::max(worst, std::abs(metric(k, l) - target));
    }
  return worst / scale;
}

ExoticMetricCheck exotic_metric_check(int b_sign, const PrepotentialParams& params,
                                      const SamplePoint& point) {
  const ThirdTensor t = third_tensor(params, point);
  auto deviation_for = [&](ExoticGrouping g) {
    return identity_deviation(combine_slices(t, exotic_weights(b_sign, params, point, g)));
  };
  ExoticMetricCheck out;
  out.b_sign = b_sign;
  if (b_sign == 1) {
    out.deviation = deviation_for({});
  } else {
    std::vector<std::pair<ExoticGrouping, double>> all;
    for (const auto& g : kExoticGroupings) all.emplace_back(g, deviation_for(g));
    auto best = std::min_element(all.begin(), all.end(),
                                 [](const auto& l, const auto& r) { return l.second < r.second; });
    out.grouping = best->first;
    out.deviation = best->second;
    for (const auto& entry : all) {
      if (!(entry.first == out.grouping)) out.rejected.push_back(entry);
    }
  }
  out.identity_multiple = out.deviation <= 1e-10;
  return out;
}

SpecialCaseReport special_case_driver(const PrepotentialParams& params, int points,
                                      std::uint64_t seed) {
  if (!simplest_family(params, KernelKind::Coth)) {
    throw Error(ErrorKind::WrongFamily, "special-case driver handles the coth simplest case only");
  }
  if (points < 1) throw Error(ErrorKind::InvalidArgument, "need at least one sample point");
  SpecialCaseReport out;
  out.branch = simplest_branch(params);
  out.condition = condition_for(out.branch);
  out.condition_value = theorem_condition_value(out.condition, params);
  if (out.branch != SimplestBranch::DoublyDegenerate) {
    out.predicted_pass = std::abs(out.condition_value) <= kConditionTolerance;
  }

  const MetricSpec specs[] = {metric::SumAll{}};
  double comm = 0.0;
  for (int p = 0; p < points; ++p) {
    const SamplePoint pt = make_sample_point(params, kDefaultMargin, mix_seed(seed, static_cast<std::uint64_t>(p)));
    const ThirdTensor t = third_tensor(params, pt);
    out.checks.push_back(check_wdvv(t, pt, specs));
    if (out.branch == SimplestBranch::SpecialNa2b) {
      const auto slices = t.slices();
      for (std::size_t i = 0; i < slices.size(); ++i)
        for (std::size_t m = i + 1; m < slices.size(); ++m)
          comm = std::max(comm, inf_norm(commutator(slices[i], slices[m])));
    }
    if (out.branch == SimplestBranch::SpecialNbc && p == 0 && std::abs(std::abs(params.b) - 1.0) <= kBranchZeroTolerance) {
      out.exotic = exotic_metric_check(params.b > 0 ? 1 : -1, params, pt);
    }
  }
  if (out.branch == SimplestBranch::SpecialNa2b) out.commutator_norm = comm;

  if (!out.predicted_pass) {
    out.agrees = std::all_of(out.checks.begin(), out.checks.end(),
                             [](const CheckReport& r) { return r.verdict == Verdict::Degenerate; });
  } else {
    const Verdict want = *out.predicted_pass ? Verdict::Pass : Verdict::Fail;
    out.agrees = std::all_of(out.checks.begin(), out.checks.end(),
                             [&](const CheckReport& r) { return r.verdict == want; });
  }
  return out;
}

}  // namespace wdvv
