#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wdvv/checker.hpp"
#include "wdvv/kernel.hpp"
#include "wdvv/matops.hpp"
#include "wdvv/model.hpp"

namespace wdvv {

enum class ConditionId {
  T1Generic,           ///< N b^3 + 3 b^2 c - a c^2 + 3 N b + c + N^2 a
  T1SpecialNa2b,       ///< 1 + (N a / 2)^2 - a c, on N a + 2 b = 0
  T1SpecialNbc,        ///< (N - 3)(1 - b^2), on N b + c = 0
  T1DoublyDegenerate,  ///< both N a + 2 b and N b + c vanish
  T2TypeA,             ///< distance of (a, b, c) to +-(2/(N+1), -1, N+1)
  T3BCD,               ///< eta + 2(N - 2)
  T4Extended,          ///< eta + 2(N - 2) + gamma^2 / 2
  T5FourDim,           ///< N b^3 + 3 b^2 c - a c^2, reciprocal kernel, N >= 3
};

std::string_view to_string(ConditionId id) noexcept;
std::optional<ConditionId> parse_condition(std::string_view text) noexcept;

/// |x| <= kBranchZeroTolerance counts as zero in every branch guard.
inline constexpr double kBranchZeroTolerance = 1e-12;

/// Which of the four simplest-case branches (N a + 2 b, N b + c) selects.
enum class SimplestBranch { Generic, SpecialNa2b, SpecialNbc, DoublyDegenerate };
std::string_view to_string(SimplestBranch branch) noexcept;
SimplestBranch simplest_branch(const PrepotentialParams& params) noexcept;
ConditionId condition_for(SimplestBranch branch) noexcept;

/// True when `params` belong to the family of `id` and satisfy its branch guard.
bool condition_applicable(ConditionId id, const PrepotentialParams& params) noexcept;

/// Left-hand side of the theorem condition; zero iff WDVV is predicted to hold.
///
/// T1DoublyDegenerate has no verdict and returns a quiet NaN. Throws
/// Error(WrongFamily) when the parameters are outside the family and
/// Error(BranchGuard) when a branch guard fails (including N = 2 for T5FourDim,
/// where the single-relation reduction is not available).
double theorem_condition_value(ConditionId id, const PrepotentialParams& params);

/// Constants of the commutator of two slices in the simplest families
/// (alpha_minus = 1, alpha_plus = 0, eta = 0):
///
///   [F_i, F_m]_{jn} = d_ij (1-d_mn)(1-d_in) alpha + d_mn (1-d_jm)(1-d_ij) alpha
///                   - d_jm (1-d_mn)(1-d_in) alpha - d_in (1-d_jm)(1-d_ij) alpha
///                   + (d_ij d_mn - d_jm d_in)(beta + 2 alpha)
///
/// Coth: alpha = b^2 - 1 + a c + N a b, beta = N + N b^2 + 2 b c.
/// Reciprocal: alpha = b^2 + a c + N a b, beta = N b^2 + 2 b c.
/// gamma_ratio = (N b + c)/(N a + 2 b) and delta = gamma_ratio^2 (NaN when
/// N a + 2 b = 0).
struct CommutatorConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_ratio = 0.0;
  double delta = 0.0;
  KernelKind kernel = KernelKind::Coth;
};

CommutatorConstants commutator_constants(const PrepotentialParams& params);

/// The six-term delta pattern above with `edge` on the (i, x) / (x, m) entries
/// and `corner` on (i, m); indices are 0-based, i = m gives the zero matrix.
SquareMatrix delta_pattern(int i, int m, int n, double edge, double corner);

SquareMatrix closedform_commutator(int i, int m, int n, const CommutatorConstants& consts);

/// F_k = a U + V_k with U the all-ones matrix.
struct SimplestDecomposition {
  SquareMatrix a_u;
  std::vector<SquareMatrix> v;
};

SimplestDecomposition simplest_case_decomposition(const ThirdTensor& tensor,
                                                  const PrepotentialParams& params,
                                                  const SamplePoint& point);

/// (U V_m)_{kl} = 2 b + d_lm (N b + c).
SquareMatrix uv_product_closed_form(int m, const PrepotentialParams& params);

/// B = (N a + 2 b) U + (N b + c) I, the sum of all slices of a simplest-case tensor.
SquareMatrix simplest_case_metric(const PrepotentialParams& params);

/// lhs = B_ij B_mn - B_mj B_in from simplest_case_metric; rhs =
/// (N a + 2 b)^2 * delta_pattern(i, m, n, gamma, delta + 2 gamma)_{jn}.
/// Throws Error(BranchGuard) when N a + 2 b = 0.
std::pair<double, double> b_quadratic_identity(int i, int m, int j, int n_idx,
                                               const PrepotentialParams& params);

struct IdentityResult {
  std::string id;
  double max_violation = 0.0;
  long evaluations = 0;
  /// For relations whose right-hand side admits several readings: the one
  /// that holds, and the violation of the best rejected alternative.
  std::string reading;
  std::optional<double> rejected_violation;
};

/// Closed forms of beta_ij, beta_k and A_k for the A-type families.
///
/// Minus (a = -2/(N+1)): beta_ij = 2 e^{2a_i}/(e^{2a_i} - e^{2a_j}),
/// beta_k = 2/(1 - e^{-2a_k}) - 2(N-1), A_k = 1 - e^{-2a_k}.
/// Plus (a = 2/(N+1)): beta_ij = 2 e^{2a_j}/(e^{2a_i} - e^{2a_j}),
/// beta_k = -2/(1 - e^{2a_k}) + 2(N-1), A_k = 1 - e^{2a_k}.
struct TypeAClosedForms {
  SquareMatrix beta_offdiag;
  std::vector<double> beta_diag;
  std::vector<double> a_weights;
};

TypeAClosedForms type_a_closed_forms(TypeAVariant variant, const SamplePoint& point);

/// Relations 1-7 among the A-type closed forms over all index pairs and triples.
std::vector<IdentityResult> identity_suite_type_a(TypeAVariant variant, const SamplePoint& point);

/// Relations 1-3 among the BCD closed forms plus the reduction of the diagonal block,
/// with beta_k = coth(a_k) and K_k = sum_{q != k} beta_kq + eta coth(a_k).
std::vector<IdentityResult> identity_suite_bcd(const SamplePoint& point, double eta);

/// beta_ij beta_ik + beta_ij beta_kj + beta_ik beta_jk over distinct triples with
/// beta_ij = f'''(a_i - a_j); equals 1 for coth and 0 for 1/x.
IdentityResult three_term_identity(KernelKind kernel, const SamplePoint& point);

/// (F_i diag(A) F_m)_{jl} assembled from the ten-line delta expansion in terms
/// of a, beta_ij and K_k; the last line is added to every entry. Throws
/// Error(ZeroWeight) when some A_k is zero.
SquareMatrix expanded_diagonal_product(const PrepotentialParams& params, const SamplePoint& point,
                                       std::span<const double> a_weights, int i, int m);

/// A_k = 1/B_kk for a diagonal metric B. Throws Error(ZeroWeight) on a zero
/// diagonal entry and Error(InvalidArgument) when B is not diagonal to
/// `tol` relative to its largest entry.
std::vector<double> diagonal_inverse_weights(const SquareMatrix& metric, double tol = 1e-10);

/// Groupings of the b = -1 weight
///   prod_{k != j} (2 - a(N-1)) e^{2a_k} + a sum_{k != j} prod_{i != k} e^{2a_i}:
/// whether the scalar sits inside the product, and whether the inner product
/// also skips i = j.
struct ExoticGrouping {
  bool scalar_inside = false;
  bool inner_skips_j = false;

  std::string describe() const;
  friend bool operator==(const ExoticGrouping&, const ExoticGrouping&) = default;
};

inline constexpr ExoticGrouping kExoticGroupings[] = {
    {false, false}, {true, false}, {false, true}, {true, true}};

/// Weights h_j making B = sum_j h_j F_j a multiple of the identity on the
/// N b + c = 0 branch. b_sign = +1:
///   h_j = -(2 + a(N-1)) e^{2a_j} + a sum_{i != j} e^{2a_i};
/// b_sign = -1 uses `grouping`. Throws Error(InvalidArgument) for other signs.
std::vector<double> exotic_weights(int b_sign, const PrepotentialParams& params,
                                   const SamplePoint& point, ExoticGrouping grouping = {});

/// Largest off-diagonal or diagonal-spread entry of B, relative to max |B_kl|.
double identity_deviation(const SquareMatrix& metric);

struct ExoticMetricCheck {
  int b_sign = 1;
  ExoticGrouping grouping;
  double deviation = 0.0;
  bool identity_multiple = false;
  std::vector<std::pair<ExoticGrouping, double>> rejected;
};

/// Evaluates every grouping (only the fixed formula for b_sign = +1) and keeps
/// the one with the smallest deviation.
ExoticMetricCheck exotic_metric_check(int b_sign, const PrepotentialParams& params,
                                      const SamplePoint& point);

struct SpecialCaseReport {
  SimplestBranch branch = SimplestBranch::Generic;
  ConditionId condition = ConditionId::T1Generic;
  double condition_value = 0.0;
  /// Unset for the doubly degenerate branch.
  std::optional<bool> predicted_pass;
  /// max_{i<m} ||[F_i, F_m]||_inf over the checked points (N a + 2 b = 0 branch).
  std::optional<double> commutator_norm;
  std::optional<ExoticMetricCheck> exotic;
  std::vector<CheckReport> checks;
  bool agrees = false;
};

inline constexpr double kConditionTolerance = 1e-9;

/// Classifies a simplest-case parameter set, evaluates the matching condition
/// and confirms it with the residual oracle at `points` sample points.
SpecialCaseReport special_case_driver(const PrepotentialParams& params, int points = 3,
                                      std::uint64_t seed = 0);

}  // namespace wdvv
