#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wdvv/kernel.hpp"
#include "wdvv/matops.hpp"
#include "wdvv/model.hpp"

namespace wdvv {

/// Sign of the cubic correction in the A-type family: Plus is
/// (a, b, c) = (2/(n+1), -1, n+1), Minus its negative.
enum class TypeAVariant { Plus, Minus };

namespace metric {
/// B = sum_j F_j.
struct SumAll {
  friend bool operator==(const SumAll&, const SumAll&) = default;
};
/// h_j = e^{2s a_j} + sum_i e^{2s a_i} with s = +1 for Minus and s = -1 for
/// Plus; diagonalizes B for the matching A-type family.
struct TypeAWeights {
  TypeAVariant variant = TypeAVariant::Plus;
  friend bool operator==(const TypeAWeights&, const TypeAWeights&) = default;
};
/// h_j = sinh(2 a_j); diagonal for the BCD family.
struct BCDSinh {
  friend bool operator==(const BCDSinh&, const BCDSinh&) = default;
};
/// B = F_{n+1} = gamma * I for the extended BCD family.
struct ExtraSlice {
  friend bool operator==(const ExtraSlice&, const ExtraSlice&) = default;
};
struct ExplicitWeights {
  std::vector<double> h;
  friend bool operator==(const ExplicitWeights&, const ExplicitWeights&) = default;
};
/// h_j uniform in [-1, 1] with |h_j| >= 0.05.
struct RandomWeights {
  std::uint64_t seed = 0;
  friend bool operator==(const RandomWeights&, const RandomWeights&) = default;
};
}  // namespace metric

using MetricSpec = std::variant<metric::SumAll, metric::TypeAWeights, metric::BCDSinh,
                                metric::ExtraSlice, metric::ExplicitWeights, metric::RandomWeights>;

std::string describe(const MetricSpec& spec);

/// Coefficients h with B = sum_j h_j F_j.
std::vector<double> metric_weights(const MetricSpec& spec, const SamplePoint& point, int dim);

SquareMatrix build_metric(const ThirdTensor& tensor, const SamplePoint& point,
                          const MetricSpec& spec);
SquareMatrix combine_slices(const ThirdTensor& tensor, std::span<const double> weights);

inline constexpr double kPassTolerance = 1e-8;
inline constexpr double kFailThreshold = 1e-3;
inline constexpr double kDegenerateSentinel = -1.0;
inline constexpr double kSliceConstancyTolerance = 1e-10;

enum class Verdict { Pass, Fail, Inconclusive, Degenerate };
std::string_view to_string(Verdict v) noexcept;

/// Residual < tol is a pass, > kFailThreshold a clear failure, anything
/// between is inconclusive.
Verdict classify(double residual, double tol, double fail_threshold = kFailThreshold) noexcept;

struct CheckReport {
  double residual = kDegenerateSentinel;
  bool pass = false;
  bool degenerate = false;
  Verdict verdict = Verdict::Degenerate;
  MetricSpec metric_used;
  SamplePoint point;
  double tolerance = kPassTolerance;
};

/// Scale-aware associativity residual
///
///   ||B||_inf * max_{i<m} ||F_i B^-1 F_m - F_m B^-1 F_i||_inf / (1 + max_i ||F_i||_inf)^2.
///
/// Multiplying B by a constant leaves it unchanged. Throws Error(SingularMetric)
/// when an LU pivot of B falls below 1e-12 * max(||B||_inf, reference_norm).
double wdvv_residual(std::span<const SquareMatrix> slices, const SquareMatrix& metric,
                     double reference_norm = 0.0);

/// Tries each spec in order and uses the first metric whose LU pivots stay
/// above 1e-12 * sum_j |h_j| ||F_j||_inf; when all are singular, falls back to
/// up to 10 random metrics before reporting the point as degenerate.
CheckReport check_wdvv(const ThirdTensor& tensor, const SamplePoint& point,
                       std::span<const MetricSpec> specs, double tol = kPassTolerance);
CheckReport check_wdvv(const ThirdTensor& tensor, const SamplePoint& point,
                       const MetricSpec& spec, double tol = kPassTolerance);

/// Original form: B is the slice F_{metric_index} (0-based), which must be
/// the same matrix at `point` and `second_point`.
CheckReport check_original_wdvv(const PrepotentialParams& params, const SamplePoint& point,
                                const SamplePoint& second_point, int metric_index,
                                double tol = kPassTolerance);

struct MetricIndependence {
  bool consistent = false;
  std::vector<double> residuals;
  std::vector<Verdict> verdicts;
};

/// Runs check_wdvv with `trials` random metrics (singular draws are redrawn up
/// to 10 times) and compares verdicts. Throws Error(NoInvertibleMetric).
MetricIndependence metric_independence_detail(const ThirdTensor& tensor, const SamplePoint& point,
                                              int trials, double tol = kPassTolerance,
                                              std::uint64_t seed = 0);
bool metric_independence(const ThirdTensor& tensor, const SamplePoint& point, int trials,
                         double tol = kPassTolerance, std::uint64_t seed = 0);

}  // namespace wdvv
