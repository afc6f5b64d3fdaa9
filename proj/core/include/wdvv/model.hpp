#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wdvv {

/// Basis function of the prepotential, identified by its third derivative.
enum class KernelKind {
  Coth,        ///< f'''(x) = coth(x), five-dimensional theories
  Reciprocal,  ///< f'''(x) = 1/x, four-dimensional theories
};

std::string_view to_string(KernelKind kind) noexcept;
std::optional<KernelKind> parse_kernel(std::string_view text) noexcept;

/// One member of the prepotential family
///
///   F = sum_{i<j} (alpha_minus f(a_i - a_j) + alpha_plus f(a_i + a_j)) + eta sum_i f(a_i)
///       + a/6 (sum a_i)^3 + b/2 (sum a_i)(sum a_j^2) + c/6 sum a_i^3
///       [+ gamma/6 (a_{n+1}^3 + 3 a_{n+1} sum_i a_i^2)]
///
/// The bracketed extra-variable term is present iff `gamma` is set, in which
/// case the cubic coefficients a, b, c must vanish.
struct PrepotentialParams {
  KernelKind kernel = KernelKind::Coth;
  int n = 2;
  double alpha_minus = 1.0;
  double alpha_plus = 0.0;
  double eta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::optional<double> gamma;

  /// Number of coordinates the prepotential depends on (n, or n+1 with gamma).
  int dimension() const noexcept { return gamma ? n + 1 : n; }

  /// Throws Error(InvalidArgument) when an invariant is violated.
  void validate() const;

  friend bool operator==(const PrepotentialParams&, const PrepotentialParams&) = default;
};

enum class FamilyPreset {
  SimplestCase,
  TypeAPlus,
  TypeAMinus,
  BCD,
  BCDExtended,
  FourDimSimplest,
};

std::string_view to_string(FamilyPreset preset) noexcept;
std::optional<FamilyPreset> parse_preset(std::string_view text) noexcept;

/// Base parameter set for a named family. Free parameters (the cubic part of
/// the simplest cases, eta for the BCD families) start at zero and are meant
/// to be overwritten by the caller.
PrepotentialParams preset_params(FamilyPreset preset, int n,
                                 std::optional<double> gamma = std::nullopt);

/// A coordinate vector kept away from every kernel singularity.
///
/// The first `base_dim` coordinates enter kernel arguments and obey the margin
/// constraints; any trailing coordinate (the extra variable) is unconstrained.
class SamplePoint {
 public:
  static SamplePoint create(std::vector<double> coords, double margin, int base_dim,
                            bool require_dominant = true);
  static SamplePoint create(std::vector<double> coords, double margin) {
    const int n = static_cast<int>(coords.size());
    return create(std::move(coords), margin, n, true);
  }

  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::size_t size() const noexcept { return coords_.size(); }
  int base_dim() const noexcept { return base_dim_; }
  double margin() const noexcept { return margin_; }
  bool dominant() const noexcept { return dominant_; }

  /// Smallest |a_i - a_j|, |a_i + a_j|, |a_i| over the base coordinates.
  double singular_distance() const noexcept;

  friend bool operator==(const SamplePoint&, const SamplePoint&) = default;

 private:
  friend SamplePoint make_sample_point(int n, double margin, std::uint64_t seed, int extra);

  SamplePoint(std::vector<double> coords, double margin, int base_dim, bool dominant)
      : coords_(std::move(coords)), margin_(margin), base_dim_(base_dim), dominant_(dominant) {}

  std::vector<double> coords_;
  double margin_;
  int base_dim_;
  bool dominant_;
};

inline constexpr double kDefaultMargin = 0.1;
inline constexpr double kSampleLo = 0.3;
inline constexpr double kSampleHi = 2.5;

/// Deterministic random point in the dominant chamber a_1 > ... > a_n > 0 with
/// coordinates in [0.3, 2.5]. `extra` trailing unconstrained coordinates are
/// appended (1 for the extended BCD family).
SamplePoint make_sample_point(int n, double margin, std::uint64_t seed, int extra = 0);

/// Point suited to `params` (adds the extra coordinate when gamma is present).
SamplePoint make_sample_point(const PrepotentialParams& params, double margin,
                              std::uint64_t seed);

}  // namespace wdvv
