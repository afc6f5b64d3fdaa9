#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "wdvv/closedform.hpp"
#include "wdvv/model.hpp"

namespace wdvv {

enum class FreeParam { A, B, C, Eta, Gamma };

std::string_view to_string(FreeParam p) noexcept;
std::optional<FreeParam> parse_free_param(std::string_view text) noexcept;

double get_param(const PrepotentialParams& params, FreeParam p);
void set_param(PrepotentialParams& params, FreeParam p, double value);

struct GridAxis {
  FreeParam param = FreeParam::A;
  double lo = 0.0;
  double hi = 0.0;
  int steps = 2;
};

inline constexpr long kMaxGridCells = 10'000'000;
inline constexpr double kDefaultHitTolerance = 1e-7;
inline constexpr int kScanPointsPerCell = 2;
inline constexpr int kConfirmPoints = 5;
inline constexpr int kRefineIterations = 200;

struct ScanTask {
  /// Template parameters; the axis parameters are overwritten per cell.
  PrepotentialParams base;
  std::vector<GridAxis> axes;
  bool refine = true;
  std::uint64_t seed = 0;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
};

struct ScanHit {
  std::vector<double> values;  ///< one per axis, in axis order
  double residual = 0.0;       ///< max residual over the confirmation points
  bool refined = false;
};

struct ScanResult {
  std::vector<ScanHit> hits;
  double grid_min_residual = 0.0;
  long points_tested = 0;
  long cells = 0;
  /// Flat indices of grid cells whose residual fell below the hit tolerance.
  std::vector<long> grid_hits;
  /// Refinement starts (grid hits and grid local minima).
  long refinement_starts = 0;
  /// Refined candidates that reached the tolerance on the refinement points
  /// but failed on fresh confirmation points.
  long rejected_candidates = 0;
};

/// Throws Error(GridGuard) when the grid is larger than kMaxGridCells or an
/// axis has fewer than two steps.
void validate_task(const ScanTask& task);

/// Max scale-aware residual of `params` over `points` sample points derived
/// from `seed`, with one random metric per point. A singular metric makes the
/// result +infinity.
double sampled_residual(const PrepotentialParams& params, int points, std::uint64_t seed);

/// Grid search over the task axes.
///
/// Each grid node is scored by sampled_residual with a per-node seed. With
/// `refine`, every grid hit and every grid local minimum is refined by
/// coordinate descent with step halving (at most kRefineIterations sweeps)
/// followed by a damped Gauss-Newton polish, both confined to one grid
/// spacing around the start node and to the grid box. A
/// refined point is reported when kConfirmPoints fresh sample points all give
/// a residual below `hit_tol`; refined hits within half a grid spacing of
/// each other are merged. Without `refine`, the grid hits themselves are reported.
ScanResult scan(const ScanTask& task, int points_per_cell = kScanPointsPerCell,
                double hit_tol = kDefaultHitTolerance);

/// Box [-2(N+1), 2(N+1)] in each of a, b, c with `steps` nodes per axis.
std::vector<GridAxis> default_cubic_axes(int n, int steps = 21);

struct ConditionRoot {
  double value = 0.0;
  double residual = 0.0;  ///< max residual over 2 sample points
  bool verified = false;
};

struct SolveResult {
  std::vector<ConditionRoot> roots;
  bool sign_change_found = false;
};

/// Sign-change roots of theorem_condition_value along one free parameter,
/// located on a uniform subdivision of the bracket and bisected to 1e-12.
/// Points where the branch guard fails are skipped. Each root is checked with
/// the residual oracle at 2 sample points.
SolveResult solve_condition(ConditionId id, const PrepotentialParams& fixed, FreeParam free,
                            double lo, double hi, int subdivisions = 2000, std::uint64_t seed = 0);

}  // namespace wdvv
