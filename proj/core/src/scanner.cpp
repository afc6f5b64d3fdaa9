#include "wdvv/scanner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "wdvv/checker.hpp"
#include "wdvv/error.hpp"
#include "wdvv/kernel.hpp"
#include "wdvv/random.hpp"

namespace wdvv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kRefineStream = 0x7265666eULL;
constexpr std::uint64_t kConfirmStream = 0x636f6e66ULL;
constexpr std::uint64_t kVerifyStream = 0x76657269ULL;
constexpr int kRefinePoints = 5;
constexpr int kPolishIterations = 200;

template <class Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = static_cast<int>(std::clamp<long>(workers, 1, std::max<long>(count, 1)));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Probe {
  SamplePoint point;
  std::vector<double> weights;
};

std::vector<Probe> make_probes(const PrepotentialParams& params, int points, std::uint64_t seed) {
  std::vector<Probe> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int p = 0; p < points; ++p) {
    const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(p));
    SamplePoint pt = make_sample_point(params, kDefaultMargin, s);
    auto h = metric_weights(metric::RandomWeights{s}, pt, params.dimension());
    out.push_back(Probe{std::move(pt), std::move(h)});
  }
  return out;
}

// Sum of squared commutator entries with the same scale factor as wdvv_residual.
double smooth_objective(const PrepotentialParams& params, const std::vector<Probe>& probes) {
  double total = 0.0;
  for (const auto& probe : probes) {
    const ThirdTensor t = third_tensor(params, probe.point);
    const SquareMatrix b = combine_slices(t, probe.weights);
    std::vector<SquareMatrix> slices = t.slices();
    std::vector<SquareMatrix> solved;
    try {
      const LuFactorization lu(b);
      for (const auto& s : slices) solved.push_back(lu.solve(s));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularMetric) return kInf;
      throw;
    }
    double scale = 0.0;
    for (const auto& s : slices) scale = std::max(scale, inf_norm(s));
    const double factor = inf_norm(b) / ((1.0 + scale) * (1.0 + scale));
    double sum = 0.0;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      for (std::size_t m = i + 1; m < slices.size(); ++m) {
        const SquareMatrix d = slices[i] * solved[m] - slices[m] * solved[i];
        for (double x : d.entries()) sum += x * x;
      }
    }
    total += sum * factor * factor;
  }
  return total;
}

double probe_residual(const PrepotentialParams& params, const std::vector<Probe>& probes) {
  double worst = 0.0;
  for (const auto& probe : probes) {
    const ThirdTensor t = third_tensor(params, probe.point);
    try {
      worst = std::max(worst, wdvv_residual(t.slices(), combine_slices(t, probe.weights)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularMetric) return kInf;
      throw;
    }
  }
  return worst;
}

// Commutator entries of B^{-1}/||B^{-1}|| over all probes.
std::optional<std::vector<double>> residual_vector(const PrepotentialParams& params,
                                                   const std::vector<Probe>& probes) {
  std::vector<double> out;
  for (const auto& probe : probes) {
    const ThirdTensor t = third_tensor(params, probe.point);
    SquareMatrix inv(t.dim());
    try {
      inv = inverse(combine_slices(t, probe.weights));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularMetric) return std::nullopt;
      throw;
    }
    inv *= 1.0 / inf_norm(inv);
    const auto slices = t.slices();
    double scale = 0.0;
    std::vector<SquareMatrix> solved;
    for (const auto& s : slices) {
      solved.push_back(inv * s);
      scale = std::max(scale, inf_norm(s));
    }
    const double factor = 1.0 / ((1.0 + scale) * (1.0 + scale));
    for (std::size_t i = 0; i < slices.size(); ++i) {
      for (std::size_t m = i + 1; m < slices.size(); ++m) {
        const SquareMatrix d = slices[i] * solved[m] - slices[m] * solved[i];
        for (double x : d.entries()) out.push_back(x * factor);
      }
    }
  }
  return out;
}

double squared_norm(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x * x;
  return s;
}

PrepotentialParams with_values(const ScanTask& task, std::span<const double> values) {
  PrepotentialParams p = task.base;
  for (std::size_t k = 0; k < task.axes.size(); ++k) set_param(p, task.axes[k].param, values[k]);
  return p;
}

double node_value(const GridAxis& axis, long i) {
  return axis.lo + (axis.hi - axis.lo) * static_cast<double>(i) / (axis.steps - 1);
}

std::vector<long> unflatten(const ScanTask& task, long flat) {
  std::vector<long> idx(task.axes.size());
  for (std::size_t k = task.axes.size(); k-- > 0;) {
    idx[k] = flat % task.axes[k].steps;
    flat /= task.axes[k].steps;
  }
  return idx;
}

long flatten(const ScanTask& task, const std::vector<long>& idx) {
  long flat = 0;
  for (std::size_t k = 0; k < task.axes.size(); ++k) flat = flat * task.axes[k].steps + idx[k];
  return flat;
}

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

// One grid spacing around the start node, intersected with the grid box.
Bounds local_bounds(const ScanTask& task, const std::vector<double>& start) {
  Bounds b{std::vector<double>(start.size()), std::vector<double>(start.size())};
  for (std::size_t k = 0; k < start.size(); ++k) {
    const auto& ax = task.axes[k];
    const double h = (ax.hi - ax.lo) / (ax.steps - 1);
    b.lo[k] = std::max(ax.lo, start[k] - h);
    b.hi[k] = std::min(ax.hi, start[k] + h);
  }
  return b;
}

std::vector<double> refine_from(const ScanTask& task, std::vector<double> x, const Bounds& bounds,
                                const std::vector<Probe>& probes) {
  std::vector<double> step(task.axes.size());
  for (std::size_t k = 0; k < task.axes.size(); ++k) {
    const auto& ax = task.axes[k];
    step[k] = 0.25 * (ax.hi - ax.lo) / (ax.steps - 1);
  }
  double best = smooth_objective(with_values(task, x), probes);
  for (int it = 0; it < kRefineIterations && best > 0.0; ++it) {
    bool improved = false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (double dir : {1.0, -1.0}) {
        std::vector<double> trial = x;
        trial[k] = std::clamp(trial[k] + dir * step[k], bounds.lo[k], bounds.hi[k]);
        if (trial[k] == x[k]) continue;
        double v = kInf;
        try {
          v = smooth_objective(with_values(task, trial), probes);
        } catch (const Error&) {
          continue;
        }
        if (v < best) {
          best = v;
          x = std::move(trial);
          step[k] *= 2.0;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool tiny = true;
      for (auto& s : step) {
        s *= 0.5;
        tiny = tiny && s < 1e-14;
      }
      if (tiny) break;
    }
  }
  return x;
}

std::vector<double> polish(const ScanTask& task, std::vector<double> x, const Bounds& bounds,
                           const std::vector<Probe>& probes) {
  const std::size_t n = x.size();
  auto eval = [&](const std::vector<double>& v) {
    try {
      return residual_vector(with_values(task, v), probes);
    } catch (const Error&) {
      return std::optional<std::vector<double>>{};
    }
  };
  auto r = eval(x);
  if (!r) return x;
  double best = squared_norm(*r);
  double lambda = 1e-3;
  for (int it = 0; it < kPolishIterations && best > 0.0; ++it) {
    std::vector<std::vector<double>> jac(n);
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
      auto xp = x;
      auto xm = x;
      xp[k] += h;
      xm[k] -= h;
      const auto rp = eval(xp);
      const auto rm = eval(xm);
      if (!rp || !rm) {
        ok = false;
        break;
      }
      jac[k].resize(r->size());
      for (std::size_t i = 0; i < r->size(); ++i) jac[k][i] = ((*rp)[i] - (*rm)[i]) / (2.0 * h);
    }
    if (!ok) break;
    SquareMatrix normal(static_cast<int>(n));
    std::vector<double> grad(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < r->size(); ++i) s += jac[a][i] * jac[b][i];
        normal(static_cast<int>(a), static_cast<int>(b)) = s;
      }
      double s = 0.0;
      for (std::size_t i = 0; i < r->size(); ++i) s += jac[a][i] * (*r)[i];
      grad[a] = -s;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 20 && !improved; ++attempt) {
      SquareMatrix damped = normal;
      for (std::size_t a = 0; a < n; ++a) {
        damped(static_cast<int>(a), static_cast<int>(a)) *= 1.0 + lambda;
      }
      std::vector<double> step;
      try {
        step = LuFactorization(damped).solve(std::span<const double>(grad));
      } catch (const Error&) {
        lambda *= 4.0;
        continue;
      }
      auto trial = x;
      for (std::size_t k = 0; k < n; ++k) {
        trial[k] = std::clamp(trial[k] + step[k], bounds.lo[k], bounds.hi[k]);
      }
      const auto rt = eval(trial);
      const double v = rt ? squared_norm(*rt) : kInf;
      if (v < best) {
        x = std::move(trial);
        r = rt;
        best = v;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace

std::string_view to_string(FreeParam p) noexcept {
  switch (p) {
    case FreeParam::A: return "a";
    case FreeParam::B: return "b";
    case FreeParam::C: return "c";
    case FreeParam::Eta: return "eta";
    case FreeParam::Gamma: return "gamma";
  }
  return "unknown";
}

std::optional<FreeParam> parse_free_param(std::string_view text) noexcept {
  for (auto p : {FreeParam::A, FreeParam::B, FreeParam::C, FreeParam::Eta, FreeParam::Gamma}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

double get_param(const PrepotentialParams& params, FreeParam p) {
  switch (p) {
    case FreeParam::A: return params.a;
    case FreeParam::B: return params.b;
    case FreeParam::C: return params.c;
    case FreeParam::Eta: return params.eta;
    case FreeParam::Gamma:
      if (!params.gamma) throw Error(ErrorKind::InvalidArgument, "family has no gamma");
      return *params.gamma;
  }
  return 0.0;
}

void set_param(PrepotentialParams& params, FreeParam p, double value) {
  switch (p) {
    case FreeParam::A: params.a = value; break;
    case FreeParam::B: params.b = value; break;
    case FreeParam::C: params.c = value; break;
    case FreeParam::Eta: params.eta = value; break;
    case FreeParam::Gamma:
      if (!params.gamma) throw Error(ErrorKind::InvalidArgument, "family has no gamma");
      params.gamma = value;
      break;
  }
}

void validate_task(const ScanTask& task) {
  task.base.validate();
  if (task.axes.empty()) throw Error(ErrorKind::GridGuard, "scan needs at least one axis");
  long cells = 1;
  for (const auto& ax : task.axes) {
    if (ax.steps < 2) throw Error(ErrorKind::GridGuard, "every axis needs at least 2 steps");
    if (!(ax.hi > ax.lo)) throw Error(ErrorKind::GridGuard, "axis range must satisfy lo < hi");
    if (ax.param == FreeParam::Gamma && !task.base.gamma) {
      throw Error(ErrorKind::InvalidArgument, "gamma axis needs a family with gamma");
    }
    if (cells > kMaxGridCells / ax.steps) {
      std::ostringstream os;
      os << "grid exceeds " << kMaxGridCells << " cells";
      throw Error(ErrorKind::GridGuard, os.str());
    }
    cells *= ax.steps;
  }
  for (std::size_t i = 0; i < task.axes.size(); ++i)
    for (std::size_t j = i + 1; j < task.axes.size(); ++j)
      if (task.axes[i].param == task.axes[j].param) {
        throw Error(ErrorKind::GridGuard, "axis parameters must be distinct");
      }
}

double sampled_residual(const PrepotentialParams& params, int points, std::uint64_t seed) {
  return probe_residual(params, make_probes(params, points, seed));
}

ScanResult scan(const ScanTask& task, int points_per_cell, double hit_tol) {
  validate_task(task);
  if (points_per_cell < 1) throw Error(ErrorKind::InvalidArgument, "points_per_cell must be >= 1");
  if (!(hit_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "hit tolerance must be positive");

  long cells = 1;
  for (const auto& ax : task.axes) cells *= ax.steps;

  std::vector<double> grid(static_cast<std::size_t>(cells), kInf);
  parallel_for(cells, task.threads, [&](long flat) {
    const auto idx = unflatten(task, flat);
    std::vector<double> values(task.axes.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = node_value(task.axes[k], idx[k]);
    try {
      grid[static_cast<std::size_t>(flat)] = sampled_residual(
          with_values(task, values), points_per_cell, mix_seed(task.seed, static_cast<std::uint64_t>(flat)));
    } catch (const Error&) {
      grid[static_cast<std::size_t>(flat)] = kInf;
    }
  });

  ScanResult out;
  out.cells = cells;
  out.points_tested = cells * points_per_cell;
  out.grid_min_residual = *std::min_element(grid.begin(), grid.end());

  std::vector<long> starts;
  for (long flat = 0; flat < cells; ++flat) {
    const double v = grid[static_cast<std::size_t>(flat)];
    if (v < hit_tol) {
      out.grid_hits.push_back(flat);
      starts.push_back(flat);
      continue;
    }
    if (!task.refine || !std::isfinite(v)) continue;
    const auto idx = unflatten(task, flat);
    bool minimum = true;
    for (std::size_t k = 0; k < idx.size() && minimum; ++k) {
      for (long d : {-1L, 1L}) {
        auto nb = idx;
        nb[k] += d;
        if (nb[k] < 0 || nb[k] >= task.axes[k].steps) continue;
        if (grid[static_cast<std::size_t>(flatten(task, nb))] < v) {
          minimum = false;
          break;
        }
      }
    }
    if (minimum) starts.push_back(flat);
  }

  auto values_at = [&](long flat) {
    const auto idx = unflatten(task, flat);
    std::vector<double> values(task.axes.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = node_value(task.axes[k], idx[k]);
    return values;
  };

  if (!task.refine) {
    for (long flat : out.grid_hits) {
      out.hits.push_back(ScanHit{values_at(flat), grid[static_cast<std::size_t>(flat)], false});
    }
    return out;
  }

  out.refinement_starts = static_cast<long>(starts.size());
  const auto refine_probes = make_probes(task.base, kRefinePoints, mix_seed(task.seed, kRefineStream));
  const auto confirm_probes = make_probes(task.base, kConfirmPoints, mix_seed(task.seed, kConfirmStream));

  struct Candidate {
    std::vector<double> values;
    double refine_residual = kInf;
    double confirm_residual = kInf;
  };
  std::vector<Candidate> candidates(starts.size());
  parallel_for(static_cast<long>(starts.size()), task.threads, [&](long s) {
    auto& c = candidates[static_cast<std::size_t>(s)];
    const auto start = values_at(starts[static_cast<std::size_t>(s)]);
    const Bounds bounds = local_bounds(task, start);
    c.values = polish(task, refine_from(task, start, bounds, refine_probes), bounds, refine_probes);
    try {
      const auto params = with_values(task, c.values);
      c.refine_residual = probe_residual(params, refine_probes);
      if (c.refine_residual < hit_tol) c.confirm_residual = probe_residual(params, confirm_probes);
    } catch (const Error&) {
    }
  });

  std::vector<double> spacing(task.axes.size());
  for (std::size_t k = 0; k < task.axes.size(); ++k) {
    spacing[k] = 0.5 * (task.axes[k].hi - task.axes[k].lo) / (task.axes[k].steps - 1);
  }
  for (const auto& c : candidates) {
    if (!(c.refine_residual < hit_tol)) continue;
    if (!(c.confirm_residual < hit_tol)) {
      ++out.rejected_candidates;
      continue;
    }
    auto same = std::find_if(out.hits.begin(), out.hits.end(), [&](const ScanHit& h) {
      for (std::size_t k = 0; k < spacing.size(); ++k) {
        if (std::abs(h.values[k] - c.values[k]) > spacing[k]) return false;
      }
      return true;
    });
    if (same == out.hits.end()) {
      out.hits.push_back(ScanHit{c.values, c.confirm_residual, true});
    } else if (c.confirm_residual < same->residual) {
      same->values = c.values;
      same->residual = c.confirm_residual;
    }
  }
  std::sort(out.hits.begin(), out.hits.end(),
            [](const ScanHit& l, const ScanHit& r) { return l.values < r.values; });
  return out;
}

std::vector<GridAxis> default_cubic_axes(int n, int steps) {
  const double r = 2.0 * (n + 1);
  return {GridAxis{FreeParam::A, -r, r, steps}, GridAxis{FreeParam::B, -r, r, steps},
          GridAxis{FreeParam::C, -r, r, steps}};
}

SolveResult solve_condition(ConditionId id, const PrepotentialParams& fixed, FreeParam free,
                            double lo, double hi, int subdivisions, std::uint64_t seed) {
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "bracket must satisfy lo < hi");
  if (subdivisions < 1) throw Error(ErrorKind::InvalidArgument, "subdivisions must be >= 1");
  auto value_at = [&](double x) -> std::optional<double> {
    PrepotentialParams p = fixed;
    set_param(p, free, x);
    try {
      const double v = theorem_condition_value(id, p);
      if (std::isnan(v)) return std::nullopt;
      return v;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::BranchGuard) return std::nullopt;
      throw;
    }
  };

  SolveResult out;
  std::vector<double> roots;
  double x0 = lo;
  auto f0 = value_at(x0);
  for (int s = 1; s <= subdivisions; ++s) {
    const double x1 = lo + (hi - lo) * s / subdivisions;
    const auto f1 = value_at(x1);
    if (f0 && f1) {
      if (*f0 == 0.0) {
        roots.push_back(x0);
      } else if (*f0 * *f1 < 0.0) {
        double a = x0, b = x1, fa = *f0;
        while (b - a > 1e-12) {
          const double mid = 0.5 * (a + b);
          const auto fm = value_at(mid);
          if (!fm) break;
          if (*fm == 0.0) {
            a = b = mid;
            break;
          }
          if ((*fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = *fm;
          } else {
            b = mid;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
      if (s == subdivisions && *f1 == 0.0) roots.push_back(x1);
    }
    x0 = x1;
    f0 = f1;
  }
  out.sign_change_found = !roots.empty();

  for (std::size_t r = 0; r < roots.size(); ++r) {
    PrepotentialParams p = fixed;
    set_param(p, free, roots[r]);
    ConditionRoot root{roots[r], kInf, false};
    try {
      root.residual = sampled_residual(p, 2, mix_seed(mix_seed(seed, kVerifyStream), r));
      root.verified = classify(root.residual, kPassTolerance) == Verdict::Pass;
    } catch (const Error&) {
    }
    out.roots.push_back(root);
  }
  return out;
}

}  // namespace wdvv
