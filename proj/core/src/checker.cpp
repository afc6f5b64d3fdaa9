#include "wdvv/checker.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wdvv/error.hpp"
#include "wdvv/random.hpp"

namespace wdvv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr int kFallbackDraws = 10;
constexpr std::uint64_t kFallbackSeed = 0x5eedfa11bac4ULL;

std::vector<double> random_weights(std::uint64_t seed, int dim) {
  Rng rng(seed);
  std::vector<double> h(static_cast<std::size_t>(dim));
  for (auto& x : h) {
    do {
      x = rng.uniform(-1.0, 1.0);
    } while (std::abs(x) < 0.05);
  }
  return h;
}

}  // namespace

std::string describe(const MetricSpec& spec) {
  return std::visit(
      overloaded{
          [](const metric::SumAll&) { return std::string("sum"); },
          [](const metric::TypeAWeights& m) {
            return std::string(m.variant == TypeAVariant::Plus ? "type-a(plus)" : "type-a(minus)");
          },
          [](const metric::BCDSinh&) { return std::string("bcd-sinh"); },
          [](const metric::ExtraSlice&) { return std::string("extra"); },
          [](const metric::ExplicitWeights& m) {
            std::ostringstream os;
            os << "explicit[";
            for (std::size_t i = 0; i < m.h.size(); ++i) os << (i ? "," : "") << m.h[i];
            os << "]";
            return os.str();
          },
          [](const metric::RandomWeights& m) { return "random(seed=" + std::to_string(m.seed) + ")"; },
      },
      spec);
}

std::vector<double> metric_weights(const MetricSpec& spec, const SamplePoint& point, int dim) {
  const int base = point.base_dim();
  if (static_cast<int>(point.size()) != dim) {
    throw Error(ErrorKind::DimensionMismatch, "point and tensor dimensions differ");
  }
  std::vector<double> h(static_cast<std::size_t>(dim), 0.0);
  std::visit(
      overloaded{
          [&](const metric::SumAll&) { std::fill(h.begin(), h.end(), 1.0); },
          [&](const metric::TypeAWeights& m) {
            const double s = m.variant == TypeAVariant::Minus ? 2.0 : -2.0;
            double total = 0.0;
            for (int i = 0; i < base; ++i) total += std::exp(s * point[static_cast<std::size_t>(i)]);
            for (int j = 0; j < base; ++j) {
              h[static_cast<std::size_t>(j)] = std::exp(s * point[static_cast<std::size_t>(j)]) + total;
            }
          },
          [&](const metric::BCDSinh&) {
            for (int j = 0; j < base; ++j) {
              h[static_cast<std::size_t>(j)] = std::sinh(2.0 * point[static_cast<std::size_t>(j)]);
            }
          },
          [&](const metric::ExtraSlice&) {
            if (dim != base + 1) {
              throw Error(ErrorKind::DimensionMismatch, "extra-slice metric needs an extra variable");
            }
            h[static_cast<std::size_t>(base)] = 1.0;
          },
          [&](const metric::ExplicitWeights& m) {
            if (static_cast<int>(m.h.size()) != dim) {
              throw Error(ErrorKind::DimensionMismatch, "explicit weight count differs from dim");
            }
            h = m.h;
          },
          [&](const metric::RandomWeights& m) { h = random_weights(m.seed, dim); },
      },
      spec);
  return h;
}

SquareMatrix combine_slices(const ThirdTensor& tensor, std::span<const double> weights) {
  const int d = tensor.dim();
  if (static_cast<int>(weights.size()) != d) {
    throw Error(ErrorKind::DimensionMismatch, "weight count differs from tensor dim");
  }
  SquareMatrix b(d);
  for (int j = 0; j < d; ++j) {
    const double w = weights[static_cast<std::size_t>(j)];
    if (w == 0.0) continue;
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) b(k, l) += w * tensor(j, k, l);
  }
  return b;
}

SquareMatrix build_metric(const ThirdTensor& tensor, const SamplePoint& point,
                          const MetricSpec& spec) {
  return combine_slices(tensor, metric_weights(spec, point, tensor.dim()));
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Degenerate: return "degenerate";
  }
  return "unknown";
}

Verdict classify(double residual, double tol, double fail_threshold) noexcept {
  if (residual < 0.0) return Verdict::Degenerate;
  if (residual <= tol) return Verdict::Pass;
  if (residual > fail_threshold) return Verdict::Fail;
  return Verdict::Inconclusive;
}

double wdvv_residual(std::span<const SquareMatrix> slices, const SquareMatrix& metric,
                     double reference_norm) {
  const LuFactorization lu(metric, reference_norm);
  std::vector<SquareMatrix> solved;
  solved.reserve(slices.size());
  double scale = 0.0;
  for (const auto& s : slices) {
    solved.push_back(lu.solve(s));
    scale = std::max(scale, inf_norm(s));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    for (std::size_t m = i + 1; m < slices.size(); ++m) {
      const SquareMatrix diff = slices[i] * solved[m] - slices[m] * solved[i];
      worst = std::max(worst, inf_norm(diff));
    }
  }
  return inf_norm(metric) * worst / ((1.0 + scale) * (1.0 + scale));
}

CheckReport check_wdvv(const ThirdTensor& tensor, const SamplePoint& point,
                       std::span<const MetricSpec> specs, double tol) {
  if (specs.empty()) throw Error(ErrorKind::InvalidArgument, "check_wdvv needs at least one metric");
  const auto slices = tensor.slices();

  std::vector<MetricSpec> candidates(specs.begin(), specs.end());
  for (int k = 0; k < kFallbackDraws; ++k) {
    candidates.emplace_back(metric::RandomWeights{mix_seed(kFallbackSeed, static_cast<std::uint64_t>(k))});
  }
  for (const auto& spec : candidates) {
    const auto weights = metric_weights(spec, point, tensor.dim());
    const SquareMatrix b = combine_slices(tensor, weights);
    double reference = 0.0;
    for (std::size_t j = 0; j < slices.size(); ++j) reference += std::abs(weights[j]) * inf_norm(slices[j]);
    double r = 0.0;
    try {
      r = wdvv_residual(slices, b, reference);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularMetric) continue;
      throw;
    }
    const Verdict v = classify(r, tol);
    return CheckReport{.residual = r,
                       .pass = v == Verdict::Pass,
                       .degenerate = false,
                       .verdict = v,
                       .metric_used = spec,
                       .point = point,
                       .tolerance = tol};
  }
  return CheckReport{.residual = kDegenerateSentinel,
                     .pass = false,
                     .degenerate = true,
                     .verdict = Verdict::Degenerate,
                     .metric_used = specs.front(),
                     .point = point,
                     .tolerance = tol};
}

CheckReport check_wdvv(const ThirdTensor& tensor, const SamplePoint& point, const MetricSpec& spec,
                       double tol) {
  return check_wdvv(tensor, point, std::span<const MetricSpec>(&spec, 1), tol);
}

CheckReport check_original_wdvv(const PrepotentialParams& params, const SamplePoint& point,
                                const SamplePoint& second_point, int metric_index, double tol) {
  const ThirdTensor t1 = third_tensor(params, point);
  if (metric_index < 0 || metric_index >= t1.dim()) {
    throw Error(ErrorKind::IndexOutOfRange, "metric index outside tensor dimension");
  }
  const ThirdTensor t2 = third_tensor(params, second_point);
  const SquareMatrix b = t1.slice(metric_index);
  const double drift = max_abs_diff(b, t2.slice(metric_index));
  if (drift > kSliceConstancyTolerance) {
    std::ostringstream os;
    os << "slice " << metric_index + 1 << " changes by " << drift << " between two points";
    throw Error(ErrorKind::MetricSliceNotConstant, os.str());
  }
  const auto slices = t1.slices();
  const double r = wdvv_residual(slices, b);
  const Verdict v = classify(r, tol);
  std::vector<double> h(static_cast<std::size_t>(t1.dim()), 0.0);
  h[static_cast<std::size_t>(metric_index)] = 1.0;
  return CheckReport{.residual = r,
                     .pass = v == Verdict::Pass,
                     .degenerate = false,
                     .verdict = v,
                     .metric_used = metric::ExplicitWeights{h},
                     .point = point,
                     .tolerance = tol};
}

MetricIndependence metric_independence_detail(const ThirdTensor& tensor, const SamplePoint& point,
                                              int trials, double tol, std::uint64_t seed) {
  if (trials < 2) throw Error(ErrorKind::InvalidArgument, "metric independence needs >= 2 trials");
  if (static_cast<int>(point.size()) != tensor.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "point and tensor dimensions differ");
  }
  constexpr int kMaxRedraws = 10;
  const auto slices = tensor.slices();
  MetricIndependence out;
  std::uint64_t draw = 0;
  for (int t = 0; t < trials; ++t) {
    bool done = false;
    for (int attempt = 0; attempt <= kMaxRedraws && !done; ++attempt) {
      const auto h = random_weights(mix_seed(seed, draw++), tensor.dim());
      try {
        const double r = wdvv_residual(slices, combine_slices(tensor, h));
        out.residuals.push_back(r);
        out.verdicts.push_back(classify(r, tol));
        done = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularMetric) throw;
      }
    }
    if (!done) {
      throw Error(ErrorKind::NoInvertibleMetric,
                  "every random combination of the slices was singular");
    }
  }
  out.consistent = std::all_of(out.verdicts.begin(), out.verdicts.end(),
                               [&](Verdict v) { return v == out.verdicts.front(); });
  return out;
}

bool metric_independence(const ThirdTensor& tensor, const SamplePoint& point, int trials,
                         double tol, std::uint64_t seed) {
  return metric_independence_detail(tensor, point, trials, tol, seed).consistent;
}

}  // namespace wdvv
