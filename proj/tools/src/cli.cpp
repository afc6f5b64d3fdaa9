#include "wdvvtool/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "wdvv/checker.hpp"
#include "wdvv/error.hpp"
#include "wdvv/kernel.hpp"
#include "wdvv/random.hpp"

#ifndef WDVV_VERSION
#define WDVV_VERSION "0.0.0"
#endif

namespace wdvvtool {

using nlohmann::ordered_json;
using wdvv::CheckReport;
using wdvv::ConditionId;
using wdvv::FamilyPreset;
using wdvv::KernelKind;
using wdvv::MetricSpec;
using wdvv::PrepotentialParams;
using wdvv::SamplePoint;
using wdvv::Verdict;

namespace {

constexpr int kDefaultCheckPoints = 5;
constexpr int kMaxPoints = 10000;
constexpr int kMaxN = 12;
constexpr double kIdentityTolerance = 1e-9;
constexpr double kReductionTolerance = 1e-9;
constexpr std::uint64_t kMetricStream = 0x6d6574726963ULL;

std::string format_number(double x, int precision) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

// NaN and infinities are not JSON numbers.
ordered_json number(double x) {
  if (!std::isfinite(x)) return ordered_json(format_number(x, 17));
  return ordered_json(x);
}

ordered_json point_json(const SamplePoint& p) {
  ordered_json arr = ordered_json::array();
  for (double x : p.coords()) arr.push_back(x);
  return arr;
}

ordered_json params_json(const PrepotentialParams& p) {
  ordered_json j;
  j["kernel"] = std::string(wdvv::to_string(p.kernel));
  j["n"] = p.n;
  j["alpha_minus"] = p.alpha_minus;
  j["alpha_plus"] = p.alpha_plus;
  j["eta"] = p.eta;
  j["a"] = p.a;
  j["b"] = p.b;
  j["c"] = p.c;
  j["gamma"] = p.gamma ? ordered_json(*p.gamma) : ordered_json(nullptr);
  return j;
}

ordered_json check_json(const CheckReport& r, int index) {
  ordered_json j;
  j["index"] = index;
  j["point"] = point_json(r.point);
  j["metric"] = wdvv::describe(r.metric_used);
  j["residual"] = number(r.residual);
  j["verdict"] = std::string(wdvv::to_string(r.verdict));
  return j;
}

struct Tally {
  int pass = 0;
  int fail = 0;
  int inconclusive = 0;
  int degenerate = 0;

  void add(Verdict v) {
    switch (v) {
      case Verdict::Pass: ++pass; break;
      case Verdict::Fail: ++fail; break;
      case Verdict::Inconclusive: ++inconclusive; break;
      case Verdict::Degenerate: ++degenerate; break;
    }
  }

  ordered_json json() const {
    return ordered_json{{"pass", pass}, {"fail", fail}, {"inconclusive", inconclusive},
                        {"degenerate", degenerate}};
  }

  int status() const {
    if (fail > 0) return kExitFail;
    if (inconclusive > 0) return kExitInconclusive;
    if (degenerate > 0) return kExitDegenerate;
    return kExitPass;
  }
};

std::string_view status_word(int status) {
  switch (status) {
    case kExitPass: return "pass";
    case kExitFail: return "fail";
    case kExitInconclusive: return "inconclusive";
    case kExitDegenerate: return "degenerate";
  }
  return "error";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ordered_json skeleton(const RunConfig& config, const PrepotentialParams& params) {
  ordered_json r;
  r["version"] = WDVV_VERSION;
  r["command"] = std::string(to_string(config.command));
  if (!config.deterministic) r["generated_at"] = utc_timestamp();
  r["seed"] = config.seed;
  r["tolerance"] = config.tol;
  r["params"] = params_json(params);
  return r;
}

FamilyPreset effective_preset(const RunConfig& config) {
  if (config.preset) return *config.preset;
  if (config.command == Command::Theorem && config.theorem == ConditionId::T5FourDim) {
    return FamilyPreset::FourDimSimplest;
  }
  return FamilyPreset::SimplestCase;
}

std::optional<ConditionId> matching_condition(const PrepotentialParams& p) {
  for (ConditionId id : {ConditionId::T2TypeA, ConditionId::T3BCD, ConditionId::T4Extended,
                         ConditionId::T5FourDim}) {
    if (wdvv::condition_applicable(id, p)) return id;
  }
  const auto branch_id = wdvv::condition_for(wdvv::simplest_branch(p));
  if (wdvv::condition_applicable(branch_id, p)) return branch_id;
  return std::nullopt;
}

std::string anchor_for(ConditionId id) {
  switch (id) {
    case ConditionId::T1Generic:
      return "simplest case: WDVV holds iff N b^3 + 3 b^2 c - a c^2 + 3 N b + c + N^2 a = 0";
    case ConditionId::T1SpecialNa2b:
      return "simplest case with N a + 2 b = 0: WDVV holds iff 1 + (N a / 2)^2 - a c = 0";
    case ConditionId::T1SpecialNbc:
      return "simplest case with N b + c = 0: WDVV holds for N = 3 (and for b = +-1)";
    case ConditionId::T1DoublyDegenerate:
      return "simplest case with N a + 2 b = N b + c = 0: every metric is singular, WDVV is meaningless";
    case ConditionId::T2TypeA:
      return "A-type family: WDVV holds iff (a, b, c) = +-(2/(N+1), -1, N+1)";
    case ConditionId::T3BCD:
      return "BCD family: WDVV holds iff eta = -2(N-2)";
    case ConditionId::T4Extended:
      return "BCD family with extra variable: WDVV holds iff eta = -2(N-2) - gamma^2/2";
    case ConditionId::T5FourDim:
      return "1/x kernel, N >= 3: WDVV holds iff N b^3 + 3 b^2 c - a c^2 = 0";
  }
  return {};
}

ordered_json condition_json(const PrepotentialParams& p) {
  const auto id = matching_condition(p);
  if (!id) return nullptr;
  ordered_json j;
  j["id"] = std::string(wdvv::to_string(*id));
  j["anchor"] = anchor_for(*id);
  const double v = wdvv::theorem_condition_value(*id, p);
  j["value"] = number(v);
  if (std::isnan(v)) {
    j["predicted"] = "meaningless";
  } else {
    j["predicted"] = std::abs(v) <= wdvv::kConditionTolerance ? "pass" : "fail";
  }
  return j;
}

MetricChoice natural_metric(const PrepotentialParams& p) {
  if (p.gamma) return MetricChoice::Extra;
  if (p.kernel == KernelKind::Coth && p.alpha_minus == 1.0 && p.alpha_plus == 1.0) return MetricChoice::BcdSinh;
  if (p.kernel == KernelKind::Coth && p.alpha_minus == 1.0 && p.alpha_plus == 0.0 && p.eta == 1.0) {
    return MetricChoice::TypeA;
  }
  return MetricChoice::Sum;
}

MetricSpec metric_spec(MetricChoice choice, const PrepotentialParams& p, std::uint64_t seed,
                       int index) {
  switch (choice) {
    case MetricChoice::Sum: return wdvv::metric::SumAll{};
    case MetricChoice::TypeA:
      return wdvv::metric::TypeAWeights{p.a < 0.0 ? wdvv::TypeAVariant::Minus : wdvv::TypeAVariant::Plus};
    case MetricChoice::BcdSinh: return wdvv::metric::BCDSinh{};
    case MetricChoice::Extra: return wdvv::metric::ExtraSlice{};
    case MetricChoice::Random:
      return wdvv::metric::RandomWeights{
          wdvv::mix_seed(wdvv::mix_seed(seed, kMetricStream), static_cast<std::uint64_t>(index))};
  }
  return wdvv::metric::SumAll{};
}

SamplePoint point_for(const PrepotentialParams& p, std::uint64_t seed, int index) {
  return wdvv::make_sample_point(p, wdvv::kDefaultMargin,
                                 wdvv::mix_seed(seed, static_cast<std::uint64_t>(index)));
}

int points_of(const RunConfig& config) { return config.points.value_or(kDefaultCheckPoints); }

Outcome run_check(const RunConfig& config) {
  const PrepotentialParams params = resolve_params(config);
  const MetricChoice choice = config.metric.value_or(natural_metric(params));
  ordered_json r = skeleton(config, params);
  r["condition"] = condition_json(params);
  r["checks"] = ordered_json::array();
  Tally tally;
  for (int i = 0; i < points_of(config); ++i) {
    const SamplePoint pt = point_for(params, config.seed, i);
    const auto t = wdvv::third_tensor(params, pt);
    const auto report = wdvv::check_wdvv(t, pt, metric_spec(choice, params, config.seed, i), config.tol);
    tally.add(report.verdict);
    r["checks"].push_back(check_json(report, i));
  }
  r["summary"] = tally.json();
  r["verdict"] = status_word(tally.status());
  return Outcome{tally.status(), std::move(r)};
}

struct CaseSpec {
  std::string label;
  PrepotentialParams params;
  Verdict expected;
};

// Runs every case at the same points and compares verdicts with the
// expectation: 0 when all agree, 2 when a disagreement is inconclusive, 1 otherwise.
Outcome run_cases(const RunConfig& config, ordered_json r, const std::vector<CaseSpec>& cases,
                  bool with_original) {
  r["checks"] = ordered_json::array();
  Tally tally;
  bool agree = true;
  bool inconclusive = false;
  for (const auto& cs : cases) {
    const MetricChoice choice =
        config.metric.value_or(natural_metric(cs.params));
    for (int i = 0; i < points_of(config); ++i) {
      const SamplePoint pt = point_for(cs.params, config.seed, i);
      const auto t = wdvv::third_tensor(cs.params, pt);
      std::vector<std::pair<std::string, CheckReport>> reports;
      reports.emplace_back("generalized",
                           wdvv::check_wdvv(t, pt, metric_spec(choice, cs.params, config.seed, i), config.tol));
      if (with_original) {
        const SamplePoint second = point_for(cs.params, wdvv::mix_seed(config.seed, 1), i);
        reports.emplace_back("original", wdvv::check_original_wdvv(cs.params, pt, second, cs.params.n,
                                                                   config.tol));
      }
      for (auto& [form, rep] : reports) {
        tally.add(rep.verdict);
        if (rep.verdict != cs.expected) {
          agree = false;
          inconclusive = inconclusive || rep.verdict == Verdict::Inconclusive;
        }
        ordered_json j = check_json(rep, i);
        j["case"] = cs.label;
        j["form"] = form;
        j["expected"] = std::string(wdvv::to_string(cs.expected));
        r["checks"].push_back(std::move(j));
      }
    }
  }
  r["summary"] = tally.json();
  const int status = agree ? kExitPass : (inconclusive ? kExitInconclusive : kExitFail);
  r["verdict"] = agree ? "confirmed" : (inconclusive ? "inconclusive" : "contradicted");
  return Outcome{status, std::move(r)};
}

Outcome run_theorem(const RunConfig& config) {
  const ConditionId id = *config.theorem;
  const int n = config.n;
  ordered_json th;
  th["id"] = std::string(wdvv::to_string(id));
  th["anchor"] = anchor_for(id);

  switch (id) {
    case ConditionId::T2TypeA: {
      const auto plus = wdvv::preset_params(FamilyPreset::TypeAPlus, n);
      const auto minus = wdvv::preset_params(FamilyPreset::TypeAMinus, n);
      auto off = plus;
      off.c += 1.0;
      ordered_json r = skeleton(config, plus);
      th["on"] = ordered_json::array({params_json(plus), params_json(minus)});
      th["off"] = params_json(off);
      r["theorem"] = th;
      return run_cases(config, std::move(r),
                       {{"on(plus)", plus, Verdict::Pass},
                        {"on(minus)", minus, Verdict::Pass},
                        {"off", off, Verdict::Fail}},
                       false);
    }
    case ConditionId::T3BCD:
    case ConditionId::T4Extended: {
      const bool extended = id == ConditionId::T4Extended;
      const std::optional<double> gamma = extended ? std::optional<double>(config.gamma.value_or(1.0))
                                                   : std::nullopt;
      auto on = wdvv::preset_params(extended ? FamilyPreset::BCDExtended : FamilyPreset::BCD, n, gamma);
      const double eta_star = -2.0 * (n - 2) - (extended ? *gamma * *gamma / 2.0 : 0.0);
      on.eta = eta_star;
      auto off = on;
      off.eta = eta_star == 0.0 ? 1.0 : 0.0;
      ordered_json r = skeleton(config, on);
      th["eta_star"] = eta_star;
      th["off_eta"] = off.eta;
      r["theorem"] = th;
      return run_cases(config, std::move(r),
                       {{"on", on, Verdict::Pass}, {"off", off, Verdict::Fail}}, extended);
    }
    case ConditionId::T5FourDim: {
      const auto params = resolve_params(config);
      const double v = wdvv::theorem_condition_value(id, params);
      const bool predicted = std::abs(v) <= wdvv::kConditionTolerance;
      ordered_json r = skeleton(config, params);
      th["value"] = v;
      th["predicted"] = predicted ? "pass" : "fail";
      r["theorem"] = th;
      return run_cases(config, std::move(r),
                       {{predicted ? "on" : "off", params, predicted ? Verdict::Pass : Verdict::Fail}},
                       false);
    }
    default: break;
  }

  const auto params = resolve_params(config);
  const auto report = wdvv::special_case_driver(params, points_of(config), config.seed);
  if (report.condition != id) {
    throw std::invalid_argument("parameters lie on the " + std::string(wdvv::to_string(report.branch)) +
                                " branch, condition " + std::string(wdvv::to_string(report.condition)));
  }
  ordered_json r = skeleton(config, params);
  th["branch"] = std::string(wdvv::to_string(report.branch));
  th["value"] = number(report.condition_value);
  th["predicted"] = report.predicted_pass ? (*report.predicted_pass ? "pass" : "fail") : "meaningless";
  if (report.commutator_norm) th["commutator_norm"] = *report.commutator_norm;
  if (report.exotic) {
    ordered_json ex;
    ex["b_sign"] = report.exotic->b_sign;
    ex["grouping"] = report.exotic->grouping.describe();
    ex["deviation"] = report.exotic->deviation;
    ex["identity_multiple"] = report.exotic->identity_multiple;
    ordered_json rejected = ordered_json::array();
    for (const auto& [g, dev] : report.exotic->rejected) {
      rejected.push_back(ordered_json{{"grouping", g.describe()}, {"deviation", dev}});
    }
    ex["rejected"] = rejected;
    th["exotic_metric"] = ex;
  }
  r["theorem"] = th;
  r["checks"] = ordered_json::array();
  Tally tally;
  bool inconclusive = false;
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    tally.add(report.checks[i].verdict);
    inconclusive = inconclusive || report.checks[i].verdict == Verdict::Inconclusive;
    r["checks"].push_back(check_json(report.checks[i], static_cast<int>(i)));
  }
  r["summary"] = tally.json();
  const int status = report.agrees ? kExitPass : (inconclusive ? kExitInconclusive : kExitFail);
  r["verdict"] = report.agrees ? "confirmed" : (inconclusive ? "inconclusive" : "contradicted");
  return Outcome{status, std::move(r)};
}

struct IdentityAccumulator {
  std::vector<wdvv::IdentityResult> items;

  void merge(const wdvv::IdentityResult& res, const std::string& prefix) {
    const std::string id = prefix + res.id;
    auto it = std::find_if(items.begin(), items.end(), [&](const auto& x) { return x.id == id; });
    if (it == items.end()) {
      items.push_back(res);
      items.back().id = id;
      return;
    }
    it->max_violation = std::max(it->max_violation, res.max_violation);
    it->evaluations += res.evaluations;
    if (res.rejected_violation) {
      it->rejected_violation = it->rejected_violation
                                   ? std::min(*it->rejected_violation, *res.rejected_violation)
                                   : *res.rejected_violation;
    }
  }

  void merge(const std::string& id, double violation, long evaluations) {
    merge(wdvv::IdentityResult{.id = id, .max_violation = violation, .evaluations = evaluations,
                               .reading = {}, .rejected_violation = std::nullopt},
          "");
  }
};

PrepotentialParams identity_params(const RunConfig& config, KernelKind kernel) {
  PrepotentialParams p = wdvv::preset_params(FamilyPreset::SimplestCase, config.n);
  p.kernel = kernel;
  p.a = config.a.value_or(1.0);
  p.b = config.b.value_or(2.0);
  p.c = config.c.value_or(0.0);
  return p;
}

Outcome run_identities(const RunConfig& config) {
  const int n = config.n;
  const double eta = config.eta.value_or(0.0);
  const PrepotentialParams coth = identity_params(config, KernelKind::Coth);
  const PrepotentialParams recip = identity_params(config, KernelKind::Reciprocal);
  IdentityAccumulator acc;
  for (int p = 0; p < points_of(config); ++p) {
    const SamplePoint pt = wdvv::make_sample_point(n, wdvv::kDefaultMargin,
                                                   wdvv::mix_seed(config.seed, static_cast<std::uint64_t>(p)));
    acc.merge(wdvv::three_term_identity(KernelKind::Coth, pt), "");
    acc.merge(wdvv::three_term_identity(KernelKind::Reciprocal, pt), "");
    for (const auto& res : wdvv::identity_suite_type_a(wdvv::TypeAVariant::Plus, pt)) acc.merge(res, "type-a-plus/");
    for (const auto& res : wdvv::identity_suite_type_a(wdvv::TypeAVariant::Minus, pt)) acc.merge(res, "type-a-minus/");
    for (const auto& res : wdvv::identity_suite_bcd(pt, eta)) acc.merge(res, "bcd/");

    for (const auto* params : {&coth, &recip}) {
      const auto t = wdvv::third_tensor(*params, pt);
      const auto slices = t.slices();
      const auto consts = wdvv::commutator_constants(*params);
      double comm = 0.0;
      long count = 0;
      for (int i = 0; i < n; ++i) {
        for (int m = 0; m < n; ++m) {
          const auto direct = wdvv::commutator(slices[static_cast<std::size_t>(i)], slices[static_cast<std::size_t>(m)]);
          comm = std::max(comm, wdvv::max_abs_diff(direct, wdvv::closedform_commutator(i, m, n, consts)));
          ++count;
        }
      }
      acc.merge(std::string("commutator(") + std::string(wdvv::to_string(params->kernel)) + ")", comm, count);
    }

    const auto t = wdvv::third_tensor(coth, pt);
    const auto dec = wdvv::simplest_case_decomposition(t, coth, pt);
    double uv = 0.0;
    for (int m = 0; m < n; ++m) {
      const auto product = wdvv::SquareMatrix::ones(n) * dec.v[static_cast<std::size_t>(m)];
      uv = std::max(uv, wdvv::max_abs_diff(product, wdvv::uv_product_closed_form(m, coth)));
    }
    acc.merge("uv-product", uv, n);
  }

  double bq = 0.0;
  long bq_count = 0;
  if (std::abs(n * coth.a + 2.0 * coth.b) > wdvv::kBranchZeroTolerance) {
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const auto [lhs, rhs] = wdvv::b_quadratic_identity(i, m, j, k, coth);
            bq = std::max(bq, std::abs(lhs - rhs));
            ++bq_count;
          }
    acc.merge("b-quadratic", bq, bq_count);
  }

  ordered_json r = skeleton(config, coth);
  r["identity_tolerance"] = kIdentityTolerance;
  r["checks"] = ordered_json::array();
  ordered_json ids = ordered_json::array();
  Tally tally;
  for (const auto& res : acc.items) {
    const Verdict v = res.max_violation <= kIdentityTolerance ? Verdict::Pass : Verdict::Fail;
    tally.add(v);
    ordered_json j;
    j["id"] = res.id;
    j["max_violation"] = number(res.max_violation);
    j["evaluations"] = res.evaluations;
    if (!res.reading.empty()) j["reading"] = res.reading;
    if (res.rejected_violation) j["rejected_violation"] = number(*res.rejected_violation);
    j["verdict"] = std::string(wdvv::to_string(v));
    ids.push_back(std::move(j));
  }
  r["identities"] = ids;
  r["summary"] = tally.json();
  r["verdict"] = status_word(tally.status());
  return Outcome{tally.status(), std::move(r)};
}

Outcome run_scan(const RunConfig& config) {
  const PrepotentialParams params = resolve_params(config);
  wdvv::ScanTask task;
  task.base = params;
  task.axes = config.axes.empty() ? wdvv::default_cubic_axes(config.n) : config.axes;
  task.refine = config.refine;
  task.seed = config.seed;
  task.threads = config.threads;
  const int per_cell = config.points.value_or(wdvv::kScanPointsPerCell);
  const auto result = wdvv::scan(task, per_cell, wdvv::kDefaultHitTolerance);

  ordered_json r = skeleton(config, params);
  ordered_json s;
  ordered_json axes = ordered_json::array();
  for (const auto& ax : task.axes) {
    axes.push_back(ordered_json{{"param", std::string(wdvv::to_string(ax.param))},
                                {"lo", ax.lo},
                                {"hi", ax.hi},
                                {"steps", ax.steps}});
  }
  s["axes"] = axes;
  s["points_per_cell"] = per_cell;
  s["hit_tolerance"] = wdvv::kDefaultHitTolerance;
  s["refine"] = task.refine;
  s["cells"] = result.cells;
  s["points_tested"] = result.points_tested;
  s["grid_min_residual"] = number(result.grid_min_residual);
  s["grid_hits"] = result.grid_hits.size();
  s["refinement_starts"] = result.refinement_starts;
  s["rejected_candidates"] = result.rejected_candidates;
  ordered_json hits = ordered_json::array();
  for (const auto& h : result.hits) {
    ordered_json j;
    ordered_json values;
    PrepotentialParams at = params;
    for (std::size_t k = 0; k < task.axes.size(); ++k) {
      values[std::string(wdvv::to_string(task.axes[k].param))] = h.values[k];
      wdvv::set_param(at, task.axes[k].param, h.values[k]);
    }
    j["values"] = values;
    j["residual"] = number(h.residual);
    j["refined"] = h.refined;
    try {
      j["condition"] = condition_json(at);
    } catch (const wdvv::Error&) {
      j["condition"] = nullptr;
    }
    hits.push_back(std::move(j));
  }
  s["hits"] = hits;
  s["statement"] = result.hits.empty() ? "no hits on this grid at this resolution"
                                       : "no other hits on this grid at this resolution";
  r["scan"] = s;
  r["checks"] = ordered_json::array();
  r["summary"] = Tally{}.json();
  r["verdict"] = "complete";
  return Outcome{kExitPass, std::move(r)};
}

Outcome run_reduce(const RunConfig& config) {
  const int n = config.n;
  const PrepotentialParams params = wdvv::preset_params(FamilyPreset::TypeAPlus, n);
  ordered_json r = skeleton(config, params);
  r["reduction_tolerance"] = kReductionTolerance;
  r["checks"] = ordered_json::array();
  Tally tally;
  for (int i = 0; i < points_of(config); ++i) {
    const SamplePoint pt = point_for(params, config.seed, i);
    const double diff = wdvv::max_abs_diff(wdvv::reduce_type_a(n, pt), wdvv::third_tensor(params, pt));
    const Verdict v = diff <= kReductionTolerance ? Verdict::Pass : Verdict::Fail;
    tally.add(v);
    ordered_json j;
    j["index"] = i;
    j["point"] = point_json(pt);
    j["metric"] = "none";
    j["residual"] = number(diff);
    j["verdict"] = std::string(wdvv::to_string(v));
    r["checks"].push_back(std::move(j));
  }
  r["summary"] = tally.json();
  r["verdict"] = status_word(tally.status());
  return Outcome{tally.status(), std::move(r)};
}

template <class T>
T json_get(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

template <class T, class Parse>
T parse_or_throw(Parse parse, const std::string& text, const std::string& what) {
  const auto v = parse(text);
  if (!v) throw std::invalid_argument("unknown " + what + " '" + text + "'");
  return *v;
}

}  // namespace

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::Check: return "check";
    case Command::Theorem: return "theorem";
    case Command::Identities: return "identities";
    case Command::Scan: return "scan";
    case Command::ReduceA: return "reduce-a";
  }
  return "unknown";
}

std::string_view to_string(Format format) noexcept {
  switch (format) {
    case Format::Json: return "json";
    case Format::Csv: return "csv";
    case Format::Text: return "text";
  }
  return "unknown";
}

std::string_view to_string(MetricChoice metric) noexcept {
  switch (metric) {
    case MetricChoice::Sum: return "sum";
    case MetricChoice::TypeA: return "type-a";
    case MetricChoice::BcdSinh: return "bcd-sinh";
    case MetricChoice::Extra: return "extra";
    case MetricChoice::Random: return "random";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view text) noexcept {
  for (Command c : {Command::Check, Command::Theorem, Command::Identities, Command::Scan, Command::ReduceA}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

std::optional<Format> parse_format(std::string_view text) noexcept {
  for (Format f : {Format::Json, Format::Csv, Format::Text}) {
    if (text == to_string(f)) return f;
  }
  return std::nullopt;
}

std::optional<MetricChoice> parse_metric(std::string_view text) noexcept {
  for (MetricChoice m : {MetricChoice::Sum, MetricChoice::TypeA, MetricChoice::BcdSinh, MetricChoice::Extra,
                         MetricChoice::Random}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

std::optional<wdvv::GridAxis> parse_axis(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4) return std::nullopt;
  const auto param = wdvv::parse_free_param(parts[0]);
  if (!param) return std::nullopt;
  try {
    std::size_t used = 0;
    wdvv::GridAxis ax;
    ax.param = *param;
    ax.lo = std::stod(parts[1], &used);
    if (used != parts[1].size()) return std::nullopt;
    ax.hi = std::stod(parts[2], &used);
    if (used != parts[2].size()) return std::nullopt;
    ax.steps = std::stoi(parts[3], &used);
    if (used != parts[3].size()) return std::nullopt;
    return ax;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void apply_json(RunConfig& config, const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    if (key == "command") {
      config.command = parse_or_throw<Command>(parse_command, json_get<std::string>(v, key), "command");
    } else if (key == "preset") {
      config.preset = parse_or_throw<FamilyPreset>(wdvv::parse_preset, json_get<std::string>(v, key), "preset");
    } else if (key == "n") {
      config.n = json_get<int>(v, key);
    } else if (key == "kernel") {
      config.kernel = parse_or_throw<KernelKind>(wdvv::parse_kernel, json_get<std::string>(v, key), "kernel");
    } else if (key == "eta") {
      config.eta = json_get<double>(v, key);
    } else if (key == "gamma") {
      config.gamma = json_get<double>(v, key);
    } else if (key == "a") {
      config.a = json_get<double>(v, key);
    } else if (key == "b") {
      config.b = json_get<double>(v, key);
    } else if (key == "c") {
      config.c = json_get<double>(v, key);
    } else if (key == "points") {
      config.points = json_get<int>(v, key);
    } else if (key == "seed") {
      config.seed = json_get<std::uint64_t>(v, key);
    } else if (key == "tol") {
      config.tol = json_get<double>(v, key);
    } else if (key == "metric") {
      config.metric = parse_or_throw<MetricChoice>(parse_metric, json_get<std::string>(v, key), "metric");
    } else if (key == "format") {
      config.format = parse_or_throw<Format>(parse_format, json_get<std::string>(v, key), "format");
    } else if (key == "out") {
      config.out = json_get<std::string>(v, key);
    } else if (key == "deterministic") {
      config.deterministic = json_get<bool>(v, key);
    } else if (key == "id") {
      config.theorem = parse_or_throw<ConditionId>(wdvv::parse_condition, json_get<std::string>(v, key),
                                                   "theorem id");
    } else if (key == "axes") {
      config.axes.clear();
      for (const auto& item : json_get<std::vector<std::string>>(v, key)) {
        const auto ax = parse_axis(item);
        if (!ax) throw std::invalid_argument("bad axis '" + item + "', expected param:lo:hi:steps");
        config.axes.push_back(*ax);
      }
    } else if (key == "refine") {
      config.refine = json_get<bool>(v, key);
    } else if (key == "threads") {
      config.threads = json_get<int>(v, key);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

std::variant<RunConfig, UsageError, int> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Numerical checks of the generalized WDVV equations for 5D prepotentials", "wdvv"};
  app.set_version_flag("--version", WDVV_VERSION);

  std::string command, config_path, preset, kernel, metric, format, out_path, theorem;
  std::vector<std::string> axes;
  int n = 0, points = 0, threads = 0;
  double eta = 0, gamma = 0, a = 0, b = 0, c = 0, tol = 0;
  std::uint64_t seed = 0;
  bool deterministic = false, no_refine = false;

  app.add_option("command", command, "check | theorem | identities | scan | reduce-a");
  app.add_option("--config", config_path, "flat JSON file with defaults for any flag");
  app.add_option("--preset", preset,
                 "simplest | type-a-plus | type-a-minus | bcd | bcd-extended | four-dim");
  app.add_option("--n", n, "number of base variables N");
  app.add_option("--kernel", kernel, "coth | recip");
  app.add_option("--eta", eta);
  app.add_option("--gamma", gamma, "extra-variable coupling (bcd-extended)");
  app.add_option("--a", a);
  app.add_option("--b", b);
  app.add_option("--c", c);
  app.add_option("--points", points, "sample points per check (grid points per node for scan)");
  app.add_option("--seed", seed);
  app.add_option("--tol", tol, "pass tolerance on the residual");
  app.add_option("--metric", metric, "sum | type-a | bcd-sinh | extra | random");
  app.add_option("--format", format, "json | csv | text");
  app.add_option("--out", out_path, "report path (stdout when absent)");
  app.add_flag("--deterministic", deterministic, "omit the timestamp so reports are byte-identical");
  app.add_option("--id", theorem, "theorem condition: t1 t1-na2b t1-nbc t1-degenerate t2 t3 t4 t5");
  app.add_option("--axis", axes, "scan axis param:lo:hi:steps (repeatable)");
  app.add_flag("--no-refine", no_refine, "report raw grid hits without refinement");
  app.add_option("--threads", threads, "scan worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForVersion&) {
    out << WDVV_VERSION << "\n";
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    return UsageError{e.what()};
  }

  RunConfig config;
  try {
    if (app.count("--config")) {
      std::ifstream in(config_path);
      if (!in) return UsageError{"cannot read config " + config_path + ": " + std::strerror(errno)};
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        return UsageError{"config " + config_path + " is not valid JSON: " + e.what()};
      }
      apply_json(config, doc);
    }
    if (app.count("command")) config.command = parse_or_throw<Command>(parse_command, command, "command");
    if (app.count("--preset")) config.preset = parse_or_throw<FamilyPreset>(wdvv::parse_preset, preset, "preset");
    if (app.count("--n")) config.n = n;
    if (app.count("--kernel")) config.kernel = parse_or_throw<KernelKind>(wdvv::parse_kernel, kernel, "kernel");
    if (app.count("--eta")) config.eta = eta;
    if (app.count("--gamma")) config.gamma = gamma;
    if (app.count("--a")) config.a = a;
    if (app.count("--b")) config.b = b;
    if (app.count("--c")) config.c = c;
    if (app.count("--points")) config.points = points;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--tol")) config.tol = tol;
    if (app.count("--metric")) config.metric = parse_or_throw<MetricChoice>(parse_metric, metric, "metric");
    if (app.count("--format")) config.format = parse_or_throw<Format>(parse_format, format, "format");
    if (app.count("--out")) config.out = out_path;
    if (deterministic) config.deterministic = true;
    if (app.count("--id")) {
      config.theorem = parse_or_throw<ConditionId>(wdvv::parse_condition, theorem, "theorem id");
    }
    if (app.count("--axis")) {
      config.axes.clear();
      for (const auto& item : axes) {
        const auto ax = parse_axis(item);
        if (!ax) return UsageError{"bad axis '" + item + "', expected param:lo:hi:steps"};
        config.axes.push_back(*ax);
      }
    }
    if (no_refine) config.refine = false;
    if (app.count("--threads")) config.threads = threads;
  } catch (const std::invalid_argument& e) {
    return UsageError{e.what()};
  }
  if (!app.count("command") && !app.count("--config")) return UsageError{"no command given"};
  return config;
}

std::optional<std::string> validate(const RunConfig& config) {
  if (config.n < 2 || config.n > kMaxN) return "n must lie in [2, " + std::to_string(kMaxN) + "]";
  if (config.points && (*config.points < 1 || *config.points > kMaxPoints)) {
    return "points must lie in [1, " + std::to_string(kMaxPoints) + "]";
  }
  if (!(config.tol > 0.0) || !std::isfinite(config.tol)) return "tol must be a positive finite number";
  if (config.threads < 0) return "threads must be non-negative";
  for (const auto& [name, v] : {std::pair{"eta", config.eta}, std::pair{"gamma", config.gamma},
                                std::pair{"a", config.a}, std::pair{"b", config.b}, std::pair{"c", config.c}}) {
    if (v && !std::isfinite(*v)) return std::string(name) + " must be finite";
  }
  if (config.command == Command::Theorem && !config.theorem) return "theorem needs --id";
  if (config.command != Command::Theorem && config.theorem) return "--id is only valid for theorem";
  if (config.command != Command::Scan && (!config.axes.empty() || !config.refine)) {
    return "--axis and --no-refine are only valid for scan";
  }
  if (config.command == Command::Scan) {
    wdvv::ScanTask task;
    task.axes = config.axes.empty() ? wdvv::default_cubic_axes(config.n) : config.axes;
    for (const auto& ax : task.axes) {
      if (!std::isfinite(ax.lo) || !std::isfinite(ax.hi) || !(ax.lo < ax.hi)) {
        return "axis " + std::string(wdvv::to_string(ax.param)) + " needs finite lo < hi";
      }
    }
    try {
      wdvv::validate_task(task);
    } catch (const wdvv::Error& e) {
      return std::string(e.what());
    }
  }
  if (config.gamma && *config.gamma == 0.0) return "gamma must be nonzero";
  const bool fixed_family =
      config.command == Command::Identities || config.command == Command::ReduceA ||
      (config.command == Command::Theorem &&
       (config.theorem == ConditionId::T2TypeA || config.theorem == ConditionId::T3BCD ||
        config.theorem == ConditionId::T4Extended));
  if (!fixed_family) {
    PrepotentialParams p;
    try {
      p = resolve_params(config);
    } catch (const wdvv::Error& e) {
      return std::string(e.what());
    }
    if (config.metric == MetricChoice::Extra && !p.gamma) return "metric extra needs the bcd-extended preset";
  }
  return std::nullopt;
}

PrepotentialParams resolve_params(const RunConfig& config) {
  const FamilyPreset preset = effective_preset(config);
  std::optional<double> gamma = config.gamma;
  if (preset == FamilyPreset::BCDExtended && !gamma) gamma = 1.0;
  PrepotentialParams p = wdvv::preset_params(preset, config.n, gamma);
  if (config.kernel) p.kernel = *config.kernel;
  if (config.eta) p.eta = *config.eta;
  if (config.a) p.a = *config.a;
  if (config.b) p.b = *config.b;
  if (config.c) p.c = *config.c;
  p.validate();
  return p;
}

Outcome execute(const RunConfig& config) {
  switch (config.command) {
    case Command::Check: return run_check(config);
    case Command::Theorem: return run_theorem(config);
    case Command::Identities: return run_identities(config);
    case Command::Scan: return run_scan(config);
    case Command::ReduceA: return run_reduce(config);
  }
  throw std::invalid_argument("unknown command");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string scalar_text(const ordered_json& v, int precision) {
  if (v.is_number_float()) return format_number(v.get<double>(), precision);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::string vector_text(const ordered_json& arr, int precision) {
  std::string s;
  for (const auto& x : arr) {
    if (!s.empty()) s += ' ';
    s += scalar_text(x, precision);
  }
  return s;
}

std::string values_text(const ordered_json& obj, int precision) {
  std::string s;
  for (const auto& [k, v] : obj.items()) {
    if (!s.empty()) s += ' ';
    s += k + "=" + scalar_text(v, precision);
  }
  return s;
}

std::string render_csv(const ordered_json& r) {
  std::ostringstream os;
  os << "kind,index,label,point,metric,residual,verdict\n";
  for (const auto& chk : r["checks"]) {
    std::string label = chk.contains("case") ? chk["case"].get<std::string>() : "";
    if (chk.contains("form")) label += "/" + chk["form"].get<std::string>();
    os << "check," << chk["index"].get<int>() << ',' << csv_field(label) << ','
       << csv_field(vector_text(chk["point"], 17)) << ',' << csv_field(chk["metric"].get<std::string>()) << ','
       << scalar_text(chk["residual"], 17) << ',' << chk["verdict"].get<std::string>() << '\n';
  }
  if (r.contains("identities")) {
    int i = 0;
    for (const auto& id : r["identities"]) {
      os << "identity," << i++ << ',' << csv_field(id["id"].get<std::string>()) << ",,,"
         << scalar_text(id["max_violation"], 17) << ',' << id["verdict"].get<std::string>() << '\n';
    }
  }
  if (r.contains("scan")) {
    int i = 0;
    for (const auto& h : r["scan"]["hits"]) {
      os << "hit," << i++ << ",," << csv_field(values_text(h["values"], 17)) << ",,"
         << scalar_text(h["residual"], 17) << ",hit\n";
    }
  }
  return os.str();
}

std::string render_text(const ordered_json& r) {
  std::ostringstream os;
  os << "wdvv " << r["version"].get<std::string>() << "  " << r["command"].get<std::string>() << "\n";
  const auto& p = r["params"];
  os << "params: kernel=" << p["kernel"].get<std::string>() << " N=" << p["n"].get<int>()
     << " alpha-=" << scalar_text(p["alpha_minus"], 6) << " alpha+=" << scalar_text(p["alpha_plus"], 6)
     << " eta=" << scalar_text(p["eta"], 6) << " a=" << scalar_text(p["a"], 6)
     << " b=" << scalar_text(p["b"], 6) << " c=" << scalar_text(p["c"], 6);
  if (!p["gamma"].is_null()) os << " gamma=" << scalar_text(p["gamma"], 6);
  os << "\n";
  const ordered_json* cond = nullptr;
  if (r.contains("theorem")) cond = &r["theorem"];
  if (r.contains("condition") && !r["condition"].is_null()) cond = &r["condition"];
  if (cond) {
    os << "testing: " << (*cond)["anchor"].get<std::string>() << "\n";
    if (cond->contains("value")) os << "condition value: " << scalar_text((*cond)["value"], 10) << "\n";
    if (cond->contains("eta_star")) os << "eta* = " << scalar_text((*cond)["eta_star"], 10) << "\n";
    if (cond->contains("predicted")) os << "predicted: " << (*cond)["predicted"].get<std::string>() << "\n";
  }
  for (const auto& chk : r["checks"]) {
    os << "  [" << chk["index"].get<int>() << "]";
    if (chk.contains("case")) os << ' ' << chk["case"].get<std::string>();
    if (chk.contains("form")) os << '/' << chk["form"].get<std::string>();
    os << " point (" << vector_text(chk["point"], 6) << ") metric " << chk["metric"].get<std::string>()
       << " residual " << scalar_text(chk["residual"], 3) << " " << chk["verdict"].get<std::string>() << "\n";
  }
  if (r.contains("identities")) {
    for (const auto& id : r["identities"]) {
      os << "  " << id["id"].get<std::string>() << ": max violation " << scalar_text(id["max_violation"], 3);
      if (id.contains("reading")) os << " (reading " << id["reading"].get<std::string>() << ")";
      os << " " << id["verdict"].get<std::string>() << "\n";
    }
  }
  if (r.contains("scan")) {
    const auto& s = r["scan"];
    os << "grid:";
    for (const auto& ax : s["axes"]) {
      os << ' ' << ax["param"].get<std::string>() << "[" << scalar_text(ax["lo"], 6) << ", "
         << scalar_text(ax["hi"], 6) << "]x" << ax["steps"].get<int>();
    }
    os << "  cells " << s["cells"].get<long>() << "  min grid residual " << scalar_text(s["grid_min_residual"], 3)
       << "\n";
    for (const auto& h : s["hits"]) {
      os << "  hit " << values_text(h["values"], 10) << " residual " << scalar_text(h["residual"], 3) << "\n";
    }
    os << s["statement"].get<std::string>() << "\n";
  }
  const auto& sm = r["summary"];
  os << "summary: pass " << sm["pass"].get<int>() << ", fail " << sm["fail"].get<int>() << ", inconclusive "
     << sm["inconclusive"].get<int>() << ", degenerate " << sm["degenerate"].get<int>() << "\n";
  os << "verdict: " << r["verdict"].get<std::string>() << "\n";
  return os.str();
}

}  // namespace

std::string render(const ordered_json& report, Format format) {
  switch (format) {
    case Format::Json: return report.dump(2) + "\n";
    case Format::Csv: return render_csv(report);
    case Format::Text: return render_text(report);
  }
  return {};
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path + ": " + std::strerror(errno));
    out << content;
    out.flush();
    if (!out) {
      const std::string cause = std::strerror(errno);
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("cannot write " + path + ": " + cause);
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw std::runtime_error("cannot write " + path + ": " + ec.message());
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (const auto problem = validate(config)) {
    err << "wdvv: " << *problem << "\n";
    return kExitUsage;
  }
  Outcome outcome;
  try {
    outcome = execute(config);
  } catch (const wdvv::Error& e) {
    err << "wdvv: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "wdvv: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::string content = render(outcome.report, config.format);
  if (!config.out) {
    out << content;
    return outcome.status;
  }
  try {
    write_atomic(*config.out, content);
  } catch (const std::runtime_error& e) {
    err << "wdvv: " << e.what() << "\n";
    return kExitIo;
  }
  return outcome.status;
}

}  // namespace wdvvtool
