#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "wdvv/closedform.hpp"
#include "wdvv/error.hpp"
#include "wdvv/random.hpp"

using namespace wdvv;

namespace {

PrepotentialParams simplest(int n, double a, double b, double c,
                            FamilyPreset preset = FamilyPreset::SimplestCase) {
  auto p = preset_params(preset, n);
  p.a = a;
  p.b = b;
  p.c = c;
  return p;
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no wdvv::Error thrown";
  return ErrorKind::InvalidArgument;
}

SquareMatrix diagonal(std::span<const double> d) {
  SquareMatrix m(static_cast<int>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) m(static_cast<int>(k), static_cast<int>(k)) = d[k];
  return m;
}

}  // namespace

TEST(ConditionTest, OnVarietyValuesVanish) {
  EXPECT_NEAR(theorem_condition_value(ConditionId::T1Generic, simplest(3, -0.125, 0.0, 1.0)), 0.0,
              1e-15);
  auto bcd = preset_params(FamilyPreset::BCD, 4);
  bcd.eta = -4.0;
  EXPECT_EQ(theorem_condition_value(ConditionId::T3BCD, bcd), 0.0);
  auto ext = preset_params(FamilyPreset::BCDExtended, 3, 2.0);
  ext.eta = -4.0;
  EXPECT_EQ(theorem_condition_value(ConditionId::T4Extended, ext), 0.0);
  EXPECT_EQ(theorem_condition_value(ConditionId::T2TypeA, preset_params(FamilyPreset::TypeAMinus, 5)),
            0.0);
}

TEST(ConditionTest, OffVarietyValues) {
  EXPECT_DOUBLE_EQ(theorem_condition_value(ConditionId::T1Generic, simplest(3, 1.0, 1.0, 1.0)),
                   3.0 + 3.0 - 1.0 + 9.0 + 1.0 + 9.0);
  EXPECT_DOUBLE_EQ(
      theorem_condition_value(ConditionId::T5FourDim,
                              simplest(3, 3.0, 1.0, 1.0, FamilyPreset::FourDimSimplest)),
      3.0);
  EXPECT_DOUBLE_EQ(theorem_condition_value(ConditionId::T1SpecialNa2b, simplest(2, 1.0, -1.0, 1.0)),
                   1.0);
  EXPECT_DOUBLE_EQ(theorem_condition_value(ConditionId::T1SpecialNbc, simplest(4, 1.0, 0.5, -2.0)),
                   0.75);
}

TEST(ConditionTest, GuardsAndFamilies) {
  EXPECT_EQ(kind_of([] {
              theorem_condition_value(ConditionId::T5FourDim,
                                      simplest(2, 3.0, 1.0, 1.0, FamilyPreset::FourDimSimplest));
            }),
            ErrorKind::BranchGuard);
  EXPECT_EQ(kind_of([] { theorem_condition_value(ConditionId::T1Generic, simplest(2, 1.0, -1.0, 0.0)); }),
            ErrorKind::BranchGuard);
  EXPECT_EQ(kind_of([] {
              theorem_condition_value(ConditionId::T1Generic, preset_params(FamilyPreset::BCD, 3));
            }),
            ErrorKind::WrongFamily);
  EXPECT_TRUE(std::isnan(
      theorem_condition_value(ConditionId::T1DoublyDegenerate, simplest(3, 2.0, -3.0, 9.0))));
}

TEST(ConditionTest, BranchSelection) {
  EXPECT_EQ(simplest_branch(simplest(3, 1.0, 1.0, 1.0)), SimplestBranch::Generic);
  EXPECT_EQ(simplest_branch(simplest(2, 1.0, -1.0, 0.0)), SimplestBranch::SpecialNa2b);
  EXPECT_EQ(simplest_branch(simplest(3, 1.0, 0.5, -1.5)), SimplestBranch::SpecialNbc);
  EXPECT_EQ(simplest_branch(simplest(3, 2.0, -3.0, 9.0)), SimplestBranch::DoublyDegenerate);
  EXPECT_TRUE(condition_applicable(ConditionId::T1Generic, simplest(3, 1.0, 1.0, 1.0)));
  EXPECT_FALSE(condition_applicable(ConditionId::T1Generic, simplest(2, 1.0, -1.0, 0.0)));
  for (auto id : {ConditionId::T1Generic, ConditionId::T1SpecialNa2b, ConditionId::T1SpecialNbc,
                  ConditionId::T1DoublyDegenerate, ConditionId::T2TypeA, ConditionId::T3BCD,
                  ConditionId::T4Extended, ConditionId::T5FourDim})
    EXPECT_EQ(parse_condition(to_string(id)), id);
}

TEST(DecompositionTest, ZeroCubicLeavesOnlyV) {
  const auto p = simplest(3, 0.0, 0.7, -0.4);
  const auto pt = make_sample_point(3, kDefaultMargin, 1);
  const auto t = third_tensor(p, pt);
  const auto d = simplest_case_decomposition(t, p, pt);
  EXPECT_EQ(max_abs_entry(d.a_u), 0.0);
  for (int k = 0; k < 3; ++k) EXPECT_LT(max_abs_diff(d.v[k], t.slice(k)), 1e-15);
}

TEST(DecompositionTest, ReconstructsSlices) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const auto p = simplest(n, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const auto pt = make_sample_point(n, kDefaultMargin, trial);
    const auto t = third_tensor(p, pt);
    const auto d = simplest_case_decomposition(t, p, pt);
    for (int k = 0; k < n; ++k) {
      EXPECT_LT(max_abs_diff(d.a_u + d.v[k], t.slice(k)), 1e-12);
      EXPECT_LT(max_abs_diff(d.v[k], d.v[k].transposed()), 1e-15);
    }
  }
}

TEST(UvProductTest, MatchesClosedForm) {
  Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 5;
    const auto p = simplest(n, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const auto pt = make_sample_point(n, kDefaultMargin, trial);
    const auto d = simplest_case_decomposition(third_tensor(p, pt), p, pt);
    for (int m = 0; m < n; ++m) {
      const SquareMatrix uv = SquareMatrix::ones(n) * d.v[m];
      EXPECT_LT(max_abs_diff(uv, uv_product_closed_form(m, p)), 1e-10);
    }
  }
}

TEST(UvProductTest, DiagonalCarriesTheExtraTerm) {
  const auto p = simplest(3, 0.4, 0.5, 2.0);
  const auto pt = make_sample_point(3, kDefaultMargin, 2);
  const auto d = simplest_case_decomposition(third_tensor(p, pt), p, pt);
  const SquareMatrix uv = SquareMatrix::ones(3) * d.v[1];
  EXPECT_NEAR(uv(1, 1), 2.0 * 0.5 + 3.0 * 0.5 + 2.0, 1e-12);
  EXPECT_NEAR(uv(0, 1), 2.0 * 0.5 + 3.0 * 0.5 + 2.0, 1e-12);
  EXPECT_NEAR(uv(0, 2), 2.0 * 0.5, 1e-12);
}

TEST(CommutatorClosedFormTest, SpotCase) {
  const auto p = simplest(3, 1.0, 2.0, 0.0);
  const auto pt = make_sample_point(3, kDefaultMargin, 5);
  const auto t = third_tensor(p, pt);
  const auto k = commutator_constants(p);
  EXPECT_DOUBLE_EQ(k.alpha, 4.0 - 1.0 + 0.0 + 6.0);
  EXPECT_DOUBLE_EQ(k.beta, 3.0 + 12.0 + 0.0);
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m) {
      const auto direct = commutator(t.slice(i), t.slice(m));
      EXPECT_LT(max_abs_diff(closedform_commutator(i, m, 3, k), direct), 1e-9);
    }
}

TEST(CommutatorClosedFormTest, RandomDrawsBothKernels) {
  Rng rng(6);
  for (auto preset : {FamilyPreset::SimplestCase, FamilyPreset::FourDimSimplest}) {
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 5;
      const auto p = simplest(n, rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), preset);
      const auto pt = make_sample_point(n, kDefaultMargin, trial);
      const auto t = third_tensor(p, pt);
      const auto k = commutator_constants(p);
      for (int i = 0; i < n; ++i)
        for (int m = i + 1; m < n; ++m) {
          const auto direct = commutator(t.slice(i), t.slice(m));
          ASSERT_LT(max_abs_diff(closedform_commutator(i, m, n, k), direct),
                    1e-10 * (1.0 + max_abs_entry(direct)));
        }
    }
  }
}

TEST(CommutatorClosedFormTest, EqualIndicesGiveZero) {
  EXPECT_EQ(max_abs_entry(delta_pattern(2, 2, 4, 1.5, -3.0)), 0.0);
}

TEST(BQuadraticTest, FrozenSpotValue) {
  const auto [lhs, rhs] = b_quadratic_identity(0, 1, 0, 1, simplest(4, 1.0, 1.0, 1.0));
  EXPECT_DOUBLE_EQ(lhs, 85.0);
  EXPECT_NEAR(rhs, 85.0, 1e-12);
}

TEST(BQuadraticTest, EqualIndicesVanish) {
  const auto [lhs, rhs] = b_quadratic_identity(1, 1, 0, 2, simplest(4, 0.3, 1.0, 1.0));
  EXPECT_EQ(lhs, 0.0);
  EXPECT_EQ(rhs, 0.0);
}

TEST(BQuadraticTest, RandomDraws) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 5;
    const auto p = simplest(n, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    if (std::abs(n * p.a + 2 * p.b) < 0.05) continue;
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            const auto [lhs, rhs] = b_quadratic_identity(i, m, j, l, p);
            ASSERT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
          }
  }
}

TEST(BQuadraticTest, GuardOnVanishingSlope) {
  EXPECT_EQ(kind_of([] { b_quadratic_identity(0, 1, 0, 1, simplest(2, 1.0, -1.0, 0.0)); }),
            ErrorKind::BranchGuard);
}

TEST(IdentitySuiteTest, TypeARelationsHold) {
  for (auto v : {TypeAVariant::Plus, TypeAVariant::Minus}) {
    for (int n = 3; n <= 6; ++n) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto results = identity_suite_type_a(v, make_sample_point(n, kDefaultMargin, seed));
        ASSERT_EQ(results.size(), 7u);
        for (const auto& r : results) {
          EXPECT_LT(r.max_violation, 1e-10) << "relation " << r.id << " n=" << n;
          EXPECT_GT(r.evaluations, 0);
          if (r.rejected_violation) {
            EXPECT_FALSE(r.reading.empty());
            EXPECT_GT(*r.rejected_violation, 1e-3) << "relation " << r.id;
          }
        }
      }
    }
  }
}

TEST(IdentitySuiteTest, BcdRelationsHold) {
  Rng rng(8);
  for (int n = 3; n <= 6; ++n) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto results =
          identity_suite_bcd(make_sample_point(n, kDefaultMargin, seed), rng.uniform(-4, 2));
      ASSERT_EQ(results.size(), 4u);
      for (const auto& r : results) EXPECT_LT(r.max_violation, 1e-10) << r.id;
    }
  }
}

TEST(ExpandedProductTest, MatchesDirectProductForArbitraryWeights) {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    auto p = simplest(n, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    p.eta = rng.uniform(-2, 2);
    if (trial % 2) p.alpha_plus = 1.0;
    const auto pt = make_sample_point(n, kDefaultMargin, trial);
    const auto t = third_tensor(p, pt);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (auto& x : w) x = rng.uniform(0.5, 2.0);
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) {
        const SquareMatrix direct = t.slice(i) * diagonal(w) * t.slice(m);
        ASSERT_LT(max_abs_diff(expanded_diagonal_product(p, pt, w, i, m), direct),
                  1e-10 * (1.0 + max_abs_entry(direct)));
      }
  }
}

TEST(ExpandedProductTest, TypeAClosedFormWeights) {
  for (auto [preset, variant] : {std::pair{FamilyPreset::TypeAPlus, TypeAVariant::Plus},
                                 std::pair{FamilyPreset::TypeAMinus, TypeAVariant::Minus}}) {
    const int n = 4;
    const auto p = preset_params(preset, n);
    const auto pt = make_sample_point(n, kDefaultMargin, 3);
    const auto t = third_tensor(p, pt);
    const auto w = type_a_closed_forms(variant, pt).a_weights;
    const auto b = build_metric(t, pt, metric::TypeAWeights{variant});
    const auto inv = diagonal_inverse_weights(b);
    for (int k = 1; k < n; ++k) EXPECT_NEAR(inv[k] / w[k], inv[0] / w[0], 1e-10 * std::abs(inv[0] / w[0]));
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < n; ++m) {
        const SquareMatrix direct = t.slice(i) * diagonal(w) * t.slice(m);
        EXPECT_LT(max_abs_diff(expanded_diagonal_product(p, pt, w, i, m), direct),
                  1e-9 * (1.0 + max_abs_entry(direct)));
      }
  }
}

TEST(ExpandedProductTest, ZeroWeightIsRefused) {
  const auto p = preset_params(FamilyPreset::TypeAPlus, 3);
  const auto pt = make_sample_point(3, kDefaultMargin, 0);
  const std::vector<double> w = {1.0, 0.0, 1.0};
  EXPECT_EQ(kind_of([&] { expanded_diagonal_product(p, pt, w, 0, 1); }), ErrorKind::ZeroWeight);
  EXPECT_EQ(kind_of([] { diagonal_inverse_weights(SquareMatrix::ones(2)); }),
            ErrorKind::InvalidArgument);
}

TEST(ExoticMetricTest, PositiveSignGivesScalarMetric) {
  for (int n = 3; n <= 6; ++n) {
    const auto p = simplest(n, 0.37, 1.0, -n);
    const auto r = exotic_metric_check(1, p, make_sample_point(n, kDefaultMargin, 1));
    EXPECT_TRUE(r.identity_multiple) << "n=" << n << " deviation " << r.deviation;
  }
}

TEST(ExoticMetricTest, NegativeSignSelectsOuterScalarGrouping) {
  for (int n = 3; n <= 5; ++n) {
    const auto p = simplest(n, 0.37, -1.0, n);
    const auto r = exotic_metric_check(-1, p, make_sample_point(n, kDefaultMargin, 2));
    EXPECT_TRUE(r.identity_multiple);
    EXPECT_EQ(r.grouping, (ExoticGrouping{false, false}));
    EXPECT_EQ(r.rejected.size(), 3u);
    for (const auto& [g, dev] : r.rejected) EXPECT_GT(dev, 1e-3) << g.describe();
  }
  EXPECT_EQ(kind_of([] {
              exotic_weights(0, simplest(3, 0.37, 1.0, -3.0), make_sample_point(3, kDefaultMargin, 0));
            }),
            ErrorKind::InvalidArgument);
}

TEST(SpecialCaseTest, SlopeBranchOnCurvePasses) {
  const auto r = special_case_driver(simplest(3, 0.5, -0.75, 3.125));
  EXPECT_EQ(r.branch, SimplestBranch::SpecialNa2b);
  EXPECT_EQ(r.condition, ConditionId::T1SpecialNa2b);
  EXPECT_NEAR(r.condition_value, 0.0, 1e-15);
  ASSERT_TRUE(r.predicted_pass.has_value());
  EXPECT_TRUE(*r.predicted_pass);
  EXPECT_TRUE(r.agrees);
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass);
  ASSERT_TRUE(r.commutator_norm.has_value());
}

TEST(SpecialCaseTest, InterceptBranchAtThreePasses) {
  const auto r = special_case_driver(simplest(3, 1.0, 0.5, -1.5));
  EXPECT_EQ(r.branch, SimplestBranch::SpecialNbc);
  EXPECT_TRUE(r.predicted_pass.value_or(false));
  EXPECT_TRUE(r.agrees);
}

TEST(SpecialCaseTest, InterceptBranchAtFourFails) {
  const auto r = special_case_driver(simplest(4, 1.0, 0.5, -2.0));
  EXPECT_EQ(r.branch, SimplestBranch::SpecialNbc);
  EXPECT_FALSE(r.predicted_pass.value_or(true));
  EXPECT_TRUE(r.agrees);
  for (const auto& c : r.checks) EXPECT_EQ(c.verdict, Verdict::Fail);
}

TEST(SpecialCaseTest, InterceptBranchUnitSlopePassesAtAnyN) {
  for (int n = 4; n <= 6; ++n) {
    for (double b : {1.0, -1.0}) {
      const auto r = special_case_driver(simplest(n, 0.6, b, -n * b));
      EXPECT_TRUE(r.predicted_pass.value_or(false)) << "n=" << n << " b=" << b;
      EXPECT_TRUE(r.agrees) << "n=" << n << " b=" << b;
    }
  }
}

TEST(SpecialCaseTest, DoublyDegenerateHasNoVerdict) {
  const auto r = special_case_driver(simplest(3, 2.0, -3.0, 9.0));
  EXPECT_EQ(r.branch, SimplestBranch::DoublyDegenerate);
  EXPECT_FALSE(r.predicted_pass.has_value());
  EXPECT_TRUE(std::isnan(r.condition_value));
  for (const auto& c : r.checks) EXPECT_TRUE(c.degenerate);
}

TEST(SpecialCaseTest, SpuriousFactorOfGenericPolynomialIsNotASolution) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const double a = rng.uniform(0.3, 2.0) * (trial % 2 ? 1.0 : -1.0);
    const double b = -n * a / 2.0;
    const double c = n * n * a / 2.0;
    const double generic = n * b * b * b + 3 * b * b * c - a * c * c + 3 * n * b + c + n * n * a;
    EXPECT_NEAR(generic, 0.0, 1e-9 * (1.0 + std::abs(a * c * c)));
    const auto r = special_case_driver(simplest(n, a, b, c));
    EXPECT_EQ(r.branch, SimplestBranch::DoublyDegenerate);
    EXPECT_FALSE(r.predicted_pass.has_value());
    for (const auto& check : r.checks) EXPECT_NE(check.verdict, Verdict::Pass);
    EXPECT_TRUE(r.agrees) << "n=" << n << " a=" << a;
  }
}

TEST(SpecialCaseTest, TwoCoordinatesAreAlwaysAssociative) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = simplest(2, rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const auto pt = make_sample_point(2, kDefaultMargin, trial);
    const auto t = third_tensor(p, pt);
    for (std::uint64_t m = 0; m < 3; ++m) {
      const auto r = check_wdvv(t, pt, metric::RandomWeights{m});
      EXPECT_TRUE(r.pass || r.degenerate) << "residual " << r.residual;
    }
  }
}

TEST(SpecialCaseTest, GenericConditionAgreesWithResidual) {
  Rng rng(11);
  int inconclusive = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 3;
    const auto r = special_case_driver(
        simplest(n, rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)));
    bool any_inconclusive = false;
    for (const auto& c : r.checks) any_inconclusive |= c.verdict == Verdict::Inconclusive;
    if (any_inconclusive) {
      ++inconclusive;
      continue;
    }
    EXPECT_TRUE(r.agrees) << "trial " << trial;
  }
  EXPECT_LE(inconclusive, 2);
}
