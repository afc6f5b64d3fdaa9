#include <algorithm>
#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "wdvv/closedform.hpp"
#include "wdvv/error.hpp"
#include "wdvv/kernel.hpp"
#include "wdvv/random.hpp"

using namespace wdvv;

namespace {

constexpr double kCoth1 = 1.31303528549933130363616124693;
constexpr double kCoth06 = 1.86202552138666624763801455821;
constexpr double kCoth09 = 1.39606725303001183509296008199;
constexpr double kFCothHalf = -0.0759155227192166042004269908883;
constexpr double kFCoth15 = 0.549974604588308813142859634752;
constexpr double kFCoth8MinusCube = -2.8133794075569965233601141684e-8;
constexpr double kFRecip2 = -1.61370563888010938116553575708;
constexpr double kBetaPlusAt1And04 = 0.862025521386666247638014558209;

const FamilyPreset kAllPresets[] = {FamilyPreset::SimplestCase, FamilyPreset::TypeAPlus,
                                    FamilyPreset::TypeAMinus,   FamilyPreset::BCD,
                                    FamilyPreset::BCDExtended,  FamilyPreset::FourDimSimplest};

PrepotentialParams sample_params(FamilyPreset preset, int n) {
  auto p = preset == FamilyPreset::BCDExtended ? preset_params(preset, n, 1.5)
                                               : preset_params(preset, n);
  if (preset == FamilyPreset::SimplestCase || preset == FamilyPreset::FourDimSimplest) {
    p.a = 0.3;
    p.b = -0.7;
    p.c = 1.1;
  }
  if (preset == FamilyPreset::BCD) p.eta = -1.3;
  if (preset == FamilyPreset::BCDExtended) p.eta = 0.4;
  return p;
}

double relative_error(const ThirdTensor& got, const ThirdTensor& want) {
  return max_abs_diff(got, want) / std::max(1.0, want.max_abs_entry());
}

}  // namespace

TEST(KernelTest, CothFrozenValue) {
  EXPECT_NEAR(f_triple_prime(KernelKind::Coth, 1.0), kCoth1, 1e-15);
  EXPECT_NEAR(f_triple_prime(KernelKind::Coth, 0.6), kCoth06, 1e-15);
}

TEST(KernelTest, BothKernelsAreOdd) {
  for (double x : {1e-6, 0.05, 0.3, 1.0, 4.0, 30.0}) {
    for (auto k : {KernelKind::Coth, KernelKind::Reciprocal}) {
      EXPECT_EQ(f_triple_prime(k, -x), -f_triple_prime(k, x));
    }
  }
}

TEST(KernelTest, ReciprocalValueAndSingularity) {
  EXPECT_DOUBLE_EQ(f_triple_prime(KernelKind::Reciprocal, 2.0), 0.5);
  for (auto k : {KernelKind::Coth, KernelKind::Reciprocal}) {
    try {
      f_triple_prime(k, 0.0);
      FAIL() << "expected a singularity error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::KernelSingularity);
    }
  }
}

TEST(KernelTest, SmallArgumentCothIsAccurate) {
  const double x = 1e-7;
  EXPECT_NEAR(f_triple_prime(KernelKind::Coth, x) * x, 1.0 + x * x / 3.0, 1e-15);
}

TEST(KernelTest, BasisFunctionFrozenValues) {
  EXPECT_NEAR(f_value(KernelKind::Coth, 0.5), kFCothHalf, 1e-15);
  EXPECT_NEAR(f_value(KernelKind::Coth, 1.5), kFCoth15, 1e-15);
  EXPECT_NEAR(f_value(KernelKind::Coth, 8.0) - 512.0 / 6.0, kFCoth8MinusCube, 1e-13);
  EXPECT_NEAR(f_value(KernelKind::Coth, 8.0), 512.0 / 6.0, 1e-6);
  EXPECT_NEAR(f_value(KernelKind::Reciprocal, 2.0), kFRecip2, 1e-14);
}

TEST(KernelTest, SeriesNeedsPositiveArgument) {
  try {
    f_value(KernelKind::Coth, -0.1);
    FAIL() << "expected a domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SeriesDomain);
  }
}

TEST(KernelTest, BasisFunctionThirdDerivativeMatchesKernel) {
  for (auto k : {KernelKind::Coth, KernelKind::Reciprocal}) {
    for (double x : {0.5, 1.0, 2.0}) {
      const double d3 = oracle::third_derivative([&](double t) { return f_value(k, t); }, x, 1e-2);
      EXPECT_NEAR(d3, f_triple_prime(k, x), 1e-6) << to_string(k) << " x=" << x;
    }
  }
}

TEST(BetaTableTest, OffDiagonalIsAntisymmetric) {
  auto p = preset_params(FamilyPreset::SimplestCase, 5);
  const auto pt = make_sample_point(5, kDefaultMargin, 3);
  const BetaTable t = beta_table(p, pt);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) {
        EXPECT_EQ(t.beta_offdiag(i, j), -t.beta_offdiag(j, i));
      }
}

TEST(BetaTableTest, TypeAPlusFrozenEntry) {
  const auto p = preset_params(FamilyPreset::TypeAPlus, 2);
  const auto pt = SamplePoint::create({1.0, 0.4}, kDefaultMargin);
  const BetaTable t = beta_table(p, pt);
  EXPECT_NEAR(t.beta_offdiag(0, 1), kBetaPlusAt1And04, 1e-14);
  const double closed = 2.0 * std::exp(0.8) / (std::exp(2.0) - std::exp(0.8));
  EXPECT_NEAR(t.beta_offdiag(0, 1), closed, 1e-14);
}

TEST(BetaTableTest, BcdDiagonalChannel) {
  auto p = preset_params(FamilyPreset::BCD, 2);
  p.eta = 1.0;
  const auto pt = SamplePoint::create({1.6, 0.9}, kDefaultMargin);
  EXPECT_NEAR(beta_table(p, pt).beta_diag[1], kCoth09, 1e-14);
}

TEST(BetaTableTest, KkIsRowSumPlusDiagonal) {
  for (auto preset : kAllPresets) {
    const auto p = sample_params(preset, 4);
    const auto pt = make_sample_point(p, kDefaultMargin, 11);
    const BetaTable t = beta_table(p, pt);
    for (int k = 0; k < 4; ++k) {
      double s = t.beta_diag[k];
      for (int q = 0; q < 4; ++q)
        if (q != k) s += t.beta_offdiag(k, q);
      EXPECT_NEAR(t.kk[k], s, 1e-13);
    }
  }
}

TEST(BetaTableTest, TypeABetaMatchesClosedForms) {
  for (auto [preset, variant] : {std::pair{FamilyPreset::TypeAPlus, TypeAVariant::Plus},
                                 std::pair{FamilyPreset::TypeAMinus, TypeAVariant::Minus}}) {
    for (int n = 2; n <= 6; ++n) {
      const auto pt = make_sample_point(n, kDefaultMargin, 40 + n);
      const BetaTable t = beta_table(preset_params(preset, n), pt);
      const TypeAClosedForms cf = type_a_closed_forms(variant, pt);
      EXPECT_LT(max_abs_diff(t.beta_offdiag, cf.beta_offdiag), 1e-12);
      for (int k = 0; k < n; ++k) EXPECT_NEAR(t.beta_diag[k], cf.beta_diag[k], 1e-12);
    }
  }
}

TEST(ThirdTensorTest, SimplestFrozenEntries) {
  const auto p = preset_params(FamilyPreset::SimplestCase, 2);
  const auto t = third_tensor(p, SamplePoint::create({1.0, 0.4}, kDefaultMargin));
  EXPECT_NEAR(t(0, 0, 0), kCoth06, 1e-14);
  EXPECT_NEAR(t(1, 1, 1), -kCoth06, 1e-14);
  EXPECT_NEAR(t(0, 0, 1), -kCoth06, 1e-14);
  EXPECT_NEAR(t(0, 1, 1), kCoth06, 1e-14);
}

TEST(ThirdTensorTest, ExtraSliceIsGammaTimesIdentity) {
  for (int n = 2; n <= 5; ++n) {
    auto p = preset_params(FamilyPreset::BCDExtended, n, 2.0);
    p.eta = -0.3;
    const auto t = third_tensor(p, make_sample_point(p, kDefaultMargin, 5));
    EXPECT_EQ(t.slice(n), SquareMatrix::identity(n + 1) * 2.0);
  }
}

TEST(ThirdTensorTest, FullySymmetric) {
  for (auto preset : kAllPresets) {
    for (int n = 2; n <= 5; ++n) {
      const auto p = sample_params(preset, n);
      const auto t = third_tensor(p, make_sample_point(p, kDefaultMargin, 17));
      const int d = t.dim();
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          for (int m = 0; m < d; ++m) {
            const double v = t(k, l, m);
            ASSERT_EQ(v, t(k, m, l));
            ASSERT_EQ(v, t(l, k, m));
            ASSERT_EQ(v, t(l, m, k));
            ASSERT_EQ(v, t(m, k, l));
            ASSERT_EQ(v, t(m, l, k));
          }
    }
  }
}

TEST(ThirdTensorTest, MatchesRankOneOracle) {
  for (auto preset : kAllPresets) {
    for (int n = 2; n <= 6; ++n) {
      const auto p = sample_params(preset, n);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto pt = make_sample_point(p, kDefaultMargin, seed);
        const auto t = third_tensor(p, pt);
        const auto want = oracle::tensor(p, pt.coords());
        for (std::size_t e = 0; e < want.size(); ++e) {
          ASSERT_NEAR(t.entries()[e], static_cast<double>(want[e]), 1e-12)
              << to_string(preset) << " n=" << n << " entry " << e;
        }
      }
    }
  }
}

TEST(ThirdTensorTest, FiniteDifferencesAgreeOnEveryPreset) {
  for (auto preset : kAllPresets) {
    for (int n = 2; n <= 4; ++n) {
      const auto p = sample_params(preset, n);
      const auto pt = make_sample_point(p, kDefaultMargin, 23);
      const auto fd = finite_difference_tensor(p, pt);
      EXPECT_LT(relative_error(fd, third_tensor(p, pt)), 1e-5) << to_string(preset) << " n=" << n;
    }
  }
}

TEST(ThirdTensorTest, CubicOnlyFiniteDifferencesAreExact) {
  PrepotentialParams p;
  p.n = 3;
  p.alpha_minus = 0.0;
  p.a = 0.7;
  p.b = -1.2;
  p.c = 2.5;
  const auto pt = make_sample_point(3, kDefaultMargin, 2);
  for (double step : {0.1}) {
    EXPECT_LT(max_abs_diff(finite_difference_tensor(p, pt, step), third_tensor(p, pt)), 1e-9)
        << "step " << step;
  }
}

TEST(ThirdTensorTest, FiniteDifferenceErrorShrinksWithStep) {
  const auto p = preset_params(FamilyPreset::TypeAPlus, 3);
  const auto pt = make_sample_point(3, 0.2, 9);
  const auto exact = third_tensor(p, pt);
  const double coarse = max_abs_diff(finite_difference_tensor(p, pt, 4e-2), exact);
  const double fine = max_abs_diff(finite_difference_tensor(p, pt, 2e-2), exact);
  EXPECT_LT(fine, coarse);
}

TEST(ThirdTensorTest, UnsafeStencilIsRefused) {
  const auto p = preset_params(FamilyPreset::TypeAPlus, 3);
  const auto pt = SamplePoint::create({1.25, 1.1, 0.5}, 0.1);
  try {
    finite_difference_tensor(p, pt, 0.05);
    FAIL() << "expected a stencil error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StencilUnsafe);
  }
}

TEST(ReductionTest, ReducedTensorEqualsTypeAPlus) {
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto pt = make_sample_point(n, kDefaultMargin, seed);
      const auto direct = third_tensor(preset_params(FamilyPreset::TypeAPlus, n), pt);
      EXPECT_LT(max_abs_diff(reduce_type_a(n, pt), direct), 1e-9) << "n=" << n;
    }
  }
}

TEST(ReductionTest, CubicPullbackReproducesCoefficients) {
  for (int n = 2; n <= 5; ++n) {
    const int np1 = n + 1;
    const SquareMatrix jac = LinearChange::type_a(n).inverse();
    PrepotentialParams cubic;
    cubic.n = n;
    cubic.alpha_minus = 0.0;
    cubic.a = 2.0 / np1;
    cubic.b = -1.0;
    cubic.c = np1;
    const auto want = third_tensor(cubic, make_sample_point(n, kDefaultMargin, 1));
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) {
          double s = 0.0;
          for (int x = 0; x < np1; ++x)
            for (int y = 0; y < np1; ++y)
              for (int z = 0; z < np1; ++z)
                if (x != y && y != z && x != z) s += 0.5 * np1 * jac(x, k) * jac(y, l) * jac(z, m);
          EXPECT_NEAR(s, want(k, l, m), 1e-12) << "n=" << n;
        }
  }
}

TEST(ThreeTermTest, CothSumsToOneReciprocalToZero) {
  for (int n = 3; n <= 7; ++n) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto pt = make_sample_point(n, kDefaultMargin, seed);
      EXPECT_LT(three_term_identity(KernelKind::Coth, pt).max_violation, 1e-12);
      EXPECT_LT(three_term_identity(KernelKind::Reciprocal, pt).max_violation, 1e-12);
    }
  }
}

TEST(ThreeTermTest, HoldsForRawCothValues) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(0.2, 3.0);
    const double y = rng.uniform(0.2, 3.0);
    const double cx = f_triple_prime(KernelKind::Coth, x);
    const double cy = f_triple_prime(KernelKind::Coth, y);
    const double cxy = f_triple_prime(KernelKind::Coth, x + y);
    EXPECT_NEAR(cxy * (cx + cy) - cx * cy, 1.0, 1e-12);
  }
}
