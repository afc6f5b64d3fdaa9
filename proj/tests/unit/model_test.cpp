#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "wdvv/error.hpp"
#include "wdvv/model.hpp"

using namespace wdvv;

namespace {

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

}  // namespace

TEST(SamplePointTest, TwoCoordinatesRespectMargin) {
  const SamplePoint p = make_sample_point(2, 0.1, 7);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_GT(p[0], p[1]);
  EXPECT_GT(p[1], 0.0);
  EXPECT_GE(p[0] - p[1], 0.1);
  EXPECT_GE(p.singular_distance(), 0.1);
}

TEST(SamplePointTest, SameSeedSamePoint) {
  EXPECT_EQ(make_sample_point(5, 0.1, 1), make_sample_point(5, 0.1, 1));
  EXPECT_NE(make_sample_point(5, 0.1, 1), make_sample_point(5, 0.1, 2));
}

TEST(SamplePointTest, InfeasibleMarginIsReported) {
  EXPECT_EQ(kind_of([] { make_sample_point(2, 3.0, 0); }), ErrorKind::InfeasibleMargin);
  EXPECT_EQ(kind_of([] { make_sample_point(12, 0.25, 0); }), ErrorKind::InfeasibleMargin);
}

TEST(SamplePointTest, InvalidRequestsAreRejected) {
  EXPECT_EQ(kind_of([] { make_sample_point(1, 0.1, 0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_sample_point(3, 0.0, 0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { SamplePoint::create({1.0, 1.05}, 0.1); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { SamplePoint::create({0.5, 1.0}, 0.1); }), ErrorKind::InvalidArgument);
}

TEST(SamplePointTest, ExtraCoordinateIsUnconstrained) {
  const auto params = preset_params(FamilyPreset::BCDExtended, 3, 1.0);
  const SamplePoint p = make_sample_point(params, 0.1, 4);
  EXPECT_EQ(p.size(), 4u);
  EXPECT_EQ(p.base_dim(), 3);
}

TEST(SamplePointTest, SingularityAuditOverManySeeds) {
  for (int n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const SamplePoint p = make_sample_point(n, kDefaultMargin, seed);
      double closest = 1e300;
      for (int i = 0; i < n; ++i) {
        EXPECT_GE(p[i], kSampleLo);
        EXPECT_LE(p[i], kSampleHi);
        closest = std::min(closest, std::abs(p[i]));
        for (int j = i + 1; j < n; ++j) {
          EXPECT_GT(p[i], p[j]);
          closest = std::min({closest, std::abs(p[i] - p[j]), std::abs(p[i] + p[j])});
        }
      }
      ASSERT_GE(closest, kDefaultMargin) << "n=" << n << " seed=" << seed;
    }
  }
}

TEST(PresetTest, TypeAPlusCubicCoefficients) {
  const auto p = preset_params(FamilyPreset::TypeAPlus, 2);
  EXPECT_EQ(p.kernel, KernelKind::Coth);
  EXPECT_DOUBLE_EQ(p.alpha_minus, 1.0);
  EXPECT_DOUBLE_EQ(p.alpha_plus, 0.0);
  EXPECT_DOUBLE_EQ(p.eta, 1.0);
  EXPECT_DOUBLE_EQ(p.a, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.b, -1.0);
  EXPECT_DOUBLE_EQ(p.c, 3.0);
}

TEST(PresetTest, TypeAMinusIsNegatedPlus) {
  for (int n = 2; n <= 8; ++n) {
    const auto plus = preset_params(FamilyPreset::TypeAPlus, n);
    const auto minus = preset_params(FamilyPreset::TypeAMinus, n);
    EXPECT_DOUBLE_EQ(minus.a, -plus.a);
    EXPECT_DOUBLE_EQ(minus.b, -plus.b);
    EXPECT_DOUBLE_EQ(minus.c, -plus.c);
    EXPECT_DOUBLE_EQ(plus.a, 2.0 / (n + 1));
  }
  const auto m3 = preset_params(FamilyPreset::TypeAMinus, 3);
  EXPECT_DOUBLE_EQ(m3.a, -0.5);
  EXPECT_DOUBLE_EQ(m3.b, 1.0);
  EXPECT_DOUBLE_EQ(m3.c, -4.0);
}

TEST(PresetTest, BcdUsesDifferencesAndSums) {
  const auto p = preset_params(FamilyPreset::BCD, 4);
  EXPECT_DOUBLE_EQ(p.alpha_minus, 1.0);
  EXPECT_DOUBLE_EQ(p.alpha_plus, 1.0);
  EXPECT_FALSE(p.gamma.has_value());
  const auto e = preset_params(FamilyPreset::BCDExtended, 4, 2.0);
  ASSERT_TRUE(e.gamma.has_value());
  EXPECT_DOUBLE_EQ(*e.gamma, 2.0);
  EXPECT_EQ(e.dimension(), 5);
}

TEST(PresetTest, FourDimUsesReciprocalKernel) {
  const auto p = preset_params(FamilyPreset::FourDimSimplest, 3);
  EXPECT_EQ(p.kernel, KernelKind::Reciprocal);
  EXPECT_DOUBLE_EQ(p.alpha_minus, 1.0);
  EXPECT_DOUBLE_EQ(p.alpha_plus, 0.0);
}

TEST(PresetTest, InvalidCombinationsAreRejected) {
  EXPECT_EQ(kind_of([] { preset_params(FamilyPreset::SimplestCase, 1); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { preset_params(FamilyPreset::TypeAPlus, 3, 1.0); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { preset_params(FamilyPreset::BCDExtended, 3); }),
            ErrorKind::InvalidArgument);
  PrepotentialParams p = preset_params(FamilyPreset::BCDExtended, 3, 1.0);
  p.a = 1.0;
  EXPECT_EQ(kind_of([&] { p.validate(); }), ErrorKind::InvalidArgument);
  PrepotentialParams q;
  q.b = std::nan("");
  EXPECT_EQ(kind_of([&] { q.validate(); }), ErrorKind::InvalidArgument);
}

TEST(PresetTest, NamesRoundTrip) {
  std::set<std::string_view> names;
  for (auto p : {FamilyPreset::SimplestCase, FamilyPreset::TypeAPlus, FamilyPreset::TypeAMinus,
                 FamilyPreset::BCD, FamilyPreset::BCDExtended, FamilyPreset::FourDimSimplest}) {
    EXPECT_EQ(parse_preset(to_string(p)), p);
    names.insert(to_string(p));
  }
  EXPECT_EQ(names.size(), 6u);
  EXPECT_EQ(parse_kernel("coth"), KernelKind::Coth);
  EXPECT_EQ(parse_kernel(to_string(KernelKind::Reciprocal)), KernelKind::Reciprocal);
  EXPECT_FALSE(parse_preset("nonsense").has_value());
}
