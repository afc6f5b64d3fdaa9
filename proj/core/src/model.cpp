#include "wdvv/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "wdvv/error.hpp"
#include "wdvv/random.hpp"

namespace wdvv {

std::string_view to_string(KernelKind kind) noexcept {
  return kind == KernelKind::Coth ? "coth" : "recip";
}

std::optional<KernelKind> parse_kernel(std::string_view text) noexcept {
  if (text == "coth") return KernelKind::Coth;
  if (text == "recip" || text == "reciprocal") return KernelKind::Reciprocal;
  return std::nullopt;
}

void PrepotentialParams::validate() const {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
  for (double v : {alpha_minus, alpha_plus, eta, a, b, c}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite parameter");
  }
  if (gamma) {
    if (!std::isfinite(*gamma)) throw Error(ErrorKind::InvalidArgument, "non-finite gamma");
    if (a != 0.0 || b != 0.0 || c != 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "the extra-variable family carries no cubic a, b, c terms");
    }
  }
}

std::string_view to_string(FamilyPreset preset) noexcept {
  switch (preset) {
    case FamilyPreset::SimplestCase: return "simplest";
    case FamilyPreset::TypeAPlus: return "type-a-plus";
    case FamilyPreset::TypeAMinus: return "type-a-minus";
    case FamilyPreset::BCD: return "bcd";
    case FamilyPreset::BCDExtended: return "bcd-extended";
    case FamilyPreset::FourDimSimplest: return "four-dim";
  }
  return "unknown";
}

std::optional<FamilyPreset> parse_preset(std::string_view text) noexcept {
  for (auto p : {FamilyPreset::SimplestCase, FamilyPreset::TypeAPlus, FamilyPreset::TypeAMinus,
                 FamilyPreset::BCD, FamilyPreset::BCDExtended, FamilyPreset::FourDimSimplest}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

PrepotentialParams preset_params(FamilyPreset preset, int n, std::optional<double> gamma) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
  const bool extended = preset == FamilyPreset::BCDExtended;
  if (gamma.has_value() != extended) {
    throw Error(ErrorKind::InvalidArgument,
                extended ? "bcd-extended requires gamma" : "gamma is only valid for bcd-extended");
  }

  PrepotentialParams p;
  p.n = n;
  const double np1 = n + 1.0;
  switch (preset) {
    case FamilyPreset::SimplestCase:
      p.alpha_minus = 1.0;
      break;
    case FamilyPreset::TypeAPlus:
    case FamilyPreset::TypeAMinus: {
      const double s = preset == FamilyPreset::TypeAPlus ? 1.0 : -1.0;
      p.alpha_minus = 1.0;
      p.eta = 1.0;
      p.a = s * 2.0 / np1;
      p.b = -s;
      p.c = s * np1;
      break;
    }
    case FamilyPreset::BCD:
    case FamilyPreset::BCDExtended:
      p.alpha_minus = 1.0;
      p.alpha_plus = 1.0;
      p.gamma = gamma;
      break;
    case FamilyPreset::FourDimSimplest:
      p.kernel = KernelKind::Reciprocal;
      p.alpha_minus = 1.0;
      break;
  }
  return p;
}

SamplePoint SamplePoint::create(std::vector<double> coords, double margin, int base_dim,
                                bool require_dominant) {
  if (!(margin > 0.0)) throw Error(ErrorKind::InvalidArgument, "margin must be positive");
  if (base_dim < 1 || base_dim > static_cast<int>(coords.size())) {
    throw Error(ErrorKind::InvalidArgument, "base dimension out of range");
  }
  for (double x : coords) {
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "non-finite coordinate");
  }
  SamplePoint p(std::move(coords), margin, base_dim, false);
  if (p.singular_distance() < margin) {
    std::ostringstream os;
    os << "point lies within " << margin << " of a kernel singularity";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  bool dominant = p.coords_[base_dim - 1] > 0.0;
  for (int i = 0; i + 1 < base_dim; ++i) dominant = dominant && p.coords_[i] > p.coords_[i + 1];
  if (require_dominant && !dominant) {
    throw Error(ErrorKind::InvalidArgument, "point is outside the dominant chamber");
  }
  p.dominant_ = dominant;
  return p;
}

double SamplePoint::singular_distance() const noexcept {
  double d = std::abs(coords_[0]);
  for (int i = 0; i < base_dim_; ++i) {
    d = std::min(d, std::abs(coords_[i]));
    for (int j = i + 1; j < base_dim_; ++j) {
      d = std::min({d, std::abs(coords_[i] - coords_[j]), std::abs(coords_[i] + coords_[j])});
    }
  }
  return d;
}

SamplePoint make_sample_point(int n, double margin, std::uint64_t seed, int extra) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
  if (!(margin > 0.0)) throw Error(ErrorKind::InvalidArgument, "margin must be positive");
  if (extra < 0) throw Error(ErrorKind::InvalidArgument, "negative extra coordinate count");

  constexpr int kMaxRounds = 10000;
  const double span = (kSampleHi - kSampleLo) - (n - 1) * margin;
  Rng rng(seed);
  if (span >= 0.0) {
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int round = 0; round < kMaxRounds; ++round) {
      for (auto& x : u) x = rng.uniform(0.0, span);
      std::sort(u.begin(), u.end());
      std::vector<double> coords(static_cast<std::size_t>(n + extra));
      for (int i = 0; i < n; ++i) coords[n - 1 - i] = kSampleLo + u[i] + i * margin;
      for (int e = 0; e < extra; ++e) coords[n + e] = rng.uniform(kSampleLo, kSampleHi);
      SamplePoint p(coords, margin, n, true);
      if (p.singular_distance() >= margin) return p;
    }
  }
  std::ostringstream os;
  os << "no configuration of " << n << " coordinates in [" << kSampleLo << ", " << kSampleHi
     << "] keeps a margin of " << margin;
  throw Error(ErrorKind::InfeasibleMargin, os.str());
}

SamplePoint make_sample_point(const PrepotentialParams& params, double margin,
                              std::uint64_t seed) {
  return make_sample_point(params.n, margin, seed, params.gamma ? 1 : 0);
}

}  // namespace wdvv
