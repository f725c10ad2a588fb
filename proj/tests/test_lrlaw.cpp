#include <doctest.h>

#include <cmath>
#include <limits>

#include "scalelaw/format.hpp"
#include "scalelaw/lrlaw.hpp"
#include "scalelaw/noisescale.hpp"

using namespace scalelaw;

namespace {

std::vector<double> geometric(double lo, double ratio, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(ratio, i));
  return v;
}

// Loss from the quadratic LR efficiency around the Adam-style optimum.
double eq12_loss(double B, double lr, const NoiseParams& p) {
  const double rho = lr / eta_opt_adam(B, p);
  const double eff = 2 * rho - rho * rho;
  if (eff <= 0) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 + 1.0 / (0.1 + eff);
}

LossSurface eq12_surface(const NoiseParams& p, const std::vector<double>& bs,
                         const std::vector<double>& lrs) {
  std::vector<double> losses;
  for (double b : bs)
    for (double lr : lrs) losses.push_back(eq12_loss(b, lr, p));
  return LossSurface(1e10, bs, lrs, losses, 3e-4);
}

NoiseParams wide_noise() {
  // Optimum at scale factor 1 for B = 0.5M, noise scale far above the grid.
  NoiseParams p{1.0, 1e10, 1.0, 1.0};
  p.eta_max = 1.0 / eta_opt_adam(5e5, p);
  return p;
}

}  // namespace

TEST_CASE("surface reproduces grid nodes") {
  const auto bs = geometric(5e5, 2, 4), lrs = geometric(1, 2, 5);
  std::vector<double> losses;
  for (double b : bs)
    for (double lr : lrs) losses.push_back(3 + 0.1 * std::log(b) + 0.05 * std::log(lr) * std::log(lr));
  const LossSurface s(1e10, bs, lrs, losses);
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (std::size_t j = 0; j < lrs.size(); ++j) CHECK(*s(bs[i], lrs[j]) == s.at(i, j));
  CHECK_FALSE(s(1e5, 1).has_value());
  CHECK_FALSE(s(1e6, 100).has_value());
  // Separable in log B: bilinear is exact along B.
  CHECK(*s(std::sqrt(5e5 * 1e6), 1.0) == doctest::Approx(3 + 0.1 * std::log(std::sqrt(5e5 * 1e6))));
}

TEST_CASE("missing cells stay local") {
  const auto bs = geometric(5e5, 2, 4), lrs = geometric(1, 2, 5);
  std::vector<double> losses(bs.size() * lrs.size(), 3.0);
  losses[1 * 5 + 4] = std::numeric_limits<double>::infinity();
  const LossSurface s(1e10, bs, lrs, losses);
  CHECK(s.missing(1, 4));
  CHECK_FALSE(s(bs[1], lrs[4]).has_value());
  CHECK_FALSE(s(bs[1], 12.0).has_value());
  CHECK(*s(bs[1], lrs[3]) == 3.0);
  CHECK(*s(bs[2], 12.0) == 3.0);
  CHECK(*s(bs[0], 12.0) == 3.0);
}

TEST_CASE("surface needs a filled 3x3 subgrid") {
  const auto bs = geometric(5e5, 2, 3), lrs = geometric(1, 2, 3);
  std::vector<double> losses(9, 3.0);
  CHECK_NOTHROW(LossSurface(1e10, bs, lrs, losses));
  losses[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(LossSurface(1e10, bs, lrs, losses), InsufficientDataError);
  const auto two = geometric(1, 2, 2);
  CHECK_THROWS_AS(LossSurface(1e10, bs, two, std::vector<double>(6, 3.0)), InsufficientDataError);
  CHECK_THROWS_AS(LossSurface(1e10, bs, lrs, std::vector<double>(8, 3.0)), ValidationError);
}

TEST_CASE("LR_opt on per-column quadratics is exact") {
  const auto bs = geometric(5e5, 2, 6), lrs = geometric(0.25, std::sqrt(2.0), 14);
  // Vertex linear in log B, so interpolated columns stay exact between nodes.
  auto v = [](double b) { return 0.3 * std::log(b / 5e5); };
  std::vector<double> losses;
  for (double b : bs)
    for (double lr : lrs) losses.push_back(2.5 + 0.2 * std::pow(std::log(lr) - v(b), 2));
  const LossSurface s(1e10, bs, lrs, losses, 3e-4);
  const auto samples = extract_lr_opt(s, 4);
  CHECK(samples.size() == 21);
  for (const auto& x : samples) {
    CHECK_FALSE(x.boundary);
    CHECK(std::log(x.lr_scale) == doctest::Approx(v(x.B)).epsilon(1e-6));
    // Blending two offset parabolas lifts the minimum by 0.2 t (1 - t) dv^2.
    const double t = std::fmod(std::log(x.B / 5e5) / std::log(2.0) + 1e-12, 1.0) - 1e-12;
    const double dv = 0.3 * std::log(2.0);
    CHECK(x.loss == doctest::Approx(2.5 + 0.2 * t * (1 - t) * dv * dv).epsilon(1e-9));
    CHECK(x.lr == doctest::Approx(x.lr_scale * 3e-4));
  }
}

TEST_CASE("boundary minimum is flagged") {
  const auto bs = geometric(5e5, 2, 3), lrs = geometric(1, 2, 4);
  std::vector<double> losses;
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (double lr : lrs) losses.push_back(i == 1 ? 3 + lr : 3 + std::pow(std::log(lr / 3), 2));
  const LossSurface s(1e10, bs, lrs, losses);
  const auto samples = extract_lr_opt(s, 1);
  REQUIRE(samples.size() == 3);
  CHECK_FALSE(samples[0].boundary);
  CHECK(samples[1].boundary);
  CHECK(samples[1].lr_scale == 1.0);
  CHECK_FALSE(samples[2].boundary);
}

TEST_CASE("noise-model surface: argmin within half a cell of the analytic optimum") {
  const NoiseParams p{4.0, 8e6, 1.0, 1.0};
  const auto bs = geometric(5e5, 2, 7), lrs = geometric(0.125, std::pow(2.0, 0.25), 33);
  const LossSurface s = eq12_surface(p, bs, lrs);
  const auto samples = extract_lr_opt(s, 1);
  REQUIRE(samples.size() == bs.size());
  const double half_cell = 0.5 * std::log(std::pow(2.0, 0.25));
  double best_lr = 0, best_b = 0;
  for (const auto& x : samples) {
    CHECK_FALSE(x.boundary);
    CHECK(std::abs(std::log(x.lr_scale / eta_opt_adam(x.B, p))) < half_cell);
    if (x.lr > best_lr) {
      best_lr = x.lr;
      best_b = x.B;
    }
  }
  // Rises then falls around the noise scale.
  CHECK(best_b == 8e6);
}

TEST_CASE("noise-model surface: small-batch slope is one half") {
  const NoiseParams p = wide_noise();
  const auto bs = geometric(5e5, 2, 8);  // up to 64M, below B_noise / 100
  const auto lrs = geometric(0.25, std::pow(2.0, 0.25), 30);
  const LossSurface s = eq12_surface(p, bs, lrs);
  const auto samples = extract_lr_opt(s, 8);
  const GammaFit fit = fit_gamma(samples);
  REQUIRE(fit.gamma);
  CHECK(*fit.gamma == doctest::Approx(0.5).epsilon(0.1));
  CHECK_FALSE(fit.lr_ceiling);
}

TEST_CASE("argmin curve is invariant under an affine loss transform") {
  const NoiseParams p{4.0, 8e6, 1.0, 1.0};
  const auto bs = geometric(5e5, 2, 7), lrs = geometric(0.125, std::pow(2.0, 0.25), 33);
  const LossSurface s = eq12_surface(p, bs, lrs);
  std::vector<double> scaled;
  for (double b : bs)
    for (double lr : lrs) scaled.push_back(2 * eq12_loss(b, lr, p) + 1);
  const LossSurface t(1e10, bs, lrs, scaled, 3e-4);
  const auto a = extract_lr_opt(s, 8), b = extract_lr_opt(t, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].B == b[i].B);
    CHECK(a[i].boundary == b[i].boundary);
    CHECK(a[i].lr == doctest::Approx(b[i].lr).epsilon(1e-9));
    CHECK(2 * a[i].loss + 1 == doctest::Approx(b[i].loss).epsilon(1e-12));
  }
}

TEST_CASE("fit_gamma on an exact power law") {
  std::vector<LrOptSample> s;
  for (double b = 5e5; b < 1e8; b *= 1.5) s.push_back({b, 0, 1e-9 * std::pow(b, 0.85), 2.0, false});
  const GammaFit fit = fit_gamma(s);
  REQUIRE(fit.gamma);
  CHECK(*fit.gamma == doctest::Approx(0.85).epsilon(1e-9));
  CHECK_FALSE(fit.lr_ceiling);
  CHECK_FALSE(fit.plateau_onset_B);

  // Units rescaling leaves the slope unchanged.
  auto scaled = s;
  for (auto& x : scaled) x.B /= 1e6;
  CHECK(*fit_gamma(scaled).gamma == doctest::Approx(0.85).epsilon(1e-9));
}

TEST_CASE("fit_gamma on a published-shape curve with a ceiling") {
  // Sub-linear rise from 3e-4 at 0.5M tokens to a ceiling of 2.4e-3 (x8).
  std::vector<LrOptSample> s;
  for (double b = 5e5; b <= 6.4e7; b *= std::sqrt(2.0)) {
    const double lr = std::min(2.4e-3, 3e-4 * std::pow(b / 5e5, 0.85));
    s.push_back({b, lr / 3e-4, lr, 2.0, false});
  }
  s.push_back({1e8, 0, 1e-2, 2.0, true});  // boundary samples are ignored
  const GammaFit fit = fit_gamma(s);
  REQUIRE(fit.gamma);
  CHECK(*fit.gamma >= 0.75);
  CHECK(*fit.gamma <= 1.0);
  REQUIRE(fit.lr_ceiling);
  CHECK(*fit.lr_ceiling == doctest::Approx(2.4e-3).epsilon(0.01));
  REQUIRE(fit.plateau_onset_B);
  CHECK(*fit.plateau_onset_B > 5e6);
  CHECK(*fit.plateau_onset_B < 1.6e7);
}

TEST_CASE("fit_gamma errors") {
  std::vector<LrOptSample> flat;
  for (double b = 5e5; b < 1e8; b *= 2) flat.push_back({b, 8, 2.4e-3, 2.0, false});
  try {
    fit_gamma(flat);
    FAIL("expected GammaUndefinedError");
  } catch (const GammaUndefinedError& e) {
    CHECK(e.ceiling() == doctest::Approx(2.4e-3));
    CHECK(e.kind() == ErrorKind::numerical);
  }
  flat.resize(3);
  CHECK_THROWS_AS(fit_gamma(flat), InsufficientDataError);
}

TEST_CASE("scale_lr") {
  CHECK(scale_lr(1.2e-4, 2e6, 3e6, LrScaleRule::linear) == doctest::Approx(1.8e-4).epsilon(1e-15));
  CHECK(scale_lr(6e-4, 5e5, 2e6, LrScaleRule::sqrt) == doctest::Approx(1.2e-3).epsilon(1e-15));
  for (auto rule : {LrScaleRule::linear, LrScaleRule::sqrt, LrScaleRule::none}) {
    CHECK(scale_lr(3e-4, 1e6, 1e6, rule) == 3e-4);
    const double direct = scale_lr(3e-4, 5e5, 8e6, rule);
    const double hop = scale_lr(scale_lr(3e-4, 5e5, 2e6, rule), 2e6, 8e6, rule);
    CHECK(hop == doctest::Approx(direct).epsilon(1e-14));
    CHECK(lr_scale_rule_from_string(to_string(rule)) == rule);
  }
  CHECK(scale_lr(4e-4, 1e6, 9e6, LrScaleRule::none) == 4e-4);
  CHECK_THROWS_AS(scale_lr(0, 1e6, 2e6, LrScaleRule::linear), ValidationError);
  CHECK_THROWS_AS(lr_scale_rule_from_string("cubic"), ValidationError);
}

TEST_CASE("build_surface from run records") {
  const NoiseParams p{4.0, 8e6, 1.0, 1.0};
  RunSet runs;
  const auto bs = geometric(5e5, 2, 4), lrs = geometric(0.5, 2, 4);
  for (double b : bs)
    for (double f : lrs) {
      RunRecord r;
      r.run_id = "b" + format_double(b) + "-lr" + format_double(f);
      r.model = {3.5e8, std::nullopt, std::nullopt, std::nullopt, ""};
      r.batch_size_tokens = b;
      r.lr_peak = 3e-4 * f;
      const double loss = eq12_loss(b, f, p);
      r.diverged = std::isnan(loss);
      const std::int64_t steps = static_cast<std::int64_t>(4e9 / b);
      r.points.push_back({1, b, 10.0});
      if (!r.diverged) {
        r.points.push_back({steps / 2, b * static_cast<double>(steps / 2), loss + 0.5});
        r.points.push_back({steps, b * static_cast<double>(steps), loss});
      }
      runs.add(r);
    }
  SurfaceOptions opt;
  opt.smooth = false;
  const LossSurface s = build_surface(runs, 4e9, opt);
  CHECK(s.base_lr() == doctest::Approx(1.5e-4));
  REQUIRE(s.grid_B().size() == 4);
  REQUIRE(s.grid_LR().size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double expect = eq12_loss(bs[i], lrs[j], p);
      if (std::isnan(expect))
        CHECK(s.missing(i, j));
      else
        CHECK(s.at(i, j) == doctest::Approx(expect).epsilon(1e-9));
    }
  CHECK(surface_csv(s).rfind("B,lr_scale,lr,loss\n", 0) == 0);
}
