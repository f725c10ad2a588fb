#include <doctest.h>

#include <cmath>
#include <random>

#include "scalelaw/error.hpp"
#include "scalelaw/noisescale.hpp"

using namespace scalelaw;

namespace {

double log_slope(double (*f)(double, const NoiseParams&), double b, const NoiseParams& p) {
  const double h = 1e-4;
  return (std::log(f(b * std::exp(h), p)) - std::log(f(b * std::exp(-h), p))) / (2 * h);
}

}  // namespace

TEST_CASE("eta_opt_sgd") {
  const NoiseParams p{1e-3, 4e6, 0.1, 1.0};
  CHECK(eta_opt_sgd(p.B_noise, p) == p.eta_max / 2);
  CHECK(eta_opt_sgd(1e30, p) == doctest::Approx(p.eta_max));
  CHECK(eta_opt_sgd(1e6, p) == doctest::Approx(2e-4).epsilon(1e-14));
  double prev = 0.0;
  for (double b = 1e3; b < 1e12; b *= 1.7) {
    const double v = eta_opt_sgd(b, p);
    CHECK(v < p.eta_max);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("delta_loss_opt") {
  const NoiseParams p{1e-3, 1e6, 0.1, 1.0};
  CHECK(delta_loss_opt(p.B_noise, p) == doctest::Approx(0.05));
  CHECK(delta_loss_opt(9e6, p) == doctest::Approx(0.09).epsilon(1e-14));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(3.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double b1 = std::pow(10.0, u(rng)), b2 = b1 * (1.0 + u(rng));
    CHECK(delta_loss_opt(b2, p) > delta_loss_opt(b1, p));
  }
}

TEST_CASE("eta_opt_adam") {
  const NoiseParams p{2e-3, 3e6, 0.1, 1.0};
  CHECK(eta_opt_adam(p.B_noise, p) == doctest::Approx(p.eta_max).epsilon(1e-15));
  CHECK(eta_opt_adam(4 * p.B_noise, p) == doctest::Approx(0.8 * p.eta_max).epsilon(1e-14));
  for (double k : {1.5, 2.0, 10.0, 1e3}) {
    CHECK(eta_opt_adam(k * p.B_noise, p) ==
          doctest::Approx(eta_opt_adam(p.B_noise / k, p)).epsilon(1e-13));
  }
}

TEST_CASE("eta_opt_adam is unimodal with square-root tails") {
  const NoiseParams p{1.0, 1e6, 1.0, 1.0};
  double best_b = 0, best = -1;
  for (int i = -300; i <= 300; ++i) {
    const double b = p.B_noise * std::pow(10.0, i / 100.0);
    const double v = eta_opt_adam(b, p);
    if (v > best) {
      best = v;
      best_b = b;
    }
  }
  CHECK(best_b == doctest::Approx(p.B_noise));
  CHECK(log_slope(eta_opt_adam, p.B_noise * 1e-3, p) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(log_slope(eta_opt_adam, p.B_noise * 1e3, p) == doctest::Approx(-0.5).epsilon(0.02));
}

TEST_CASE("solve_tradeoff: published columns") {
  auto r = solve_tradeoff(1.0, 1.0);
  CHECK(r.e_ratio == doctest::Approx(2.0));
  CHECK(r.s_ratio == doctest::Approx(2.0));
  r = solve_tradeoff(10.0, 1.0);
  CHECK(r.e_ratio == doctest::Approx(11.0));
  CHECK(r.s_ratio == doctest::Approx(1.1));
  // At b = 0.1 the exact root is e = 1.1, s = 11; the printed s = 10 is 11 at
  // one significant figure.
  r = solve_tradeoff(0.1, 1.0);
  CHECK(r.e_ratio == doctest::Approx(1.1).epsilon(1e-14));
  CHECK(r.s_ratio == doctest::Approx(11.0).epsilon(1e-13));
  CHECK((r.s_ratio - 1) * (r.e_ratio - 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_tradeoff reproduces gamma and e = 1 + b at gamma = 1") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double b = std::pow(10.0, u(rng)), g = std::pow(10.0, u(rng) / 3);
    const auto r = solve_tradeoff(b, g);
    CHECK((r.s_ratio - 1) * (r.e_ratio - 1) == doctest::Approx(g).epsilon(1e-9));
    CHECK(r.e_ratio > std::max(1.0, b));
    CHECK(r.e_ratio == doctest::Approx(b * r.s_ratio).epsilon(1e-14));
    CHECK(solve_tradeoff(b, 1.0).e_ratio == doctest::Approx(1.0 + b).epsilon(1e-14));
  }
  CHECK_THROWS_AS(solve_tradeoff(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(solve_tradeoff(1.0, -1.0), ValidationError);
}

TEST_CASE("tradeoff_table") {
  const auto ratios = default_tradeoff_ratios();
  const auto rows = tradeoff_table(1.0, ratios);
  const double e[] = {1.1, 1.5, 2, 3, 6, 11, 101};
  const double s[] = {11, 3, 2, 1.5, 1.2, 1.1, 1.01};
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].b_ratio == ratios[i]);
    CHECK(rows[i].e_ratio == doctest::Approx(e[i]).epsilon(1e-12));
    CHECK(rows[i].s_ratio == doctest::Approx(s[i]).epsilon(1e-12));
  }
  const double one[] = {1.0};
  const auto single = tradeoff_table(1.0, one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].e_ratio == doctest::Approx(2.0));
  CHECK(tradeoff_csv(single) == "b_ratio,e_ratio,s_ratio\n1,2,2\n");
  CHECK(tradeoff_text(rows).find("B/B_crit") != std::string::npos);
}

TEST_CASE("critical_batch") {
  CHECK(critical_batch(2e11, 1e5) == doctest::Approx(2e6));
  CHECK(critical_batch(7.5, 1.0) == 7.5);
  CHECK(critical_batch(3 * 2e11, 3 * 1e5) == doctest::Approx(critical_batch(2e11, 1e5)));
}
