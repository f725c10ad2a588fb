#include <doctest.h>

#include <cmath>

#include "scalelaw/advisor.hpp"
#include "scalelaw/error.hpp"

using namespace scalelaw;

namespace {

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> xs;
  const int n = static_cast<int>(std::round(std::log10(hi / lo) * per_decade));
  for (int i = 0; i <= n; ++i) xs.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return xs;
}

}  // namespace

TEST_CASE("compute advice at 3.2e24 FLOPs is a 70B model on 7.7T tokens") {
  const Recommendation r = advise_compute(paper_artifact(), 3.2e24);
  CHECK(*r.N == doctest::Approx(7.0e10).epsilon(0.05));
  CHECK(r.D == doctest::Approx(7.7e12).epsilon(0.05));
  CHECK(r.flags.empty());
}

TEST_CASE("compute advice at 8.16e21 FLOPs matches the large-batch baseline") {
  const Recommendation r = advise_compute(paper_artifact(), 8.16e21);
  CHECK(*r.N == doctest::Approx(4.36e9).epsilon(0.01));
  CHECK(r.D == doctest::Approx(3.1178e11).epsilon(0.01));
  CHECK(r.B == doctest::Approx(1.10e6).epsilon(0.01));
  REQUIRE(r.predicted_loss);
  REQUIRE(r.law_loss);
  // The two loss routes disagree only through rounding of the published constants.
  CHECK(*r.predicted_loss == doctest::Approx(*r.law_loss).epsilon(0.03));
  // 2.6B preset: 1.6e-4 at 1M tokens, scaled linearly to B.
  REQUIRE(r.LR);
  CHECK(*r.LR == doctest::Approx(1.6e-4 * r.B / 1e6).epsilon(1e-12));
}

TEST_CASE("batch validity floor") {
  const LawArtifact laws = paper_artifact();
  const Recommendation at_floor = advise_compute(laws, 5e18);
  CHECK(at_floor.B == doctest::Approx(5e5).epsilon(0.05));
  CHECK(at_floor.flags.count("B") == 0);
  const Recommendation below = advise_compute(laws, 1e18);
  CHECK(below.flags.count("B") == 1);
}

TEST_CASE("compute advice identities hold over eight decades") {
  const LawArtifact laws = paper_artifact();
  for (double C : log_grid(1e18, 1e26, 8)) {
    const Recommendation r = advise_compute(laws, C);
    CHECK(6.0 * *r.N * r.D == doctest::Approx(C).epsilon(0.01));
    CHECK(std::abs(r.S * r.B - r.D) <= r.B);
    for (const char* field : {"C", "N", "D", "S", "B", "LR", "loss", "law_loss"})
      CHECK(r.provenance.count(field) == 1);
  }
}

TEST_CASE("LR is capped at the ceiling") {
  LawArtifact laws = paper_artifact();
  AdviceOptions opts;
  opts.anchor = LrAnchor{1e-3, 5e5};
  const Recommendation r = advise_compute(laws, 1e25, opts);
  CHECK(*r.LR == doctest::Approx(2.4e-3));
  CHECK(r.flags.count("LR") == 1);
  laws.lr_law.reset();
  const Recommendation uncapped = advise_compute(laws, 1e25, opts);
  CHECK(*uncapped.LR > 2.4e-3);
}

TEST_CASE("sqrt LR rule") {
  AdviceOptions opts;
  opts.lr_rule = LrScaleRule::sqrt;
  opts.anchor = LrAnchor{1e-4, 1e6};
  const Recommendation r = advise_compute(paper_artifact(), 8.16e21, opts);
  CHECK(*r.LR == doctest::Approx(1e-4 * std::sqrt(r.B / 1e6)).epsilon(1e-12));
}

TEST_CASE("data advice on the published batch law") {
  const LawArtifact laws = paper_artifact();
  CHECK(advise_data(laws, 1e12).B == doctest::Approx(4.7e6).epsilon(0.02));
  CHECK(advise_data(laws, 1e13).B == doctest::Approx(8.7e6).epsilon(0.02));
  CHECK(advise_data(laws, 2e11).B == doctest::Approx(3.12e6).epsilon(0.01));
  CHECK(advise_data(laws, 1e12).regime == "power");
}

TEST_CASE("data advice with an explicit baseline reproduces the 3M-batch LR") {
  AdviceOptions opts;
  opts.anchor = LrAnchor{1.2e-4, 2e6};
  const Recommendation r = advise_data(paper_artifact(), 2e11, 6.8e9, opts);
  CHECK(r.B == doctest::Approx(3.12e6).epsilon(0.01));
  CHECK(*r.LR == doctest::Approx(1.8e-4).epsilon(0.05));
  REQUIRE(r.predicted_loss);
  CHECK(*r.predicted_loss == doctest::Approx(eval_chinchilla(paper_artifact().law, 6.8e9, 2e11)));
}

TEST_CASE("tiny data budget falls on the linear branch") {
  const Recommendation r = advise_data(paper_artifact(), 1e7);
  CHECK(r.regime == "linear");
  CHECK(r.B == doctest::Approx(2500.0));
  CHECK(r.S == doctest::Approx(4000.0));
  CHECK_FALSE(r.predicted_loss);
}

TEST_CASE("data advice is monotone in D") {
  const LawArtifact laws = paper_artifact();
  double prev = 0.0;
  for (double D : log_grid(1e6, 1e15, 10)) {
    const double b = advise_data(laws, D).B;
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("advice needs the matching laws") {
  LawArtifact laws = paper_artifact();
  laws.frontier.reset();
  CHECK_THROWS_AS(advise_compute(laws, 1e21), ValidationError);
  laws = paper_artifact();
  laws.bopt_law.reset();
  CHECK_THROWS_AS(advise_data(laws, 1e12), ValidationError);
  CHECK_THROWS_AS(advise_compute(paper_artifact(), -1.0), ValidationError);
  CHECK_THROWS_AS(advise_data(paper_artifact(), 0.0), ValidationError);
}

TEST_CASE("data advice without any anchor flags the LR") {
  LawArtifact laws = paper_artifact();
  laws.lr_law.reset();
  const Recommendation r = advise_data(laws, 1e11);
  CHECK_FALSE(r.LR);
  CHECK(r.flags.count("LR") == 1);
}

TEST_CASE("compression: 15x the data buys a 2.6x smaller model") {
  const ChinchillaLaw law = paper_artifact().law;
  const CompressionResult c = compress_query(law, 2.6e9, 1e12, 1.5e13);
  CHECK(c.N_small == doctest::Approx(1e9).epsilon(0.03));
  CHECK(c.inference_ratio > 2.5);
  CHECK(c.inference_ratio < 2.7);
  CHECK(eval_chinchilla(law, c.N_small, 1.5e13) == doctest::Approx(c.target_loss).epsilon(1e-6));
}

TEST_CASE("compression round trip and continuity") {
  const ChinchillaLaw law = paper_artifact().law;
  const CompressionResult same = compress_query(law, 2.6e9, 1e12, 1e12);
  CHECK(same.N_small == 2.6e9);
  CHECK(same.inference_ratio == 1.0);
  const CompressionResult near = compress_query(law, 2.6e9, 1e12, 1e12 * (1 + 1e-6));
  CHECK(near.inference_ratio > 1.0);
  CHECK(near.inference_ratio < 1.0 + 1e-4);
  CHECK_THROWS_AS(compress_query(law, 2.6e9, 1e12, 5e11), ValidationError);
}

TEST_CASE("recommendation rendering") {
  const Recommendation r = advise_compute(paper_artifact(), 8.16e21);
  const std::string text = recommendation_text(r);
  CHECK(text.find("4.363e+09") != std::string::npos);
  CHECK(text.find("FLOPs") != std::string::npos);
  const std::string json = recommendation_json(r);
  CHECK(json.find("\"mode\": \"compute\"") != std::string::npos);
  CHECK(json.find("\"provenance\"") != std::string::npos);
  CHECK(json.back() == '\n');
}
