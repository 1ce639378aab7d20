#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "epu/error.hpp"
#include "epu/prevalence.hpp"
#include "epu/seed.hpp"
#include "test_util.hpp"

using namespace epu;

TEST_CASE("cc") {
  CHECK(cc(std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(cc(std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK(cc(std::vector<int>{1, 0, 0, 0, 0}) == doctest::Approx(0.2));
  CHECK_THROWS_AS(cc(std::vector<int>{}), DataError);
  CHECK_THROWS_AS(cc(std::vector<int>{2}), DataError);
}

TEST_CASE("pcc") {
  CHECK(pcc(std::vector<double>{0.9, 0.1}) == doctest::Approx(0.5));
  CHECK(pcc(std::vector<double>(7, 0.42)) == doctest::Approx(0.42));
  CHECK(pcc(std::vector<double>{0.2, 0.3, 0.7}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(pcc(std::vector<double>{1.2}), DataError);
  CHECK_THROWS_AS(pcc(std::vector<double>{}), DataError);
}

TEST_CASE("pcc lies between min and max; cc in [0,1]") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(1 + rng.below(30));
    for (auto& v : p) v = rng.uniform();
    const double e = pcc(p);
    CHECK(e >= *std::min_element(p.begin(), p.end()) - 1e-15);
    CHECK(e <= *std::max_element(p.begin(), p.end()) + 1e-15);
    std::vector<int> l(p.size());
    for (auto& v : l) v = static_cast<int>(rng.below(2));
    const double c = cc(l);
    CHECK((c >= 0.0 && c <= 1.0));
  }
}

TEST_CASE("implicit_likelihood examples") {
  CHECK(implicit_likelihood(std::vector<double>{1.0}, 0.3) == 1.0);
  CHECK(implicit_likelihood(std::vector<double>{0.0}, 0.3) == 0.0);
  CHECK(implicit_likelihood(std::vector<double>(5, 0.48), 0.48) == 0.48);
  CHECK_THROWS(implicit_likelihood(std::vector<double>{}, 0.5));
  CHECK_THROWS(implicit_likelihood(std::vector<double>{0.5}, 1.0));
  CHECK_THROWS(implicit_likelihood(std::vector<double>{0.0, 1.0}, 0.5, 1.0));  // both grid points infeasible
  CHECK(implicit_likelihood(std::vector<double>{0.0, 1.0}, 0.5) == 0.5);
}

TEST_CASE("implicit_likelihood calibrated recovery at 0.3") {
  // scores are exact posteriors under prior q for a two-Gaussian likelihood ratio
  const double q = 0.48;
  const double pi = 0.3;
  const std::size_t n = 10000;
  Rng rng(derive_seed(7, "implik-unit"));
  std::vector<double> probs;
  const auto positives = static_cast<std::size_t>(std::lround(pi * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal() + (i < positives ? 3.0 : -3.0);
    const double lr = std::exp(6.0 * x);
    probs.push_back(q * lr / (q * lr + 1.0 - q));
  }
  const double est = implicit_likelihood(probs, q);
  CHECK(std::abs(est - pi) <= 0.02);
}

TEST_CASE("implicit_likelihood symmetry, permutation invariance, and hard scores") {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> p;
    for (std::uint64_t i = 0; i < 1 + rng.below(20); ++i) {
      const double v = 0.01 + 0.98 * rng.uniform();
      p.push_back(v);
      p.push_back(1.0 - v);
    }
    CHECK(implicit_likelihood(p, 0.5) == doctest::Approx(0.5).epsilon(1e-9));
    const double before = implicit_likelihood(p, 0.37);
    rng.shuffle(std::span(p));
    CHECK(implicit_likelihood(p, 0.37) == before);

    std::vector<int> hard(2 + rng.below(40));
    for (auto& h : hard) h = static_cast<int>(rng.below(2));
    hard[0] = 0;
    hard[1] = 1;  // keep every interior grid point feasible
    const std::vector<double> as_prob(hard.begin(), hard.end());
    CHECK(std::abs(implicit_likelihood(as_prob, 0.5) - cc(hard)) <= kDefaultImplikStep);
  }
}

namespace {

ScoredDocument sd(std::string id, int y, int m, std::string outlet, double score) {
  return {std::move(id), Date{y, static_cast<unsigned>(m), 1}, std::move(outlet), score};
}

}  // namespace

TEST_CASE("aggregate_monthly examples") {
  const YearMonth jan{2000, 1};
  SUBCASE("two scored docs") {
    const std::vector<ScoredDocument> s{sd("a", 2000, 1, "o", 1), sd("b", 2000, 1, "o", 0)};
    const auto r = aggregate_monthly(s, {{{jan, "o"}, 2}}, Estimator::CC);
    CHECK(r.points.at(jan) == 0.5);
  }
  SUBCASE("unscored docs count as negatives") {
    const std::vector<ScoredDocument> s{sd("a", 2000, 1, "o", 1)};
    CHECK(aggregate_monthly(s, {{{jan, "o"}, 4}}, Estimator::CC).points.at(jan) == 0.25);
  }
  SUBCASE("outlets are averaged without weights") {
    std::vector<ScoredDocument> s{sd("a", 2000, 1, "x", 1)};
    for (int i = 0; i < 2; ++i) s.push_back(sd("b" + std::to_string(i), 2000, 1, "y", 1));
    const auto r = aggregate_monthly(s, {{{jan, "x"}, 5}, {{jan, "y"}, 5}}, Estimator::CC);
    CHECK(r.points.at(jan) == doctest::Approx(0.3));
    AggregateOptions only_y;
    only_y.outlet = "y";
    CHECK(aggregate_monthly(s, {{{jan, "x"}, 5}, {{jan, "y"}, 5}}, Estimator::CC, only_y).points.at(jan) ==
          doctest::Approx(0.4));
  }
  SUBCASE("missing totals entry is an error") {
    const std::vector<ScoredDocument> s{sd("a", 2000, 1, "o", 1)};
    CHECK_THROWS_AS(aggregate_monthly(s, {}, Estimator::CC), DataError);
  }
  SUBCASE("zero-total months are omitted with a diagnostic") {
    Diagnostics diag;
    const auto r = aggregate_monthly({}, {{{jan, "o"}, 0}}, Estimator::PCC, {}, &diag);
    CHECK(r.points.empty());
    CHECK_FALSE(diag.empty());
  }
}

TEST_CASE("aggregate_monthly reproduces a planted corpus exactly under CC") {
  Rng rng(17);
  std::vector<ScoredDocument> scored;
  MonthlyTotals totals;
  std::map<YearMonth, double> planted;
  for (unsigned m = 1; m <= 12; ++m) {
    const std::size_t n = 50 + rng.below(100);
    const std::size_t pos = rng.below(n + 1);
    for (std::size_t i = 0; i < n; ++i) scored.push_back(sd(fmt::format("{}-{}", m, i), 1999, static_cast<int>(m), "o", i < pos ? 1 : 0));
    totals[{{1999, m}, "o"}] = n;
    planted[{1999, m}] = static_cast<double>(pos) / static_cast<double>(n);
  }
  const auto r = aggregate_monthly(scored, totals, Estimator::CC);
  CHECK(r.points == planted);
  CHECK(totals_from(scored) == totals);
}

TEST_CASE("prevalence CSV files round-trip") {
  test::TempDir dir;
  Rng rng(6);
  std::vector<ScoredDocument> s;
  for (int i = 0; i < 40; ++i) s.push_back(sd("id,\"" + std::to_string(i), 2001, 1 + i % 12, i % 3 ? "nyt" : "wsj", rng.uniform()));
  write_scored_csv(s, dir / "s.csv");
  CHECK(read_scored_csv(dir / "s.csv") == s);

  const auto totals = totals_from(s);
  write_totals_csv(totals, dir / "t.csv");
  CHECK(read_totals_csv(dir / "t.csv") == totals);

  const auto series = aggregate_monthly(s, totals, Estimator::PCC);
  write_series_csv(series.points, dir / "p.csv");
  CHECK(read_series_csv(dir / "p.csv") == series.points);
}
