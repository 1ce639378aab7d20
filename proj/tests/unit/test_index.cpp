#include <doctest.h>

#include <cmath>

#include "epu/error.hpp"
#include "epu/index.hpp"
#include "epu/seed.hpp"
#include "test_util.hpp"

using namespace epu;

namespace {

MonthlySeries series(const std::string& name, YearMonth start, const std::vector<double>& values) {
  MonthlySeries s{name, {}};
  YearMonth m = start;
  for (double v : values) {
    s.points[m] = v;
    m = m.month == 12 ? YearMonth{m.year + 1, 1} : YearMonth{m.year, m.month + 1};
  }
  return s;
}

// Textbook single-pass-free formula, used as an independent check.
double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("monthly_mean") {
  const std::map<Date, double> daily{{{1990, 1, 2}, 10}, {{1990, 1, 20}, 20}, {{1990, 2, 1}, 7},
                                     {{1990, 3, 1}, 10}, {{1990, 3, 2}, 10},  {{1990, 3, 3}, 40}};
  const auto m = monthly_mean("vix", daily);
  CHECK(m.name == "vix");
  CHECK(m.points.at({1990, 1}) == 15);
  CHECK(m.points.at({1990, 2}) == 7);
  CHECK(m.points.at({1990, 3}) == 20);
  CHECK(m.points.size() == 3);
}

TEST_CASE("align") {
  const auto a = series("a", {1990, 1}, std::vector<double>(12, 1.0));
  const auto b = series("b", {1990, 6}, std::vector<double>(13, 2.0));
  const auto p = align(a, b);
  CHECK(p.months.size() == 7);
  CHECK(p.first == YearMonth{1990, 6});
  CHECK(p.last == YearMonth{1990, 12});
  CHECK(align(a, a).months.size() == 12);
  CHECK_THROWS_AS(align(a, series("c", {2000, 1}, {1, 2, 3})), DataError);
  CHECK_THROWS_AS(align(a, series("c", {1990, 11}, {1, 2, 3})), DataError);  // overlap of two months
}

TEST_CASE("pearson examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  CHECK(pearson(a, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson(a, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0));
  CHECK_THROWS(pearson(a, std::vector<double>{5, 5, 5}));
  CHECK_THROWS(pearson(a, std::vector<double>{1, 2}));
}

TEST_CASE("pearson matches the oracle and is affine invariant") {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(3 + rng.below(40)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = 0.5 * a[i] + rng.normal();
    }
    const double r = pearson(a, b);
    CHECK(std::abs(r - pearson_oracle(a, b)) < 1e-12);
    const double alpha = 0.1 + 10 * rng.uniform();
    const double beta = 100 * (rng.uniform() - 0.5);
    std::vector<double> ta(a.size()), na(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      ta[i] = alpha * a[i] + beta;
      na[i] = -alpha * a[i] + beta;
    }
    CHECK(std::abs(pearson(ta, b) - r) < 1e-12);
    CHECK(std::abs(pearson(b, ta) - r) < 1e-12);
    CHECK(std::abs(pearson(na, b) + r) < 1e-12);
  }
}

TEST_CASE("correlation_matrix") {
  const auto a = series("a", {2000, 1}, {1, 4, 2, 8, 5});
  const auto neg = series("neg", {2000, 1}, {-1, -4, -2, -8, -5});
  const auto far = series("far", {1980, 1}, {1, 2, 3});
  const std::vector<MonthlySeries> all{a, a, neg, far};
  Diagnostics diag;
  const auto m = correlation_matrix(all, &diag);
  CHECK(*m.at(0, 1) == doctest::Approx(1.0));
  CHECK(*m.at(0, 2) == doctest::Approx(-1.0));
  CHECK_FALSE(m.at(0, 3));
  CHECK_FALSE(diag.empty());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.at(i, i) == 1.0);
    for (std::size_t j = 0; j < 4; ++j) CHECK(m.at(i, j) == m.at(j, i));
  }
}

TEST_CASE("correlation_matrix on hand-computed 5-point series") {
  // x = 1..5, y = (2,4,5,4,5), z = (5,3,4,1,2)
  // r(x,y) = 6 / sqrt(10 * 6); r(x,z) = -8 / sqrt(10 * 10); r(y,z) = -4 / sqrt(6 * 10)
  const std::vector<MonthlySeries> s{series("x", {2010, 1}, {1, 2, 3, 4, 5}), series("y", {2010, 1}, {2, 4, 5, 4, 5}),
                                     series("z", {2010, 1}, {5, 3, 4, 1, 2})};
  const auto m = correlation_matrix(s);
  CHECK(*m.at(0, 1) == doctest::Approx(6.0 / std::sqrt(60.0)).epsilon(1e-12));
  CHECK(*m.at(0, 2) == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(*m.at(1, 2) == doctest::Approx(-4.0 / std::sqrt(60.0)).epsilon(1e-12));
}

TEST_CASE("external series loading and matrix CSV round-trip") {
  test::TempDir dir;
  const auto daily = test::write_file(dir / "vix.csv", "date,value\n1990-01-02,10\n1990-01-03,20\n1990-02-01,.\n1990-02-02,7\n");
  Diagnostics diag;
  const auto ext = load_external_series(daily, &diag);
  CHECK(ext.name == "vix");
  CHECK(ext.is_daily());
  CHECK(diag.size() == 1);
  const auto m = to_monthly(ext);
  CHECK(m.points.at({1990, 1}) == 15);
  CHECK(m.points.at({1990, 2}) == 7);

  const auto monthly = test::write_file(dir / "KeyOrg.csv", "month,value\n1990-01,0.1\n1990-02,0.2\n");
  const auto key = load_external_series(monthly);
  CHECK_FALSE(key.is_daily());
  CHECK(to_monthly(key).points.at({1990, 2}) == 0.2);

  test::write_file(dir / "dup.csv", "month,value\n1990-01,0.1\n1990-01,0.2\n");
  CHECK_THROWS_AS(load_external_series(dir / "dup.csv"), DataError);

  Rng rng(1);
  std::vector<MonthlySeries> s;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> v(10);
    for (auto& x : v) x = rng.normal();
    s.push_back(series("s" + std::to_string(k), {2000, static_cast<unsigned>(1 + k)}, v));
  }
  s.push_back(series("late", {2030, 1}, {1, 2, 3}));
  const auto mat = correlation_matrix(s);
  write_matrix_csv(mat, dir / "m.csv");
  CHECK(read_matrix_csv(dir / "m.csv") == mat);
}
