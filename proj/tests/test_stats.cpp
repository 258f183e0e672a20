#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alstop/error.hpp"
#include "alstop/rng.hpp"
#include "alstop/stats.hpp"
#include "metric_oracle.hpp"

using namespace alstop;

namespace {

double brute_rank(const std::vector<double>& row, std::size_t j) {
  double less = 0.0, equal = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i == j) continue;
    if (row[i] < row[j]) less += 1.0;
    if (row[i] == row[j]) equal += 1.0;
  }
  return 1.0 + less + equal / 2.0;
}

// 12 / (N k (k+1)) * sum_j S_j^2 - 3 N (k+1), with S_j the rank sums.
double brute_friedman(const RankMatrix& m) {
  const auto n = static_cast<double>(m.rows.size());
  const auto k = static_cast<double>(m.columns.size());
  double sum_sq = 0.0;
  for (std::size_t j = 0; j < m.columns.size(); ++j) {
    double s = 0.0;
    for (const auto& row : m.rows) s += brute_rank(row, j);
    sum_sq += s * s;
  }
  return 12.0 / (n * k * (k + 1.0)) * sum_sq - 3.0 * n * (k + 1.0);
}

double chi2_survival(double x, int df) {
  if (df == 1) return std::erfc(std::sqrt(x / 2.0));
  if (df == 2) return std::exp(-x / 2.0);
  if (df == 4) return std::exp(-x / 2.0) * (1.0 + x / 2.0);
  return NAN;
}

double phi(double z) { return std::exp(-z * z / 2.0) / std::sqrt(2.0 * M_PI); }
double big_phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(range of k standard normals <= q), by Simpson's rule.
double range_cdf(double q, std::size_t k) {
  const int steps = 4000;
  const double lo = -9.0, hi = 9.0, h = (hi - lo) / steps;
  double s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double z = lo + h * i;
    const double f = phi(z) * std::pow(big_phi(z + q) - big_phi(z), static_cast<double>(k - 1));
    s += f * (i == 0 || i == steps ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return static_cast<double>(k) * s * h / 3.0;
}

double studentized_q(std::size_t k) {
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = (lo + hi) / 2.0;
    (range_cdf(mid, k) < 0.95 ? lo : hi) = mid;
  }
  return (lo + hi) / 2.0 / std::sqrt(2.0);
}

RankMatrix random_matrix(Rng& rng, std::size_t n, std::size_t k, int levels) {
  RankMatrix m;
  for (std::size_t j = 0; j < k; ++j) m.columns.push_back("c" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < k; ++j) row.push_back(static_cast<double>(rng.uniform_index(levels)));
    m.rows.push_back(row);
  }
  return m;
}

}  // namespace

TEST_CASE("cohen kappa examples") {
  const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 0}, c{1, 0, 1, 0};
  CHECK(cohen_kappa(a, a) == 1.0);
  CHECK(cohen_kappa(a, b) == doctest::Approx(0.5));
  CHECK(cohen_kappa(a, c) == doctest::Approx(0.0));
  const std::vector<int> same{2, 2, 2};
  CHECK(cohen_kappa(same, same) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(a, std::vector<int>{1}), DataError);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST_CASE("cohen kappa matches a contingency oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(30), c = 1 + rng.uniform_index(4);
    std::vector<int> p(n), q(n);
    for (auto& v : p) v = static_cast<int>(rng.uniform_index(c));
    for (auto& v : q) v = rng.uniform() < 0.6 ? p[&v - q.data()] : static_cast<int>(rng.uniform_index(c));
    const double got = cohen_kappa(p, q);
    CHECK(got == doctest::Approx(oracle::kappa(p, q)).epsilon(1e-12));
    CHECK(got == doctest::Approx(cohen_kappa(q, p)).epsilon(1e-12));
  }
}

TEST_CASE("pearson examples and invariances") {
  const std::vector<double> x{1, 2, 3};
  CHECK(pearson(x, std::vector<double>{1, 3, 2}) == doctest::Approx(0.5));
  CHECK(pearson(x, std::vector<double>{5, 7, 9}) == doctest::Approx(1.0));
  CHECK(pearson(x, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{4, 4, 4}), UndefinedStatistic);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), UndefinedStatistic);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), DataError);

  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(20);
    std::vector<double> a(n), b(n), a2(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal() + 0.5 * a[i];
      a2[i] = 3.5 * a[i] - 2.0;
      neg[i] = -b[i];
    }
    const double r = pearson(a, b);
    CHECK(r == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
    CHECK(pearson(a2, b) == doctest::Approx(r).epsilon(1e-12));
    CHECK(pearson(a, neg) == doctest::Approx(-r).epsilon(1e-12));
    CHECK(std::abs(r) <= 1.0);
  }
}

TEST_CASE("average ranks share ties") {
  CHECK(average_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
  CHECK(average_ranks(std::vector<double>{5, 5, 5}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("friedman examples") {
  RankMatrix m{{"best", "worst"}, std::vector<std::vector<double>>(10, {1.0, 2.0})};
  const auto r = friedman(m);
  CHECK(r.statistic == doctest::Approx(10.0));
  CHECK(r.p_value == doctest::Approx(chi2_survival(10.0, 1)).epsilon(1e-10));
  CHECK(r.mean_ranks == std::vector<double>{1.0, 2.0});

  RankMatrix tied{{"a", "b", "c"}, std::vector<std::vector<double>>(6, {4.0, 4.0, 4.0})};
  const auto t = friedman(tied);
  CHECK(t.statistic == doctest::Approx(0.0));
  CHECK(t.p_value == 1.0);

  CHECK_THROWS(friedman(RankMatrix{{"a"}, {{1.0}, {2.0}}}));
  CHECK_THROWS(friedman(RankMatrix{{"a", "b"}, {{1.0, 2.0}}}));
  CHECK_THROWS(friedman(RankMatrix{{"a", "b"}, {{1.0, 2.0}, {1.0}}}));
}

TEST_CASE("friedman matches the rank-sum formula and chi-square tail") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = rng.uniform() < 0.5 ? 3 : 5;
    const auto m = random_matrix(rng, 2 + rng.uniform_index(10), k, 1000000);
    const auto r = friedman(m);
    const double stat = brute_friedman(m);
    CHECK(r.statistic == doctest::Approx(stat).epsilon(1e-10));
    if (stat > 0) CHECK(r.p_value == doctest::Approx(chi2_survival(stat, static_cast<int>(k - 1))).epsilon(1e-9));
  }
  // 5 x 4 with ties
  const auto m = random_matrix(rng, 5, 4, 3);
  CHECK(friedman(m).statistic == doctest::Approx(brute_friedman(m)).epsilon(1e-10));
}

TEST_CASE("friedman depends only on within-row order") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_matrix(rng, 8, 4, 50);
    const auto before = friedman(m);
    for (auto& row : m.rows)
      for (auto& v : row) v = std::exp(v / 10.0) + 3.0;
    CHECK(friedman(m).statistic == doctest::Approx(before.statistic).epsilon(1e-12));
  }
}

TEST_CASE("nemenyi q values follow the studentized range") {
  for (std::size_t k = 2; k <= 20; ++k) {
    CAPTURE(k);
    CHECK(nemenyi_q(k) == doctest::Approx(studentized_q(k)).epsilon(1e-5));
  }
  CHECK(nemenyi_q(2) == doctest::Approx(1.960).epsilon(1e-3));
  CHECK_THROWS_AS(nemenyi_q(1), ConfigError);
  CHECK_THROWS_AS(nemenyi_q(21), ConfigError);
  CHECK_THROWS_AS(nemenyi_q(5, 0.1), ConfigError);
}

TEST_CASE("critical difference arithmetic") {
  CHECK(nemenyi_cd(2, 25) == doctest::Approx(nemenyi_q(2) * std::sqrt(1.0 / 25.0)));
  for (std::size_t k = 2; k <= 20; ++k) CHECK(nemenyi_cd(k, 40) == doctest::Approx(nemenyi_cd(k, 10) / 2.0));
  CHECK(nemenyi_cd(10, 270) == doctest::Approx(3.163684 * std::sqrt(110.0 / 1620.0)));
  CHECK(nemenyi_cd(10, 270) == doctest::Approx(0.8244).epsilon(1e-3));
}

TEST_CASE("cd diagram groups match an exhaustive interval scan") {
  Rng rng(5);
  int gated = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(6), n = 3 + rng.uniform_index(30);
    RankMatrix m;
    for (std::size_t j = 0; j < k; ++j) m.columns.push_back("c" + std::to_string(j));
    std::vector<double> shift(k);
    for (auto& s : shift) s = 3.0 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < k; ++j) row.push_back(shift[j] + rng.normal());
      m.rows.push_back(row);
    }
    const auto d = cd_diagram_data(m);
    REQUIRE(std::is_sorted(d.mean_ranks.begin(), d.mean_ranks.end()));
    std::vector<std::pair<std::size_t, std::size_t>> expect;
    if (d.friedman_p >= 0.05) {
      expect.emplace_back(0, k - 1);
    } else {
      ++gated;
      auto ok = [&](std::size_t a, std::size_t b) {
        for (std::size_t i = a; i <= b; ++i)
          for (std::size_t j = i + 1; j <= b; ++j)
            if (!(std::abs(d.mean_ranks[j] - d.mean_ranks[i]) < d.critical_difference)) return false;
        return true;
      };
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
          if (!ok(a, b)) continue;
          const bool contained = (a > 0 && ok(a - 1, b)) || (b + 1 < k && ok(a, b + 1));
          if (!contained) expect.emplace_back(a, b);
        }
    }
    CHECK(d.groups == expect);
  }
  CHECK(gated > 50);
}

TEST_CASE("cd diagram trivial groupings") {
  RankMatrix apart{{"a", "b"}, std::vector<std::vector<double>>(30, {1.0, 2.0})};
  const auto d = cd_diagram_data(apart);
  CHECK(d.groups == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
  RankMatrix same{{"a", "b", "c"}, std::vector<std::vector<double>>(30, {1.0, 1.0, 1.0})};
  CHECK(cd_diagram_data(same).groups == std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}});
  CHECK(d.to_json()["groups"].size() == 2);
}

TEST_CASE("wilcoxon exact p matches sign enumeration") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    std::vector<double> x(n), y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (static_cast<double>(i) + 1.0 + 0.5 * rng.uniform());
    const auto r = wilcoxon_signed_rank(x, y);
    REQUIRE(r.exact);
    // Ranks are 1..n by construction.
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] > 0) w += static_cast<double>(i + 1);
    CHECK(r.statistic == w);
    const double total = static_cast<double>(n * (n + 1) / 2);
    const double low = std::min(w, total - w);
    std::size_t hits = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) s += static_cast<double>(i + 1);
      if (s <= low) ++hits;
    }
    const double p = std::min(1.0, 2.0 * static_cast<double>(hits) / std::pow(2.0, static_cast<double>(n)));
    CHECK(r.p_value == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon normal approximation with ties") {
  // Differences 1, 1, 2, -3, 4, 4, 5, 6 -> ranks 1.5, 1.5, 3, 4, 5.5, 5.5, 7, 8.
  const std::vector<double> x{1, 1, 2, -3, 4, 4, 5, 6}, y(8, 0.0);
  const auto r = wilcoxon_signed_rank(x, y);
  CHECK_FALSE(r.exact);
  CHECK(r.statistic == 32.0);
  const double mean = 18.0, var = 8.0 * 9.0 * 17.0 / 24.0 - (6.0 + 6.0) / 48.0;
  const double z = (32.0 - mean) / std::sqrt(var);
  CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));

  const auto zeros = wilcoxon_signed_rank(std::vector<double>{1, 2}, std::vector<double>{1, 2});
  CHECK(zeros.nonzero == 0);
  CHECK(zeros.p_value == 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}
