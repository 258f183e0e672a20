#include <doctest.h>

#include <cmath>
#include <numeric>

#include "alstop/error.hpp"
#include "alstop/learners.hpp"
#include "fixtures.hpp"

using namespace alstop;

namespace {

std::vector<std::size_t> iota(std::size_t n, std::size_t from = 0) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

FeatureMatrix grid(double lo, double hi, std::size_t steps) {
  std::vector<double> x;
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j < steps; ++j) {
      x.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
      x.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(steps - 1));
    }
  return FeatureMatrix::dense(steps * steps, 2, x);
}

LearnerSpec quick(LearnerKind k) {
  auto s = LearnerSpec::defaults(k);
  if (k == LearnerKind::forest) s.trees = 25;
  return s;
}

const LearnerKind kAll[] = {LearnerKind::linear, LearnerKind::forest, LearnerKind::mlp};

}  // namespace

TEST_CASE("separable blobs are fit perfectly by the linear learner") {
  const auto d = fixtures::blobs(50, 12.0, 1);
  const auto m = fit(LearnerSpec::defaults(LearnerKind::linear), d.features, d.labels, 2);
  CHECK(accuracy(m.predict(d.features), d.labels) == 1.0);
}

TEST_CASE("fit is deterministic") {
  const auto d = fixtures::blobs(40, 2.0, 2, 3);
  const auto probe = grid(-5, 5, 9);
  for (auto k : kAll) {
    auto spec = quick(k);
    spec.seed = 42;
    const auto a = fit(spec, d.features, d.labels, 3);
    const auto b = fit(spec, d.features, d.labels, 3);
    CHECK(a.predict(probe) == b.predict(probe));
    CHECK(a.posterior(probe) == b.posterior(probe));
    CHECK(a.to_json().dump() == b.to_json().dump());
  }
}

TEST_CASE("posterior rows are distributions and predictions are their argmax") {
  const auto d = fixtures::blobs(30, 1.5, 3, 3);
  const auto probe = grid(-6, 6, 15);
  for (auto k : kAll) {
    const auto m = fit(quick(k), d.features, d.labels, 3);
    const auto p = m.posterior(probe);
    REQUIRE(p.cols() == 3);
    CHECK_NOTHROW(p.check_normalized(1e-9));
    const auto pred = m.predict(probe);
    for (std::size_t i = 0; i < probe.rows(); ++i) CHECK(pred[i] == argmax(p.row(i)));
    for (double c : m.confidence(probe)) CHECK((c >= 0.0 && c <= 1.0));
  }
}

TEST_CASE("ten-instance initial sets train without error") {
  const auto d = fixtures::blobs(200, 3.0, 4);
  auto pool = make_split(d, 1, 0.5);
  pool = make_initial_set(pool, d, 2, 10);
  std::vector<int> y;
  for (auto r : pool.labeled) y.push_back(d.labels[r]);
  const auto x = d.features.select(pool.labeled);
  for (auto k : kAll) {
    const auto m = fit(quick(k), x, y, 2);
    CHECK_NOTHROW(m.posterior(d.features).check_normalized(1e-9));
  }
}

TEST_CASE("symmetric point gets an even posterior; deep points are confident") {
  // Mirror-symmetric training set about x = 0.
  std::vector<double> x;
  std::vector<int> y;
  Rng rng(5);
  for (int i = 0; i < 60; ++i) {
    const double a = 3.0 + rng.normal(), b = rng.normal();
    x.insert(x.end(), {a, b, -a, b});
    y.insert(y.end(), {0, 1});
  }
  const auto train = FeatureMatrix::dense(120, 2, x);
  const auto m = fit(LearnerSpec::defaults(LearnerKind::linear), train, y, 2);
  const auto probe = FeatureMatrix::dense(2, 2, {0.0, 0.0, 6.0, 0.0});
  const auto p = m.posterior(probe);
  CHECK(std::abs(p(0, 0) - 0.5) <= 0.05);
  CHECK(p(1, 0) > 0.9);
}

TEST_CASE("linear confidence is zero on the decision boundary") {
  const auto train = FeatureMatrix::dense(4, 1, {-2.0, -1.0, 1.0, 2.0});
  const std::vector<int> y{0, 0, 1, 1};
  const auto m = fit(LearnerSpec::defaults(LearnerKind::linear), train, y, 2);
  const auto c = m.confidence(FeatureMatrix::dense(2, 1, {0.0, 3.0}));
  CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(c[1] > c[0]);
}

TEST_CASE("forest with unanimous pure leaves is fully confident") {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(-10.0 - 0.1 * i);
    y.push_back(0);
    x.push_back(10.0 + 0.1 * i);
    y.push_back(1);
  }
  const auto train = FeatureMatrix::dense(80, 1, x);
  const auto m = fit(quick(LearnerKind::forest), train, y, 2);
  const auto c = m.confidence(train);
  for (double v : c) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("forest posterior stays normalized for any tree count") {
  const auto d = fixtures::blobs(30, 1.0, 7, 3);
  for (int trees : {1, 5, 40}) {
    auto spec = quick(LearnerKind::forest);
    spec.trees = trees;
    CHECK_NOTHROW(fit(spec, d.features, d.labels, 3).posterior(d.features).check_normalized(1e-9));
  }
}

TEST_CASE("mlp on indistinguishable inputs outputs the uniform softmax") {
  const auto x = FeatureMatrix::dense(6, 2, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  const std::vector<int> y{0, 1, 2, 0, 1, 2};
  const auto m = fit(LearnerSpec::defaults(LearnerKind::mlp), x, y, 3);
  for (double c : m.confidence(x)) CHECK(c == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("mlp gradient matches central differences") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(5), in = 1 + rng.uniform_index(4), hid = 2 + rng.uniform_index(4),
                      out = 2 + rng.uniform_index(3);
    std::vector<double> xv(n * in);
    for (auto& v : xv) v = rng.normal();
    const auto x = FeatureMatrix::dense(n, in, xv);
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.uniform_index(out));
    mlp::Parameters p;
    p.resize(in, hid, out);
    for (auto* v : {&p.w1, &p.b1, &p.w2, &p.b2})
      for (auto& w : *v) w = 0.5 * rng.normal();
    mlp::Parameters g;
    mlp::loss_and_gradient(p, x, y, 0.01, &g);

    double diff = 0.0, scale = 0.0;
    const double h = 1e-6;
    auto check = [&](std::vector<double>& param, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double keep = param[i];
        param[i] = keep + h;
        const double up = mlp::loss_and_gradient(p, x, y, 0.01, nullptr);
        param[i] = keep - h;
        const double down = mlp::loss_and_gradient(p, x, y, 0.01, nullptr);
        param[i] = keep;
        const double fd = (up - down) / (2 * h);
        diff += (fd - grad[i]) * (fd - grad[i]);
        scale += fd * fd + grad[i] * grad[i];
      }
    };
    check(p.w1, g.w1);
    check(p.b1, g.b1);
    check(p.w2, g.w2);
    check(p.b2, g.b2);
    CHECK(std::sqrt(diff) / std::sqrt(scale) < 1e-4);
  }
}

TEST_CASE("single-class training yields a flagged constant model") {
  const auto x = FeatureMatrix::dense(3, 1, {1, 2, 3});
  const std::vector<int> y{1, 1, 1};
  for (auto k : kAll) {
    const auto m = fit(quick(k), x, y, 3);
    CHECK(m.degenerate());
    CHECK(m.predict(x) == std::vector<int>{1, 1, 1});
    CHECK_NOTHROW(m.posterior(x).check_normalized(1e-9));
  }
}

TEST_CASE("fit and predict reject bad shapes") {
  const auto x = FeatureMatrix::dense(3, 2, {1, 2, 3, 4, 5, 6});
  const std::vector<int> y{0, 1, 0};
  for (auto k : kAll) {
    CHECK_THROWS_AS(fit(quick(k), FeatureMatrix::dense(0, 2, {}), std::vector<int>{}, 2), DataError);
    CHECK_THROWS_AS(fit(quick(k), x, std::vector<int>{0, 1}, 2), DataError);
    const auto m = fit(quick(k), x, y, 2);
    CHECK_THROWS_AS(m.posterior(FeatureMatrix::dense(1, 3, {1, 2, 3})), DataError);
    CHECK_THROWS_AS(m.confidence(FeatureMatrix::dense(1, 1, {1})), DataError);
  }
}

TEST_CASE("learner spec json round trip and validation") {
  nlohmann::json j = {{"kind", "forest"}, {"seed", 3}, {"params", {{"trees", 7}, {"max_depth", 4}}}};
  const auto s = LearnerSpec::from_json(j);
  CHECK(s.kind == LearnerKind::forest);
  CHECK(s.trees == 7);
  CHECK(s.max_depth == 4);
  CHECK(LearnerSpec::from_json(s.to_json()) == s);
  j["params"]["bogus"] = 1;
  CHECK_THROWS_AS(LearnerSpec::from_json(j), ConfigError);
  CHECK_THROWS_AS(learner_kind_from_string("svm"), ConfigError);
  auto bad = LearnerSpec::defaults(LearnerKind::mlp);
  bad.hidden = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sparse inputs train the same model as their dense copy") {
  const auto d = fixtures::blobs(30, 3.0, 8);
  const auto sparse = d.features.to_sparse();
  const auto spec = LearnerSpec::defaults(LearnerKind::mlp);
  const auto a = fit(spec, d.features, d.labels, 2);
  const auto b = fit(spec, sparse, d.labels, 2);
  CHECK(a.predict(d.features) == b.predict(d.features));
}
