#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "xferlens/errors.hpp"
#include "xferlens/random.hpp"
#include "xferlens/stats.hpp"

using namespace xferlens;

namespace {

const std::filesystem::path kFixtures = XFERLENS_FIXTURES;

RunSet make_runs(std::vector<std::pair<std::string, std::vector<double>>> groups) {
  RunSet r;
  r.task_id = "t";
  r.metric = "accuracy";
  r.groups = std::move(groups);
  return r;
}

}  // namespace

TEST_CASE("task metrics") {
  CHECK(accuracy(3, 4) == 0.75);
  CHECK(dice(1, 1, 1) == 0.5);
  CHECK(dice(5, 0, 0) == 1.0);
  CHECK_THROWS_AS(accuracy(0, 0), DegenerateInputError);
  CHECK_THROWS_AS(dice(0, 0, 0), DegenerateInputError);

  const std::vector<double> s = {0.9, 0.8, 0.3, 0.2};
  const std::vector<int> y = {1, 1, 0, 0};
  CHECK(auc(s, y) == 1.0);
  const std::vector<double> tied = {0.5, 0.5};
  const std::vector<int> ty = {1, 0};
  CHECK(auc(tied, ty) == 0.5);
  CHECK_THROWS_AS(auc(s, std::vector<int>{1, 1, 1, 1}), DegenerateInputError);
  CHECK_THROWS_AS(auc(s, std::vector<int>{1, 0, 2, 0}), RangeError);
}

TEST_CASE("auc equals pairwise enumeration") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    // coarse scores so ties are common
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(12)) / 4.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(auc(s, y) == oracle::pairwise_auc(s, y));
  }
}

TEST_CASE("welch t-test") {
  const std::vector<double> a = {1, 2, 3, 4}, b = {2, 3, 4, 5};
  const auto w = welch_t(a, b);
  CHECK(w.t == doctest::Approx(-std::sqrt(6.0 / 5.0)).epsilon(1e-14));
  CHECK(w.dof == 6.0);
  const double ref = oracle::t_two_sided_p(w.t, 6.0);
  CHECK(std::abs(ref - 0.315) < 0.001);
  CHECK(std::abs(w.p - ref) <= 1e-6);

  const auto r = welch_t(b, a);
  CHECK(r.t == -w.t);
  CHECK(std::abs(r.dof - w.dof) <= 1e-12);
  CHECK(std::abs(r.p - w.p) <= 1e-12);

  const auto same = welch_t(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  const std::vector<double> c = {3, 3, 3};
  CHECK_THROWS_AS(welch_t(c, c), DegenerateInputError);
  CHECK_NOTHROW(welch_t(c, a));
  CHECK_THROWS_AS(welch_t(std::vector<double>{1.0}, a), DegenerateInputError);

  SUBCASE("equal size and variance gives 2(n - 1) degrees of freedom") {
    Rng rng(5);
    for (int n = 2; n < 40; ++n) {
      // integer samples keep both variances exact
      std::vector<double> x(n), z(n);
      for (int i = 0; i < n; ++i) x[i] = static_cast<double>(rng.below(100));
      x[0] = 0.0;
      x[1] = 1.0;
      for (int i = 0; i < n; ++i) z[i] = x[n - 1 - i] + 7.0;
      CHECK(welch_t(x, z).dof == 2.0 * (n - 1));
    }
  }

  SUBCASE("p decreases as the means separate") {
    double last = 2.0;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> shifted = b;
      for (auto& v : shifted) v += 0.25 * k;
      const double p = welch_t(a, shifted).p;
      CHECK(p < last);
      CHECK(p > 0.0);
      last = p;
    }
  }
}

TEST_CASE("student t tail against quadrature") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const double dof = 1.0 + rng.uniform() * 60.0;
    const double t = (rng.uniform() - 0.5) * 12.0;
    CHECK(std::abs(student_t_two_sided_p(t, dof) - oracle::t_two_sided_p(t, dof)) <= 1e-8);
  }
  CHECK(student_t_two_sided_p(0.0, 3.0) == 1.0);
}

TEST_CASE("relative delta and significance matrix") {
  const std::vector<double> base = {0.80, 0.82, 0.79, 0.81};
  std::vector<double> up = base;
  for (auto& v : up) v *= 1.01;
  const auto runs = make_runs({{"a", up}, {"b", base}, {"c", {0.5, 0.52, 0.49, 0.51}}});

  const auto d = relative_delta(runs, "a", "b");
  CHECK(d.delta_percent == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(relative_delta(runs, "b", "b").delta_percent == 0.0);
  CHECK(relative_delta(runs, "b", "b").p == 1.0);
  CHECK_THROWS_AS(relative_delta(runs, "a", "zzz"), KeyError);

  const auto m = significance_matrix(runs);
  REQUIRE(m.size() == 3);
  CHECK(m[0].group_a == "a");
  CHECK(m[0].group_b == "b");
  CHECK(m[1].group_b == "c");
  CHECK(m[2].group_a == "b");
  for (const auto& e : m) {
    const auto direct = relative_delta(runs, e.group_a, e.group_b);
    CHECK(e.delta_percent == direct.delta_percent);
    CHECK(e.p == direct.p);
    const auto& ga = runs.group(e.group_a);
    const auto& gb = runs.group(e.group_b);
    const double ma = sample_mean(ga), mb = sample_mean(gb);
    const auto flipped = relative_delta(runs, e.group_b, e.group_a);
    CHECK(flipped.delta_percent == doctest::Approx(100.0 * (mb - ma) / ma).epsilon(1e-12));
  }
  CHECK(significance_matrix(runs, 4).size() == 3);

  const auto five = make_runs({{"a", base}, {"b", up}, {"c", base}, {"d", up}, {"e", base}});
  CHECK(significance_matrix(five).size() == 10);
  CHECK_THROWS_AS(significance_matrix(make_runs({{"a", base}})), DegenerateInputError);
}

TEST_CASE("p formatting") {
  CHECK(format_p(0.0004) == "<0.001");
  CHECK(format_p(0.541) == "0.541");
  CHECK(format_p(1.0) == "1.000");
  CHECK(format_p(0.001) == "0.001");
}

TEST_CASE("run set files") {
  const auto runs = load_runset(kFixtures / "runs" / "classification.json");
  CHECK(runs.groups.size() == 4);
  CHECK(runs.groups.front().first == "imagenet");
  CHECK(runs.n_classes == 1000u);
  CHECK_THROWS_AS(parse_runset(Json::parse(R"({"task":"x","metric":"accuracy","groups":{"a":[1]}})")), SchemaError);
  CHECK_THROWS_AS(parse_runset(Json::parse(R"({"task":"x","metric":"accuracy","groups":{"a":["q",1]}})")), SchemaError);
  CHECK_THROWS_AS(load_runset(kFixtures / "runs" / "absent.json"), MissingFileError);
}

TEST_CASE("scaled interpolation") {
  const MeanStd small{0.80, 0.010}, large{0.86, 0.004};
  const double ns = 1.28e6, nl = 12.03e6;

  const auto lo = interpolate_scaled(small, large, ns, nl, 1.0);
  CHECK(lo.mean == small.mean);
  CHECK(lo.std == small.std);
  CHECK(lo.lambda == 0.0);
  const auto hi = interpolate_scaled(small, large, ns, nl, nl / ns);
  CHECK(hi.mean == large.mean);
  CHECK(hi.std == large.std);
  CHECK(hi.lambda == 1.0);

  const auto ub = interpolate_scaled(small, large, ns, nl, 3.807);
  const double lambda = std::log(3.807) / std::log(nl / ns);
  CHECK(ub.lambda == doctest::Approx(lambda).epsilon(1e-14));
  CHECK(ub.mean == doctest::Approx((1 - lambda) * 0.80 + lambda * 0.86).epsilon(1e-14));
  CHECK(ub.std == doctest::Approx(std::hypot((1 - lambda) * 0.010, lambda * 0.004)).epsilon(1e-14));
  CHECK(ub.scale == 3.807);

  double last = small.mean;
  for (double s = 1.05; s < nl / ns; s += 0.1) {
    const double m = interpolate_scaled(small, large, ns, nl, s).mean;
    CHECK(m > last);
    last = m;
  }

  CHECK_THROWS_AS(interpolate_scaled(small, large, ns, nl, 0.5), RangeError);
  CHECK_THROWS_AS(interpolate_scaled(small, large, ns, nl, 10.0), RangeError);
  CHECK_THROWS_AS(interpolate_scaled(small, large, nl, ns, 1.0), RangeError);
}

TEST_CASE("time to convergence") {
  const std::vector<double> step = {0, 0, 1, 1, 1};
  const auto c = time_to_convergence(step, 1, 0.0);
  CHECK(c.epoch == 2);
  CHECK_FALSE(c.forced);

  const std::vector<double> flat(9, 0.7);
  CHECK(time_to_convergence(flat, 3, 0.0).epoch == 2);
  CHECK(running_mean_at(step, 2, 3) == 1.0);
  CHECK(running_mean_at(step, 2, 2) == 0.5);

  const std::vector<double> peaked = {0.1, 0.5, 0.9, 0.4};
  const auto f = time_to_convergence(peaked, 1, 0.0);
  CHECK(f.forced);
  CHECK(f.epoch == 3);
  CHECK(f.best_running_mean == 0.9);

  CHECK_THROWS_AS(time_to_convergence(step, 6, 0.0), DegenerateInputError);
  CHECK_THROWS_AS(time_to_convergence(step, 0, 0.0), RangeError);
  CHECK_THROWS_AS(time_to_convergence(step, 1, -1.0), RangeError);

  SUBCASE("noisy saturating curves match the exhaustive scan") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      const std::size_t n = 20 + rng.below(60);
      const std::size_t w = 1 + rng.below(5);
      const double tol = 0.002 + 0.02 * rng.uniform();
      std::vector<double> s(n);
      for (std::size_t e = 0; e < n; ++e) s[e] = 0.9 * (1 - std::exp(-double(e) / 8.0)) + 0.01 * rng.normal();
      const auto got = time_to_convergence(s, w, tol);
      const auto want = oracle::convergence_scan(s, w, tol);
      CHECK(got.epoch == want.first);
      CHECK(got.forced == want.second);
    }
  }
}

TEST_CASE("task complexity") {
  CHECK(task_complexity(1281167, 1000) == doctest::Approx(1281.167).epsilon(1e-15));
  CHECK(task_complexity(1281167, 6) == doctest::Approx(213527.8).epsilon(1e-6));
  CHECK(task_complexity(77, 1) == 77.0);
  CHECK_THROWS_AS(task_complexity(10, 0), DegenerateInputError);
}
