#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reidbench/error.hpp"
#include "reidbench/results.hpp"
#include "reidbench/stats.hpp"

using namespace reidbench;

namespace {

ResultTable fixture() { return load_cells(std::string(REIDBENCH_FIXTURE_DIR) + "/benchmark_cells.json"); }

}  // namespace

TEST_CASE("incomplete beta closed forms") {
  // I_x(1, b) = 1 - (1 - x)^b and I_x(a, 1) = x^a.
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    CHECK(regularized_incomplete_beta(1.0, 3.5, x) == doctest::Approx(1.0 - std::pow(1.0 - x, 3.5)).epsilon(1e-13));
    CHECK(regularized_incomplete_beta(2.5, 1.0, x) == doctest::Approx(std::pow(x, 2.5)).epsilon(1e-13));
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("t CDF agrees with quadrature") {
  for (double df : {1.0, 2.0, 3.0, 7.0, 11.0, 15.0, 40.0}) {
    for (double t : {-6.0, -2.3, -0.4, 0.0, 0.1, 1.0, 2.7, 9.0}) {
      CHECK(std::abs(student_t_cdf(t, df) - oracle::t_cdf_quadrature(t, df)) <= 1e-9);
    }
  }
  // Cauchy closed form at df = 1.
  CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("paired t-test on a small example") {
  const std::vector<double> a{0.5, 0.6, 0.7}, b{0.4, 0.5, 0.65};
  const auto r = paired_t_test(a, b);
  const double mean = (0.1 + 0.1 + 0.05) / 3.0;
  const double sd = std::sqrt(((0.1 - mean) * (0.1 - mean) * 2 + (0.05 - mean) * (0.05 - mean)) / 2.0);
  const double t = mean / (sd / std::sqrt(3.0));
  CHECK(r.n == 3);
  CHECK(r.df == 2.0);
  CHECK(r.t_statistic == doctest::Approx(t).epsilon(1e-12));
  const double p = 2.0 * (1.0 - oracle::t_cdf_quadrature(std::abs(t), 2.0));
  CHECK(std::abs(r.p_value - p) <= 1e-9);

  const auto one = paired_t_test(a, b, false);
  CHECK(std::abs(one.p_value - (1.0 - oracle::t_cdf_quadrature(t, 2.0))) <= 1e-9);
  CHECK_FALSE(one.two_sided);
}

TEST_CASE("paired t-test errors") {
  const std::vector<double> a{0.1, 0.5, 0.3}, b{0.1, 0.5};
  CHECK_THROWS_AS(paired_t_test(a, b), Error);
  try {
    paired_t_test(a, a);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroVarianceDifferences);
  }
  const std::vector<double> shifted{0.2, 0.6, 0.4};
  const std::vector<double> noisy{0.1 + 0.01, 0.5 + 0.01, 0.3 + 0.01};
  CHECK_THROWS_AS(paired_t_test(shifted, a), Error);  // constant difference
  CHECK_NOTHROW(paired_t_test(noisy, std::vector<double>{0.1, 0.5, 0.31}));
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{0.0}), Error);
}

TEST_CASE("paired t-test symmetry and shift monotonicity") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 20);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = size(rng);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = unit(rng), b[i] = unit(rng);
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    CHECK(ab.t_statistic == doctest::Approx(-ba.t_statistic).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.p_value > 0.0);
    CHECK(ab.p_value <= 1.0);

    // Start at a shift that makes mean(a) > mean(b), then keep pushing.
    double shift = std::max(0.0, ab.mean_b - ab.mean_a) + 0.01;
    double prev = 2.0;
    for (int k = 0; k < 6; ++k, shift += 0.05) {
      std::vector<double> moved = a;
      for (auto& x : moved) x += shift;
      const double p = paired_t_test(moved, b).p_value;
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("aggregate") {
  const std::vector<double> one{0.42};
  const auto a = aggregate(one);
  CHECK(a.mean == 0.42);
  CHECK(a.stddev == 0.0);
  CHECK(a.single_value());
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
  const auto b = aggregate(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(b.mean == 2.5);
  CHECK(b.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(b.n == 4);
}

TEST_CASE("selectors over the benchmark table") {
  const auto cells = fixture();
  CHECK(select_values(cells, "rank10", Selector::parse("single")).size() == 12);
  CHECK(select_values(cells, "rank10", Selector::parse("combined_all")).size() == 12);
  CHECK(select_values(cells, "rank10", Selector::parse("best_individual")).size() == 16);
  CHECK(select_values(cells, "rank10", Selector::parse("combined_others")).size() == 16);
  CHECK(select_values(cells, "rank10", Selector::parse("combined_scaled")).size() == 16);
  CHECK(select_values(cells, "f1_star", Selector::parse("train:COMBINED")).size() == 4);
  CHECK_THROWS_AS(Selector::parse("best"), Error);
  CHECK(Selector::parse("train:X").name() == "train:X");

  // MGN on Market-1501: best of 0.87 (DukeMTMC) and 0.86 (CUHK03) on R10; of
  // 0.37 and 0.39 on mAP.
  const auto r10 = select_values(cells, "rank10", Selector::parse("best_individual"));
  const auto map = select_values(cells, "map", Selector::parse("best_individual"));
  for (std::size_t i = 0; i < r10.size(); ++i) {
    if (r10[i].eval_set == "Market-1501" && r10[i].approach == "MGN") CHECK(r10[i].value == 0.87);
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i].eval_set == "Market-1501" && map[i].approach == "MGN") CHECK(map[i].value == 0.39);
  }

  // PRID-2011 uses the plain COMBINED row as its "others" union.
  int prid = 0;
  for (const auto& v : select_values(cells, "rank10", Selector::parse("combined_others"))) {
    if (v.eval_set == "PRID-2011") {
      CHECK(v.train_set == "COMBINED");
      ++prid;
    }
  }
  CHECK(prid == 4);
}

TEST_CASE("paired selections align on (eval_set, approach)") {
  const auto cells = fixture();
  const auto pv = pair_selections(cells, "rank10", Selector::parse("single"), Selector::parse("combined_all"));
  REQUIRE(pv.a.size() == 12);
  for (std::size_t i = 0; i < pv.a.size(); ++i) {
    CHECK(pv.a[i].eval_set == pv.b[i].eval_set);
    CHECK(pv.a[i].approach == pv.b[i].approach);
  }
  CHECK_THROWS_AS(paired_t_test(cells, "rank10", Selector::parse("single"), Selector::parse("train:nothing")), Error);
}

TEST_CASE("cell validation") {
  ResultTable bad{{"A", "X", "Y", {{"map", 1.2}}}};
  CHECK_THROWS_AS(validate_cells(bad), Error);
  ResultTable dup{{"A", "X", "Y", {{"map", 0.2}}}, {"A", "X", "Y", {{"map", 0.3}}}};
  try {
    validate_cells(dup);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInconsistentKeys);
  }
}

TEST_CASE("cells JSON round trip") {
  ResultTable cells{{"MGN", "DukeMTMC", "Market-1501", {{"rank10", 0.77}, {"map", 0.37}}},
                    {"AGW", "COMBINED", "m-PRID", {{"f1_star", 0.56}, {"live_map", 0.49}}}};
  std::ostringstream out;
  write_cells(out, cells);
  CHECK(parse_cells(out.str()) == cells);
  CHECK(parse_cells(cell_to_json(cells[0])) == ResultTable{cells[0]});
  CHECK_THROWS_AS(parse_cells("{\"approach\":\"A\"}"), Error);
  CHECK_THROWS_AS(parse_cells("[1,2"), Error);
}
