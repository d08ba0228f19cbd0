#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "reidbench/results.hpp"

namespace reidbench {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation; 0 when n == 1
  std::size_t n = 0;

  bool single_value() const noexcept { return n == 1; }
};

Aggregate aggregate(std::span<const double> values);
Aggregate aggregate(std::span<const ResultCell> cells, std::string_view metric, const Selector& selector);

struct PairedTestResult {
  std::size_t n = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double std_a = 0.0;
  double std_b = 0.0;
  double mean_diff = 0.0;
  double std_diff = 0.0;
  double t_statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  bool two_sided = true;
};

// Paired-sample t-test on d = a - b with n - 1 degrees of freedom.
// The one-sided variant tests mean(d) > 0, i.e. p = P(T >= t).
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b, bool two_sided = true);

// Pairs the two selections on (eval_set, approach); keys present in only one
// selection are dropped.
PairedTestResult paired_t_test(std::span<const ResultCell> cells, std::string_view metric, const Selector& a,
                               const Selector& b, bool two_sided = true);

struct PairedValues {
  std::vector<SelectedValue> a;
  std::vector<SelectedValue> b;
};

PairedValues pair_selections(std::span<const ResultCell> cells, std::string_view metric, const Selector& a,
                             const Selector& b);

}  // namespace reidbench
