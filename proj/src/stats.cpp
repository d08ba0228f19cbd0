#include "reidbench/stats.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <tuple>

#include "reidbench/error.hpp"

namespace reidbench {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

double sample_stddev(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "incomplete beta needs a, b > 0");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "degrees of freedom must be > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptySelection, "no values to aggregate");
  Aggregate a;
  a.n = values.size();
  a.mean = mean_of(values);
  a.stddev = sample_stddev(values, a.mean);
  return a;
}

Aggregate aggregate(std::span<const ResultCell> cells, std::string_view metric, const Selector& selector) {
  const auto selected = select_values(cells, metric, selector);
  if (selected.empty()) {
    throw Error(ErrorCode::kEmptySelection, "selector '" + selector.name() + "' matched no cell with metric '" +
                                                std::string(metric) + "'");
  }
  std::vector<double> values;
  values.reserve(selected.size());
  for (const auto& s : selected) values.push_back(s.value);
  return aggregate(values);
}

PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b, bool two_sided) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  }
  if (a.size() < 2) throw Error(ErrorCode::kInvalidArgument, "paired t-test needs at least 2 pairs");

  PairedTestResult r;
  r.n = a.size();
  r.two_sided = two_sided;
  r.df = static_cast<double>(r.n - 1);
  r.mean_a = mean_of(a);
  r.mean_b = mean_of(b);
  r.std_a = sample_stddev(a, r.mean_a);
  r.std_b = sample_stddev(b, r.mean_b);

  std::vector<double> d(a.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d[i] = a[i] - b[i];
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  r.mean_diff = mean_of(d);
  r.std_diff = sample_stddev(d, r.mean_diff);
  // Differences that agree up to rounding carry no variance information.
  if (r.std_diff <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
    throw Error(ErrorCode::kZeroVarianceDifferences, "all paired differences are identical");
  }
  r.t_statistic = r.mean_diff / (r.std_diff / std::sqrt(static_cast<double>(r.n)));
  const double x = r.df / (r.df + r.t_statistic * r.t_statistic);
  const double two_tail = regularized_incomplete_beta(r.df / 2.0, 0.5, x);
  if (two_sided) {
    r.p_value = two_tail;
  } else {
    r.p_value = r.t_statistic > 0.0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
  }
  return r;
}

PairedValues pair_selections(std::span<const ResultCell> cells, std::string_view metric, const Selector& a,
                             const Selector& b) {
  const auto sa = select_values(cells, metric, a);
  const auto sb = select_values(cells, metric, b);
  PairedValues out;
  // Both lists are sorted by (eval_set, approach).
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sa.size() && j < sb.size()) {
    const auto ka = std::tie(sa[i].eval_set, sa[i].approach);
    const auto kb = std::tie(sb[j].eval_set, sb[j].approach);
    if (ka < kb) {
      ++i;
    } else if (kb < ka) {
      ++j;
    } else {
      out.a.push_back(sa[i++]);
      out.b.push_back(sb[j++]);
    }
  }
  return out;
}

PairedTestResult paired_t_test(std::span<const ResultCell> cells, std::string_view metric, const Selector& a,
                               const Selector& b, bool two_sided) {
  const auto paired = pair_selections(cells, metric, a, b);
  if (paired.a.empty()) {
    throw Error(ErrorCode::kEmptySelection, "selectors '" + a.name() + "' and '" + b.name() + "' share no cells");
  }
  std::vector<double> va;
  std::vector<double> vb;
  for (std::size_t k = 0; k < paired.a.size(); ++k) {
    va.push_back(paired.a[k].value);
    vb.push_back(paired.b[k].value);
  }
  return paired_t_test(va, vb, two_sided);
}

}  // namespace reidbench
