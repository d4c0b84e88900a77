#pragma once

#include <cstddef>
#include <vector>

namespace agenet {

/// Point of an empirical measure over (age, activity).
struct Point2 {
  double age = 0.0;
  double activity = 0.0;
};

/// Equal-weight empirical measure; particle snapshots repeat the global
/// activity in every pair.
struct EmpiricalMeasure {
  std::vector<Point2> points;

  explicit EmpiricalMeasure(std::vector<Point2> pts);
  std::size_t size() const { return points.size(); }
};

/// Taxicab ground distance |dx| + |dm|; matches the coupling functional so
/// that the coupling distance upper-bounds W1 coordinate-wise.
double taxicab(const Point2& a, const Point2& b);

/// Exact 1D W1 between equal-size uniform empirical measures: mean absolute
/// gap of the sorted samples.
double w1_1d(std::vector<double> a, std::vector<double> b);

/// Exact 2D W1 (taxicab) between equal-size measures via an optimal
/// assignment. When both measures carry a constant activity coordinate the
/// metric separates and the sorted 1D matching is optimal; otherwise a
/// shortest-augmenting-path assignment solve runs (n capped, default 4096).
double w1_assignment(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                     std::size_t cap = 4096);

/// Exhaustive minimum over all n! matchings; test oracle, n <= 7.
double w1_bruteforce(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

namespace detail {
/// Assignment solver without the constant-activity fast path (for tests).
double w1_hungarian(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
/// Sum of matched costs in ascending order, so that equal multisets of costs
/// produce bitwise-equal totals (symmetry holds exactly).
double sorted_mean(std::vector<double> costs);
}  // namespace detail

}  // namespace agenet
