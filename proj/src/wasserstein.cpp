#include "agenet/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "agenet/errors.hpp"

namespace agenet {

EmpiricalMeasure::EmpiricalMeasure(std::vector<Point2> pts) : points(std::move(pts)) {
  if (points.empty()) throw DomainError("empirical measure: need at least one point");
  for (const auto& p : points)
    if (!(p.age >= 0.0) || !(p.activity >= 0.0))
      throw DomainError("empirical measure: coordinates must be >= 0");
}

double taxicab(const Point2& a, const Point2& b) {
  return std::abs(a.age - b.age) + std::abs(a.activity - b.activity);
}

namespace detail {

double sorted_mean(std::vector<double> costs) {
  std::sort(costs.begin(), costs.end());
  double s = 0.0;
  for (double c : costs) s += c;
  return s / static_cast<double>(costs.size());
}

// Shortest-augmenting-path assignment (Jonker-Volgenant style potentials);
// exact optimum for real costs, O(n^3).
double w1_hungarian(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const std::size_t n = a.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> way(n + 1, 0), match(n + 1, n);  // match[col] = row

  auto cost = [&](std::size_t i, std::size_t j) { return taxicab(a.points[i], b.points[j]); };

  for (std::size_t i = 0; i < n; ++i) {
    // Column n is the virtual start of the alternating path.
    match[n] = i;
    std::size_t j0 = n;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = match[j0], j1 = n;
      double delta = inf;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != n);
    while (j0 != n) {
      std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    }
  }

  std::vector<double> costs(n);
  for (std::size_t j = 0; j < n; ++j) costs[j] = cost(match[j], j);
  return sorted_mean(std::move(costs));
}

}  // namespace detail

double w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) throw DomainError("w1_1d: size mismatch");
  if (a.empty()) throw DomainError("w1_1d: empty input");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> gaps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
  return detail::sorted_mean(std::move(gaps));
}

double w1_assignment(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t cap) {
  if (a.size() != b.size()) throw DomainError("w1_assignment: size mismatch");
  if (a.size() > cap)
    throw DomainError("w1_assignment: " + std::to_string(a.size()) + " points exceed the cap of " +
                      std::to_string(cap) + "; subsample first");

  // Constant activity within each measure: taxicab separates and the sorted
  // age matching plus the activity gap is the exact optimum.
  auto constant_activity = [](const EmpiricalMeasure& m) {
    for (const auto& p : m.points)
      if (p.activity != m.points.front().activity) return false;
    return true;
  };
  if (constant_activity(a) && constant_activity(b)) {
    std::vector<double> xa(a.size()), xb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) xa[i] = a.points[i].age;
    for (std::size_t i = 0; i < b.size(); ++i) xb[i] = b.points[i].age;
    return w1_1d(std::move(xa), std::move(xb)) +
           std::abs(a.points.front().activity - b.points.front().activity);
  }
  return detail::w1_hungarian(a, b);
}

double w1_bruteforce(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) throw DomainError("w1_bruteforce: size mismatch");
  if (a.size() > 7) throw DomainError("w1_bruteforce: refused for n > 7");
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_costs;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += taxicab(a.points[i], b.points[perm[i]]);
    if (total < best) {
      best = total;
      best_costs.resize(n);
      for (std::size_t i = 0; i < n; ++i) best_costs[i] = taxicab(a.points[i], b.points[perm[i]]);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return detail::sorted_mean(std::move(best_costs));
}

}  // namespace agenet
