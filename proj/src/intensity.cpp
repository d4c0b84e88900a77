#include "agenet/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agenet/errors.hpp"

namespace agenet {

IntensityModel IntensityModel::power_threshold(double xi, double x_star, double slope_a,
                                               double offset_b) {
  if (!(xi > 0.0)) throw ModelError("power_threshold: exponent must be positive");
  if (!(x_star >= 0.0)) throw ModelError("power_threshold: x_star must be >= 0");
  if (!(slope_a >= 0.0)) throw ModelError("power_threshold: slope_a must be >= 0");
  if (!(offset_b >= 0.0)) throw ModelError("power_threshold: offset_b must be >= 0");
  IntensityModel m;
  m.family_ = Family::PowerThreshold;
  m.xi_ = xi;
  m.x_star_ = x_star;
  m.slope_a_ = slope_a;
  m.offset_b_ = offset_b;
  m.name_ = "power_threshold";
  return m;
}

IntensityModel IntensityModel::pure_power(double xi) {
  if (!(xi >= 1.0)) throw ModelError("pure_power: exponent must be >= 1");
  IntensityModel m;
  m.family_ = Family::PurePower;
  m.xi_ = xi;
  m.name_ = "pure_power";
  return m;
}

IntensityModel IntensityModel::custom(std::function<double(double, double)> rate,
                                      bool declared_monotone, std::string name) {
  if (!rate) throw ModelError("custom: rate function is empty");
  IntensityModel m;
  m.family_ = Family::Custom;
  m.rate_ = std::move(rate);
  m.declared_monotone_ = declared_monotone;
  m.name_ = std::move(name);
  return m;
}

namespace {

// pow() dominates hot loops; the common exponents are exact shortcuts.
inline double power(double base, double e) {
  if (e == 1.0) return base;
  if (e == 2.0) return base * base;
  return std::pow(base, e);
}

}  // namespace

double IntensityModel::eval(double age, double activity) const {
  if (!(age >= 0.0)) throw DomainError("intensity: age must be >= 0");
  if (!(activity >= 0.0)) throw DomainError("intensity: activity must be >= 0");
  switch (family_) {
    case Family::PurePower:
      return power(age, xi_);
    case Family::PowerThreshold: {
      double v = power(age, xi_);
      if (age > x_star_) v += slope_a_ * activity + offset_b_;
      return v;
    }
    case Family::Custom:
      return rate_(age, activity);
  }
  return 0.0;
}

bool IntensityModel::activity_independent() const {
  switch (family_) {
    case Family::PurePower:
      return true;
    case Family::PowerThreshold:
      return slope_a_ == 0.0;
    case Family::Custom:
      return false;  // unknowable; callers must not assume
  }
  return false;
}

namespace {

std::vector<double> axis(double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace

HypothesisReport check_hypotheses(const IntensityModel& model, const GridSpec& grid,
                                  const std::vector<double>& deltas) {
  if (grid.nx < 3 || grid.nm < 3)
    throw ConfigError("check_hypotheses: need at least 3 grid points per axis");
  if (!(grid.x_max > 0.0) || !(grid.m_max > 0.0))
    throw ConfigError("check_hypotheses: grid bounds must be positive");

  const std::vector<double> xs = axis(grid.x_max, grid.nx);
  const std::vector<double> ms = axis(grid.m_max, grid.nm);

  std::vector<std::vector<double>> a(grid.nx, std::vector<double>(grid.nm));
  for (std::size_t i = 0; i < grid.nx; ++i)
    for (std::size_t j = 0; j < grid.nm; ++j) a[i][j] = model.eval(xs[i], ms[j]);

  HypothesisReport rep;

  rep.zero_at_origin = true;
  for (std::size_t j = 0; j < grid.nm; ++j)
    if (a[0][j] != 0.0) rep.zero_at_origin = false;

  rep.monotone_in_age = true;
  for (std::size_t j = 0; j < grid.nm && rep.monotone_in_age; ++j)
    for (std::size_t i = 0; i + 1 < grid.nx; ++i)
      if (a[i + 1][j] < a[i][j]) {
        rep.monotone_in_age = false;
        rep.age_failure = HypothesisReport::AxisFailure{xs[i], ms[j], a[i][j] - a[i + 1][j]};
        break;
      }

  rep.monotone_in_activity = true;
  for (std::size_t i = 0; i < grid.nx && rep.monotone_in_activity; ++i)
    for (std::size_t j = 0; j + 1 < grid.nm; ++j)
      if (a[i][j + 1] < a[i][j]) {
        rep.monotone_in_activity = false;
        rep.activity_failure = HypothesisReport::AxisFailure{xs[i], ms[j], a[i][j] - a[i][j + 1]};
        break;
      }

  // sup over m at each age, then the running prefix max so that the reported
  // age band is valid even for non-monotone custom rates.
  std::vector<double> sup_m(grid.nx, 0.0);
  std::vector<std::size_t> argsup(grid.nx, 0);
  for (std::size_t i = 0; i < grid.nx; ++i)
    for (std::size_t j = 0; j < grid.nm; ++j)
      if (a[i][j] > sup_m[i]) sup_m[i] = a[i][j], argsup[i] = j;
  std::vector<double> prefix(grid.nx);
  double run = 0.0;
  for (std::size_t i = 0; i < grid.nx; ++i) prefix[i] = run = std::max(run, sup_m[i]);

  for (double delta : deltas) {
    HypothesisReport::RefractoryCheck c;
    c.delta = delta;
    std::size_t k = 0;
    while (k + 1 < grid.nx && prefix[k + 1] <= delta) ++k;
    c.x_star_delta = xs[k];
    c.pass = k >= 1;
    if (!c.pass) {
      c.worst_x = xs[1];
      c.worst_m = ms[argsup[1]];
      c.worst_value = sup_m[1];
    }
    rep.refractory.push_back(c);
  }

  rep.positive_at_zero_activity = true;
  for (std::size_t i = 1; i < grid.nx; ++i)
    if (a[i][0] <= 0.0) rep.positive_at_zero_activity = false;

  // Empirical increment-bound constants over adjacent grid pairs; full pair
  // enumeration would be O((nx nm)^2) for no extra insight.
  double ratio = 0.0, diag = 0.0;
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < grid.nx; ++i)
    for (std::size_t j = 0; j < grid.nm; ++j) {
      if (i + 1 < grid.nx) {
        double num = std::abs(a[i + 1][j] - a[i][j]);
        double den = std::min(a[i][j], a[i + 1][j]) * (xs[i + 1] - xs[i]);
        if (den > 0.0)
          ratio = std::max(ratio, num / den);
        else if (num > 0.0)
          ++degenerate;
      }
      if (j + 1 < grid.nm) {
        double num = std::abs(a[i][j + 1] - a[i][j]);
        double den = ms[j + 1] - ms[j];
        if (den > 0.0) ratio = std::max(ratio, num / den);
      }
      if (i + 1 < grid.nx && j + 1 < grid.nm) {
        double h = std::min(xs[i + 1] - xs[i], ms[j + 1] - ms[j]);
        double num = std::abs(model.eval(xs[i] + h, ms[j] + h) - a[i][j]);
        double den = a[i][j] * h;
        if (den > 0.0) diag = std::max(diag, num / den);
      }
    }
  rep.increment_ratio = ratio;
  rep.degenerate_pairs = degenerate;
  rep.diagonal_ratio = diag;
  if (model.lipschitz_c0) rep.within_declared_c0 = ratio <= *model.lipschitz_c0;

  if (model.growth) {
    const GrowthEnvelope& g = *model.growth;
    bool ok = true;
    double worst = 0.0;
    double expo = (1.0 + g.rho) / (1.0 - g.rho);
    for (std::size_t i = 0; i < grid.nx; ++i)
      for (std::size_t j = 0; j < grid.nm; ++j) {
        double lo = g.c_rho * std::pow(xs[i], expo);
        double hi = g.c_xi * (1.0 + std::pow(xs[i], g.xi - 2.0) + std::pow(ms[j], g.xi - 2.0));
        double margin = std::min(a[i][j] - lo, hi - a[i][j]);
        if (margin < worst) worst = margin;
        if (!(lo <= a[i][j] && a[i][j] <= hi)) ok = false;
      }
    rep.growth_ok = ok;
    rep.growth_worst_margin = worst;
  }

  return rep;
}

bool HypothesisReport::mandatory_pass() const {
  if (!zero_at_origin || !monotone_in_age || !monotone_in_activity) return false;
  for (const auto& c : refractory)
    if (!c.pass) return false;
  return true;
}

std::string HypothesisReport::describe() const {
  std::ostringstream os;
  os << "zero at origin:        " << (zero_at_origin ? "pass" : "FAIL") << '\n';
  os << "monotone in age:       " << (monotone_in_age ? "pass" : "FAIL");
  if (age_failure)
    os << "  (drops by " << age_failure->drop << " after x=" << age_failure->x
       << ", m=" << age_failure->m << ")";
  os << '\n';
  os << "monotone in activity:  " << (monotone_in_activity ? "pass" : "FAIL");
  if (activity_failure)
    os << "  (drops by " << activity_failure->drop << " after x=" << activity_failure->x
       << ", m=" << activity_failure->m << ")";
  os << '\n';
  for (const auto& c : refractory) {
    os << "refractory delta=" << c.delta << ":  ";
    if (c.pass)
      os << "pass, x*_delta=" << c.x_star_delta << '\n';
    else
      os << "FAIL, no positive age band; a(" << c.worst_x << ", " << c.worst_m
         << ") = " << c.worst_value << " > " << c.delta << '\n';
  }
  os << "a(x,0) > 0 off origin: " << (positive_at_zero_activity ? "yes" : "no (flagged)")
     << '\n';
  os << "increment ratio:       " << increment_ratio;
  if (degenerate_pairs > 0) os << "  (" << degenerate_pairs << " degenerate pairs skipped)";
  if (within_declared_c0) os << "  declared C0 " << (*within_declared_c0 ? "holds" : "EXCEEDED");
  os << '\n';
  os << "diagonal ratio:        " << diagonal_ratio << '\n';
  if (growth_ok)
    os << "growth envelope:       " << (*growth_ok ? "pass" : "FAIL")
       << ", worst margin " << growth_worst_margin << '\n';
  return os.str();
}

}  // namespace agenet
