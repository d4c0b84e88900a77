#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace agenet {

/// Constants of the polynomial growth envelope
///   c_rho * x^{(1+rho)/(1-rho)} <= a(x,m) <= c_xi * (1 + x^{xi-2} + m^{xi-2}).
struct GrowthEnvelope {
  double xi;     // > 2
  double rho;    // in (0,1)
  double c_xi;   // > 0
  double c_rho;  // > 0
};

/// Spiking-rate function a(x, m): x is the age (time since last spike),
/// m the global activity. All supported families are non-decreasing in
/// both arguments and vanish at x = 0; exact thinning relies on that.
class IntensityModel {
 public:
  enum class Family { PowerThreshold, PurePower, Custom };

  /// a(x,m) = x^xi + 1_{x > x_star} (slope_a * m + offset_b).
  /// The indicator is strict: the jump happens only strictly above x_star.
  static IntensityModel power_threshold(double xi, double x_star, double slope_a,
                                        double offset_b);

  /// a(x,m) = x^xi, independent of m. Requires xi >= 1.
  static IntensityModel pure_power(double xi);

  /// User-supplied rate. The caller must declare monotonicity; simulators
  /// refuse undeclared or grid-failing custom rates.
  static IntensityModel custom(std::function<double(double, double)> rate,
                               bool declared_monotone, std::string name = "custom");

  /// Evaluate a(x, m). Negative arguments are a domain error.
  double eval(double age, double activity) const;

  /// Upper bound of a on [0, x_max] x [0, m_max]; equals the corner value
  /// by monotonicity.
  double envelope(double x_max, double m_max) const { return eval(x_max, m_max); }

  Family family() const { return family_; }
  bool declared_monotone() const { return declared_monotone_; }
  /// True when the rate ignores the activity argument (closed-form renewal
  /// profiles exist only in that case).
  bool activity_independent() const;
  const std::string& name() const { return name_; }

  // PowerThreshold / PurePower parameters (unset for Custom).
  double xi() const { return xi_; }
  double x_star() const { return x_star_; }
  double slope_a() const { return slope_a_; }
  double offset_b() const { return offset_b_; }

  /// Known constant of the increment bound
  ///   |a(x,m)-a(x',m')| <= C0 [ (a ^ a') |x-x'| + |m-m'| ].
  std::optional<double> lipschitz_c0;
  std::optional<GrowthEnvelope> growth;

 private:
  IntensityModel() = default;

  Family family_ = Family::PurePower;
  double xi_ = 1.0, x_star_ = 0.0, slope_a_ = 0.0, offset_b_ = 0.0;
  std::function<double(double, double)> rate_;
  bool declared_monotone_ = true;
  std::string name_;
};

/// Rectangular sampling grid for hypothesis checks; at least 3 nodes per
/// axis. The age axis must resolve the smallest delta to be certified.
struct GridSpec {
  double x_max = 5.0;
  double m_max = 5.0;
  std::size_t nx = 1001;
  std::size_t nm = 101;
};

/// Grid-sampled verdict on the structural hypotheses of a rate function.
struct HypothesisReport {
  struct AxisFailure {
    double x, m;        // first grid point where the next step decreases
    double drop;        // magnitude of the decrease
  };
  struct RefractoryCheck {
    double delta = 0.0;
    double x_star_delta = 0.0;  // largest grid age below which sup_m a <= delta
    bool pass = false;          // true when some positive grid age qualifies
    double worst_x = 0.0, worst_m = 0.0, worst_value = 0.0;  // first violation
  };

  bool zero_at_origin = false;            // a(0, m) == 0 on the grid
  bool monotone_in_age = false;
  bool monotone_in_activity = false;
  std::optional<AxisFailure> age_failure;
  std::optional<AxisFailure> activity_failure;

  std::vector<RefractoryCheck> refractory;  // one row per requested delta

  bool positive_at_zero_activity = false;  // informational: a(x, 0) > 0 for x > 0

  // Empirical increment-bound constants (informational).
  double increment_ratio = 0.0;          // sup |da| / ((a^a')|dx| + |dm|)
  std::size_t degenerate_pairs = 0;      // pairs with zero denominator, nonzero gap
  std::optional<bool> within_declared_c0;
  double diagonal_ratio = 0.0;           // sup |a(x+h,m+h)-a(x,m)| / (a(x,m) h)

  std::optional<bool> growth_ok;         // set when the model declares an envelope
  double growth_worst_margin = 0.0;      // most negative slack observed

  /// Mandatory gate: zero at origin, monotone on both axes, every delta passes.
  bool mandatory_pass() const;
  std::string describe() const;
};

/// Sample the rate on the grid and check the structural hypotheses: zero at
/// the origin, monotonicity on both axes, and for each delta the existence of
/// a positive age band on which a <= delta uniformly in m. Reported ages are
/// conservative grid points, never root-found values.
HypothesisReport check_hypotheses(const IntensityModel& model, const GridSpec& grid,
                                  const std::vector<double>& deltas);

}  // namespace agenet
