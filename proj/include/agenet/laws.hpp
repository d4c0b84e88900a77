#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agenet/rng.hpp"

namespace agenet {

/// Law of an initial age or activity value on the nonnegative half-line.
/// Dirac/Uniform/PowerExpTail can also be projected onto a PDE grid;
/// custom samplers cannot.
class InitialLaw {
 public:
  enum class Kind { Dirac, Uniform, PowerExpTail, Custom };

  static InitialLaw dirac(double value);
  static InitialLaw uniform(double lo, double hi);
  /// Density proportional to exp(-omega x^xi) on [0, cutoff]; used for
  /// fast-decay initial data, truncated so that the support stays compact.
  static InitialLaw power_exp_tail(double omega, double xi, double cutoff);
  static InitialLaw custom(std::function<double(RngStream&)> sampler, double upper_bound,
                           std::string name = "custom");

  Kind kind() const { return kind_; }
  double sample(RngStream& rng) const;
  /// Upper bound of the support (exact for the built-in laws; declared for
  /// custom samplers).
  double upper_bound() const { return ub_; }
  std::optional<double> dirac_value() const;

  bool grid_representable() const { return kind_ != Kind::Custom; }
  /// Probability mass per cell [j dx, (j+1) dx), j = 0..cells-1. Throws if
  /// the law is not representable or its support exceeds the grid.
  std::vector<double> cell_masses(double dx, std::size_t cells) const;

  // parameter accessors for config echo
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  double param_c() const { return c_; }
  const std::string& name() const { return name_; }

 private:
  InitialLaw() = default;
  double density_unnormalized(double x) const;  // PowerExpTail only

  Kind kind_ = Kind::Dirac;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;  // family parameters
  double ub_ = 0.0;
  std::function<double(RngStream&)> sampler_;
  std::string name_;
  // Tabled inverse CDF for PowerExpTail (immutable after construction).
  std::shared_ptr<const std::vector<double>> cdf_;   // on a uniform x table
  double table_dx_ = 0.0;
};

}  // namespace agenet
