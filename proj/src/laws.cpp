#include "agenet/laws.hpp"

#include <algorithm>
#include <cmath>

#include "agenet/errors.hpp"

namespace agenet {

InitialLaw InitialLaw::dirac(double value) {
  if (!(value >= 0.0)) throw ModelError("initial law: Dirac location must be >= 0");
  InitialLaw l;
  l.kind_ = Kind::Dirac;
  l.a_ = value;
  l.ub_ = value;
  l.name_ = "dirac";
  return l;
}

InitialLaw InitialLaw::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo)) throw ModelError("initial law: need 0 <= lo < hi");
  InitialLaw l;
  l.kind_ = Kind::Uniform;
  l.a_ = lo;
  l.b_ = hi;
  l.ub_ = hi;
  l.name_ = "uniform";
  return l;
}

InitialLaw InitialLaw::power_exp_tail(double omega, double xi, double cutoff) {
  if (!(omega > 0.0) || !(xi > 0.0) || !(cutoff > 0.0))
    throw ModelError("initial law: power_exp_tail needs positive parameters");
  InitialLaw l;
  l.kind_ = Kind::PowerExpTail;
  l.a_ = omega;
  l.b_ = xi;
  l.c_ = cutoff;
  l.ub_ = cutoff;
  l.name_ = "power_exp_tail";

  // Tabled CDF on a fixed 8192-cell grid; sampling interpolates linearly so
  // draws are deterministic functions of the stream.
  const std::size_t n = 8192;
  l.table_dx_ = cutoff / static_cast<double>(n);
  auto cdf = std::make_shared<std::vector<double>>(n + 1, 0.0);
  double acc = 0.0;
  double prev = l.density_unnormalized(0.0);
  for (std::size_t j = 1; j <= n; ++j) {
    double x = l.table_dx_ * static_cast<double>(j);
    double cur = l.density_unnormalized(x);
    acc += 0.5 * (prev + cur) * l.table_dx_;
    (*cdf)[j] = acc;
    prev = cur;
  }
  for (auto& v : *cdf) v /= acc;
  l.cdf_ = std::move(cdf);
  return l;
}

InitialLaw InitialLaw::custom(std::function<double(RngStream&)> sampler, double upper_bound,
                              std::string name) {
  if (!sampler) throw ModelError("initial law: custom sampler is empty");
  if (!(upper_bound >= 0.0)) throw ModelError("initial law: custom bound must be >= 0");
  InitialLaw l;
  l.kind_ = Kind::Custom;
  l.sampler_ = std::move(sampler);
  l.ub_ = upper_bound;
  l.name_ = std::move(name);
  return l;
}

double InitialLaw::density_unnormalized(double x) const {
  return std::exp(-a_ * std::pow(x, b_));
}

double InitialLaw::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::Dirac:
      return a_;
    case Kind::Uniform:
      return rng.uniform_on(a_, b_);
    case Kind::PowerExpTail: {
      double u = rng.uniform();
      const auto& cdf = *cdf_;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      std::size_t j = it == cdf.begin() ? 1 : static_cast<std::size_t>(it - cdf.begin());
      if (j > cdf.size() - 1) j = cdf.size() - 1;
      double c0 = cdf[j - 1], c1 = cdf[j];
      double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
      return table_dx_ * (static_cast<double>(j - 1) + frac);
    }
    case Kind::Custom: {
      double v = sampler_(rng);
      if (!(v >= 0.0)) throw ModelError("initial law: custom sampler produced a negative value");
      return v;
    }
  }
  return 0.0;
}

std::optional<double> InitialLaw::dirac_value() const {
  if (kind_ == Kind::Dirac) return a_;
  return std::nullopt;
}

std::vector<double> InitialLaw::cell_masses(double dx, std::size_t cells) const {
  if (!grid_representable())
    throw ConfigError("initial law: custom samplers cannot be projected onto a grid");
  if (!(dx > 0.0) || cells == 0) throw ConfigError("initial law: bad grid");
  double x_hi = dx * static_cast<double>(cells);
  if (ub_ > x_hi) throw ConfigError("initial law: support exceeds the grid");

  std::vector<double> m(cells, 0.0);
  switch (kind_) {
    case Kind::Dirac: {
      std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(a_ / dx), cells - 1);
      m[j] = 1.0;
      break;
    }
    case Kind::Uniform: {
      double len = b_ - a_;
      for (std::size_t j = 0; j < cells; ++j) {
        double lo = std::max(a_, dx * static_cast<double>(j));
        double hi = std::min(b_, dx * static_cast<double>(j + 1));
        if (hi > lo) m[j] = (hi - lo) / len;
      }
      break;
    }
    case Kind::PowerExpTail: {
      // Per-cell Simpson quadrature of the tabled density shape.
      double total = 0.0;
      for (std::size_t j = 0; j < cells; ++j) {
        double lo = dx * static_cast<double>(j);
        double hi = std::min(c_, dx * static_cast<double>(j + 1));
        if (hi <= lo) break;
        double mid = 0.5 * (lo + hi);
        m[j] = (hi - lo) / 6.0 *
               (density_unnormalized(lo) + 4.0 * density_unnormalized(mid) +
                density_unnormalized(hi));
        total += m[j];
      }
      for (auto& v : m) v /= total;
      break;
    }
    case Kind::Custom:
      break;  // unreachable
  }
  return m;
}

}  // namespace agenet
