#include "agenet/convergence.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "agenet/errors.hpp"
#include "agenet/wasserstein.hpp"

namespace agenet {

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares: bad input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  f.residual_rms = std::sqrt(rss / n);
  f.slope_stderr = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return f;
}

RateFit fit_rate(const ConvergenceReport& report) {
  if (report.rows.size() < 3) throw ConfigError("fit_rate: need at least 3 system sizes");

  auto positive = [&](auto getter) {
    for (const auto& r : report.rows)
      if (!(getter(r) > 0.0)) return false;
    return true;
  };

  std::string column;
  std::vector<double> d(report.rows.size());
  if (positive([](const StudyRow& r) { return r.mean_coupling; })) {
    column = "coupling";
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = report.rows[i].mean_coupling;
  } else if (positive([](const StudyRow& r) { return r.mean_w1; })) {
    column = "w1";
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = report.rows[i].mean_w1;
  } else if (positive([](const StudyRow& r) { return r.mean_w1_mf; })) {
    column = "w1_mf";
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = report.rows[i].mean_w1_mf;
  } else {
    throw DomainError("fit_rate: no positive distance column to fit");
  }

  std::vector<double> lx(d.size()), ly(d.size()), phi(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double n = static_cast<double>(report.rows[i].n);
    lx[i] = std::log(n);
    ly[i] = std::log(d[i]);
    phi[i] = std::log1p(n) / std::sqrt(n);
  }
  LineFit lf = least_squares(lx, ly);

  RateFit out;
  out.slope = lf.slope;
  out.slope_stderr = lf.slope_stderr;
  out.intercept = lf.intercept;
  out.residual_rms = lf.residual_rms;
  out.column = column;

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    num += phi[i] * d[i];
    den += phi[i] * phi[i];
  }
  out.scaled_coeff = num / den;
  double rss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double r = d[i] - out.scaled_coeff * phi[i];
    rss += r * r;
  }
  out.scaled_residual_rms = std::sqrt(rss / static_cast<double>(d.size()));
  return out;
}

namespace {

struct ReplicaResult {
  double coupling = 0.0, w1 = 0.0, w1_mf = 0.0;
  std::vector<CouplingStats> series;
};

ReplicaResult run_replica(const NetworkConfig& cfg, const MeanFieldSolution& mf,
                          bool keep_series) {
  CoupledRun run = simulate_coupled(cfg, mf);

  ReplicaResult r;
  if (keep_series) r.series = run.stats;
  r.coupling = coupling_distance(run.particle_final_ages, run.copy_final_ages,
                                 run.particle_final_activity, run.meanfield_final_activity);

  auto measure = [](const std::vector<double>& ages, double activity) {
    std::vector<Point2> pts(ages.size());
    for (std::size_t i = 0; i < ages.size(); ++i) pts[i] = {ages[i], activity};
    return EmpiricalMeasure(std::move(pts));
  };
  EmpiricalMeasure mu = measure(run.particle_final_ages, run.particle_final_activity);
  EmpiricalMeasure eta = measure(run.copy_final_ages, run.meanfield_final_activity);
  r.w1 = w1_assignment(mu, eta, std::max<std::size_t>(cfg.n_neurons, 4096));

  RngStream sample_rng(SeedSequence{cfg.seed}.derive(Simulator::kSaltMfSample));
  std::vector<double> mf_ages = mf.sample_final_ages(cfg.n_neurons, sample_rng);
  EmpiricalMeasure nu = measure(mf_ages, mf.activity_at(cfg.horizon));
  r.w1_mf = w1_assignment(mu, nu, std::max<std::size_t>(cfg.n_neurons, 4096));
  return r;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe aggregate(const std::vector<double>& v) {
  MeanSe out;
  double n = static_cast<double>(v.size());
  for (double x : v) out.mean += x;
  out.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

}  // namespace

ConvergenceReport run_convergence_study(const StudyConfig& cfg) {
  if (cfg.n_list.size() < 2) throw ConfigError("study: n_list needs at least 2 entries");
  for (std::size_t i = 0; i + 1 < cfg.n_list.size(); ++i)
    if (cfg.n_list[i] >= cfg.n_list[i + 1])
      throw ConfigError("study: n_list must be strictly increasing");
  for (std::size_t n : cfg.n_list)
    if (cfg.replicas_for(n) < 2)
      throw ConfigError("study: need at least 2 replicas per size (stderr undefined)");
  if (!(cfg.eval_time > 0.0)) throw ConfigError("study: eval_time must be > 0");

  double m0_pinned;
  if (cfg.base.pin_m0)
    m0_pinned = *cfg.base.pin_m0;
  else if (auto v = cfg.base.m0.dirac_value())
    m0_pinned = *v;
  else
    throw ConfigError("study: base config needs a deterministic initial activity");

  // One mean-field solve serves every replica.
  MeanFieldConfig mf_cfg = cfg.meanfield;
  mf_cfg.alpha = cfg.base.alpha;
  mf_cfg.epsilon = cfg.base.epsilon;
  mf_cfg.horizon = cfg.eval_time;
  mf_cfg.m0 = m0_pinned;
  mf_cfg.g0 = cfg.base.g0;
  mf_cfg.intensity = cfg.base.intensity;
  mf_cfg.delay = cfg.base.delay;
  const MeanFieldSolution mf = picard_solve(mf_cfg);

  struct Task {
    std::size_t n_index, replica;
  };
  std::vector<Task> tasks;
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni)
    for (std::size_t r = 0; r < cfg.replicas_for(cfg.n_list[ni]); ++r) tasks.push_back({ni, r});

  SeedSequence master{cfg.base.seed};
  auto make_config = [&](const Task& task) {
    NetworkConfig c = cfg.base;
    c.n_neurons = cfg.n_list[task.n_index];
    c.horizon = cfg.eval_time;
    c.pin_m0 = m0_pinned;
    // Replica seed: master -> size index -> replica index (documented chain).
    c.seed = master.child(task.n_index + 1).derive(task.replica);
    return c;
  };

  std::vector<ReplicaResult> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> cursor{0};
  std::size_t n_threads = cfg.threads > 0 ? cfg.threads
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, tasks.size());

  auto worker = [&] {
    for (;;) {
      std::size_t k = cursor.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        results[k] = run_replica(make_config(tasks[k]), mf, cfg.keep_replica_stats);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t k = 0; k < tasks.size(); ++k)
    if (!failures[k].empty()) {
      std::ostringstream os;
      os << "study: replica failed at N=" << cfg.n_list[tasks[k].n_index]
         << ", replica=" << tasks[k].replica << ": " << failures[k];
      throw SimulationError(os.str());
    }

  // Deterministic reduce in (N, replica) order: tasks were generated sorted.
  ConvergenceReport report;
  report.n_list = cfg.n_list;
  report.master_seed = cfg.base.seed;
  report.eval_time = cfg.eval_time;
  std::size_t k = 0;
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    std::size_t reps = cfg.replicas_for(cfg.n_list[ni]);
    std::vector<double> d(reps), w(reps), wm(reps);
    for (std::size_t r = 0; r < reps; ++r, ++k) {
      d[r] = results[k].coupling;
      w[r] = results[k].w1;
      wm[r] = results[k].w1_mf;
      if (cfg.keep_replica_stats)
        report.replica_series.push_back(
            {cfg.n_list[ni], r, std::move(results[k].series)});
    }
    StudyRow row;
    row.n = cfg.n_list[ni];
    row.replicas = reps;
    MeanSe a = aggregate(d), b = aggregate(w), c = aggregate(wm);
    row.mean_coupling = a.mean;
    row.se_coupling = a.se;
    row.mean_w1 = b.mean;
    row.se_w1 = b.se;
    row.mean_w1_mf = c.mean;
    row.se_w1_mf = c.se;
    report.rows.push_back(row);
  }
  if (report.rows.size() >= 3) {
    try {
      report.fit = fit_rate(report);
    } catch (const DomainError&) {
      report.fit = std::nullopt;  // all columns degenerate (e.g. eps = 0 exact coupling)
    }
  }
  return report;
}

}  // namespace agenet
