#include "agenet/config_io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>

#include "agenet/errors.hpp"

namespace agenet {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open for hashing: " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
  buf[16] = '\0';
  return std::string(buf);
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
}

namespace {

const json& require_key(const json& obj, const std::string& section, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError("config: missing key " + section + "." + key);
  return *it;
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return it->get<T>();
}

InitialLaw parse_law(const json& node, const std::string& section) {
  std::string kind = require_key(node, section, "kind").get<std::string>();
  if (kind == "dirac") return InitialLaw::dirac(require_key(node, section, "value").get<double>());
  if (kind == "uniform")
    return InitialLaw::uniform(require_key(node, section, "lo").get<double>(),
                               require_key(node, section, "hi").get<double>());
  if (kind == "power_exp_tail")
    return InitialLaw::power_exp_tail(require_key(node, section, "omega").get<double>(),
                                      require_key(node, section, "xi").get<double>(),
                                      require_key(node, section, "cutoff").get<double>());
  throw ConfigError("config: unknown law kind '" + kind + "' in " + section);
}

json echo_law(const InitialLaw& law) {
  json j;
  switch (law.kind()) {
    case InitialLaw::Kind::Dirac:
      j["kind"] = "dirac";
      j["value"] = law.param_a();
      break;
    case InitialLaw::Kind::Uniform:
      j["kind"] = "uniform";
      j["lo"] = law.param_a();
      j["hi"] = law.param_b();
      break;
    case InitialLaw::Kind::PowerExpTail:
      j["kind"] = "power_exp_tail";
      j["omega"] = law.param_a();
      j["xi"] = law.param_b();
      j["cutoff"] = law.param_c();
      break;
    case InitialLaw::Kind::Custom:
      throw ConfigError("config: custom laws cannot be serialized");
  }
  return j;
}

IntensityModel parse_intensity(const json& root) {
  if (!root.contains("intensity"))
    throw ConfigError("config: missing key intensity.family");
  const json& node = root.at("intensity");
  std::string family = require_key(node, "intensity", "family").get<std::string>();
  IntensityModel m = [&] {
    if (family == "pure_power")
      return IntensityModel::pure_power(require_key(node, "intensity", "xi").get<double>());
    if (family == "power_threshold")
      return IntensityModel::power_threshold(
          require_key(node, "intensity", "xi").get<double>(),
          require_key(node, "intensity", "x_star").get<double>(),
          require_key(node, "intensity", "slope_a").get<double>(),
          require_key(node, "intensity", "offset_b").get<double>());
    throw ConfigError("config: unknown intensity.family '" + family + "'");
  }();
  if (node.contains("lipschitz_c0") && !node.at("lipschitz_c0").is_null())
    m.lipschitz_c0 = node.at("lipschitz_c0").get<double>();
  if (node.contains("growth") && !node.at("growth").is_null()) {
    const json& g = node.at("growth");
    m.growth = GrowthEnvelope{require_key(g, "intensity.growth", "xi").get<double>(),
                              require_key(g, "intensity.growth", "rho").get<double>(),
                              require_key(g, "intensity.growth", "c_xi").get<double>(),
                              require_key(g, "intensity.growth", "c_rho").get<double>()};
  }
  return m;
}

json echo_intensity(const IntensityModel& m) {
  json j;
  switch (m.family()) {
    case IntensityModel::Family::PurePower:
      j["family"] = "pure_power";
      j["xi"] = m.xi();
      break;
    case IntensityModel::Family::PowerThreshold:
      j["family"] = "power_threshold";
      j["xi"] = m.xi();
      j["x_star"] = m.x_star();
      j["slope_a"] = m.slope_a();
      j["offset_b"] = m.offset_b();
      break;
    case IntensityModel::Family::Custom:
      throw ConfigError("config: custom intensities cannot be serialized");
  }
  if (m.lipschitz_c0) j["lipschitz_c0"] = *m.lipschitz_c0;
  if (m.growth)
    j["growth"] = {{"xi", m.growth->xi},
                   {"rho", m.growth->rho},
                   {"c_xi", m.growth->c_xi},
                   {"c_rho", m.growth->c_rho}};
  return j;
}

DelayModel parse_delay(const json& root) {
  if (!root.contains("delay")) return DelayModel::dirac(0.0);
  const json& node = root.at("delay");
  std::string kind = get_or<std::string>(node, "kind", "dirac");
  if (kind == "dirac") return DelayModel::dirac(get_or(node, "tau", 0.0));
  if (kind == "truncated_exponential")
    return DelayModel::truncated_exponential(require_key(node, "delay", "c").get<double>(),
                                             require_key(node, "delay", "tau_max").get<double>());
  throw ConfigError("config: unknown delay.kind '" + kind + "'");
}

json echo_delay(const DelayModel& d) {
  json j;
  if (d.kind() == DelayModel::Kind::Dirac) {
    j["kind"] = "dirac";
    j["tau"] = d.tau();
  } else {
    j["kind"] = "truncated_exponential";
    j["c"] = d.rate_c();
    j["tau_max"] = d.support_bound();
  }
  return j;
}

}  // namespace

NetworkConfig parse_network_config(const json& root) {
  NetworkConfig cfg;
  const json net = root.contains("network") ? root.at("network") : json::object();
  cfg.n_neurons = get_or<std::size_t>(net, "n_neurons", 1);
  cfg.alpha = get_or(net, "alpha", 1.0);
  cfg.epsilon = get_or(net, "epsilon", 0.0);
  cfg.horizon = get_or(net, "horizon", 1.0);
  cfg.seed = get_or<std::uint64_t>(net, "seed", 0);
  if (net.contains("g0")) cfg.g0 = parse_law(net.at("g0"), "network.g0");
  if (net.contains("m0")) cfg.m0 = parse_law(net.at("m0"), "network.m0");
  if (net.contains("pin_m0") && !net.at("pin_m0").is_null())
    cfg.pin_m0 = net.at("pin_m0").get<double>();
  cfg.intensity = parse_intensity(root);
  cfg.delay = parse_delay(root);

  const json eng = root.contains("engine") ? root.at("engine") : json::object();
  cfg.snapshot_grid = get_or<std::size_t>(eng, "snapshot_grid", 100);
  cfg.snapshot_at_events = get_or(eng, "snapshot_at_events", false);
  cfg.event_cap = get_or<std::size_t>(eng, "event_cap", 10'000'000);
  cfg.max_window = get_or(eng, "max_window", 1.0);
  cfg.window_alpha_frac = get_or(eng, "window_alpha_frac", 0.1);
  cfg.log_rejections = get_or(eng, "log_rejections", false);
  cfg.moment_cap = get_or(eng, "moment_cap", 1e6);
  return cfg;
}

json echo_network_config(const NetworkConfig& cfg) {
  json root;
  root["network"] = {{"n_neurons", cfg.n_neurons}, {"alpha", cfg.alpha},
                     {"epsilon", cfg.epsilon},     {"horizon", cfg.horizon},
                     {"seed", cfg.seed},           {"g0", echo_law(cfg.g0)},
                     {"m0", echo_law(cfg.m0)}};
  if (cfg.pin_m0) root["network"]["pin_m0"] = *cfg.pin_m0;
  root["intensity"] = echo_intensity(cfg.intensity);
  root["delay"] = echo_delay(cfg.delay);
  root["engine"] = {{"snapshot_grid", cfg.snapshot_grid},
                    {"snapshot_at_events", cfg.snapshot_at_events},
                    {"event_cap", cfg.event_cap},
                    {"max_window", cfg.max_window},
                    {"window_alpha_frac", cfg.window_alpha_frac},
                    {"log_rejections", cfg.log_rejections},
                    {"moment_cap", cfg.moment_cap}};
  return root;
}

MeanFieldConfig parse_meanfield_config(const json& root) {
  NetworkConfig net = parse_network_config(root);
  MeanFieldConfig cfg;
  cfg.alpha = net.alpha;
  cfg.epsilon = net.epsilon;
  cfg.horizon = net.horizon;
  cfg.g0 = net.g0;
  cfg.intensity = net.intensity;
  cfg.delay = net.delay;
  if (net.pin_m0)
    cfg.m0 = *net.pin_m0;
  else if (auto v = net.m0.dirac_value())
    cfg.m0 = *v;
  else
    throw ConfigError("config: the mean-field solve needs a deterministic m0 (dirac or pin_m0)");

  const json pde = root.contains("pde") ? root.at("pde") : json::object();
  cfg.dx = get_or(pde, "dx", 1e-3);
  cfg.dt = get_or(pde, "dt", 1e-3);
  cfg.x_max = get_or(pde, "x_max", 0.0);
  cfg.picard_tol = get_or(pde, "picard_tol", 1e-9);
  cfg.max_iters = get_or<std::size_t>(pde, "max_iters", 200);
  cfg.damping = get_or(pde, "damping", 1.0);
  cfg.instantaneous_decay = get_or(pde, "instantaneous_decay", false);
  cfg.density_stride = get_or<std::size_t>(pde, "density_stride", 0);
  return cfg;
}

json echo_meanfield_config(const MeanFieldConfig& cfg) {
  json j;
  j["pde"] = {{"dx", cfg.dx},
              {"dt", cfg.dt},
              {"x_max", cfg.x_max},
              {"picard_tol", cfg.picard_tol},
              {"max_iters", cfg.max_iters},
              {"damping", cfg.damping},
              {"instantaneous_decay", cfg.instantaneous_decay},
              {"density_stride", cfg.density_stride}};
  j["resolved"] = {{"x_max", cfg.resolved_x_max()}, {"m0", cfg.m0}};
  return j;
}

StudyConfig parse_study_config(const json& root) {
  StudyConfig cfg;
  cfg.base = parse_network_config(root);
  cfg.meanfield = parse_meanfield_config(root);
  const json chaos = root.contains("chaos") ? root.at("chaos") : json::object();
  cfg.n_list = get_or<std::vector<std::size_t>>(chaos, "n_list", {50, 200, 800, 3200});
  cfg.replicas_small = get_or<std::size_t>(chaos, "replicas_small", 20);
  cfg.replicas_large = get_or<std::size_t>(chaos, "replicas_large", 10);
  cfg.replica_threshold = get_or<std::size_t>(chaos, "replica_threshold", 800);
  cfg.eval_time = get_or(chaos, "eval_time", 1.0);
  cfg.threads = get_or<std::size_t>(chaos, "threads", 0);
  return cfg;
}

json echo_study_config(const StudyConfig& cfg) {
  json j = echo_network_config(cfg.base);
  j.update(echo_meanfield_config(cfg.meanfield));
  j["chaos"] = {{"n_list", cfg.n_list},
                {"replicas_small", cfg.replicas_small},
                {"replicas_large", cfg.replicas_large},
                {"replica_threshold", cfg.replica_threshold},
                {"eval_time", cfg.eval_time},
                {"threads", cfg.threads}};
  return j;
}

GridSpec parse_validate_grid(const json& root) {
  GridSpec g;
  const json v = root.contains("validate") ? root.at("validate") : json::object();
  g.x_max = get_or(v, "x_max", 5.0);
  g.m_max = get_or(v, "m_max", 5.0);
  g.nx = get_or<std::size_t>(v, "nx", 1001);
  g.nm = get_or<std::size_t>(v, "nm", 101);
  return g;
}

std::vector<double> parse_validate_deltas(const json& root) {
  const json v = root.contains("validate") ? root.at("validate") : json::object();
  return get_or<std::vector<double>>(v, "deltas", {0.5, 0.1, 0.01});
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // fixed newlines across platforms
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Spike: return "spike";
    case EventKind::Arrival: return "arrival";
    case EventKind::DroppedArrival: return "dropped_arrival";
    case EventKind::Rejection: return "rejection";
  }
  return "?";
}

}  // namespace

void write_snapshots_csv(const std::filesystem::path& path, const std::vector<Snapshot>& snaps) {
  auto out = open_out(path);
  out << "t,activity,age_min,age_q25,age_median,age_q75,age_max,mean_rate,mean_rate_sq\n";
  for (const auto& s : snaps) {
    out << fmt_double(s.t) << ',' << fmt_double(s.activity);
    for (double q : s.age_quantiles) out << ',' << fmt_double(q);
    out << ',' << fmt_double(s.mean_rate) << ',' << fmt_double(s.mean_rate_sq) << '\n';
  }
}

void write_events_csv(const std::filesystem::path& path, const EventLog& log) {
  auto out = open_out(path);
  out << "t,kind,id\n";
  for (const auto& e : log.events)
    out << fmt_double(e.time) << ',' << kind_name(e.kind) << ',' << e.id << '\n';
}

void write_meanfield_csv(const std::filesystem::path& path, const MeanFieldSolution& sol) {
  auto out = open_out(path);
  out << "t,activity,boundary_flux,delay_forcing\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    out << fmt_double(sol.times[k]) << ',' << fmt_double(sol.activity[k]) << ','
        << fmt_double(sol.boundary_flux[k]) << ',' << fmt_double(sol.delay_forcing[k]) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const MeanFieldSolution& sol) {
  auto out = open_out(path);
  out << "t";
  for (std::size_t j = 0; j < sol.cells; ++j) out << ',' << fmt_double(sol.cell_center(j));
  out << '\n';
  for (std::size_t r = 0; r < sol.density.size(); ++r) {
    out << fmt_double(sol.times[sol.density_rows[r]]);
    for (double v : sol.density[r]) out << ',' << fmt_double(v);
    out << '\n';
  }
}

void write_coupling_csv(const std::filesystem::path& path,
                        const std::vector<CouplingStats>& stats) {
  auto out = open_out(path);
  out << "t,coupling_distance,activity_gap,mean_age_gap\n";
  for (const auto& s : stats)
    out << fmt_double(s.t) << ',' << fmt_double(s.coupling_distance) << ','
        << fmt_double(s.activity_gap) << ',' << fmt_double(s.mean_age_gap) << '\n';
}

void write_report_csv(const std::filesystem::path& path, const ConvergenceReport& report) {
  auto out = open_out(path);
  out << "n,replicas,mean_coupling,se_coupling,mean_w1,se_w1,mean_w1_mf,se_w1_mf\n";
  for (const auto& r : report.rows)
    out << r.n << ',' << r.replicas << ',' << fmt_double(r.mean_coupling) << ','
        << fmt_double(r.se_coupling) << ',' << fmt_double(r.mean_w1) << ','
        << fmt_double(r.se_w1) << ',' << fmt_double(r.mean_w1_mf) << ','
        << fmt_double(r.se_w1_mf) << '\n';
}

json report_to_json(const ConvergenceReport& report) {
  json j;
  j["master_seed"] = report.master_seed;
  j["eval_time"] = report.eval_time;
  j["n_list"] = report.n_list;
  j["rows"] = json::array();
  for (const auto& r : report.rows)
    j["rows"].push_back({{"n", r.n},
                         {"replicas", r.replicas},
                         {"mean_coupling", r.mean_coupling},
                         {"se_coupling", r.se_coupling},
                         {"mean_w1", r.mean_w1},
                         {"se_w1", r.se_w1},
                         {"mean_w1_mf", r.mean_w1_mf},
                         {"se_w1_mf", r.se_w1_mf}});
  if (report.fit)
    j["fit"] = {{"column", report.fit->column},
                {"loglog_slope", report.fit->slope},
                {"loglog_slope_stderr", report.fit->slope_stderr},
                {"loglog_intercept", report.fit->intercept},
                {"loglog_residual_rms", report.fit->residual_rms},
                {"scaled_coeff", report.fit->scaled_coeff},
                {"scaled_residual_rms", report.fit->scaled_residual_rms}};
  return j;
}

ManifestBuilder::ManifestBuilder(std::string tool, std::uint64_t master_seed,
                                 json config_echo) {
  j_["tool"] = std::move(tool);
  j_["version"] = "0.1.0";
  j_["master_seed"] = master_seed;
  j_["config"] = std::move(config_echo);
  j_["seed_derivation"] =
      "stream(salt) = mix64(mix64(seed xor golden*(salt+1))); salts: ages=1, activity=2, "
      "delays=3, thinning=4, coupling-root=5 (per-neuron streams derive(i)), mf-sample=6; "
      "study replica seed = master.child(n_index+1).derive(replica)";
  j_["outputs"] = json::array();
  j_["stats"] = json::object();
}

void ManifestBuilder::add_output(const std::filesystem::path& file) {
  j_["outputs"].push_back({{"path", file.filename().string()},
                           {"bytes", std::filesystem::file_size(file)},
                           {"fnv1a64", fnv1a_hex(file)}});
}

void ManifestBuilder::add_stat(const std::string& key, const json& value) {
  j_["stats"][key] = value;
}

void ManifestBuilder::write(const std::filesystem::path& path, double wall_clock_seconds) {
  // Volatile by nature; excluded from reproducibility comparisons.
  j_["wall_clock_seconds"] = wall_clock_seconds;
  auto out = open_out(path);
  out << j_.dump(2) << '\n';
}

}  // namespace agenet
