#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "agenet/convergence.hpp"
#include "agenet/coupling.hpp"
#include "agenet/engine.hpp"
#include "agenet/intensity.hpp"
#include "agenet/pde.hpp"

namespace agenet {

/// Shortest round-trip decimal representation (hash-stable artifacts).
std::string fmt_double(double v);

/// FNV-1a 64-bit over a file's bytes, hex-encoded.
std::string fnv1a_hex(const std::filesystem::path& file);

// Config parsing. Missing required keys raise ConfigError naming the key;
// everything else is defaulted and echoed back fully resolved.
NetworkConfig parse_network_config(const nlohmann::json& root);
MeanFieldConfig parse_meanfield_config(const nlohmann::json& root);
StudyConfig parse_study_config(const nlohmann::json& root);
GridSpec parse_validate_grid(const nlohmann::json& root);
std::vector<double> parse_validate_deltas(const nlohmann::json& root);

nlohmann::json echo_network_config(const NetworkConfig& cfg);
nlohmann::json echo_meanfield_config(const MeanFieldConfig& cfg);
nlohmann::json echo_study_config(const StudyConfig& cfg);

nlohmann::json load_json_file(const std::filesystem::path& path);

// Artifact writers. CSV floats use fmt_double so identical runs produce
// identical bytes.
void write_snapshots_csv(const std::filesystem::path& path, const std::vector<Snapshot>& snaps);
void write_events_csv(const std::filesystem::path& path, const EventLog& log);
void write_meanfield_csv(const std::filesystem::path& path, const MeanFieldSolution& sol);
void write_density_csv(const std::filesystem::path& path, const MeanFieldSolution& sol);
void write_coupling_csv(const std::filesystem::path& path, const std::vector<CouplingStats>& stats);
void write_report_csv(const std::filesystem::path& path, const ConvergenceReport& report);
nlohmann::json report_to_json(const ConvergenceReport& report);

/// Run manifest: resolved config, seed, derivation scheme, per-file hashes,
/// and run statistics. The wall-clock entry is the only volatile field.
class ManifestBuilder {
 public:
  ManifestBuilder(std::string tool, std::uint64_t master_seed, nlohmann::json config_echo);
  void add_output(const std::filesystem::path& file);
  void add_stat(const std::string& key, const nlohmann::json& value);
  void write(const std::filesystem::path& path, double wall_clock_seconds);

 private:
  nlohmann::json j_;
};

}  // namespace agenet
