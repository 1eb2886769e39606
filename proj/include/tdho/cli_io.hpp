#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdho/grid.hpp"
#include "tdho/model.hpp"
#include "tdho/recon.hpp"
#include "tdho/scatter.hpp"

namespace tdho {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitHoles = 4;

constexpr const char* kVersion = "1.0.0";

struct ReconSettings {
  FbpOptions fbp;
  bool deconvolve = false;
  double epsilon = 1e-3;
};

struct RunConfig {
  DecayParams params;
  PotentialSpec potential;
  ProbeSpec probe;
  ScanConfig scan;
  std::vector<double> velocities;
  ScatterConfig scatter;
  ReconSettings recon;
  std::string output = "out";
  unsigned seed = 0;

  nlohmann::json document;  // normalized document, all defaults filled in
  std::string hash;         // FNV-1a 64 of the normalized document
};

// Parses and validates a run configuration.  Unknown keys, missing required
// sections ("params", "potential", "grid") and failed admissibility clauses
// raise ConfigError naming the key or clause.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);
nlohmann::json potential_to_json(const PotentialSpec& spec);
PotentialSpec potential_from_json(const nlohmann::json& j);

std::string fnv1a_hex(const std::string& data);
nlohmann::json provenance(const RunConfig& cfg, const std::string& command);
// Checks the structure of a metrics document written by cmd_reconstruct.
bool validate_metrics_schema(const nlohmann::json& doc, std::string* why = nullptr);

// Records journal used for resumable scans: one line per finished sample.
std::string format_record(const RadonSample& s);
RadonSample parse_record(const std::string& line);

int cmd_validate(const std::string& config_path, std::ostream& out);
int cmd_element(const std::string& config_path, std::optional<double> angle,
                std::optional<double> offset, std::optional<double> speed,
                const std::string& out_dir, std::ostream& out);
int cmd_sinogram(const std::string& config_path, const std::string& out_dir, int workers,
                 bool resume, std::ostream& out);
int cmd_reconstruct(const std::string& sinogram_stem, const std::string& config_path,
                    const std::string& out_dir, std::ostream& out);
int cmd_compare(const std::string& config_a, const std::string& config_b,
                const std::string& out_dir, int workers, std::ostream& out);

}  // namespace tdho
