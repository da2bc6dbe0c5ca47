#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "onsager/kernel.hpp"
#include "onsager/solver.hpp"
#include "onsager/space.hpp"

namespace onsager {

/// Schema violation with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error("config error at " + path + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SpaceConfig {
  MetricRule metric = MetricRule::Max;
  std::vector<Axis> axes;
};

struct KernelConfig {
  KernelKind kind = KernelKind::TwoRodArea;
  double max_length = 1.0;   // sized_two_rod_area
  std::string matrix_path;   // tabulated
};

struct BranchAnalysisConfig {
  int example = 1;
  std::vector<double> b_values;
  int scan_resolution = 2001;
  double max_length = 1.0;
};

struct CandidateConfig {
  enum class Type { SinDeltaLevel, CoordinateLevel, Points, Auto };
  std::string name;
  Type type = Type::Points;
  double value = 0.0;   // level value
  double tol = 1e-9;    // level tolerance
  int axis = 0;         // CoordinateLevel
  std::vector<std::vector<double>> points;
  double tau = 1e-6;    // Auto: zero-pair threshold
};

struct ConcentrationAnalysisConfig {
  double eps = 0.1;
  std::vector<CandidateConfig> candidates;
};

struct SelectionAnalysisConfig {
  enum class Map { TwoRod, Rhombus, Identity };
  std::string name;
  Map map = Map::TwoRod;
  double c = 1.25;
  double eps = 0.1;    // two_rod: angular band half-width; rhombus: radius
  double q = 0.7853981633974483;  // rhombus source point
  int resolution = 0;  // 0: run on the experiment space
  int samples = 2000;
};

struct ZeroPairAnalysisConfig {
  double tau = -1.0;      // absolute threshold; <0 means use tau_rel
  double tau_rel = 1e-3;  // relative to the kernel sup norm
};

struct ExperimentConfig {
  int version = 1;
  SpaceConfig space;
  KernelConfig kernel;
  SolverConfig solver;  // includes b_schedule and init
  std::optional<BranchAnalysisConfig> branches;
  std::optional<ConcentrationAnalysisConfig> concentration;
  std::vector<SelectionAnalysisConfig> selections;
  std::optional<ZeroPairAnalysisConfig> zero_pairs_analysis;
  std::string output_dir;
  unsigned seed = 0;
};

/// Parses and validates a config document; throws ConfigError with the
/// JSON path of the first violation.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Loads a config file, or a named built-in preset (example1 | example2 |
/// example3).
ExperimentConfig load_config(const std::string& path_or_preset);

/// Built-in experiment configs reproducing the three worked examples.
nlohmann::json preset_config(const std::string& name);
bool is_preset_name(const std::string& name);

/// Canonical JSON echo of a parsed config (used in run summaries).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace onsager
