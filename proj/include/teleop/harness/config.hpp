#pragma once

#include "teleop/control.hpp"
#include "teleop/intent.hpp"
#include "teleop/registration.hpp"
#include "teleop/scene.hpp"
#include "teleop/simuser.hpp"
#include "teleop/tracker.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace teleop::harness {

/// Loads a scene description. `where` is a YAML path or one of `builtin:tabletop`,
/// `builtin:benchmark`. Errors carry file and line.
scene::SceneConfig load_scene(const std::string& where);
scene::SceneConfig parse_scene(const std::string& yaml_text, const std::string& source = "<string>");
std::string scene_to_yaml(const scene::SceneConfig& scene);
void save_scene(const std::string& path, const scene::SceneConfig& scene);

struct PipelineParams {
  int runs = 50;
  double detection_rate = scene::kReferenceDetectionRate;
  double label_error_rate = scene::kReferenceLabelErrorRate;
  double z_offset = registration::kMaskZOffset;
  double frame_rate = 10.0;                 // tracker frames per second
  std::vector<double> report_at = {1.0, 3.0};  // seconds after initialisation
  double max_tilt = 0.35;                   // rad, random tilt of benchmark objects
  double position_jitter = 0.03;            // m
};

/// Every parameter block the CLI subcommands consume.
struct ExperimentConfig {
  std::string source;      // config file path, empty for defaults
  std::string scene_spec = "builtin:tabletop";
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  registration::CpdParams cpd;
  tracker::TrackerConfig tracker;
  bool tracker_view_culling = true;
  intent::GateConfig gate;
  control::TimingParams timing;
  intent::TrainHyper train;
  simuser::ReachOptions reach;
  double noise_sigma = 0.01;
  double bias_sigma = 0.02;
  double rate = simuser::kDefaultRate;
  PipelineParams pipeline;
  std::string bind = "127.0.0.1:8765";
};

/// Reads a config file; unknown keys and bad values are errors with file:line context.
/// TELEOP_OUTPUT_DIR and TELEOP_BIND override output_dir and bind.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source = "<string>");
ExperimentConfig default_config();
void apply_env_overrides(ExperimentConfig& config);

/// Experiment descriptor for the traded-control grid.
control::ExperimentConfig teleop_experiment(const ExperimentConfig& config, const std::vector<std::string>& users,
                                            const std::vector<std::string>& modes, int episodes);

}  // namespace teleop::harness
