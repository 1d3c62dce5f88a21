#pragma once

#include "teleop/harness/config.hpp"
#include "teleop/harness/csv.hpp"
#include "teleop/metrics.hpp"

#include <map>
#include <string>
#include <vector>

namespace teleop::harness {

/// Points per object used when scoring poses with ADD-S. Denser than the reference model so
/// that an unobservable rotation of a symmetric object is not penalised by sampling gaps.
constexpr int kEvaluationPoints = 4000;
PointCloud evaluation_model(const scene::ObjectModel& model);

struct InitPoseRow {
  int object_index = 0;
  std::string true_label;
  std::string detected_label;
  Pose truth;
  Pose mask;
  registration::RegistrationResult mesh;
  double mask_add_s = 0.0;
  double mesh_add_s = 0.0;
};

/// Segment one rendered frame of `scene` and compute mask_pose and mesh_pose per detection.
std::vector<InitPoseRow> init_poses(const scene::SceneConfig& scene, const ExperimentConfig& config,
                                    std::uint64_t seed);
CsvTable init_pose_table(const std::vector<InitPoseRow>& rows);

/// Tracker estimates after each of `frames` frames for a static object, starting from `init`.
/// A diverged filter keeps reporting its last estimate.
std::vector<Pose> track_object(const scene::SceneConfig& scene, int object_index, const Pose& init,
                               const ExperimentConfig& config, int frames, std::uint64_t seed);

struct TrackRow {
  int object_index = 0;
  std::string label;
  double time = 0.0;
  metrics::ErrorSample error;
};

/// Initialise from mesh_pose, track every detected object and report errors at `report_at` seconds.
std::vector<TrackRow> track_scene(const scene::SceneConfig& scene, const ExperimentConfig& config, int frames,
                                  const std::vector<double>& report_at, std::uint64_t seed);
CsvTable track_table(const std::vector<TrackRow>& rows);

struct MethodRow {
  std::string object;  // label or "mean"
  std::string method;
  int samples = 0;
  double auc = 0.0;
  double below_2cm = 0.0;
  double t_auc = 0.0;
  double t_below_2cm = 0.0;
  double r_auc = 0.0;        // rotation curve up to 45 degrees
  double r_below_10deg = 0.0;
};

struct PipelineReport {
  std::vector<std::string> methods;  // mask, mesh, tracker@<t>s ...
  std::vector<std::string> labels;
  std::map<std::string, std::vector<metrics::ErrorSample>> samples;  // by method
  std::vector<MethodRow> rows;

  /// Mean over objects of the per-object AUC.
  double mean_auc(const std::string& method) const;
  const MethodRow& row(const std::string& object, const std::string& method) const;
};

std::string tracker_method_name(double seconds);

/// Randomised benchmark layout for run `run`: jittered positions, random yaw and bounded tilt.
scene::SceneConfig pipeline_scene(const scene::SceneConfig& base, const PipelineParams& params, std::uint64_t seed,
                                  int run);

PipelineReport run_pipeline_eval(const scene::SceneConfig& base, const ExperimentConfig& config);
CsvTable pipeline_table(const PipelineReport& report);
/// `threshold,accuracy` rows of the ADD-S curve with an `auc,<value>` summary line.
CsvTable curve_table(const std::vector<metrics::ErrorSample>& samples);

}  // namespace teleop::harness
