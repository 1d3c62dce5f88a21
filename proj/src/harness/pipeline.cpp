#include "teleop/harness/pipeline.hpp"

#include "teleop/errors.hpp"
#include "teleop/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace teleop::harness {

PointCloud evaluation_model(const scene::ObjectModel& model) {
  return scene::sample_surface_points(model.shape, kEvaluationPoints, derive_seed(0, "evaluation", 0));
}

namespace {

constexpr double kRotationCurveMax = std::numbers::pi / 4.0;
constexpr double kRotationTolerance = 10.0 * std::numbers::pi / 180.0;

int find_label(const scene::SceneConfig& scene, const std::string& label) {
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    if (scene.objects[i].model.label == label) return static_cast<int>(i);
  return -1;
}

tracker::TrackerConfig tracker_config(const scene::SceneConfig& scene, const ExperimentConfig& config,
                                      std::uint64_t seed) {
  tracker::TrackerConfig cfg = config.tracker;
  cfg.seed = seed;
  if (config.tracker_view_culling && scene.camera.culling) cfg.view_point = scene.camera.position();
  else cfg.view_point.reset();
  return cfg;
}

std::string pose_string(const Pose& p) {
  std::string s;
  for (double v : p.to_array()) s += (s.empty() ? "" : " ") + format_double(v);
  return s;
}

}  // namespace

std::vector<InitPoseRow> init_poses(const scene::SceneConfig& scene, const ExperimentConfig& config,
                                    std::uint64_t seed) {
  scene.validate();
  const auto observation = scene::render_observation(scene, derive_seed(seed, "frame", 0));
  const auto detections = scene::segment_oracle(scene, observation, config.pipeline.detection_rate,
                                                config.pipeline.label_error_rate, seed);
  std::vector<InitPoseRow> rows;
  for (const auto& det : detections) {
    const int model_index = find_label(scene, det.label);
    if (model_index < 0) continue;
    const auto& truth_obj = scene.objects[det.object_index];
    InitPoseRow row;
    row.object_index = det.object_index;
    row.true_label = truth_obj.model.label;
    row.detected_label = det.label;
    row.truth = truth_obj.pose;
    row.mask = registration::mask_pose(det.cloud, scene.camera, config.pipeline.z_offset);
    registration::CpdParams cpd = config.cpd;
    cpd.seed = derive_seed(seed, "cpd", static_cast<std::uint64_t>(det.object_index));
    try {
      row.mesh = registration::mesh_pose(scene.objects[model_index].model, det.cloud, scene.camera, cpd);
    } catch (const DegenerateGeometry&) {
      row.mesh.pose = registration::mask_pose(det.cloud, scene.camera, 0.0);
    }
    const auto eval_model = evaluation_model(truth_obj.model);
    row.mask_add_s = metrics::add_s(eval_model, row.truth, row.mask);
    row.mesh_add_s = metrics::add_s(eval_model, row.truth, row.mesh.pose);
    rows.push_back(std::move(row));
  }
  return rows;
}

CsvTable init_pose_table(const std::vector<InitPoseRow>& rows) {
  CsvTable t;
  t.header = {"object", "label", "detected_label", "mask_pose", "mesh_pose", "iterations", "converged",
              "mask_add_s", "mesh_add_s"};
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.object_index), r.true_label, r.detected_label, pose_string(r.mask),
               pose_string(r.mesh.pose), std::to_string(r.mesh.iterations_used), r.mesh.converged ? "1" : "0",
               format_double(r.mask_add_s), format_double(r.mesh_add_s)});
  }
  return t;
}

std::vector<Pose> track_object(const scene::SceneConfig& scene, int object_index, const Pose& init,
                               const ExperimentConfig& config, int frames, std::uint64_t seed) {
  const auto& model = scene.objects.at(object_index).model;
  auto state = tracker::init_tracker(init, tracker_config(scene, config, derive_seed(seed, "tracker", object_index)));
  std::vector<Pose> estimates;
  bool diverged = false;
  for (int f = 1; f <= frames; ++f) {
    if (!diverged) {
      const auto obs = scene::render_observation(scene, derive_seed(seed, "frame", static_cast<std::uint64_t>(f)));
      const auto it = std::find_if(obs.begin(), obs.end(), [&](const auto& o) { return o.object_index == object_index; });
      if (it != obs.end()) {
        try {
          state = tracker::track_step(state, model, it->cloud);
        } catch (const tracker::TrackerDiverged&) {
          diverged = true;
        }
      }
    }
    estimates.push_back(tracker::estimate(state));
  }
  return estimates;
}

std::vector<TrackRow> track_scene(const scene::SceneConfig& scene, const ExperimentConfig& config, int frames,
                                  const std::vector<double>& report_at, std::uint64_t seed) {
  std::vector<int> report_frames;
  for (double t : report_at) {
    const int f = static_cast<int>(std::lround(t * config.pipeline.frame_rate));
    if (f < 1 || f > frames) throw ConfigError("report time " + format_double(t) + "s is outside the tracked frames");
    report_frames.push_back(f);
  }
  std::vector<TrackRow> rows;
  for (const auto& init : init_poses(scene, config, seed)) {
    const auto& obj = scene.objects[init.object_index];
    const auto estimates = track_object(scene, init.object_index, init.mesh.pose, config, frames, seed);
    for (std::size_t k = 0; k < report_frames.size(); ++k) {
      TrackRow row;
      row.object_index = init.object_index;
      row.label = obj.model.label;
      row.time = report_at[k];
      row.error = metrics::make_error_sample(obj.model.label, evaluation_model(obj.model), obj.pose,
                                             estimates[report_frames[k] - 1]);
      rows.push_back(row);
    }
  }
  return rows;
}

CsvTable track_table(const std::vector<TrackRow>& rows) {
  CsvTable t;
  t.header = {"object", "label", "time_s", "add_s", "translation_error", "rotation_error"};
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.object_index), r.label, format_double(r.time), format_double(r.error.add_s),
               format_double(r.error.translation_error), format_double(r.error.rotation_error)});
  }
  return t;
}

std::string tracker_method_name(double seconds) { return "tracker@" + format_double(seconds) + "s"; }

scene::SceneConfig pipeline_scene(const scene::SceneConfig& base, const PipelineParams& params, std::uint64_t seed,
                                  int run) {
  Rng rng(seed, "pipeline-scene", static_cast<std::uint64_t>(run));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    scene::SceneConfig s = base;
    for (auto& o : s.objects) {
      const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double tilt_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double tilt = rng.uniform(0.0, params.max_tilt);
      const Quat q = Quat(Eigen::AngleAxisd(tilt, Vec3(std::cos(tilt_dir), std::sin(tilt_dir), 0.0))) *
                     Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
      const Vec3 t = o.pose.translation() + Vec3(rng.uniform(-params.position_jitter, params.position_jitter),
                                                 rng.uniform(-params.position_jitter, params.position_jitter), 0.0);
      o.pose = Pose(q * o.pose.rotation(), t);
    }
    try {
      s.validate();
      return s;
    } catch (const std::invalid_argument&) {
    }
  }
  throw ConfigError("could not place benchmark objects without overlap");
}

double PipelineReport::mean_auc(const std::string& method) const { return row("mean", method).auc; }

const MethodRow& PipelineReport::row(const std::string& object, const std::string& method) const {
  for (const auto& r : rows)
    if (r.object == object && r.method == method) return r;
  throw InvalidArgument("no report row for " + object + "/" + method);
}

namespace {

MethodRow summarize_samples(const std::string& object, const std::string& method,
                            const std::vector<metrics::ErrorSample>& samples) {
  MethodRow row;
  row.object = object;
  row.method = method;
  row.samples = static_cast<int>(samples.size());
  if (samples.empty()) return row;
  std::vector<double> adds, terr, rerr;
  for (const auto& s : samples) {
    adds.push_back(s.add_s);
    terr.push_back(s.translation_error);
    rerr.push_back(s.rotation_error);
  }
  row.auc = metrics::accuracy_curve(adds).auc;
  row.below_2cm = metrics::pct_below(adds);
  row.t_auc = metrics::accuracy_curve(terr).auc;
  row.t_below_2cm = metrics::pct_below(terr);
  row.r_auc = metrics::accuracy_curve(rerr, kRotationCurveMax).auc;
  row.r_below_10deg = metrics::pct_below(rerr, kRotationTolerance);
  return row;
}

}  // namespace

PipelineReport run_pipeline_eval(const scene::SceneConfig& base, const ExperimentConfig& config) {
  base.validate();
  const auto& p = config.pipeline;
  PipelineReport report;
  report.labels = base.labels();
  report.methods = {"mask", "mesh"};
  std::vector<int> report_frames;
  for (double t : p.report_at) {
    report.methods.push_back(tracker_method_name(t));
    report_frames.push_back(std::max(1, static_cast<int>(std::lround(t * p.frame_rate))));
  }
  const int frames = *std::max_element(report_frames.begin(), report_frames.end());

  for (int run = 0; run < p.runs; ++run) {
    const auto scene = pipeline_scene(base, p, config.seed, run);
    const auto run_seed = derive_seed(config.seed, "pipeline-run", static_cast<std::uint64_t>(run));
    for (const auto& init : init_poses(scene, config, run_seed)) {
      const auto& obj = scene.objects[init.object_index];
      const auto model = evaluation_model(obj.model);
      report.samples["mask"].push_back(metrics::make_error_sample(obj.model.label, model, obj.pose, init.mask));
      report.samples["mesh"].push_back(metrics::make_error_sample(obj.model.label, model, obj.pose, init.mesh.pose));
      const auto estimates = track_object(scene, init.object_index, init.mesh.pose, config, frames, run_seed);
      for (std::size_t k = 0; k < report_frames.size(); ++k) {
        report.samples[report.methods[2 + k]].push_back(
            metrics::make_error_sample(obj.model.label, model, obj.pose, estimates[report_frames[k] - 1]));
      }
    }
  }

  for (const auto& method : report.methods) {
    const auto& all = report.samples[method];
    MethodRow mean;
    mean.object = "mean";
    mean.method = method;
    int used = 0;
    for (const auto& label : report.labels) {
      std::vector<metrics::ErrorSample> subset;
      std::copy_if(all.begin(), all.end(), std::back_inserter(subset),
                   [&](const auto& s) { return s.object_label == label; });
      const auto row = summarize_samples(label, method, subset);
      report.rows.push_back(row);
      if (row.samples == 0) continue;
      ++used;
      mean.samples += row.samples;
      mean.auc += row.auc;
      mean.below_2cm += row.below_2cm;
      mean.t_auc += row.t_auc;
      mean.t_below_2cm += row.t_below_2cm;
      mean.r_auc += row.r_auc;
      mean.r_below_10deg += row.r_below_10deg;
    }
    if (used > 0) {
      mean.auc /= used;
      mean.below_2cm /= used;
      mean.t_auc /= used;
      mean.t_below_2cm /= used;
      mean.r_auc /= used;
      mean.r_below_10deg /= used;
    }
    report.rows.push_back(mean);
  }
  return report;
}

CsvTable pipeline_table(const PipelineReport& report) {
  CsvTable t;
  t.header = {"object", "method", "samples", "auc", "below_2cm", "t_auc", "t_below_2cm", "r_auc", "r_below_10deg"};
  for (const auto& r : report.rows) {
    t.add_row({r.object, r.method, std::to_string(r.samples), format_double(r.auc), format_double(r.below_2cm),
               format_double(r.t_auc), format_double(r.t_below_2cm), format_double(r.r_auc),
               format_double(r.r_below_10deg)});
  }
  return t;
}

CsvTable curve_table(const std::vector<metrics::ErrorSample>& samples) {
  std::vector<double> errors;
  for (const auto& s : samples) errors.push_back(s.add_s);
  const auto curve = metrics::accuracy_curve(errors);
  CsvTable t;
  t.header = {"threshold", "accuracy"};
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    t.add_row({format_double(curve.thresholds[i]), format_double(curve.accuracies[i])});
  t.summary.emplace_back("auc", format_double(curve.auc));
  return t;
}

}  // namespace teleop::harness
