#include "teleop/harness/config.hpp"

#include "teleop/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace teleop::harness {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : -1;
    throw ConfigError(message, source_, line);
  }

  YAML::Node parse(const std::string& text) const {
    try {
      return YAML::Load(text);
    } catch (const YAML::Exception& e) {
      throw ConfigError(e.msg, source_, e.mark.line >= 0 ? e.mark.line + 1 : -1);
    }
  }

  void only_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) const {
    if (!node.IsMap()) fail(node, where + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  T get(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for '" + what + "'");
    }
  }

  template <typename T>
  void maybe(const YAML::Node& parent, const std::string& key, T& out) const {
    const YAML::Node n = parent[key];
    if (n.IsDefined()) out = get<T>(n, key);
  }

  Vec3 vec3(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence() || node.size() != 3) fail(node, "'" + what + "' must be a list of 3 numbers");
    return {get<double>(node[0], what), get<double>(node[1], what), get<double>(node[2], what)};
  }

  Pose pose(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence() || node.size() != 7) fail(node, "'" + what + "' must be 7 numbers: qw qx qy qz tx ty tz");
    std::array<double, 7> v{};
    for (std::size_t i = 0; i < 7; ++i) v[i] = get<double>(node[i], what);
    try {
      return Pose::from_array(v);
    } catch (const std::invalid_argument& e) {
      fail(node, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

scene::SceneConfig scene_from_node(const Reader& r, const YAML::Node& root) {
  r.only_keys(root, {"seed", "camera", "objects"}, "scene");
  scene::SceneConfig s;
  r.maybe(root, "seed", s.seed);
  s.camera = scene::default_camera();
  if (const auto cam = root["camera"]; cam.IsDefined()) {
    r.only_keys(cam, {"pose", "eye", "target", "noise_sigma", "culling"}, "camera");
    if (cam["pose"].IsDefined()) s.camera.pose = r.pose(cam["pose"], "camera.pose");
    if (cam["eye"].IsDefined() || cam["target"].IsDefined()) {
      if (!cam["eye"].IsDefined() || !cam["target"].IsDefined()) r.fail(cam, "camera needs both 'eye' and 'target'");
      s.camera.pose = scene::look_at(r.vec3(cam["eye"], "camera.eye"), r.vec3(cam["target"], "camera.target"));
    }
    r.maybe(cam, "noise_sigma", s.camera.noise_sigma);
    r.maybe(cam, "culling", s.camera.culling);
    if (s.camera.noise_sigma < 0.0) r.fail(cam["noise_sigma"], "noise_sigma must be >= 0");
  }
  const auto objects = root["objects"];
  if (!objects.IsDefined() || !objects.IsSequence() || objects.size() == 0)
    r.fail(objects.IsDefined() ? objects : root, "scene needs a non-empty 'objects' list");
  for (const auto& o : objects) {
    r.only_keys(o, {"label", "kind", "size", "height", "points", "sample_seed", "pose"}, "object");
    if (!o["kind"].IsDefined() || !o["pose"].IsDefined()) r.fail(o, "object needs 'kind' and 'pose'");
    scene::PrimitiveShape shape;
    try {
      shape.kind = scene::parse_kind(r.get<std::string>(o["kind"], "kind"));
    } catch (const std::invalid_argument& e) {
      r.fail(o["kind"], e.what());
    }
    r.maybe(o, "size", shape.size);
    r.maybe(o, "height", shape.height);
    std::string label = scene::to_string(shape.kind);
    r.maybe(o, "label", label);
    int points = scene::kDefaultModelPoints;
    r.maybe(o, "points", points);
    std::uint64_t sample_seed = 0;
    r.maybe(o, "sample_seed", sample_seed);
    try {
      s.objects.push_back(
          {scene::make_object_model(label, shape, points, sample_seed), r.pose(o["pose"], "pose")});
    } catch (const std::invalid_argument& e) {
      r.fail(o, e.what());
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(objects, e.what());
  }
  return s;
}

}  // namespace

scene::SceneConfig parse_scene(const std::string& yaml_text, const std::string& source) {
  const Reader r(source);
  return scene_from_node(r, r.parse(yaml_text));
}

scene::SceneConfig load_scene(const std::string& where) {
  if (where == "builtin:tabletop") return scene::tabletop_scene();
  if (where == "builtin:benchmark") return scene::benchmark_scene();
  return parse_scene(read_file(where), where);
}

std::string scene_to_yaml(const scene::SceneConfig& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "camera" << YAML::Value << YAML::BeginMap;
  const auto cp = s.camera.pose.to_array();
  out << YAML::Key << "pose" << YAML::Value << YAML::Flow << std::vector<double>(cp.begin(), cp.end());
  out << YAML::Key << "noise_sigma" << YAML::Value << s.camera.noise_sigma;
  out << YAML::Key << "culling" << YAML::Value << s.camera.culling;
  out << YAML::EndMap;
  out << YAML::Key << "objects" << YAML::Value << YAML::BeginSeq;
  for (const auto& o : s.objects) {
    out << YAML::BeginMap;
    out << YAML::Key << "label" << YAML::Value << o.model.label;
    out << YAML::Key << "kind" << YAML::Value << scene::to_string(o.model.shape.kind);
    out << YAML::Key << "size" << YAML::Value << o.model.shape.size;
    out << YAML::Key << "height" << YAML::Value << o.model.shape.height;
    out << YAML::Key << "points" << YAML::Value << o.model.reference_points.size();
    out << YAML::Key << "sample_seed" << YAML::Value << o.model.sample_seed;
    const auto p = o.pose.to_array();
    out << YAML::Key << "pose" << YAML::Value << YAML::Flow << std::vector<double>(p.begin(), p.end());
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_scene(const std::string& path, const scene::SceneConfig& scene) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scene file", path);
  out << scene_to_yaml(scene);
}

ExperimentConfig default_config() { return {}; }

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source) {
  const Reader r(source);
  const YAML::Node root = r.parse(yaml_text);
  ExperimentConfig c;
  c.source = source;
  if (root.IsNull()) return c;
  r.only_keys(root,
              {"scene", "seed", "output_dir", "bind", "rate", "registration", "tracker", "gate", "timing", "train",
               "reach", "users", "pipeline"},
              "config");
  r.maybe(root, "scene", c.scene_spec);
  if (!c.scene_spec.starts_with("builtin:") && !source.empty() && source != "<string>") {
    const auto base = std::filesystem::path(source).parent_path();
    if (std::filesystem::path(c.scene_spec).is_relative()) c.scene_spec = (base / c.scene_spec).string();
  }
  if (!root["seed"].IsDefined() && !source.empty()) r.fail(root, "config must set 'seed'");
  r.maybe(root, "seed", c.seed);
  r.maybe(root, "output_dir", c.output_dir);
  r.maybe(root, "bind", c.bind);
  r.maybe(root, "rate", c.rate);
  if (!(c.rate > 0.0)) r.fail(root["rate"], "rate must be positive");

  if (const auto n = root["registration"]; n.IsDefined()) {
    r.only_keys(n, {"outlier_weight", "max_iterations", "tolerance", "init_sigma2", "max_reference_points"},
                "registration");
    r.maybe(n, "outlier_weight", c.cpd.outlier_weight);
    r.maybe(n, "max_iterations", c.cpd.max_iterations);
    r.maybe(n, "tolerance", c.cpd.tolerance);
    r.maybe(n, "init_sigma2", c.cpd.init_sigma2);
    r.maybe(n, "max_reference_points", c.cpd.max_reference_points);
    try {
      c.cpd.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(n, e.what());
    }
  }
  if (const auto n = root["tracker"]; n.IsDefined()) {
    r.only_keys(n,
                {"num_particles", "diffusion_trans", "diffusion_rot_deg", "likelihood_sigma", "resample_threshold",
                 "max_model_points", "max_observed_points", "view_culling"},
                "tracker");
    r.maybe(n, "num_particles", c.tracker.num_particles);
    r.maybe(n, "diffusion_trans", c.tracker.diffusion_trans);
    if (n["diffusion_rot_deg"].IsDefined())
      c.tracker.diffusion_rot = r.get<double>(n["diffusion_rot_deg"], "diffusion_rot_deg") * std::numbers::pi / 180.0;
    r.maybe(n, "likelihood_sigma", c.tracker.likelihood_sigma);
    r.maybe(n, "resample_threshold", c.tracker.resample_threshold);
    r.maybe(n, "max_model_points", c.tracker.max_model_points);
    r.maybe(n, "max_observed_points", c.tracker.max_observed_points);
    r.maybe(n, "view_culling", c.tracker_view_culling);
    try {
      c.tracker.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(n, e.what());
    }
  }
  if (const auto n = root["gate"]; n.IsDefined()) {
    r.only_keys(n, {"consecutive_required", "warmup_steps"}, "gate");
    r.maybe(n, "consecutive_required", c.gate.consecutive_required);
    r.maybe(n, "warmup_steps", c.gate.warmup_steps);
    if (c.gate.consecutive_required < 1 || c.gate.warmup_steps < 0) r.fail(n, "gate needs t >= 1 and k >= 0");
  }
  if (const auto n = root["timing"]; n.IsDefined()) {
    r.only_keys(n, {"planning_budget", "execution_speed", "inter_grasp_pause", "sim_tick"}, "timing");
    r.maybe(n, "planning_budget", c.timing.planning_budget);
    r.maybe(n, "execution_speed", c.timing.execution_speed);
    r.maybe(n, "inter_grasp_pause", c.timing.inter_grasp_pause);
    r.maybe(n, "sim_tick", c.timing.sim_tick);
    try {
      c.timing.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(n, e.what());
    }
  }
  if (const auto n = root["train"]; n.IsDefined()) {
    r.only_keys(n, {"learning_rate", "momentum", "epochs", "batch_size", "sample_stride"}, "train");
    r.maybe(n, "learning_rate", c.train.learning_rate);
    r.maybe(n, "momentum", c.train.momentum);
    r.maybe(n, "epochs", c.train.epochs);
    r.maybe(n, "batch_size", c.train.batch_size);
    r.maybe(n, "sample_stride", c.train.sample_stride);
    if (c.train.epochs < 1 || c.train.batch_size < 1 || c.train.sample_stride < 1 || !(c.train.learning_rate > 0.0))
      r.fail(n, "invalid training hyper-parameters");
  }
  if (const auto n = root["reach"]; n.IsDefined()) {
    r.only_keys(n, {"perturbation_amplitude", "neutral_y_rotation", "orientation_jitter", "min_duration", "max_duration",
                    "min_onset", "max_onset"},
                "reach");
    r.maybe(n, "perturbation_amplitude", c.reach.perturbation_amplitude);
    r.maybe(n, "neutral_y_rotation", c.reach.neutral_y_rotation);
    r.maybe(n, "orientation_jitter", c.reach.orientation_jitter);
    r.maybe(n, "min_duration", c.reach.min_duration);
    r.maybe(n, "max_duration", c.reach.max_duration);
    r.maybe(n, "min_onset", c.reach.min_onset);
    r.maybe(n, "max_onset", c.reach.max_onset);
    if (!(c.reach.min_duration > 0.0) || c.reach.max_duration < c.reach.min_duration)
      r.fail(n, "reach durations must satisfy 0 < min_duration <= max_duration");
  }
  if (const auto n = root["users"]; n.IsDefined()) {
    r.only_keys(n, {"noise_sigma", "bias_sigma"}, "users");
    r.maybe(n, "noise_sigma", c.noise_sigma);
    r.maybe(n, "bias_sigma", c.bias_sigma);
    if (c.noise_sigma < 0.0 || c.bias_sigma < 0.0) r.fail(n, "user sigmas must be >= 0");
  }
  if (const auto n = root["pipeline"]; n.IsDefined()) {
    r.only_keys(n,
                {"runs", "detection_rate", "label_error_rate", "z_offset", "frame_rate", "report_at", "max_tilt",
                 "position_jitter"},
                "pipeline");
    auto& p = c.pipeline;
    r.maybe(n, "runs", p.runs);
    r.maybe(n, "detection_rate", p.detection_rate);
    r.maybe(n, "label_error_rate", p.label_error_rate);
    r.maybe(n, "z_offset", p.z_offset);
    r.maybe(n, "frame_rate", p.frame_rate);
    r.maybe(n, "report_at", p.report_at);
    r.maybe(n, "max_tilt", p.max_tilt);
    r.maybe(n, "position_jitter", p.position_jitter);
    if (p.runs < 1 || !(p.frame_rate > 0.0) || p.report_at.empty()) r.fail(n, "invalid pipeline parameters");
    if (!(p.detection_rate >= 0.0 && p.detection_rate <= 1.0) ||
        !(p.label_error_rate >= 0.0 && p.label_error_rate <= 1.0))
      r.fail(n, "segmentation rates must lie in [0, 1]");
  }
  return c;
}

void apply_env_overrides(ExperimentConfig& config) {
  if (const char* v = std::getenv("TELEOP_OUTPUT_DIR"); v && *v) config.output_dir = v;
  if (const char* v = std::getenv("TELEOP_BIND"); v && *v) config.bind = v;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = parse_config(read_file(path), path);
  apply_env_overrides(c);
  return c;
}

control::ExperimentConfig teleop_experiment(const ExperimentConfig& config, const std::vector<std::string>& users,
                                            const std::vector<std::string>& modes, int episodes) {
  control::ExperimentConfig e;
  e.seed = config.seed;
  e.episodes = episodes;
  e.gate = config.gate;
  e.timing = config.timing;
  e.reach = config.reach;
  e.rate = config.rate;
  e.modes.clear();
  try {
    for (const auto& u : users) {
      simuser::UserModel m;
      m.kind = simuser::parse_user_kind(u);
      m.noise_sigma = config.noise_sigma;
      m.bias_sigma = config.bias_sigma;
      e.users.push_back(m);
    }
    for (const auto& m : modes) e.modes.push_back(control::parse_mode(m));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  e.validate();
  return e;
}

}  // namespace teleop::harness
