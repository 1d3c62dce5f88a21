#include "teleop/harness/session.hpp"

#include "teleop/errors.hpp"
#include "teleop/simuser.hpp"

#include <algorithm>
#include <cmath>

namespace teleop::harness {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 read_vec(const json& m, const char* key) {
  const auto& v = m.at(key);
  if (!v.is_array() || v.size() != 3) throw InvalidArgument(std::string("'") + key + "' must be 3 numbers");
  Vec3 out(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
  if (!out.allFinite()) throw InvalidArgument(std::string("'") + key + "' must be finite");
  return out;
}

Vec3 read_unit(const json& m, const char* key, const Vec3& fallback) {
  if (!m.contains(key)) return fallback;
  const Vec3 v = read_vec(m, key);
  if (v.norm() < 1e-9) throw InvalidArgument(std::string("'") + key + "' must be non-zero");
  return v.normalized();
}

}  // namespace

Session::Session(std::shared_ptr<const SessionResources> resources)
    : res_(std::move(resources)), mode_(res_->initial_mode), retrieved_(res_->scene.objects.size(), false) {
  res_->scene.validate();
  res_->model.validate();
  if (res_->model.num_objects() != static_cast<int>(res_->scene.objects.size()))
    throw InvalidArgument("model object head does not match the scene's object count");
}

json Session::message(const char* kind) const { return json{{"kind", kind}, {"step", step_}}; }

json Session::hello() const {
  json m = message("SessionInfo");
  json objects = json::array();
  Vec3 lo = simuser::default_hand_start();
  Vec3 hi = lo;
  for (const auto& o : res_->scene.objects) {
    objects.push_back({{"label", o.model.label},
                       {"kind", scene::to_string(o.model.shape.kind)},
                       {"position", vec_json(o.pose.translation())},
                       {"radius", o.model.bounding_radius}});
    lo = lo.cwiseMin(o.pose.translation());
    hi = hi.cwiseMax(o.pose.translation());
  }
  lo -= Vec3::Constant(0.15);
  hi += Vec3::Constant(0.15);
  lo.z() = 0.0;
  m["objects"] = std::move(objects);
  m["workspace"] = {{"min", vec_json(lo)}, {"max", vec_json(hi)}};
  m["gate"] = {{"consecutive_required", res_->gate.consecutive_required}, {"warmup_steps", res_->gate.warmup_steps}};
  m["rate"] = res_->rate;
  m["mode"] = control::to_string(mode_);
  return m;
}

std::vector<json> Session::handle(const std::string& text) {
  json m;
  try {
    m = json::parse(text);
  } catch (const json::exception& e) {
    json err = message("Error");
    err["message"] = std::string("malformed message: ") + e.what();
    return {err};
  }
  return handle(m);
}

std::vector<json> Session::handle(const json& m) {
  // Work on a copy so a failed message leaves the session untouched.
  Session backup = *this;
  try {
    if (!m.is_object() || !m.contains("kind") || !m.at("kind").is_string())
      throw InvalidArgument("message needs a string 'kind'");
    const auto kind = m.at("kind").get<std::string>();
    if (kind == "HandSample") return on_sample(m);
    if (kind == "ModeSet") return on_mode(m);
    if (kind == "Reset") return on_reset();
    throw InvalidArgument("unknown message kind '" + kind + "'");
  } catch (const std::exception& e) {
    *this = std::move(backup);
    json err = message("Error");
    err["message"] = e.what();
    return {err};
  }
}

json Session::gate_progress() const {
  json m = message("GateProgress");
  const int required = res_->gate.consecutive_required;
  const int run = phase_.gate.committed ? required : phase_.gate.run_length;
  m["run_length"] = run;
  m["required"] = required;
  m["fraction"] = static_cast<double>(run) / required;
  m["warmup_remaining"] = std::max(0, res_->gate.warmup_steps - phase_.gate.step);
  m["committed"] = phase_.committed.has_value();
  return m;
}

json Session::commit_message() const {
  json m = message("Commit");
  m["commit_step"] = phase_.fallback ? step_ : phase_.start_step + phase_.gate.committed->commit_step;
  m["object"] = phase_.committed->object;
  m["label"] = res_->scene.objects[phase_.committed->object].model.label;
  m["direction"] = scene::to_string(phase_.committed->direction);
  m["fallback"] = phase_.fallback;
  m["sim_time"] = phase_.commit_time;
  return m;
}

json Session::plan_message(double sim_time) const {
  const auto& target = *phase_.committed;
  const Pose goal = scene::grasp_pose(res_->scene.objects[target.object], target.direction);
  const auto plan = control::plan_reach(control::default_robot_home(), goal, control::kDefaultKnots, res_->timing);
  json m = message("PlanStarted");
  m["sim_time"] = sim_time;
  m["planning_time"] = plan.planning_time;
  m["mode"] = control::to_string(mode_);
  json wps = json::array();
  for (const auto& w : plan.waypoints) {
    const Vec3& p = w.pose.translation();
    wps.push_back({w.time, p.x(), p.y(), p.z()});
  }
  m["waypoints"] = std::move(wps);
  m["path_length"] = plan.path_length();
  return m;
}

std::vector<json> Session::on_sample(const json& m) {
  const int num_objects = static_cast<int>(res_->scene.objects.size());
  if (grasps_done() >= num_objects) throw InvalidArgument("episode complete; send Reset to start a new one");

  intent::HandState hand;
  hand.position = read_vec(m, "position");
  hand.direction = read_unit(m, "direction", Vec3::UnitY());
  hand.palm_normal = read_unit(m, "palm_normal", -Vec3::UnitZ());
  hand.y_rotation = m.value("y_rotation", 0.0);
  if (!std::isfinite(hand.y_rotation)) throw InvalidArgument("'y_rotation' must be finite");
  const bool final_sample = m.value("final", false);

  int ticks = 1;
  if (m.contains("t")) {
    const double t = m.at("t").get<double>();
    if (!std::isfinite(t)) throw InvalidArgument("'t' must be finite");
    if (phase_.last_t) {
      if (t < *phase_.last_t) throw InvalidArgument("sample timestamps must not decrease");
      ticks = std::max(1, static_cast<int>(std::lround((t - *phase_.last_t) * res_->rate)));
    }
    phase_.last_t = t;
  }

  const auto pred =
      intent::predict(res_->model, intent::extract_features(hand, res_->scene.object_positions()), retrieved_);
  phase_.last_prediction = pred.target;
  phase_.has_prediction = true;

  const bool was_committed = phase_.committed.has_value();
  // Sample-and-hold: the prediction is repeated for every gate tick the sample covers.
  for (int i = 0; i < ticks; ++i) {
    ++step_;
    phase_.gate = intent::gate_update(res_->gate, phase_.gate, pred.target);
  }

  std::vector<json> out;
  json p = message("Prediction");
  p["object"] = pred.target.object;
  p["label"] = res_->scene.objects[pred.target.object].model.label;
  p["direction"] = scene::to_string(pred.target.direction);
  p["object_confidence"] = pred.object_confidence;
  p["direction_confidence"] = pred.direction_confidence;
  p["object_probs"] = std::vector<double>(pred.object_probs.data(), pred.object_probs.data() + pred.object_probs.size());
  p["direction_probs"] =
      std::vector<double>(pred.direction_probs.data(), pred.direction_probs.data() + pred.direction_probs.size());
  out.push_back(std::move(p));

  if (!was_committed && phase_.gate.committed) {
    phase_.committed = phase_.gate.committed->target;
    phase_.commit_time = sim_time(phase_.start_step + phase_.gate.committed->commit_step);
  }
  out.push_back(gate_progress());
  if (!was_committed && phase_.committed) {
    out.push_back(commit_message());
    if (mode_ == control::Mode::Early) {
      phase_.plan_started = true;
      phase_.planning_start = phase_.commit_time;
      out.push_back(plan_message(phase_.planning_start));
    }
  }
  if (final_sample) finish_demo(out);
  return out;
}

void Session::finish_demo(std::vector<json>& out) {
  const double demo_end = sim_time(step_);
  const double phase_start = sim_time(phase_.start_step);
  if (!phase_.committed) {
    phase_.committed = phase_.last_prediction;
    phase_.fallback = true;
    phase_.commit_time = demo_end;
    out.push_back(commit_message());
  }
  if (!phase_.plan_started) {
    phase_.plan_started = true;
    phase_.planning_start = demo_end;
    out.push_back(plan_message(demo_end));
  }
  const double exec_start = std::max(phase_.planning_start + res_->timing.planning_budget, demo_end);
  const auto& target = *phase_.committed;
  const Pose goal = scene::grasp_pose(res_->scene.objects[target.object], target.direction);
  const auto plan = control::plan_reach(control::default_robot_home(), goal, control::kDefaultKnots, res_->timing);
  const double exec_end = exec_start + plan.path_length() / res_->timing.execution_speed;

  json started = message("ExecutionStarted");
  started["sim_time"] = exec_start;
  started["object"] = target.object;
  out.push_back(std::move(started));

  control::GraspRecord rec;
  rec.committed_object = target.object;
  rec.committed_direction = target.direction;
  rec.fallback = phase_.fallback;
  rec.phase_start = phase_start;
  rec.commit_time = phase_.commit_time;
  rec.demo_end = demo_end;
  rec.planning_start = phase_.planning_start;
  rec.execution_start = exec_start;
  rec.execution_end = exec_end;
  rec.time_until_execution = exec_start - phase_start;
  records_.push_back(rec);
  retrieved_[target.object] = true;

  json done = message("Done");
  done["sim_time"] = exec_end;
  done["grasp"] = grasps_done() - 1;
  done["object"] = target.object;
  done["direction"] = scene::to_string(target.direction);
  done["time_until_execution"] = rec.time_until_execution;
  const bool complete = grasps_done() >= static_cast<int>(res_->scene.objects.size());
  done["episode_complete"] = complete;
  if (complete) {
    json tue = json::array();
    double total = 0.0;
    for (const auto& r : records_) {
      tue.push_back(r.time_until_execution);
      total += r.time_until_execution;
    }
    done["summary"] = {{"time_until_execution", tue},
                       {"time_until_execution_total", total},
                       {"robot_finish_time", exec_end}};
  }
  out.push_back(std::move(done));

  phase_ = Phase{};
  phase_.start_step = step_;
}

std::vector<json> Session::on_mode(const json& m) {
  const auto mode = control::parse_mode(m.at("mode").get<std::string>());
  mode_ = mode;
  std::vector<json> out;
  json ack = message("ModeSet");
  ack["mode"] = control::to_string(mode_);
  out.push_back(std::move(ack));
  if (mode_ == control::Mode::Early && phase_.committed && !phase_.plan_started) {
    phase_.plan_started = true;
    phase_.planning_start = sim_time(step_);
    out.push_back(plan_message(phase_.planning_start));
  }
  return out;
}

std::vector<json> Session::on_reset() {
  records_.clear();
  std::fill(retrieved_.begin(), retrieved_.end(), false);
  phase_ = Phase{};
  phase_.start_step = step_;
  return {message("Reset"), gate_progress()};
}

}  // namespace teleop::harness
