#pragma once

#include "teleop/control.hpp"
#include "teleop/intent.hpp"
#include "teleop/scene.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace teleop::harness {

/// Read-only data shared by every session of a server.
struct SessionResources {
  scene::SceneConfig scene;
  intent::MlpParams model;
  intent::GateConfig gate;
  control::TimingParams timing;
  double rate = 180.0;  // gate rate, Hz
  control::Mode initial_mode = control::Mode::Early;
};

/// One virtual teleoperation episode driven by client messages. Every reply carries the
/// session step (gate-rate ticks consumed so far). Message schema: docs/protocol.md.
class Session {
 public:
  explicit Session(std::shared_ptr<const SessionResources> resources);

  /// First message sent on a new connection.
  nlohmann::json hello() const;

  /// Replies to one client text message. Malformed input yields a single Error reply and
  /// leaves the session unchanged.
  std::vector<nlohmann::json> handle(const std::string& text);
  std::vector<nlohmann::json> handle(const nlohmann::json& message);

  int step() const { return step_; }
  control::Mode mode() const { return mode_; }
  int grasps_done() const { return static_cast<int>(records_.size()); }

 private:
  struct Phase {
    intent::GateState gate;
    int start_step = 0;
    std::optional<intent::Target> committed;
    bool fallback = false;
    double commit_time = 0.0;
    bool plan_started = false;
    double planning_start = 0.0;
    std::optional<double> last_t;
    intent::Target last_prediction;
    bool has_prediction = false;
  };

  std::vector<nlohmann::json> on_sample(const nlohmann::json& m);
  std::vector<nlohmann::json> on_mode(const nlohmann::json& m);
  std::vector<nlohmann::json> on_reset();
  nlohmann::json message(const char* kind) const;
  nlohmann::json gate_progress() const;
  nlohmann::json commit_message() const;
  nlohmann::json plan_message(double sim_time) const;
  void finish_demo(std::vector<nlohmann::json>& out);
  double sim_time(int step) const { return step * res_->timing.sim_tick; }

  std::shared_ptr<const SessionResources> res_;
  control::Mode mode_;
  int step_ = 0;
  Phase phase_;
  std::vector<bool> retrieved_;
  std::vector<control::GraspRecord> records_;
};

}  // namespace teleop::harness
