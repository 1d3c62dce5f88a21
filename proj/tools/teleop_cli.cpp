// teleop: command-line front end for data generation, training, evaluation and the live service.

#include "teleop/errors.hpp"
#include "teleop/harness/config.hpp"
#include "teleop/harness/csv.hpp"
#include "teleop/harness/pipeline.hpp"
#include "teleop/harness/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <pthread.h>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace teleop;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

harness::ExperimentConfig resolve(const Common& c) {
  harness::ExperimentConfig cfg = c.config_path.empty() ? harness::default_config() : harness::load_config(c.config_path);
  if (c.config_path.empty()) harness::apply_env_overrides(cfg);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string output_path(const harness::ExperimentConfig& cfg, const std::string& out) {
  fs::path p(out);
  if (p.is_relative() && cfg.output_dir != ".") p = fs::path(cfg.output_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p.string();
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_times(const std::string& s) {
  std::vector<double> out;
  for (auto item : split(s)) {
    if (item.back() == 's') item.pop_back();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(v > 0.0)) throw InvalidArgument("bad report time '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("--report-at needs at least one time");
  return out;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "overrides the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent-driven traded-control teleoperation toolkit"};
  app.require_subcommand(1);
  Common common;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "synthesise labelled reach trajectories (JSONL)");
  std::string gen_scene = "builtin:tabletop", gen_out;
  int gen_count = 350;
  std::optional<double> gen_rate;
  gen->add_option("--scene", gen_scene, "scene YAML or builtin:<name>");
  gen->add_option("--count", gen_count, "number of trajectories")->check(CLI::PositiveNumber);
  gen->add_option("--rate", gen_rate, "samples per second");
  gen->add_option("--out", gen_out, "dataset path")->required();
  add_common(gen, common);

  // train
  auto* trn = app.add_subcommand("train", "train the intent network");
  std::string trn_data, trn_out;
  std::optional<int> trn_epochs;
  trn->add_option("--data", trn_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  trn->add_option("--out", trn_out, "model path")->required();
  trn->add_option("--epochs", trn_epochs, "overrides train.epochs")->check(CLI::PositiveNumber);
  add_common(trn, common);

  // eval-intent
  auto* evi = app.add_subcommand("eval-intent", "accuracy over normalised episode progress");
  std::string evi_model, evi_data, evi_out;
  int evi_bins = 10;
  evi->add_option("--model", evi_model, "model path")->required()->check(CLI::ExistingFile);
  evi->add_option("--data", evi_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  evi->add_option("--bins", evi_bins, "progress bins")->check(CLI::Range(2, 1000));
  evi->add_option("--out", evi_out, "CSV path")->required();
  add_common(evi, common);

  // init-pose
  auto* ini = app.add_subcommand("init-pose", "mask_pose and mesh_pose for every detected object");
  std::string ini_scene, ini_out;
  ini->add_option("--scene", ini_scene, "scene YAML or builtin:<name>");
  ini->add_option("--params", common.config_path, "YAML config with registration parameters")
      ->check(CLI::ExistingFile);
  ini->add_option("--seed", common.seed, "overrides the config seed");
  ini->add_option("--out", ini_out, "CSV path")->required();

  // track
  auto* trk = app.add_subcommand("track", "track every detected object from its mesh_pose");
  std::string trk_scene, trk_out, trk_report = "1s,3s";
  std::optional<int> trk_frames;
  trk->add_option("--scene", trk_scene, "scene YAML or builtin:<name>");
  trk->add_option("--frames", trk_frames, "frames to track (default: up to the last report time)")
      ->check(CLI::PositiveNumber);
  trk->add_option("--report-at", trk_report, "comma-separated report times, e.g. 1s,3s");
  trk->add_option("--out", trk_out, "CSV path")->required();
  add_common(trk, common);

  // teleop-sim
  auto* sim = app.add_subcommand("teleop-sim", "Early/Late traded-control experiment grid");
  std::string sim_scene, sim_model, sim_out, sim_log, sim_users = "normal,noisy,biased", sim_modes = "early,late";
  int sim_episodes = 12;
  sim->add_option("--scene", sim_scene, "scene YAML or builtin:<name>");
  sim->add_option("--model", sim_model, "model path")->required()->check(CLI::ExistingFile);
  sim->add_option("--users", sim_users, "comma-separated user models");
  sim->add_option("--modes", sim_modes, "comma-separated modes");
  sim->add_option("--episodes", sim_episodes, "episodes per cell")->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "summary CSV path")->required();
  sim->add_option("--log", sim_log, "optional per-grasp CSV path");
  add_common(sim, common);

  // eval-pipeline
  auto* pip = app.add_subcommand("eval-pipeline", "mask/mesh/tracker accuracy table over randomised runs");
  std::string pip_scene = "builtin:benchmark", pip_out, pip_curves;
  std::optional<int> pip_runs;
  pip->add_option("--scene", pip_scene, "scene YAML or builtin:<name>");
  pip->add_option("--runs", pip_runs, "overrides pipeline.runs")->check(CLI::PositiveNumber);
  pip->add_option("--out", pip_out, "CSV path")->required();
  pip->add_option("--curves", pip_curves, "optional directory for per-method ADD-S curves");
  add_common(pip, common);

  // serve
  auto* srv = app.add_subcommand("serve", "live session service over WebSocket");
  std::string srv_scene, srv_model, srv_bind;
  srv->add_option("--scene", srv_scene, "scene YAML or builtin:<name>");
  srv->add_option("--model", srv_model, "model path")->required()->check(CLI::ExistingFile);
  srv->add_option("--bind", srv_bind, "host:port (default from config or TELEOP_BIND)");
  add_common(srv, common);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(common);
    auto scene_for = [&](const std::string& flag) { return harness::load_scene(flag.empty() ? cfg.scene_spec : flag); };

    if (gen->parsed()) {
      const auto scene = harness::load_scene(gen_scene);
      const auto data = simuser::generate_dataset(scene, gen_count, gen_rate.value_or(cfg.rate), cfg.seed, cfg.reach);
      intent::save_dataset(output_path(cfg, gen_out), data);
    } else if (trn->parsed()) {
      const auto data = intent::load_dataset(trn_data);
      auto hyper = cfg.train;
      hyper.seed = cfg.seed;
      if (trn_epochs) hyper.epochs = *trn_epochs;
      if (!data.empty()) hyper.shape.num_objects = static_cast<int>(data.front().object_positions.size());
      const auto model = intent::train(data, hyper);
      if (!model.info.warning.empty()) std::cerr << "warning: " << model.info.warning << "\n";
      intent::save_model(output_path(cfg, trn_out), model);
    } else if (evi->parsed()) {
      const auto model = intent::load_model(evi_model);
      const auto data = intent::load_dataset(evi_data);
      const auto bins = intent::accuracy_over_progress(model, data, evi_bins);
      harness::CsvTable t;
      t.header = {"bin", "progress_lo", "progress_hi", "object_accuracy", "direction_accuracy", "trajectories"};
      double tail_obj = 0.0, tail_dir = 0.0;
      int tail = 0;
      for (int b = 0; b < evi_bins; ++b) {
        const double lo = static_cast<double>(b) / evi_bins, hi = static_cast<double>(b + 1) / evi_bins;
        t.add_row({std::to_string(b), harness::format_double(lo), harness::format_double(hi),
                   harness::format_double(bins[b].object), harness::format_double(bins[b].direction),
                   std::to_string(bins[b].trajectories)});
        if (lo >= 0.7 - 1e-12) {
          tail_obj += bins[b].object;
          tail_dir += bins[b].direction;
          ++tail;
        }
      }
      if (tail > 0) {
        t.summary.push_back({"final30_object_accuracy", harness::format_double(tail_obj / tail)});
        t.summary.push_back({"final30_direction_accuracy", harness::format_double(tail_dir / tail)});
      }
      harness::save_csv(output_path(cfg, evi_out), t);
    } else if (ini->parsed()) {
      const auto rows = harness::init_poses(scene_for(ini_scene), cfg, cfg.seed);
      harness::save_csv(output_path(cfg, ini_out), harness::init_pose_table(rows));
    } else if (trk->parsed()) {
      const auto report = parse_times(trk_report);
      const double last = *std::max_element(report.begin(), report.end());
      const int frames = trk_frames.value_or(static_cast<int>(std::lround(last * cfg.pipeline.frame_rate)));
      const auto rows = harness::track_scene(scene_for(trk_scene), cfg, frames, report, cfg.seed);
      harness::save_csv(output_path(cfg, trk_out), harness::track_table(rows));
    } else if (sim->parsed()) {
      const auto scene = scene_for(sim_scene);
      const auto model = intent::load_model(sim_model);
      const auto exp = harness::teleop_experiment(cfg, split(sim_users), split(sim_modes), sim_episodes);
      const auto result = control::run_experiment(scene, model, exp);
      harness::CsvTable t;
      t.header = {"user", "mode", "episodes", "time_until_execution_mean", "time_until_execution_std",
                  "episode_duration_mean", "episode_duration_std", "object_accuracy_mean", "object_accuracy_std",
                  "direction_accuracy_mean", "direction_accuracy_std", "fallback_commits"};
      auto f = harness::format_double;
      for (const auto& r : result.rows)
        t.add_row({simuser::to_string(r.user), control::to_string(r.mode), std::to_string(r.episodes),
                   f(r.time_until_execution.mean), f(r.time_until_execution.stddev), f(r.episode_duration.mean),
                   f(r.episode_duration.stddev), f(r.object_accuracy.mean), f(r.object_accuracy.stddev),
                   f(r.direction_accuracy.mean), f(r.direction_accuracy.stddev), std::to_string(r.fallback_commits)});
      harness::save_csv(output_path(cfg, sim_out), t);
      if (!sim_log.empty()) {
        harness::CsvTable g;
        g.header = {"user", "mode", "episode", "grasp", "target_object", "committed_object", "target_direction",
                    "committed_direction", "fallback", "commit_time", "demo_end", "planning_start",
                    "execution_start", "execution_end", "time_until_execution"};
        for (std::size_t row = 0; row < result.rows.size(); ++row)
          for (int e = 0; e < sim_episodes; ++e) {
            const auto& log = result.logs[row * sim_episodes + e];
            for (std::size_t k = 0; k < log.grasps.size(); ++k) {
              const auto& q = log.grasps[k];
              g.add_row({simuser::to_string(result.rows[row].user), control::to_string(log.mode), std::to_string(e),
                         std::to_string(k), std::to_string(q.target_object), std::to_string(q.committed_object),
                         scene::to_string(q.target_direction), scene::to_string(q.committed_direction),
                         q.fallback ? "1" : "0", f(q.commit_time), f(q.demo_end), f(q.planning_start),
                         f(q.execution_start), f(q.execution_end), f(q.time_until_execution)});
            }
          }
        harness::save_csv(output_path(cfg, sim_log), g);
      }
    } else if (pip->parsed()) {
      if (pip_runs) cfg.pipeline.runs = *pip_runs;
      const auto report = harness::run_pipeline_eval(harness::load_scene(pip_scene), cfg);
      harness::save_csv(output_path(cfg, pip_out), harness::pipeline_table(report));
      if (!pip_curves.empty()) {
        const auto dir = fs::path(output_path(cfg, pip_curves));
        fs::create_directories(dir);
        for (const auto& m : report.methods)
          harness::save_csv((dir / (m + ".csv")).string(), harness::curve_table(report.samples.at(m)));
      }
    } else if (srv->parsed()) {
      auto res = std::make_shared<harness::SessionResources>();
      res->scene = scene_for(srv_scene);
      res->model = intent::load_model(srv_model);
      res->gate = cfg.gate;
      res->timing = cfg.timing;
      res->rate = cfg.rate;
      const auto [host, port] = harness::parse_bind(srv_bind.empty() ? cfg.bind : srv_bind);

      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      harness::SessionServer server(res, host, port);
      std::cerr << "listening on " << host << ":" << server.port() << std::endl;
      std::thread worker([&] { server.run(); });
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
      worker.join();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
