#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "tabletop/bench.hpp"
#include "tabletop/bridge.hpp"
#include "tabletop/serialize.hpp"

using namespace tabletop;
namespace fs = std::filesystem;

namespace {

struct Endpoint {
  std::string host;
  int port = 0;
};

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--remote", "expected host:port");
  return Endpoint{text.substr(0, colon), std::stoi(text.substr(colon + 1))};
}

/// Scenes named by the tasks file unless overridden; relative paths resolve
/// against the tasks file's directory.
std::vector<SceneSpec> load_scenes(const fs::path& tasks_path, const TasksFile& tasks, const std::string& override) {
  fs::path p = override.empty() ? fs::path(tasks.scenes_file) : fs::path(override);
  if (p.empty()) throw FormatError("tasks file names no scenes file; pass --scenes");
  if (override.empty() && p.is_relative()) p = tasks_path.parent_path() / p;
  return scenes_from(read_json(p));
}

NoiseProfile load_noise(const std::string& path) { return path.empty() ? NoiseProfile{} : noise_from(read_json(path)); }

Ablation parse_ablation(const std::vector<std::string>& names) {
  Ablation a;
  for (const auto& n : names) {
    if (n == "gt_pose") a.gt_pose = true;
    else if (n == "gt_attributes") a.gt_attributes = true;
    else if (n == "gt_reasoning") a.gt_reasoning = true;
    else if (n != "none") throw CLI::ValidationError("--ablation", "unknown flag " + n);
  }
  return a;
}

std::string describe_pose(const Pose& p) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << "(" << p.x << ", " << p.y << ", " << p.z << ")";
  return out.str();
}

void print_replay(const EpisodeTrace& t) {
  std::cout << "task " << t.task_id << ", seed " << t.seed << "\n";
  for (const auto& k : t.keyframes) {
    std::cout << "[" << k.frame_index << "] ";
    for (const auto& d : k.disturbances) std::cout << "disturbance " << to_string(d.kind) << "; ";
    for (const auto& r : k.rejected) std::cout << "(rejected: " << r << ") ";
    std::cout << "ee " << describe_pose(k.graph.ee.pose) << (k.graph.ee.gripper_open ? " open" : " closed");
    if (k.graph.ee.held != kNoObject) std::cout << " holding " << k.graph.ee.held;
    std::cout << "\n    executor: " << k.outcome << "\n";
    if (k.action) {
      std::cout << "    action: " << describe(*k.action);
      if (k.status) std::cout << " -> " << to_string(*k.status);
      if (!k.message.empty()) std::cout << " (" << k.message << ")";
      if (k.physical && k.physical->value)
        std::cout << " observed " << to_string(k.physical->kind) << " = " << *k.physical->value;
      std::cout << "\n";
    }
  }
  std::cout << "exit: " << to_string(t.exit_code);
  if (!t.detail.empty()) std::cout << " (" << t.detail << ")";
  std::cout << "\nkeyframes " << t.keyframe_count << ", actions " << t.action_count << "\n";
  if (t.answer) {
    std::cout << "answer:";
    for (std::size_t i = 0; i < t.answer->ids.size(); ++i)
      std::cout << " object " << t.answer->ids[i] << " = " << t.answer->values[i] << " g";
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabletop instruction-following robot benchmark"};
  app.require_subcommand(1);

  auto* gen_scenes = app.add_subcommand("gen-scenes", "Generate random tabletop scenes");
  int scene_count = 300;
  std::uint64_t scene_seed = 0;
  std::string scenes_out = "scenes.json";
  gen_scenes->add_option("--count", scene_count, "Number of scenes")->check(CLI::PositiveNumber);
  gen_scenes->add_option("--seed", scene_seed, "Generator seed");
  gen_scenes->add_option("--out", scenes_out, "Output file");

  auto* gen_instr = app.add_subcommand("gen-instructions", "Assign one instruction to each scene");
  std::string instr_scenes;
  int per_template = 30;
  std::uint64_t instr_seed = 0;
  std::string tasks_out = "tasks.json";
  gen_instr->add_option("--scenes", instr_scenes, "Scenes file")->required();
  gen_instr->add_option("--per-template", per_template, "Tasks per template")->check(CLI::PositiveNumber);
  gen_instr->add_option("--seed", instr_seed, "Generator seed");
  gen_instr->add_option("--out", tasks_out, "Output file");

  auto* run = app.add_subcommand("run", "Run one task and write its trace");
  std::string run_tasks, run_scenes, run_noise, run_trace, run_remote;
  int run_index = 0;
  int run_budget = 120;
  run->add_option("--tasks", run_tasks, "Tasks file")->required();
  run->add_option("--index", run_index, "Task index")->required();
  run->add_option("--scenes", run_scenes, "Scenes file (default: the one named in the tasks file)");
  run->add_option("--noise", run_noise, "Noise profile JSON");
  run->add_option("--trace", run_trace, "Trace output file");
  run->add_option("--budget", run_budget, "Keyframe budget")->check(CLI::PositiveNumber);
  run->add_option("--remote", run_remote, "Drive a bridge server at host:port");

  auto* bench = app.add_subcommand("bench", "Run a benchmark and report success rates");
  std::string bench_tasks, bench_scenes, bench_noise, bench_report, bench_remote;
  std::vector<std::string> ablation_names;
  int runs = 1;
  int bench_budget = 120;
  bench->add_option("--tasks", bench_tasks, "Tasks file")->required();
  bench->add_option("--scenes", bench_scenes, "Scenes file (default: the one named in the tasks file)");
  bench->add_option("--noise", bench_noise, "Noise profile JSON");
  bench->add_option("--ablation", ablation_names, "gt_pose,gt_attributes,gt_reasoning")->delimiter(',');
  bench->add_option("--runs", runs, "Seeds per task")->check(CLI::PositiveNumber);
  bench->add_option("--budget", bench_budget, "Keyframe budget")->check(CLI::PositiveNumber);
  bench->add_option("--report", bench_report, "Report JSON output");
  bench->add_option("--remote", bench_remote, "Drive a bridge server at host:port");

  auto* serve = app.add_subcommand("serve", "Expose the simulator over the TCP bridge");
  int port = port_from_env(kDefaultPort);
  std::string host = "127.0.0.1";
  int max_frames = 0;
  serve->add_option("--port", port, std::string("Listen port (env ") + kPortEnv + ")");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--max-frames", max_frames, "Execute requests allowed per reset (0: unlimited)");

  auto* replay = app.add_subcommand("replay", "Narrate a trace keyframe by keyframe");
  std::string replay_trace;
  replay->add_option("--trace", replay_trace, "Trace file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_scenes) {
      write_json(scenes_out, scenes_json(generate_scenes(scene_count, scene_seed)));
      std::cout << "wrote " << scene_count << " scenes to " << scenes_out << "\n";
    } else if (*gen_instr) {
      TasksFile tf;
      tf.scenes_file = instr_scenes;
      tf.tasks = generate_tasks(scenes_from(read_json(instr_scenes)), per_template, instr_seed);
      write_json(tasks_out, tasks_json(tf));
      std::cout << "wrote " << tf.tasks.size() << " tasks to " << tasks_out << "\n";
    } else if (*run) {
      const TasksFile tf = tasks_from(read_json(run_tasks));
      const auto scenes = load_scenes(run_tasks, tf, run_scenes);
      if (run_index < 0 || run_index >= static_cast<int>(tf.tasks.size())) throw std::out_of_range("task index out of range");
      const Task& task = tf.tasks[static_cast<std::size_t>(run_index)];
      auto scene = std::find_if(scenes.begin(), scenes.end(), [&](const SceneSpec& s) { return s.id == task.scene_id; });
      if (scene == scenes.end()) throw FormatError("task refers to unknown scene " + std::to_string(task.scene_id));
      const NoiseProfile noise = load_noise(run_noise);
      EpisodeConfig ec;
      ec.budget = run_budget;
      std::unique_ptr<Robot> robot;
      if (run_remote.empty()) {
        robot = std::make_unique<SimRobot>();
      } else {
        const Endpoint e = parse_endpoint(run_remote);
        robot = std::make_unique<RemoteRobot>(e.host, e.port);
      }
      const EpisodeTrace trace = run_episode(task, *scene, noise, ec, *robot, episode_seed(noise.seed, task.id, 0));
      const ExitCode verdict = classify(task, *scene, trace, robot->truth(), noise);
      if (!run_trace.empty()) write_json(run_trace, trace_json(trace));
      std::cout << task.instruction << "\n"
                << "engine: " << to_string(trace.exit_code) << ", verdict: " << to_string(verdict) << ", keyframes "
                << trace.keyframe_count << ", actions " << trace.action_count << "\n";
      return is_success(verdict) ? 0 : 2;
    } else if (*bench) {
      const TasksFile tf = tasks_from(read_json(bench_tasks));
      const auto scenes = load_scenes(bench_tasks, tf, bench_scenes);
      BenchConfig cfg;
      cfg.noise = load_noise(bench_noise);
      cfg.ablation = parse_ablation(ablation_names);
      cfg.runs = runs;
      cfg.budget = bench_budget;
      RobotFactory factory;
      if (!bench_remote.empty()) {
        const Endpoint e = parse_endpoint(bench_remote);
        factory = [e] { return std::make_unique<RemoteRobot>(e.host, e.port); };
      }
      const Report report = run_bench(scenes, tf.tasks, cfg, factory);
      std::cout << render_table(report);
      if (!bench_report.empty()) write_json(bench_report, report_json(report));
    } else if (*serve) {
      BridgeServer::Options opts;
      opts.host = host;
      opts.port = port;
      if (max_frames > 0) opts.max_frames = max_frames;
      BridgeServer server(opts);
      server.start();
      std::cout << "listening on " << host << ":" << server.port() << std::endl;
      server.serve();
    } else if (*replay) {
      print_replay(trace_from(read_json(replay_trace)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
