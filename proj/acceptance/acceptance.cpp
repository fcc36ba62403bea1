// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "tabletop/bench.hpp"
#include "tabletop/bridge.hpp"
#include "tabletop/planner.hpp"
#include "tabletop/serialize.hpp"

using namespace tabletop;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

constexpr std::uint64_t kDatasetSeed = 11;
constexpr std::uint64_t kNoiseSeeds[] = {5, 6, 7};

NoiseProfile silent() {
  NoiseProfile n;
  n.weigh_rel_err = 0.0;
  n.stiffness_cov = 0.0;
  return n;
}

NoiseProfile noisy(std::uint64_t seed) {
  NoiseProfile n;
  n.pose_sigma = 0.02;
  n.slip_prob = 0.1;
  n.attr_flip_prob = 0.05;
  n.seed = seed;
  return n;
}

int count(const Report& r, ExitCode c) { return r.counts[static_cast<std::size_t>(c)]; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const SceneSpec& scene_of(const Dataset& d, const Task& t) { return d.scenes.at(static_cast<std::size_t>(t.scene_id)); }

// 1
Verdict zero_noise_completeness(const Dataset& d) {
  BenchConfig cfg;
  cfg.noise = silent();
  const auto start = std::chrono::steady_clock::now();
  const Report r = run_bench(d.scenes, d.tasks, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  int small = 0;
  for (const auto& s : d.scenes) small += (s.objects.size() < 4 || s.objects.size() > 5) ? 1 : 0;
  const bool pass = r.overall.episodes == 300 && r.overall.successes == 300 && secs < 60.0 && small == 0;
  return {pass, fmt("%d/%d successful, %.2f s", r.overall.successes, r.overall.episodes, secs)};
}

// 2
Verdict parser_exactness() {
  const Dataset d = generate_dataset(100, 202);
  int exact = 0;
  std::map<int, int> per_template;
  for (const Task& t : d.tasks) {
    bool ok = false;
    try {
      ok = parse_instruction(t.instruction) == t.program;
    } catch (const ParseError&) {
    }
    exact += ok ? 1 : 0;
    per_template[t.template_id] += 1;
  }
  const int n = static_cast<int>(d.tasks.size());
  return {n == 1000 && exact == n && per_template.size() == 10, fmt("%d/%d instructions exact", exact, n)};
}

// 3: every filter, unique and filter_weight result is observed through a
// terminal whose output exposes it, and compared with plain enumeration.
Verdict executor_oracle() {
  std::mt19937_64 rng(303);
  int checks = 0, mismatches = 0;
  const auto scenes = generate_scenes(1000, 303);
  for (const SceneSpec& spec : scenes) {
    SceneGraph g = truth_graph(init_world(spec));
    for (auto& o : g.objects) o.mass.measured_value = o.mass.true_value;
    for (int trial = 0; trial < 4; ++trial) {
      const ObjectNode& seed_obj = g.objects[std::uniform_int_distribution<std::size_t>(0, g.objects.size() - 1)(rng)];
      auto all = descriptors_of(seed_obj.visual);
      const Descriptor d = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];

      std::vector<ObjectId> expected;
      for (const auto& o : g.objects)
        if ((!d.size || *d.size == o.visual.size) && (!d.color || *d.color == o.visual.color) &&
            (!d.material || *d.material == o.visual.material) && (!d.name || *d.name == o.visual.name))
          expected.push_back(o.id);
      std::sort(expected.begin(), expected.end());

      // filter chain
      Instruction list{"", 2, {d}, {}, {}};
      const auto listed = execute(build_program(list), g);
      const auto* a = std::get_if<Answer>(&listed);
      ++checks;
      if (!a || a->ids != expected) ++mismatches;

      // unique
      Instruction single{"", 1, {d}, {}, {}};
      const auto one = execute(build_program(single), g);
      ++checks;
      if (expected.size() == 1) {
        const auto* s = std::get_if<Answer>(&one);
        if (!s || s->ids != expected) ++mismatches;
      } else if (!std::holds_alternative<ProgramError>(one)) {
        ++mismatches;
      }

      // filter_weight, read off the pick-up subgoal
      for (WeightSpec ws : {WeightSpec::Lightest, WeightSpec::Heaviest}) {
        Instruction pick{"", 3, {d}, {}, ws};
        const auto out = execute(build_program(pick), g);
        ObjectId want = expected.front();
        for (ObjectId id : expected) {
          const double m = spec.objects[static_cast<std::size_t>(id)].mass.true_value;
          const double b = spec.objects[static_cast<std::size_t>(want)].mass.true_value;
          if (ws == WeightSpec::Lightest ? m < b : m > b) want = id;
        }
        const auto* need = std::get_if<NeedSubgoal>(&out);
        ++checks;
        if (!need || need->subgoal.kind != SubgoalKind::PickUp || need->subgoal.target != want) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%d comparisons on %zu scenes, %d mismatches", checks, scenes.size(), mismatches)};
}

// 4
Verdict plan_length_anchors(const Dataset& d) {
  int t1 = 0, t1_exact = 0, t10 = 0, t10_ok = 0, t10_max = 0;
  for (const Task& task : d.tasks) {
    if (task.template_id != 1 && task.template_id != 10) continue;
    const SceneSpec& scene = scene_of(d, task);
    SimRobot robot;
    const EpisodeTrace tr = run_episode(task, scene, silent(), {}, robot, 0);
    const bool ok = is_success(classify(task, scene, tr, robot.truth(), silent()));
    if (task.template_id == 1) {
      ++t1;
      t1_exact += (ok && tr.action_count == 5) ? 1 : 0;
    } else if (scene.objects.size() == 4) {
      ++t10;
      t10_ok += (ok && tr.action_count <= 46) ? 1 : 0;
      t10_max = std::max(t10_max, tr.action_count);
    }
  }
  return {t1 > 0 && t1_exact == t1 && t10 > 0 && t10_ok == t10,
          fmt("template 1: %d/%d with 5 actions; template 10 on 4-object scenes: %d/%d within 46 (max %d)", t1_exact,
              t1, t10_ok, t10, t10_max)};
}

// 5
Verdict measurement_model() {
  SceneSpec spec;
  ObjectNode o;
  o.id = 0;
  o.pose = Pose{0.3, 0.3, 0, 0};
  o.bbox = BBox{0.07, 0.07, 0.10};
  o.mass.true_value = 150.0;
  o.stiffness.true_value = 4.0;
  spec.objects = {o};
  WorldState w = init_world(spec);
  NoiseProfile noise;  // weigh_rel_err 0.10, stiffness_cov 0.025
  std::mt19937_64 rng(505);
  auto step = [&](ActionOp op, Pose at = {}) { return step_primitive(w, PrimitiveAction{op, 0, false, at}, noise, rng); };
  step(ActionOp::Move, Pose{0.3, 0.3, kTravelHeight, 0});
  step(ActionOp::Approach, Pose{0.3, 0.3, 0.05, 0});
  step(ActionOp::CloseGripper);
  step(ActionOp::Lift);
  if (w.ee.held != 0) return {false, "could not grasp the probe object"};

  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const StepResult r = step(ActionOp::Weigh);
    const double v = r.observation.value.value_or(-1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double sum = 0, sq = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double v = step(ActionOp::Squeeze).observation.value.value_or(0.0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double cov = std::sqrt((sq - n * mean * mean) / (n - 1)) / mean;
  const double ratio = cov / noise.stiffness_cov;
  return {lo >= 135.0 && hi <= 165.0 && ratio >= 0.7 && ratio <= 1.3,
          fmt("weigh range [%.2f, %.2f] g; squeeze CoV %.4f (%.2fx configured)", lo, hi, cov, ratio)};
}

/// SimRobot that remembers the true world at every keyframe.
class RecordingRobot : public SimRobot {
 public:
  Observation observe() override {
    frames.push_back(world());
    return SimRobot::observe();
  }
  std::vector<WorldState> frames;
};

bool free_spot(const WorldState& w, const ObjectNode& moved) {
  if (moved.pose.x - moved.bbox.dx / 2 < 0.02 || moved.pose.x + moved.bbox.dx / 2 > kTableLength - 0.02) return false;
  if (moved.pose.y - moved.bbox.dy / 2 < 0.02 || moved.pose.y + moved.bbox.dy / 2 > kTableWidth - 0.02) return false;
  for (const auto& o : w.objects) {
    if (o.id == moved.id) continue;
    if (std::abs(o.pose.x - moved.pose.x) < kPlacementClearance && std::abs(o.pose.y - moved.pose.y) < kPlacementClearance)
      return false;
  }
  return true;
}

// 6
Verdict recovery(const Dataset& d) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<const Task*> pool;
  for (const Task& t : d.tasks)
    if (t.template_id == 3 || t.template_id == 7 || t.template_id == 8) pool.push_back(&t);

  int episodes = 0, successes = 0, explained = 0, drops = 0;
  std::string first_failure;
  for (int i = 0; episodes < 100; ++i) {
    const Task& task = *pool[static_cast<std::size_t>(i) % pool.size()];
    const SceneSpec& scene = scene_of(d, task);
    RecordingRobot clean;
    run_episode(task, scene, silent(), {}, clean, 0);
    const int frames = static_cast<int>(clean.frames.size());
    if (frames < 3) continue;

    Disturbance dist;
    bool drop = unit(rng) < 0.5;
    std::vector<int> holding;
    for (int k = 1; k < frames - 1; ++k)
      if (clean.frames[static_cast<std::size_t>(k)].ee.held != kNoObject) holding.push_back(k);
    if (drop && !holding.empty()) {
      dist.kind = DisturbanceKind::DropHeld;
      dist.at_keyframe = holding[std::uniform_int_distribution<std::size_t>(0, holding.size() - 1)(rng)];
    } else {
      drop = false;
      dist.kind = DisturbanceKind::DisplaceObject;
      dist.at_keyframe = std::uniform_int_distribution<int>(1, frames - 2)(rng);
      const WorldState& w = clean.frames[static_cast<std::size_t>(dist.at_keyframe)];
      std::vector<const ObjectNode*> candidates;
      for (const auto& o : w.objects)
        if (o.id != w.ee.held && o.pose.z == 0.0) candidates.push_back(&o);
      const ObjectNode& pick = *candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
      bool found = false;
      for (int attempt = 0; attempt < 500 && !found; ++attempt) {
        ObjectNode moved = pick;
        moved.pose.x = unit(rng) * kTableLength;
        moved.pose.y = unit(rng) * kTableWidth;
        if (horizontal_distance(moved.pose, pick.pose) < 0.1 || !free_spot(w, moved)) continue;
        dist.first = pick.id;
        dist.dx = moved.pose.x - pick.pose.x;
        dist.dy = moved.pose.y - pick.pose.y;
        found = true;
      }
      if (!found) continue;
    }

    EpisodeConfig cfg;
    cfg.disturbances = {dist};
    SimRobot robot;
    const EpisodeTrace tr = run_episode(task, scene, silent(), cfg, robot, 0);
    const ExitCode v = classify(task, scene, tr, robot.truth(), silent());
    ++episodes;
    drops += drop ? 1 : 0;
    if (is_success(v)) {
      ++successes;
    } else if (v == ExitCode::ExecutionError && !robot.truth().off_table.empty()) {
      ++explained;
    } else if (first_failure.empty()) {
      first_failure = fmt("; task %d failed with %s (%s)", task.id, std::string(to_string(v)).c_str(), tr.detail.c_str());
    }
  }
  const int failures = episodes - successes;
  return {successes >= 95 && explained == failures,
          fmt("%d/%d recovered (%d drop_held, %d displace_object); %d/%d failures out of workspace%s", successes, episodes,
              drops, episodes - drops, explained, failures, first_failure.c_str())};
}

// 7
Verdict failure_taxonomy(const Dataset& d) {
  BenchConfig cfg;
  cfg.noise = noisy(kNoiseSeeds[0]);
  const Report r = run_bench(d.scenes, d.tasks, cfg);
  int total = 0;
  for (int c : r.counts) total += c;
  int max_keyframes = 0;
  for (const auto& e : r.episodes) max_keyframes = std::max(max_keyframes, e.keyframes);
  const ExitCode required[] = {ExitCode::LoopDetected, ExitCode::ExecutionError, ExitCode::RecognitionError,
                               ExitCode::SceneInconsistent};
  bool all_present = true;
  std::string seen;
  for (ExitCode c : required) {
    all_present = all_present && count(r, c) >= 1;
    seen += fmt("%s %d, ", std::string(to_string(c)).c_str(), count(r, c));
  }
  const bool pass = r.overall.success < 100.0 && total == 300 && all_present && max_keyframes <= 120;
  return {pass, fmt("success %.1f%%; %scodes sum to %d; longest episode %d keyframes", r.overall.success, seen.c_str(),
                    total, max_keyframes)};
}

// 8
Verdict ablation_monotonicity(const Dataset& d) {
  const Ablation rows[] = {{true, true, true}, {true, true, false}, {true, false, false}, {false, false, false}};
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed : kNoiseSeeds) {
    double prev = 101.0;
    detail += fmt("seed %llu:", static_cast<unsigned long long>(seed));
    for (const Ablation& a : rows) {
      BenchConfig cfg;
      cfg.noise = noisy(seed);
      cfg.ablation = a;
      const double s = run_bench(d.scenes, d.tasks, cfg).overall.success;
      pass = pass && s <= prev;
      prev = s;
      detail += fmt(" %.1f", s);
    }
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// 9
Verdict determinism(const Dataset& d) {
  BenchConfig cfg;
  cfg.noise = noisy(kNoiseSeeds[1]);
  cfg.runs = 2;
  const std::vector<Task> tasks(d.tasks.begin(), d.tasks.begin() + 100);
  auto dump = [&] {
    Json j = report_json(run_bench(d.scenes, tasks, cfg));
    j.erase("timing");
    return j.dump(2);
  };
  const std::string a = dump();
  const std::string b = dump();
  return {a == b, fmt("%zu-byte reports over %zu episodes %s", a.size(), tasks.size() * 2,
                      a == b ? "identical" : "differ")};
}

/// Sends raw lines on one connection and checks that each gets a reply line.
bool fuzz_server(int port, int lines, std::string& why) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    why = "connect failed";
    ::close(fd);
    return false;
  }
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> len(0, 200), byte(0, 255);
  std::string pending;
  int replies = 0;
  char chunk[65536];
  for (int i = 0; i < lines; ++i) {
    std::string line;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      char c = static_cast<char>(byte(rng));
      line += c == '\n' ? ' ' : c;
    }
    line += '\n';
    if (::send(fd, line.data(), line.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(line.size())) {
      why = fmt("send failed at line %d", i);
      ::close(fd);
      return false;
    }
    while (replies <= i) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 5000) <= 0) {
        why = fmt("no reply to line %d", i);
        ::close(fd);
        return false;
      }
      const ssize_t got = ::recv(fd, chunk, sizeof chunk, 0);
      if (got <= 0) {
        why = fmt("connection closed at line %d", i);
        ::close(fd);
        return false;
      }
      pending.append(chunk, static_cast<std::size_t>(got));
      for (std::size_t nl; (nl = pending.find('\n')) != std::string::npos; pending.erase(0, nl + 1)) {
        const Json r = Json::parse(pending.substr(0, nl), nullptr, false);
        if (r.is_discarded() || !r.is_object() || !r.contains("status")) {
          why = "malformed reply";
          ::close(fd);
          return false;
        }
        ++replies;
      }
    }
  }
  ::close(fd);
  return true;
}

// 10
Verdict bridge_equivalence(const Dataset& d) {
  BridgeServer server(BridgeServer::Options{"127.0.0.1", 0, std::nullopt});
  server.start();
  std::thread serving([&] { server.serve(); });

  BenchConfig cfg;
  cfg.noise = noisy(kNoiseSeeds[2]);
  const std::vector<Task> tasks(d.tasks.begin(), d.tasks.begin() + 30);
  const int port = server.port();
  const Report local = run_bench(d.scenes, tasks, cfg);
  const Report remote =
      run_bench(d.scenes, tasks, cfg, [port] { return std::make_unique<RemoteRobot>("127.0.0.1", port); });

  std::string why;
  const bool fuzz_ok = fuzz_server(port, 10000, why);
  bool alive = false;
  try {
    RemoteRobot probe("127.0.0.1", port);
    probe.reset(d.scenes.front(), {}, 0);
    alive = !probe.observe().scene.detections.empty();
  } catch (const std::exception& e) {
    why += std::string(" after fuzz: ") + e.what();
  }
  server.stop();
  serving.join();

  std::multiset<ExitCode> a, b;
  for (const auto& e : local.episodes) a.insert(e.exit_code);
  for (const auto& e : remote.episodes) b.insert(e.exit_code);
  const bool same = a == b && local.episodes.size() == 30;
  return {same && fuzz_ok && alive,
          fmt("exit codes %s over %zu tasks (local %.1f%%, bridge %.1f%%); fuzz of 10000 lines %s%s",
              same ? "identical" : "differ", tasks.size(), local.overall.success, remote.overall.success,
              fuzz_ok && alive ? "survived" : "failed: ", why.c_str())};
}

}  // namespace

int main() {
  const Dataset d = generate_dataset(30, kDatasetSeed);
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "zero-noise completeness", [&] { return zero_noise_completeness(d); }},
      {2, "parser exactness", [] { return parser_exactness(); }},
      {3, "executor oracle equivalence", [] { return executor_oracle(); }},
      {4, "plan-length anchors", [&] { return plan_length_anchors(d); }},
      {5, "measurement model", [] { return measurement_model(); }},
      {6, "recovery from disturbances", [&] { return recovery(d); }},
      {7, "failure taxonomy under noise", [&] { return failure_taxonomy(d); }},
      {8, "ablation monotonicity", [&] { return ablation_monotonicity(d); }},
      {9, "determinism", [&] { return determinism(d); }},
      {10, "bridge equivalence", [&] { return bridge_equivalence(d); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
