#include "tabletop/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace tabletop {

namespace {

constexpr double kEdgeMargin = 0.07;
constexpr double kHomeClearance = 0.05;
constexpr double kSmallScale = 0.75;
constexpr int kPlacementAttempts = 2000;
constexpr int kMinFreeCellsPerRegion = 3;

struct Shape3 {
  double dx, dy, dz;
  Shape shape;
};

Shape3 nominal(Category c) {
  switch (c) {
    case Category::Mug: return {0.09, 0.08, 0.10, Shape::Cylindrical};
    case Category::Can: return {0.07, 0.07, 0.10, Shape::Cylindrical};
    case Category::Plate: return {0.12, 0.12, 0.02, Shape::Flat};
    case Category::Bowl: return {0.12, 0.12, 0.06, Shape::Irregular};
    case Category::Box: return {0.10, 0.07, 0.08, Shape::Boxy};
  }
  return {0.08, 0.08, 0.08, Shape::Boxy};
}

template <typename T, std::size_t N>
T pick(const std::array<T, N>& values, std::mt19937_64& rng) {
  return values[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

/// n masses in [kMinMass, kMaxMass] whose sorted log-gaps are all at least
/// log(kMassRatio), uniformly over the admissible configurations.
std::vector<double> separated_masses(int n, std::mt19937_64& rng) {
  const double gap = std::log(kMassRatio);
  const double slack = std::log(kMaxMass / kMinMass) - (n - 1) * gap;
  if (slack < 0) throw GenerationError("mass range too narrow for the required separation");
  std::uniform_real_distribution<double> u(0.0, slack);
  std::vector<double> offsets(static_cast<std::size_t>(n));
  for (auto& o : offsets) o = u(rng);
  std::sort(offsets.begin(), offsets.end());
  std::vector<double> masses;
  for (int i = 0; i < n; ++i) masses.push_back(kMinMass * std::exp(offsets[static_cast<std::size_t>(i)] + i * gap));
  std::shuffle(masses.begin(), masses.end(), rng);
  return masses;
}

bool clear_of(const ObjectNode& a, const ObjectNode& b) {
  return std::abs(a.pose.x - b.pose.x) >= kPlacementClearance || std::abs(a.pose.y - b.pose.y) >= kPlacementClearance;
}

int free_cells(const std::vector<ObjectNode>& objects, Region r) {
  int n = 0;
  for (const Pose& c : table_cells()) {
    if (region_of(c.x) != r) continue;
    bool free = std::all_of(objects.begin(), objects.end(), [&](const ObjectNode& o) {
      return std::abs(o.pose.x - c.x) >= kPlacementClearance || std::abs(o.pose.y - c.y) >= kPlacementClearance;
    });
    n += free ? 1 : 0;
  }
  return n;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SceneGraph scene_truth(const SceneSpec& spec) { return truth_graph(init_world(spec)); }

}  // namespace

SceneSpec random_scene(int id, int n, std::mt19937_64& rng) {
  SceneSpec spec;
  spec.id = id;
  const auto masses = separated_masses(n, rng);
  std::uniform_real_distribution<double> log_stiffness(std::log(0.5), std::log(20.0));
  std::uniform_real_distribution<double> ux(kEdgeMargin, kTableLength - kEdgeMargin);
  std::uniform_real_distribution<double> uy(kEdgeMargin, kTableWidth - kEdgeMargin);
  std::uniform_real_distribution<double> uyaw(-std::numbers::pi, std::numbers::pi);
  const Pose home = EndEffector{}.pose;

  for (int i = 0; i < n; ++i) {
    ObjectNode o;
    o.id = i;
    o.visual.name = pick(kCategories, rng);
    o.visual.color = pick(kColors, rng);
    o.visual.material = pick(kMaterials, rng);
    o.visual.size = pick(kSizes, rng);
    const Shape3 s = nominal(o.visual.name);
    o.visual.shape = s.shape;
    const double scale = o.visual.size == Size::Small ? kSmallScale : 1.0;
    o.bbox = BBox{s.dx * scale, s.dy * scale, s.dz * scale};
    o.mass.true_value = masses[static_cast<std::size_t>(i)];
    o.stiffness.true_value = std::exp(log_stiffness(rng));
    o.pose.yaw = uyaw(rng);

    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      o.pose.x = ux(rng);
      o.pose.y = uy(rng);
      if (horizontal_distance(o.pose, home) < kHomeClearance) continue;
      placed = std::all_of(spec.objects.begin(), spec.objects.end(), [&](const ObjectNode& p) { return clear_of(o, p); });
    }
    if (!placed) throw GenerationError("could not place object " + std::to_string(i));
    spec.objects.push_back(o);
  }
  for (Region r : {Region::Left, Region::Right})
    if (free_cells(spec.objects, r) < kMinFreeCellsPerRegion) throw GenerationError("table too crowded");
  return spec;
}

std::vector<SceneSpec> generate_scenes(int count, std::uint64_t seed) {
  std::vector<SceneSpec> scenes;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const int template_id = i % kTemplateCount + 1;
    std::optional<SceneSpec> found;
    for (int attempt = 0; attempt < kGenerationAttempts && !found; ++attempt) {
      const int n = std::uniform_int_distribution<int>(kMinObjects, kMaxObjects)(rng);
      SceneSpec spec;
      try {
        spec = random_scene(i, n, rng);
      } catch (const GenerationError&) {
        continue;
      }
      std::mt19937_64 probe(rng());
      if (generate_instruction(scene_truth(spec), template_id, probe)) found = spec;
    }
    if (!found)
      throw GenerationError("no feasible scene for template " + std::to_string(template_id) + " after " +
                            std::to_string(kGenerationAttempts) + " attempts");
    scenes.push_back(*found);
  }
  return scenes;
}

std::vector<Task> generate_tasks(const std::vector<SceneSpec>& scenes, int per_template, std::uint64_t seed) {
  const auto total = static_cast<std::size_t>(per_template) * kTemplateCount;
  if (scenes.size() < total)
    throw GenerationError("need " + std::to_string(total) + " scenes, have " + std::to_string(scenes.size()));
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < total; ++i) {
    const SceneSpec& spec = scenes[i];
    const int template_id = static_cast<int>(i % kTemplateCount) + 1;
    const std::uint64_t task_seed = mix_seed(seed ^ 0x7461736bull, i);
    std::mt19937_64 rng(task_seed);
    auto generated = generate_instruction(scene_truth(spec), template_id, rng);
    if (!generated)
      throw GenerationError("template " + std::to_string(template_id) + " is infeasible on scene " +
                            std::to_string(spec.id));
    Task t;
    t.id = static_cast<int>(i);
    t.scene_id = spec.id;
    t.template_id = template_id;
    t.instruction = generated->instruction.text;
    t.program = std::move(generated->program);
    t.goal = std::move(generated->goal);
    t.seed = task_seed;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

Dataset generate_dataset(int per_template, std::uint64_t seed) {
  Dataset d;
  d.scenes = generate_scenes(per_template * kTemplateCount, seed);
  d.tasks = generate_tasks(d.scenes, per_template, seed);
  return d;
}

NoiseProfile ablated(NoiseProfile noise, const Ablation& a) {
  if (a.gt_pose) {
    noise.pose_sigma = 0.0;
    noise.id_fault_prob = 0.0;
    noise.pose_bias_x = noise.pose_bias_y = noise.pose_bias_z = 0.0;
  }
  if (a.gt_attributes) noise.attr_flip_prob = 0.0;
  return noise;
}

std::uint64_t episode_seed(std::uint64_t base, int task_id, int run) {
  return mix_seed(mix_seed(base, static_cast<std::uint64_t>(task_id)), static_cast<std::uint64_t>(run));
}

namespace {

bool answer_matches(const Answer& got, const Answer& want, double rel_tol) {
  if (got.is_list != want.is_list || got.ids != want.ids || got.values.size() != want.values.size()) return false;
  for (std::size_t i = 0; i < got.values.size(); ++i)
    if (std::abs(got.values[i] - want.values[i]) > rel_tol * want.values[i] + 1e-9) return false;
  return true;
}

bool goal_holds(const SymbolicProgram& program, const WorldState& world) {
  SceneGraph g = truth_graph(world);
  for (auto& o : g.objects) {
    o.mass.measured_value = o.mass.true_value;
    o.stiffness.measured_value = o.stiffness.true_value;
  }
  return std::holds_alternative<GoalSatisfied>(execute(program, g));
}

}  // namespace

ExitCode classify(const Task& task, const SceneSpec& scene, const EpisodeTrace& trace, const WorldState& final_world,
                  const NoiseProfile& noise) {
  bool failed = !is_success(trace.exit_code);
  if (trace.exit_code == ExitCode::CorrectAnswer)
    failed = !task.goal.answer || !trace.answer || !answer_matches(*trace.answer, *task.goal.answer, noise.weigh_rel_err);
  if (trace.exit_code == ExitCode::TaskSuccess) failed = !goal_holds(task.program, final_world);
  if (!failed) return trace.exit_code;

  const auto truth = resolve_referents(task.program, scene_truth(scene));
  for (const auto& k : trace.keyframes)
    if (!k.referents.empty() && k.referents != truth) return ExitCode::RecognitionError;
  return is_success(trace.exit_code) ? ExitCode::TaskFailure : trace.exit_code;
}

void aggregate(Report& r) {
  r.rows.clear();
  for (int t = 1; t <= kTemplateCount; ++t) r.rows.push_back(TemplateRow{t, std::string(template_label(t)), 0, 0, 0.0});
  r.overall = TemplateRow{0, "Overall", 0, 0, 0.0};
  r.counts.fill(0);
  r.percentages.fill(0.0);
  for (const auto& e : r.episodes) {
    auto& row = r.rows.at(static_cast<std::size_t>(e.template_id - 1));
    const int ok = is_success(e.exit_code) ? 1 : 0;
    row.episodes += 1;
    row.successes += ok;
    r.overall.episodes += 1;
    r.overall.successes += ok;
    r.counts[static_cast<std::size_t>(e.exit_code)] += 1;
  }
  auto pct = [](int num, int den) { return den == 0 ? 0.0 : 100.0 * num / den; };
  for (auto& row : r.rows) row.success = pct(row.successes, row.episodes);
  r.overall.success = pct(r.overall.successes, r.overall.episodes);
  for (std::size_t i = 0; i < r.counts.size(); ++i) r.percentages[i] = pct(r.counts[i], r.overall.episodes);
}

Report run_bench(const std::vector<SceneSpec>& scenes, const std::vector<Task>& tasks, const BenchConfig& config,
                 const RobotFactory& factory) {
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.config = config;
  const NoiseProfile noise = ablated(config.noise, config.ablation);
  EpisodeConfig ec;
  ec.budget = config.budget;
  ec.gt_reasoning = config.ablation.gt_reasoning;

  std::unique_ptr<Robot> robot = factory ? factory() : std::make_unique<SimRobot>();
  for (const Task& task : tasks) {
    auto scene = std::find_if(scenes.begin(), scenes.end(), [&](const SceneSpec& s) { return s.id == task.scene_id; });
    for (int run = 0; run < config.runs; ++run) {
      EpisodeRow row;
      row.task_id = task.id;
      row.template_id = task.template_id;
      row.run = run;
      row.seed = episode_seed(noise.seed, task.id, run);
      if (scene == scenes.end()) {
        row.exit_code = row.engine_code = ExitCode::ProgramError;
        row.detail = "task refers to unknown scene " + std::to_string(task.scene_id);
        report.episodes.push_back(row);
        continue;
      }
      try {
        const EpisodeTrace trace = run_episode(task, *scene, noise, ec, *robot, row.seed);
        row.engine_code = trace.exit_code;
        row.exit_code = classify(task, *scene, trace, robot->truth(), noise);
        row.keyframes = trace.keyframe_count;
        row.actions = trace.action_count;
        row.answer = trace.answer;
        row.detail = trace.detail;
      } catch (const std::exception& e) {
        row.exit_code = row.engine_code = ExitCode::PhysicsError;
        row.detail = std::string("episode aborted: ") + e.what();
      }
      report.episodes.push_back(row);
    }
  }
  aggregate(report);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string render_table(const Report& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << std::left << std::setw(16) << "Task" << std::right << std::setw(10) << "Episodes" << std::setw(10)
      << "Success" << '\n';
  auto line = [&](const TemplateRow& row) {
    out << std::left << std::setw(16) << row.label << std::right << std::setw(10) << row.episodes << std::setw(10)
        << row.success << '\n';
  };
  for (const auto& row : r.rows) line(row);
  line(r.overall);
  out << '\n' << std::left << std::setw(20) << "Exit code" << std::right << std::setw(8) << "Count" << std::setw(10)
      << "Percent" << '\n';
  for (std::size_t i = 0; i < kExitCodes.size(); ++i)
    out << std::left << std::setw(20) << to_string(kExitCodes[i]) << std::right << std::setw(8) << r.counts[i]
        << std::setw(10) << r.percentages[i] << '\n';
  return out.str();
}

}  // namespace tabletop
