#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/episode.hpp"

namespace tabletop {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMinObjects = 4;
inline constexpr int kMaxObjects = 5;
inline constexpr double kMinMass = 50.0;    // g
inline constexpr double kMaxMass = 500.0;   // g
inline constexpr double kMassRatio = 1.25;  // minimum pairwise ratio
inline constexpr int kGenerationAttempts = 100;

/// Random scene of `n` objects: disjoint footprints, masses pairwise separated
/// by kMassRatio, every object clear of the home position.
SceneSpec random_scene(int id, int n, std::mt19937_64& rng);

/// Scene i is drawn until template (i mod 10) + 1 is feasible on it.
std::vector<SceneSpec> generate_scenes(int count, std::uint64_t seed);

/// One task per scene: scene i gets template (i mod 10) + 1. Uses the first
/// 10 * per_template scenes.
std::vector<Task> generate_tasks(const std::vector<SceneSpec>& scenes, int per_template, std::uint64_t seed);

struct Dataset {
  std::vector<SceneSpec> scenes;
  std::vector<Task> tasks;
};

Dataset generate_dataset(int per_template, std::uint64_t seed);

struct Ablation {
  bool gt_pose = false;
  bool gt_attributes = false;
  bool gt_reasoning = false;

  bool operator==(const Ablation&) const = default;
};

/// Noise profile with the substituted stages made exact.
NoiseProfile ablated(NoiseProfile noise, const Ablation& a);

struct BenchConfig {
  NoiseProfile noise;
  Ablation ablation;
  int runs = 1;
  int budget = 120;

  bool operator==(const BenchConfig&) const = default;
};

/// Seed of one episode, derived from the noise seed, task id and run index.
std::uint64_t episode_seed(std::uint64_t base, int task_id, int run);

/// Harness verdict on a finished episode: checks answers and goals against
/// ground truth on the final world and separates recognition errors from
/// the remaining failure mechanisms.
ExitCode classify(const Task& task, const SceneSpec& scene, const EpisodeTrace& trace, const WorldState& final_world,
                  const NoiseProfile& noise);

struct EpisodeRow {
  int task_id = 0;
  int template_id = 1;
  int run = 0;
  std::uint64_t seed = 0;
  ExitCode exit_code = ExitCode::Timeout;
  ExitCode engine_code = ExitCode::Timeout;
  int keyframes = 0;
  int actions = 0;
  std::optional<Answer> answer;
  std::string detail;

  bool operator==(const EpisodeRow&) const = default;
};

struct TemplateRow {
  int template_id = 1;
  std::string label;
  int episodes = 0;
  int successes = 0;
  double success = 0.0;  // percent

  bool operator==(const TemplateRow&) const = default;
};

struct Report {
  BenchConfig config;
  std::vector<TemplateRow> rows;
  TemplateRow overall;
  std::array<int, kExitCodes.size()> counts{};
  std::array<double, kExitCodes.size()> percentages{};
  std::vector<EpisodeRow> episodes;
  double wall_seconds = 0.0;  // timing; not part of determinism checks

  bool operator==(const Report&) const = default;
};

using RobotFactory = std::function<std::unique_ptr<Robot>()>;

/// Runs every task `config.runs` times and aggregates a report. A factory
/// lets the same benchmark run against a remote robot.
Report run_bench(const std::vector<SceneSpec>& scenes, const std::vector<Task>& tasks, const BenchConfig& config,
                 const RobotFactory& factory = {});

/// Recomputes rows, overall and the exit-code distribution from `episodes`.
void aggregate(Report& report);

/// Fixed-width success table, one row per template plus Overall, then the exit-code distribution.
std::string render_table(const Report& report);

}  // namespace tabletop
