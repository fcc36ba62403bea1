#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tabletop/language.hpp"
#include "tabletop/planner.hpp"
#include "tabletop/robot.hpp"

namespace tabletop {

enum class ExitCode {
  CorrectAnswer,
  TaskSuccess,
  TaskFailure,
  ExecutionError,
  LoopDetected,
  PhysicsError,
  ProgramError,
  RecognitionError,
  OutputError,
  SceneInconsistent,
  Timeout,
};

inline constexpr std::array<ExitCode, 11> kExitCodes{
    ExitCode::CorrectAnswer,  ExitCode::TaskSuccess,       ExitCode::TaskFailure, ExitCode::ExecutionError,
    ExitCode::LoopDetected,   ExitCode::PhysicsError,      ExitCode::ProgramError, ExitCode::RecognitionError,
    ExitCode::OutputError,    ExitCode::SceneInconsistent, ExitCode::Timeout,
};

/// Report strings ("Correct answer", "Loop detected", ...).
std::string_view to_string(ExitCode code);
std::optional<ExitCode> exit_code_from_string(std::string_view text);
bool is_success(ExitCode code);

/// A benchmark task: one instruction bound to one scene.
struct Task {
  int id = 0;
  int scene_id = 0;
  int template_id = 1;
  std::string instruction;
  SymbolicProgram program;  // ground-truth program
  GroundTruthGoal goal;
  std::uint64_t seed = 0;  // instruction sampler seed

  bool operator==(const Task&) const = default;
};

struct EpisodeConfig {
  int budget = 120;         // keyframes
  int loop_threshold = 3;   // occurrences of one (signature, action) pair
  int retries = 1;          // consecutive failed primitives tolerated
  std::vector<Disturbance> disturbances;
  /// Reason over the true scene graph (plus measured values) instead of the
  /// perceived one. Motion still targets perceived poses.
  bool gt_reasoning = false;
  HeuristicParams params;
};

struct KeyframeRecord {
  int frame_index = 0;
  std::vector<Disturbance> disturbances;  // applied before this frame's perception
  std::vector<std::string> rejected;      // disturbances the world refused
  ObservedScene observed;
  SceneGraph graph;
  std::string outcome;
  std::optional<Subgoal> subgoal;
  std::vector<PrimitiveAction> plan;
  std::optional<PrimitiveAction> action;
  std::optional<PhysicalObservation> physical;
  std::optional<StepStatus> status;
  std::string message;
  std::uint64_t signature = 0;
  std::vector<std::vector<ObjectId>> referents;

  bool operator==(const KeyframeRecord&) const = default;
};

struct EpisodeTrace {
  int task_id = 0;
  std::uint64_t seed = 0;
  std::vector<KeyframeRecord> keyframes;
  ExitCode exit_code = ExitCode::Timeout;
  std::string detail;
  std::optional<Answer> answer;
  int keyframe_count = 0;
  int action_count = 0;

  bool operator==(const EpisodeTrace&) const = default;
};

/// Tracks (signature, action) repetitions since the last progress event.
/// Progress means reaching a state not seen before in the episode, so a
/// relation that flips back and forth does not reset the count.
class LoopDetector {
 public:
  explicit LoopDetector(int threshold = 3) : threshold_(threshold) {}

  /// Records the pair for the current keyframe; true when it has now occurred
  /// `threshold` times without progress in between. `stage` is the executor
  /// outcome: a change means a goal predicate became satisfied.
  bool observe(const SceneGraph& graph, const std::string& stage, std::uint64_t signature,
               const PrimitiveAction& action);

 private:
  std::uint64_t progress_key(const SceneGraph& graph) const;

  int threshold_;
  std::unordered_set<std::uint64_t> visited_;
  std::vector<std::pair<std::uint64_t, std::string>> seen_;
};

/// True when the last keyframe's (signature, action) pair occurs `threshold`
/// times in the trace with no progress (a state not reached before)
/// since its first occurrence. Keyframes without an action are skipped.
bool detect_loop(const EpisodeTrace& trace, int threshold = 3);

/// Answer shape check: a single value for query_weight, a list for
/// query_weight_all, ids and values of equal length, finite positive values.
bool well_typed(const SymbolicProgram& program, const Answer& answer);

/// Runs one closed-loop episode. Never throws for task-level failures: every
/// path ends in an exit code.
EpisodeTrace run_episode(const Task& task, const SceneSpec& scene, const NoiseProfile& noise,
                         const EpisodeConfig& config, Robot& robot, std::uint64_t seed);

}  // namespace tabletop
