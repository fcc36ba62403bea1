#include "tabletop/episode.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace tabletop {

namespace {

constexpr std::array<std::string_view, kExitCodes.size()> kExitNames{
    "Correct answer", "Task success",    "Task failure",   "Execution err",      "Loop detected", "Physics err",
    "Program err",    "Recognition err", "Output error",   "Scene inconsistent", "Timeout",
};

std::uint64_t fnv(std::uint64_t h, std::int64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::string_view to_string(ExitCode code) { return kExitNames[static_cast<std::size_t>(code)]; }

std::optional<ExitCode> exit_code_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kExitNames.size(); ++i)
    if (kExitNames[i] == text) return kExitCodes[i];
  return std::nullopt;
}

bool is_success(ExitCode code) { return code == ExitCode::CorrectAnswer || code == ExitCode::TaskSuccess; }

std::uint64_t LoopDetector::progress_key(const SceneGraph& graph) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& o : graph.objects) {
    h = fnv(h, o.id);
    h = fnv(h, (o.mass.measured() ? 1 : 0) | (o.stiffness.measured() ? 2 : 0));
    h = fnv(h, o.supported_by);
  }
  return h;
}

bool LoopDetector::observe(const SceneGraph& graph, const std::string& stage, std::uint64_t signature,
                           const PrimitiveAction& action) {
  std::uint64_t key = progress_key(graph);
  for (char c : stage) key = fnv(key, c);
  if (visited_.insert(key).second) seen_.clear();
  seen_.emplace_back(signature, describe(action));
  const auto& last = seen_.back();
  return std::count(seen_.begin(), seen_.end(), last) >= threshold_;
}

bool detect_loop(const EpisodeTrace& trace, int threshold) {
  LoopDetector d(threshold);
  bool fired = false;
  for (const auto& k : trace.keyframes)
    if (k.action) fired = d.observe(k.graph, k.outcome, k.signature, *k.action);
  return fired;
}

bool well_typed(const SymbolicProgram& program, const Answer& a) {
  if (program.functions.empty()) return false;
  const Op last = program.functions.back().op;
  if (last != Op::QueryWeight && last != Op::QueryWeightAll) return false;
  if (a.ids.empty() || a.ids.size() != a.values.size()) return false;
  if ((last == Op::QueryWeightAll) != a.is_list) return false;
  if (last == Op::QueryWeight && a.ids.size() != 1) return false;
  return std::all_of(a.values.begin(), a.values.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
}

namespace {

/// True graph for reasoning: real attributes, poses and support, but physical
/// properties only as far as the robot has measured them.
SceneGraph reasoning_graph(const WorldState& world, const SceneGraph& belief, const HeuristicParams& params) {
  SceneGraph g = truth_graph(world, params);
  g.frame_index = belief.frame_index;
  for (auto& o : g.objects) {
    o.mass.true_value = 0.0;
    o.stiffness.true_value = 0.0;
    const ObjectNode* b = belief.find(o.id);
    o.mass.measured_value = b ? b->mass.measured_value : std::nullopt;
    o.stiffness.measured_value = b ? b->stiffness.measured_value : std::nullopt;
  }
  return g;
}

/// Motion targets always come from perception: re-aim an action planned on
/// another graph at the believed pose of its target.
PrimitiveAction aim_at_belief(PrimitiveAction a, const SceneGraph& belief) {
  if (a.waypoint || a.target == kNoObject) return a;
  if (a.op != ActionOp::Move && a.op != ActionOp::Approach) return a;
  if (const ObjectNode* n = belief.find(a.target)) {
    a.at.x = n->pose.x;
    a.at.y = n->pose.y;
    if (a.op == ActionOp::Approach) a.at.z = n->grasp_height();
  }
  return a;
}

class Episode {
 public:
  Episode(const Task& task, const EpisodeConfig& config, Robot& robot, std::uint64_t seed)
      : task_(task), cfg_(config), robot_(robot), loops_(config.loop_threshold) {
    trace_.task_id = task.id;
    trace_.seed = seed;
  }

  EpisodeTrace run(const SceneSpec& scene, const NoiseProfile& noise) {
    try {
      program_ = parse_instruction(task_.instruction);
    } catch (const ParseError& e) {
      return finish(ExitCode::ProgramError, e.what());
    }
    if (auto err = validate(program_)) return finish(ExitCode::ProgramError, *err);
    ctx_ = context_for(program_, cfg_.params);
    try {
      robot_.reset(scene, noise, trace_.seed);
      for (int k = 0; k < cfg_.budget; ++k) {
        if (keyframe(k)) return trace_;
      }
    } catch (const RobotFailure& e) {
      return finish(ExitCode::ExecutionError, std::string("robot failure: ") + e.what());
    }
    return finish(ExitCode::Timeout, "keyframe budget of " + std::to_string(cfg_.budget) + " exhausted");
  }

 private:
  EpisodeTrace& finish(ExitCode code, std::string detail) {
    trace_.exit_code = code;
    trace_.detail = std::move(detail);
    trace_.keyframe_count = static_cast<int>(trace_.keyframes.size());
    return trace_;
  }

  /// One pass of the action loop. Returns the exit code once the episode ends.
  std::optional<ExitCode> keyframe(int k) {
    KeyframeRecord& rec = trace_.keyframes.emplace_back();
    rec.frame_index = k;

    for (const auto& d : cfg_.disturbances) {
      if (d.at_keyframe != k) continue;
      rec.disturbances.push_back(d);
      try {
        robot_.disturb(d);
      } catch (const DisturbanceRejected& e) {
        rec.rejected.push_back(e.what());
      }
    }

    const Observation obs = robot_.observe();
    rec.observed = obs.scene;
    if (k == 0) {
      belief_ = graph_from_observation(obs.scene, obs.ee);
    } else {
      SceneGraph prev = belief_;
      prev.ee.pose = obs.ee.pose;
      prev.ee.gripper_open = obs.ee.gripper_open;
      MatchResult m = match_ids(prev, obs.scene, cfg_.params);
      if (auto* bad = std::get_if<SceneInconsistent>(&m)) return end(ExitCode::SceneInconsistent, bad->reason);
      belief_ = std::get<SceneGraph>(std::move(m));
    }
    belief_.frame_index = k;
    belief_ = update_relations(infer_support(std::move(belief_)), cfg_.params);
    rec.graph = belief_;
    rec.signature = scene_signature(belief_);
    rec.referents = resolve_referents(program_, belief_);

    const SceneGraph reasoning = cfg_.gt_reasoning ? reasoning_graph(robot_.truth(), belief_, cfg_.params) : belief_;
    const ExecutionOutcome outcome = execute(program_, reasoning);
    rec.outcome = describe(outcome);

    if (const auto* a = std::get_if<Answer>(&outcome)) {
      trace_.answer = *a;
      if (!well_typed(program_, *a)) return end(ExitCode::OutputError, "ill-typed answer");
      return end(ExitCode::CorrectAnswer, "");
    }
    if (std::holds_alternative<GoalSatisfied>(outcome)) return end(ExitCode::TaskSuccess, "");
    if (const auto* e = std::get_if<ProgramError>(&outcome)) return end(ExitCode::ProgramError, e->reason);

    const Subgoal subgoal = std::get<NeedSubgoal>(outcome).subgoal;
    rec.subgoal = subgoal;
    PrimitiveAction action;
    try {
      Plan p = plan(subgoal, reasoning, ctx_);
      if (p.actions.empty()) throw PlanError(describe(subgoal) + " is already achieved");
      rec.plan = p.actions;
      action = cfg_.gt_reasoning ? aim_at_belief(p.actions.front(), belief_) : p.actions.front();
    } catch (const PlanError& e) {
      return end(ExitCode::ExecutionError, std::string("planning failed: ") + e.what());
    }
    rec.action = action;

    if (loops_.observe(belief_, rec.outcome, rec.signature, action))
      return end(ExitCode::LoopDetected, "repeated " + describe(action) + " without progress");

    const StepResult step = robot_.execute(action);
    ++trace_.action_count;
    rec.physical = step.observation;
    rec.status = step.status;
    rec.message = step.message;

    if (step.status != StepStatus::Ok) {
      if (++consecutive_errors_ > cfg_.retries) {
        const ExitCode code =
            step.status == StepStatus::PhysicsError ? ExitCode::PhysicsError : ExitCode::ExecutionError;
        return end(code, step.message);
      }
      return std::nullopt;
    }
    consecutive_errors_ = 0;
    record_measurement(action, step.observation);
    return std::nullopt;
  }

  void record_measurement(const PrimitiveAction& action, const PhysicalObservation& p) {
    if (p.kind == ObservationKind::None || !p.value) return;
    ObjectId id = belief_.ee.held != kNoObject ? belief_.ee.held : action.target;
    ObjectNode* n = belief_.find(id);
    if (!n) return;
    if (p.kind == ObservationKind::MassGrams) n->mass.measured_value = p.value;
    if (p.kind == ObservationKind::Stiffness) n->stiffness.measured_value = p.value;
  }

  std::optional<ExitCode> end(ExitCode code, std::string detail) {
    finish(code, std::move(detail));
    return code;
  }

  const Task& task_;
  const EpisodeConfig& cfg_;
  Robot& robot_;
  LoopDetector loops_;
  SymbolicProgram program_;
  PlanContext ctx_;
  SceneGraph belief_;
  EpisodeTrace trace_;
  int consecutive_errors_ = 0;
};

}  // namespace

EpisodeTrace run_episode(const Task& task, const SceneSpec& scene, const NoiseProfile& noise,
                         const EpisodeConfig& config, Robot& robot, std::uint64_t seed) {
  Episode e(task, config, robot, seed);
  return e.run(scene, noise);
}

}  // namespace tabletop
