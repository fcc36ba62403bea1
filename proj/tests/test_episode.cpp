#include <doctest.h>

#include "fixtures.hpp"

using namespace tabletop;

namespace {

Task make_task(const SceneSpec& scene, const std::string& text) {
  Task t;
  t.scene_id = scene.id;
  t.template_id = parse_slots(text).template_id;
  t.instruction = text;
  t.program = parse_instruction(text);
  if (auto gt = ground_truth_goal(t.program, t.template_id, truth_graph(init_world(scene)))) t.goal = *gt;
  return t;
}

struct Outcome {
  EpisodeTrace trace;
  ExitCode verdict;
};

Outcome run(const SceneSpec& scene, const std::string& text, const NoiseProfile& noise = {},
            const EpisodeConfig& config = {}, std::uint64_t seed = 1) {
  const Task task = make_task(scene, text);
  SimRobot robot;
  EpisodeTrace trace = run_episode(task, scene, noise, config, robot, seed);
  const ExitCode verdict = classify(task, scene, trace, robot.truth(), noise);
  return {std::move(trace), verdict};
}

/// Robot whose link drops after a fixed number of actions.
class FlakyRobot : public SimRobot {
 public:
  explicit FlakyRobot(int healthy) : healthy_(healthy) {}
  StepResult execute(const PrimitiveAction& a) override {
    if (healthy_-- <= 0) throw RobotFailure("link down");
    return SimRobot::execute(a);
  }

 private:
  int healthy_;
};

KeyframeRecord frame(std::uint64_t signature, ActionOp op, ObjectId target = 0) {
  KeyframeRecord k;
  k.signature = signature;
  k.action = PrimitiveAction{op, target, false, {}};
  return k;
}

}  // namespace

TEST_CASE("exit codes print as report strings and parse back") {
  CHECK(to_string(ExitCode::CorrectAnswer) == "Correct answer");
  CHECK(to_string(ExitCode::ExecutionError) == "Execution err");
  CHECK(to_string(ExitCode::SceneInconsistent) == "Scene inconsistent");
  for (ExitCode c : kExitCodes) CHECK(exit_code_from_string(to_string(c)) == c);
  CHECK_FALSE(exit_code_from_string("Success"));
  CHECK(is_success(ExitCode::CorrectAnswer));
  CHECK(is_success(ExitCode::TaskSuccess));
  CHECK_FALSE(is_success(ExitCode::TaskFailure));
}

TEST_CASE("a single weighing takes five actions and answers correctly") {
  const auto r = run(fixtures::four_objects(), "Measure the weight of the small mug.");
  CHECK(r.trace.exit_code == ExitCode::CorrectAnswer);
  CHECK(r.verdict == ExitCode::CorrectAnswer);
  CHECK(r.trace.action_count == 5);
  CHECK(r.trace.keyframe_count == 6);
  REQUIRE(r.trace.answer.has_value());
  CHECK(r.trace.answer->ids == std::vector<ObjectId>{1});
  CHECK(r.trace.answer->values[0] == doctest::Approx(300.0).epsilon(0.1));
  CHECK_FALSE(r.trace.answer->is_list);
}

TEST_CASE("goal tasks end in task success on a clean run") {
  const SceneSpec scene = fixtures::four_objects();
  for (const char* text : {"Pick up the heaviest of all red mugs.", "Place the blue can on the left part of the table.",
                           "Stack the blue can on top of the green box.",
                           "Stack all red mugs from heaviest to lightest.",
                           "Stack the large mug on top of the blue can on top of the green box."}) {
    CAPTURE(text);
    const auto r = run(scene, text);
    CHECK(r.trace.exit_code == ExitCode::TaskSuccess);
    CHECK(r.verdict == ExitCode::TaskSuccess);
  }
}

TEST_CASE("the episode recovers when the held object is dropped") {
  const SceneSpec scene = fixtures::four_objects();
  const auto clean = run(scene, "Stack the blue can on top of the green box.");
  REQUIRE(clean.verdict == ExitCode::TaskSuccess);

  EpisodeConfig cfg;
  cfg.disturbances = {Disturbance{4, DisturbanceKind::DropHeld}};
  const auto r = run(scene, "Stack the blue can on top of the green box.", {}, cfg);
  CHECK(r.verdict == ExitCode::TaskSuccess);
  CHECK(r.trace.action_count > clean.trace.action_count);
  REQUIRE(r.trace.keyframes.size() > 4);
  CHECK(r.trace.keyframes[4].disturbances.size() == 1);
  CHECK(r.trace.keyframes[4].rejected.empty());
}

TEST_CASE("the episode recovers when a target is displaced") {
  EpisodeConfig cfg;
  cfg.disturbances = {Disturbance{2, DisturbanceKind::DisplaceObject, 3, kNoObject, -0.3, -0.2}};
  const auto r = run(fixtures::four_objects(), "Stack the blue can on top of the green box.", {}, cfg);
  CHECK(r.verdict == ExitCode::TaskSuccess);
}

TEST_CASE("rejected disturbances are recorded and the episode continues") {
  EpisodeConfig cfg;
  cfg.disturbances = {Disturbance{1, DisturbanceKind::DisplaceObject, 2, kNoObject, 5.0, 0}};
  const auto r = run(fixtures::four_objects(), "Measure the weight of the small mug.", {}, cfg);
  CHECK(r.verdict == ExitCode::CorrectAnswer);
  CHECK(r.trace.keyframes[1].rejected.size() == 1);
}

TEST_CASE("a systematic calibration bias makes the grasp repeat until a loop is detected") {
  NoiseProfile noise;
  noise.pose_bias_x = 0.02;
  const auto r = run(fixtures::four_objects(), "Measure the weight of the small mug.", noise);
  CHECK(r.trace.exit_code == ExitCode::LoopDetected);
  CHECK(detect_loop(r.trace, 3));
  CHECK(r.trace.keyframe_count < 20);
}

TEST_CASE("the keyframe budget ends long episodes") {
  EpisodeConfig cfg;
  cfg.budget = 5;
  const auto r = run(fixtures::four_objects(), "Stack the blue can on top of the green box.", {}, cfg);
  CHECK(r.trace.exit_code == ExitCode::Timeout);
  CHECK(r.verdict == ExitCode::Timeout);
  CHECK(r.trace.keyframe_count == 5);
}

TEST_CASE("an ambiguous instruction is a program error") {
  const auto r = run(fixtures::four_objects(), "Measure the weight of the red mug.");
  CHECK(r.trace.exit_code == ExitCode::ProgramError);
  CHECK(r.trace.action_count == 0);
}

TEST_CASE("a lost robot link is an execution error") {
  const SceneSpec scene = fixtures::four_objects();
  const Task task = make_task(scene, "Measure the weight of the small mug.");
  FlakyRobot robot(2);
  const EpisodeTrace t = run_episode(task, scene, {}, {}, robot, 1);
  CHECK(t.exit_code == ExitCode::ExecutionError);
  CHECK(t.action_count == 2);
}

TEST_CASE("episodes are deterministic in the seed") {
  NoiseProfile noise;
  noise.pose_sigma = 0.01;
  noise.slip_prob = 0.2;
  const SceneSpec scene = fixtures::four_objects();
  const auto a = run(scene, "Stack all red mugs from heaviest to lightest.", noise, {}, 17);
  const auto b = run(scene, "Stack all red mugs from heaviest to lightest.", noise, {}, 17);
  CHECK(a.trace == b.trace);
}

TEST_CASE("trace records one entry per keyframe") {
  const auto r = run(fixtures::four_objects(), "Measure the weight of the small mug.");
  REQUIRE(r.trace.keyframes.size() == static_cast<std::size_t>(r.trace.keyframe_count));
  for (std::size_t i = 0; i < r.trace.keyframes.size(); ++i) {
    const auto& k = r.trace.keyframes[i];
    CHECK(k.frame_index == static_cast<int>(i));
    CHECK(k.referents == std::vector<std::vector<ObjectId>>{{1}});
  }
  CHECK(r.trace.keyframes.back().outcome.rfind("Answer", 0) == 0);
  CHECK_FALSE(r.trace.keyframes.back().action);
  CHECK(r.trace.keyframes[4].physical->kind == ObservationKind::MassGrams);
}

TEST_CASE("loop detection over traces") {
  EpisodeTrace t;
  SUBCASE("third repetition of a pair fires") {
    t.keyframes = {frame(1, ActionOp::Approach), frame(2, ActionOp::CloseGripper), frame(1, ActionOp::Approach),
                   frame(2, ActionOp::CloseGripper), frame(1, ActionOp::Approach)};
    CHECK(detect_loop(t, 3));
    CHECK_FALSE(detect_loop(t, 4));
  }
  SUBCASE("distinct actions at one signature do not fire") {
    t.keyframes = {frame(1, ActionOp::Approach), frame(1, ActionOp::CloseGripper), frame(1, ActionOp::Lift)};
    CHECK_FALSE(detect_loop(t, 3));
  }
  SUBCASE("progress in between resets the count") {
    t.keyframes = {frame(1, ActionOp::Approach), frame(1, ActionOp::Approach), frame(1, ActionOp::Approach)};
    t.keyframes[1].graph.objects.push_back(ObjectNode{});
    t.keyframes[1].graph.objects[0].mass.measured_value = 100.0;
    t.keyframes[2].graph = t.keyframes[1].graph;
    CHECK_FALSE(detect_loop(t, 3));
  }
  SUBCASE("a support relation flipping back and forth is not progress") {
    t.keyframes = {frame(1, ActionOp::CloseGripper), frame(2, ActionOp::OpenGripper), frame(1, ActionOp::CloseGripper),
                   frame(2, ActionOp::OpenGripper), frame(1, ActionOp::CloseGripper),
                   frame(2, ActionOp::OpenGripper), frame(1, ActionOp::CloseGripper)};
    for (auto& k : t.keyframes) k.graph.objects.push_back(ObjectNode{});
    for (std::size_t i = 1; i < t.keyframes.size(); i += 2) t.keyframes[i].graph.objects[0].supported_by = 3;
    CHECK(detect_loop(t, 3));
  }
  SUBCASE("keyframes without actions are ignored") {
    t.keyframes = {frame(1, ActionOp::Lift), frame(1, ActionOp::Lift), frame(1, ActionOp::Lift)};
    t.keyframes.push_back(KeyframeRecord{});
    CHECK(detect_loop(t, 3));
  }
}

TEST_CASE("loop detector resets on a changed executor stage") {
  LoopDetector d(3);
  SceneGraph g;
  const PrimitiveAction a{ActionOp::Approach, 0, false, {}};
  CHECK_FALSE(d.observe(g, "NeedSubgoal(StackOn(o2, o3))", 7, a));
  CHECK_FALSE(d.observe(g, "NeedSubgoal(StackOn(o2, o3))", 7, a));
  CHECK_FALSE(d.observe(g, "NeedSubgoal(StackOn(o0, o2))", 7, a));
  CHECK_FALSE(d.observe(g, "NeedSubgoal(StackOn(o0, o2))", 7, a));
  CHECK(d.observe(g, "NeedSubgoal(StackOn(o0, o2))", 7, a));
}

TEST_CASE("answer shapes are checked against the query") {
  const auto single = parse_instruction("Measure the weight of the small mug.");
  const auto list = parse_instruction("What is the weight of all mugs?");
  CHECK(well_typed(single, Answer{{1}, {300.0}, false}));
  CHECK_FALSE(well_typed(single, Answer{{1}, {300.0}, true}));
  CHECK_FALSE(well_typed(single, Answer{{1, 2}, {300.0, 80.0}, false}));
  CHECK(well_typed(list, Answer{{0, 1}, {120.0, 300.0}, true}));
  CHECK_FALSE(well_typed(list, Answer{{0, 1}, {120.0}, true}));
  CHECK_FALSE(well_typed(list, Answer{{0, 1}, {120.0, -1.0}, true}));
  CHECK_FALSE(well_typed(list, Answer{{0}, {std::numeric_limits<double>::quiet_NaN()}, true}));
}
