#include <doctest.h>

#include "fixtures.hpp"
#include "tabletop/planner.hpp"

using namespace tabletop;

namespace {

// Belief graph of a noise-free robot: true poses plus whatever was measured.
SceneGraph belief(const WorldState& w, const SceneGraph& prev) {
  SceneGraph g = infer_support(update_relations(truth_graph(w)));
  for (auto& o : g.objects) {
    o.mass.true_value = 0;
    o.stiffness.true_value = 0;
    if (const ObjectNode* p = prev.find(o.id)) {
      o.mass.measured_value = p->mass.measured_value;
      o.stiffness.measured_value = p->stiffness.measured_value;
    }
  }
  return g;
}

struct Run {
  std::vector<PrimitiveAction> actions;
  WorldState world;
  SceneGraph graph;
};

// Closed loop on a perfect simulator, replanning after every action.
Run run(const Subgoal& goal, WorldState w, int limit = 40) {
  NoiseProfile exact;
  exact.weigh_rel_err = 0;
  exact.stiffness_cov = 0;
  std::mt19937_64 rng(0);
  Run r{{}, w, belief(w, SceneGraph{})};
  while (!subgoal_achieved(goal, r.graph) && static_cast<int>(r.actions.size()) < limit) {
    const PrimitiveAction a = next_action(goal, r.graph);
    const StepResult res = step_primitive(r.world, a, exact, rng);
    REQUIRE(res.status == StepStatus::Ok);
    r.actions.push_back(a);
    SceneGraph next = belief(r.world, r.graph);
    if (res.observation.kind == ObservationKind::MassGrams && r.world.ee.held != kNoObject)
      next.find(r.world.ee.held)->mass.measured_value = res.observation.value;
    if (res.observation.kind == ObservationKind::Stiffness && r.world.ee.held != kNoObject)
      next.find(r.world.ee.held)->stiffness.measured_value = res.observation.value;
    r.graph = next;
  }
  return r;
}

// Gripper-only actions carry the current end-effector pose, so compare what
// each action does rather than its raw fields.
std::vector<std::string> steps(const std::vector<PrimitiveAction>& v) {
  std::vector<std::string> out;
  for (const auto& a : v) out.push_back(describe(a));
  return out;
}

std::vector<ActionOp> ops(const std::vector<PrimitiveAction>& v) {
  std::vector<ActionOp> out;
  for (const auto& a : v) out.push_back(a.op);
  return out;
}

}  // namespace

TEST_CASE("measuring a weight from home takes five actions") {
  const WorldState w = init_world(fixtures::four_objects());
  const Subgoal goal{SubgoalKind::MeasureWeight, 1, kNoObject, {}};
  const Plan p = plan(goal, belief(w, SceneGraph{}));
  CHECK(ops(p.actions) == std::vector<ActionOp>{ActionOp::Move, ActionOp::Approach, ActionOp::CloseGripper,
                                                ActionOp::Lift, ActionOp::Weigh});
  CHECK(p.actions[0].target == 1);
  CHECK(p.actions[1].at.z == doctest::Approx(0.05));

  const Run r = run(goal, w);
  CHECK(steps(r.actions) == steps(p.actions));
  CHECK(r.graph.find(1)->mass.measured_value == 300.0);
}

TEST_CASE("plans are memoryless: replanning after the head yields the tail") {
  const WorldState w0 = init_world(fixtures::four_objects());
  for (const Subgoal& goal :
       {Subgoal{SubgoalKind::StackOn, 2, 3, {}}, Subgoal{SubgoalKind::MeasureStiffness, 3, kNoObject, {}}}) {
    CAPTURE(describe(goal));
    const Run r = run(goal, w0);
    CHECK(subgoal_achieved(goal, r.graph));
    CHECK(steps(r.actions) == steps(plan(goal, belief(w0, SceneGraph{})).actions));
    CHECK(plan(goal, r.graph).actions.empty());
    CHECK_THROWS_AS(next_action(goal, r.graph), PlanError);
  }
}

TEST_CASE("placement cells are re-chosen from the current gripper position") {
  const WorldState w0 = init_world(fixtures::four_objects());
  const Subgoal goal{SubgoalKind::MoveToRegion, 0, kNoObject, Region::Right};
  const Run r = run(goal, w0);
  CHECK(subgoal_achieved(goal, r.graph));
  CHECK(r.actions.size() == plan(goal, belief(w0, SceneGraph{})).actions.size());
  CHECK_THROWS_AS(next_action(goal, r.graph), PlanError);
}

TEST_CASE("stacking puts the top object on the base") {
  const Run r = run(Subgoal{SubgoalKind::StackOn, 2, 3, {}}, init_world(fixtures::four_objects()));
  CHECK(r.world.ee.held == kNoObject);
  CHECK(r.world.find(2)->pose.z == doctest::Approx(0.10));
  CHECK(r.graph.find(2)->supported_by == 3);
  CHECK(r.actions.back().op == ActionOp::Lift);
}

TEST_CASE("moving to a region lands on a free cell inside it") {
  const Run r = run(Subgoal{SubgoalKind::MoveToRegion, 0, kNoObject, Region::Right},
                    init_world(fixtures::four_objects()));
  const ObjectNode& moved = *r.world.find(0);
  CHECK(region_of(moved.pose.x) == Region::Right);
  CHECK(moved.pose.z == 0.0);
  for (const auto& o : r.world.objects) {
    if (o.id == 0) continue;
    const bool clear = std::abs(o.pose.x - moved.pose.x) >= kPlacementClearance - 1e-9 ||
                       std::abs(o.pose.y - moved.pose.y) >= kPlacementClearance - 1e-9;
    CHECK(clear);
  }
}

TEST_CASE("removing from a region leaves the region") {
  const Run r = run(Subgoal{SubgoalKind::RemoveFromRegion, 2, kNoObject, Region::Right},
                    init_world(fixtures::four_objects()));
  CHECK(region_of(r.world.find(2)->pose.x) == Region::Left);
}

TEST_CASE("put down of a held object") {
  WorldState w = init_world(fixtures::four_objects());
  const Run held = run(Subgoal{SubgoalKind::PickUp, 2, kNoObject, {}}, w);
  CHECK(held.world.ee.held == 2);
  CHECK(ops(held.actions) ==
        std::vector<ActionOp>{ActionOp::Move, ActionOp::Approach, ActionOp::CloseGripper, ActionOp::Lift});

  const Subgoal down{SubgoalKind::PutDown, 2, kNoObject, {}};
  const Run placed = run(down, held.world);
  CHECK(placed.world.ee.held == kNoObject);
  CHECK(placed.world.find(2)->supported_by == kTable);
}

TEST_CASE("table cells form a 6 by 4 grid on the table") {
  const auto cells = table_cells();
  CHECK(cells.size() == 24);
  for (const auto& c : cells) CHECK(inside_table(c.x, c.y));
}

TEST_CASE("choose_cell honours the region and avoids named regions") {
  const SceneGraph g = belief(init_world(fixtures::four_objects()), SceneGraph{});
  CHECK(region_of(choose_cell(g, 2, Region::Left, {}).x) == Region::Left);
  CHECK(region_of(choose_cell(g, 0, Region::Right, {}).x) == Region::Right);
  PlanContext ctx;
  ctx.avoid_regions = {Region::Right};
  CHECK(region_of(choose_cell(g, 2, std::nullopt, ctx).x) == Region::Left);
}

TEST_CASE("a crowded region has no free cell") {
  SceneSpec spec;
  int id = 0;
  for (double x : {0.07, 0.2, 0.33, 0.46})
    for (double y : {0.07, 0.2, 0.33, 0.46}) spec.objects.push_back(fixtures::object(id++, Category::Can, Color::Red, x, y, 100));
  spec.objects.push_back(fixtures::object(id, Category::Box, Color::Blue, 0.8, 0.3, 100));
  const SceneGraph g = belief(init_world(spec), SceneGraph{});
  CHECK_THROWS_AS(choose_cell(g, id, Region::Left, {}), PlanError);
}

TEST_CASE("context collects regions named by the program") {
  const auto ctx = context_for(parse_instruction("Remove all metal objects from the right part of the table."));
  CHECK(ctx.avoid_regions == std::vector<Region>{Region::Right});
  CHECK(context_for(parse_instruction("Stack the mug on top of the box.")).avoid_regions.empty());
}
