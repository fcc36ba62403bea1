#include "tabletop/planner.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "tabletop/world.hpp"

namespace tabletop {

namespace {

constexpr int kCellsX = 6;
constexpr int kCellsY = 4;
constexpr double kContactTolerance = 0.015;
constexpr double kLowTolerance = 0.01;

Region opposite(Region r) { return r == Region::Left ? Region::Right : Region::Left; }

class Regressor {
 public:
  Regressor(const SceneGraph& graph, const PlanContext& ctx) : g_(graph), ctx_(ctx) {}

  const ObjectNode& node(ObjectId id) const {
    const ObjectNode* n = g_.find(id);
    if (!n) throw PlanError("subgoal names unknown object " + std::to_string(id));
    return *n;
  }

  bool holding(ObjectId id) const { return g_.ee.held == id; }
  bool ee_low() const { return g_.ee.pose.z < kTravelHeight - kLowTolerance; }

  bool ee_above(double x, double y) const {
    return std::hypot(g_.ee.pose.x - x, g_.ee.pose.y - y) < ctx_.params.r_above;
  }

  /// Held object resting on the surface beneath it.
  bool at_contact(const ObjectNode& held) const {
    double surface = 0.0;
    for (const auto& o : g_.objects) {
      if (o.id == held.id || !footprints_overlap(o, held)) continue;
      if (o.top() <= held.pose.z + kContactTolerance) surface = std::max(surface, o.top());
    }
    return held.pose.z - surface <= kContactTolerance;
  }

  PrimitiveAction make(ActionOp op, ObjectId target) const {
    PrimitiveAction a;
    a.op = op;
    a.target = target;
    a.at = g_.ee.pose;
    if (target != kNoObject && (op == ActionOp::Move || op == ActionOp::Approach)) {
      const ObjectNode& n = node(target);
      a.at = Pose{n.pose.x, n.pose.y, op == ActionOp::Move ? kTravelHeight : n.grasp_height(), 0.0};
    }
    return a;
  }

  PrimitiveAction move_to_cell(const Pose& cell) const {
    PrimitiveAction a;
    a.op = ActionOp::Move;
    a.waypoint = true;
    a.at = Pose{cell.x, cell.y, kTravelHeight, 0.0};
    return a;
  }

  /// Steps that leave `t` in the gripper.
  void acquire(ObjectId t, std::vector<PrimitiveAction>& out) const {
    if (holding(t)) return;
    const ObjectNode& target = node(t);
    if (g_.ee.held != kNoObject) {
      put_down(g_.ee.held, out);
      out.push_back(make(ActionOp::Move, t));
      out.push_back(make(ActionOp::Approach, t));
      out.push_back(make(ActionOp::CloseGripper, t));
      return;
    }
    if (!target.relations.gripper_above) {
      if (ee_low()) out.push_back(make(ActionOp::Lift, kNoObject));
      out.push_back(make(ActionOp::Move, t));
      out.push_back(make(ActionOp::Approach, t));
    } else if (!target.relations.within_feasible_grasp || !g_.ee.gripper_open) {
      out.push_back(make(ActionOp::Approach, t));
    }
    out.push_back(make(ActionOp::CloseGripper, t));
  }

  /// Steps that leave `t` in the gripper and raised.
  void acquire_raised(ObjectId t, std::vector<PrimitiveAction>& out) const {
    acquire(t, out);
    if (!node(t).relations.raised) out.push_back(make(ActionOp::Lift, t));
  }

  /// Carry `t` to (x, y), release it and retreat.
  void place(ObjectId t, double x, double y, std::optional<PrimitiveAction> move, std::vector<PrimitiveAction>& out) const {
    if (holding(t) && ee_above(x, y)) {
      if (!at_contact(node(t))) out.push_back(make(ActionOp::Lower, t));
    } else {
      acquire_raised(t, out);
      out.push_back(*move);
      out.push_back(make(ActionOp::Lower, t));
    }
    out.push_back(make(ActionOp::OpenGripper, t));
    out.push_back(make(ActionOp::Lift, kNoObject));
  }

  void place_in_cell(ObjectId t, std::optional<Region> region, std::vector<PrimitiveAction>& out) const {
    const Pose cell = choose_cell(g_, t, region, ctx_);
    place(t, cell.x, cell.y, move_to_cell(cell), out);
  }

  void put_down(ObjectId o, std::vector<PrimitiveAction>& out) const { place_in_cell(o, std::nullopt, out); }

  void retreat(std::vector<PrimitiveAction>& out) const {
    if (ee_low()) out.push_back(make(ActionOp::Lift, kNoObject));
  }

  std::vector<PrimitiveAction> regress(const Subgoal& s) const {
    std::vector<PrimitiveAction> out;
    const ObjectNode& target = node(s.target);
    switch (s.kind) {
      case SubgoalKind::MeasureWeight:
        if (target.mass.measured()) break;
        acquire_raised(s.target, out);
        out.push_back(make(ActionOp::Weigh, s.target));
        break;
      case SubgoalKind::MeasureStiffness:
        if (target.stiffness.measured()) break;
        acquire(s.target, out);
        out.push_back(make(ActionOp::Squeeze, s.target));
        break;
      case SubgoalKind::PickUp:
        if (target.relations.in_gripper && target.relations.raised) break;
        acquire_raised(s.target, out);
        break;
      case SubgoalKind::MoveToRegion:
      case SubgoalKind::RemoveFromRegion: {
        if (!s.region) throw PlanError("region subgoal without a region");
        const Region dest = s.kind == SubgoalKind::MoveToRegion ? *s.region : opposite(*s.region);
        if (!holding(s.target) && region_of(target.pose.x) == dest) {
          retreat(out);
          break;
        }
        place_in_cell(s.target, dest, out);
        break;
      }
      case SubgoalKind::StackOn: {
        if (s.target == s.secondary_object) throw PlanError("cannot stack an object on itself");
        const ObjectNode& base = node(s.secondary_object);
        if (!holding(s.target) && target.supported_by == base.id) {
          retreat(out);
          break;
        }
        place(s.target, base.pose.x, base.pose.y, make(ActionOp::Move, base.id), out);
        break;
      }
      case SubgoalKind::PutDown:
        if (!holding(s.target)) {
          retreat(out);
          break;
        }
        put_down(s.target, out);
        break;
    }
    return out;
  }

 private:
  const SceneGraph& g_;
  const PlanContext& ctx_;
};

}  // namespace

PlanContext context_for(const SymbolicProgram& program, const HeuristicParams& params) {
  PlanContext ctx;
  ctx.params = params;
  for (const auto& fn : program.functions) {
    if (!fn.arg) continue;
    if (auto r = enum_from_string<Region>(*fn.arg))
      if (std::find(ctx.avoid_regions.begin(), ctx.avoid_regions.end(), *r) == ctx.avoid_regions.end())
        ctx.avoid_regions.push_back(*r);
  }
  return ctx;
}

std::vector<Pose> table_cells() {
  std::vector<Pose> cells;
  for (int j = 0; j < kCellsY; ++j)
    for (int i = 0; i < kCellsX; ++i)
      cells.push_back(Pose{(i + 0.5) * kTableLength / kCellsX, (j + 0.5) * kTableWidth / kCellsY, 0.0, 0.0});
  return cells;
}

Pose choose_cell(const SceneGraph& graph, ObjectId object, std::optional<Region> region, const PlanContext& ctx) {
  std::optional<std::tuple<int, double, std::size_t>> best_key;
  Pose best;
  const auto cells = table_cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Pose& c = cells[k];
    if (region && region_of(c.x) != *region) continue;
    bool free = true;
    for (const auto& o : graph.objects) {
      if (o.id == object || o.id == graph.ee.held) continue;
      if (std::abs(o.pose.x - c.x) < kPlacementClearance && std::abs(o.pose.y - c.y) < kPlacementClearance) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    const bool avoided = std::find(ctx.avoid_regions.begin(), ctx.avoid_regions.end(), region_of(c.x)) !=
                         ctx.avoid_regions.end();
    const int penalty = (!region && avoided) ? 1 : 0;
    const auto key = std::make_tuple(penalty, horizontal_distance(c, graph.ee.pose), k);
    if (!best_key || key < *best_key) {
      best_key = key;
      best = c;
    }
  }
  if (!best_key) throw PlanError("no free table cell for object " + std::to_string(object));
  return best;
}

bool subgoal_achieved(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx) {
  return plan(subgoal, graph, ctx).actions.empty();
}

Plan plan(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx) {
  Regressor r(graph, ctx);
  Plan p;
  p.subgoal = subgoal;
  p.actions = r.regress(subgoal);
  return p;
}

PrimitiveAction next_action(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx) {
  Plan p = plan(subgoal, graph, ctx);
  if (p.actions.empty()) throw PlanError(describe(subgoal) + " is already achieved");
  return p.actions.front();
}

}  // namespace tabletop
