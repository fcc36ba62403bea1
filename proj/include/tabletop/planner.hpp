#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "tabletop/action.hpp"
#include "tabletop/program.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

struct Plan {
  std::vector<PrimitiveAction> actions;
  Subgoal subgoal;
};

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlanContext {
  /// Regions named by the active program; put-down cells avoid them when
  /// another free cell exists.
  std::vector<Region> avoid_regions;
  HeuristicParams params;
};

/// Collects the regions referenced by a program's arguments.
PlanContext context_for(const SymbolicProgram& program, const HeuristicParams& params = {});

/// Table cell centres used as placement waypoints (6 x 4 grid).
std::vector<Pose> table_cells();

/// Nearest free cell to the end effector for placing `object`, restricted to
/// `region` when given. Throws PlanError when none is free.
Pose choose_cell(const SceneGraph& graph, ObjectId object, std::optional<Region> region, const PlanContext& ctx);

/// True when the belief graph shows the subgoal achieved, including the
/// gripper retreat that closes every placement.
bool subgoal_achieved(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx = {});

/// Regresses a subgoal into the remaining primitive actions for the current
/// graph. Memoryless: the plan depends only on (subgoal, graph).
Plan plan(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx = {});

/// Head of plan(). Throws PlanError when the subgoal is already achieved.
PrimitiveAction next_action(const Subgoal& subgoal, const SceneGraph& graph, const PlanContext& ctx = {});

}  // namespace tabletop
