#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tabletop/scene.hpp"

namespace tabletop {

enum class ActionOp { Move, Approach, CloseGripper, OpenGripper, Lift, Lower, Weigh, Squeeze };

std::string_view to_string(ActionOp op);
std::optional<ActionOp> action_op_from_string(std::string_view name);

/// A primitive action. `target` names the object the action refers to, or
/// kNoObject for gripper-only actions and table waypoints (`waypoint` set).
/// `at` carries the believed coordinates the controller drives to: the
/// object's (x, y) for move, its grasp point for approach, the cell centre for
/// a waypoint move.
struct PrimitiveAction {
  ActionOp op = ActionOp::Move;
  ObjectId target = kNoObject;
  bool waypoint = false;
  Pose at;

  bool operator==(const PrimitiveAction&) const = default;
};

std::string describe(const PrimitiveAction& action);

}  // namespace tabletop
