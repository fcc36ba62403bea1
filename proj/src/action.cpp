#include "tabletop/action.hpp"

#include <array>
#include <cstdio>
#include <utility>

namespace tabletop {

namespace {

constexpr std::array<std::pair<ActionOp, std::string_view>, 8> kActionNames{{
    {ActionOp::Move, "move"},
    {ActionOp::Approach, "approach"},
    {ActionOp::CloseGripper, "close_gripper"},
    {ActionOp::OpenGripper, "open_gripper"},
    {ActionOp::Lift, "lift"},
    {ActionOp::Lower, "lower"},
    {ActionOp::Weigh, "weigh"},
    {ActionOp::Squeeze, "squeeze"},
}};

}  // namespace

std::string_view to_string(ActionOp op) {
  for (const auto& [o, name] : kActionNames)
    if (o == op) return name;
  return "?";
}

std::optional<ActionOp> action_op_from_string(std::string_view name) {
  for (const auto& [o, n] : kActionNames)
    if (n == name) return o;
  return std::nullopt;
}

std::string describe(const PrimitiveAction& action) {
  std::string out(to_string(action.op));
  if (action.target != kNoObject) {
    out += "(o" + std::to_string(action.target) + ")";
  } else if (action.waypoint) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.3f, %.3f)", action.at.x, action.at.y);
    out += buf;
  }
  return out;
}

}  // namespace tabletop
