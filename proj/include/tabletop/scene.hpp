#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tabletop/vocab.hpp"

namespace tabletop {

using ObjectId = int;

inline constexpr ObjectId kNoObject = -1;
/// supported_by value for an object resting directly on the table.
inline constexpr ObjectId kTable = -1;
/// supported_by value for an object currently held by the gripper.
inline constexpr ObjectId kInGripper = -2;

/// Height of the end effector while travelling between targets (m).
inline constexpr double kTravelHeight = 0.30;

/// Minimum centre separation, along at least one axis, between a placed
/// object and any other resting object. Large enough that any object stacked
/// centred on another never overlaps a third.
inline constexpr double kPlacementClearance = 0.125;

/// Table frame: origin at a table corner, z = 0 on the table surface.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  bool operator==(const Pose&) const = default;
};

/// Wraps an angle into [-pi, pi).
double normalize_yaw(double yaw);

double horizontal_distance(const Pose& a, const Pose& b);
double distance(const Pose& a, const Pose& b);

struct VisualAttributes {
  Category name = Category::Mug;
  Color color = Color::Red;
  Material material = Material::Ceramic;
  Size size = Size::Large;
  Shape shape = Shape::Cylindrical;

  bool operator==(const VisualAttributes&) const = default;
};

/// Axis-aligned extents of an object (m). Footprints ignore yaw.
struct BBox {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;

  bool operator==(const BBox&) const = default;
};

/// A non-visual property. `true_value` is simulator-private: belief graphs
/// built from perception carry 0 there and only ever see `measured_value`.
struct PhysicalProperty {
  double true_value = 0.0;
  std::optional<double> measured_value;

  bool measured() const { return measured_value.has_value(); }
  bool operator==(const PhysicalProperty&) const = default;
};

struct GripperRelations {
  bool in_gripper = false;
  bool within_feasible_grasp = false;
  bool raised = false;
  bool gripper_above = false;

  bool operator==(const GripperRelations&) const = default;
};

struct ObjectNode {
  ObjectId id = 0;
  VisualAttributes visual;
  Pose pose;  // z is the bottom face of the object
  BBox bbox;
  PhysicalProperty mass;       // grams
  PhysicalProperty stiffness;  // N/mm
  GripperRelations relations;
  ObjectId supported_by = kTable;

  double top() const { return pose.z + bbox.dz; }
  double grasp_height() const { return pose.z + bbox.dz / 2.0; }
  bool operator==(const ObjectNode&) const = default;
};

struct EndEffector {
  Pose pose{0.5, 0.3, kTravelHeight, 0.0};
  bool gripper_open = true;
  ObjectId held = kNoObject;

  bool operator==(const EndEffector&) const = default;
};

struct SceneGraph {
  std::vector<ObjectNode> objects;
  EndEffector ee;
  int frame_index = 0;

  const ObjectNode* find(ObjectId id) const;
  ObjectNode* find(ObjectId id);
  bool operator==(const SceneGraph&) const = default;
};

struct Detection {
  VisualAttributes visual;
  Pose pose;
  BBox bbox;

  bool operator==(const Detection&) const = default;
};

/// One perception frame. Detections carry no ids; `holding_something` comes
/// from the gripper force signal, not from vision.
struct ObservedScene {
  std::vector<Detection> detections;
  bool holding_something = false;

  bool operator==(const ObservedScene&) const = default;
};

struct HeuristicParams {
  double r_above = 0.02;
  double r_grasp = 0.015;
  double h_grasp = 0.01;
  double h_raised = 0.05;
  double d_match = 0.06;
  double eps_support = 0.002;
};

/// Recomputes the four gripper relations of every node from poses.
SceneGraph update_relations(SceneGraph graph, const HeuristicParams& params = {});

/// Recomputes supported_by from poses: a resting object is supported by the
/// highest object whose footprint contains its centre and whose middle lies
/// below the object's bottom face. Held objects get kInGripper.
SceneGraph infer_support(SceneGraph graph);

struct SceneInconsistent {
  std::string reason;
};

using MatchResult = std::variant<SceneGraph, SceneInconsistent>;

/// First-frame graph: ids are assigned in detection order.
SceneGraph graph_from_observation(const ObservedScene& obs, const EndEffector& ee);

/// Associates the detections of a new frame with the ids of `prev`.
///
/// `prev.ee` must already hold the current proprioceptive end-effector state.
/// Detections are assigned greedily by 3-D distance (closest pair first, gated
/// at d_match). The held object, invisible to the camera, keeps its node and
/// follows the end effector. Tracks left unassigned by the distance gate are
/// re-identified by exact visual attributes when the pairing is unique;
/// anything else is reported as SceneInconsistent. Measured physical
/// properties are carried over by id.
MatchResult match_ids(const SceneGraph& prev, const ObservedScene& obs, const HeuristicParams& params = {});

/// Pose of a held object as inferred from the end effector.
Pose held_object_pose(const EndEffector& ee, const ObjectNode& node);

/// Deterministic digest of a graph over poses quantized to 1 cm / 0.1 rad,
/// relations, support, measured flags and end-effector state.
std::uint64_t scene_signature(const SceneGraph& graph);

}  // namespace tabletop
