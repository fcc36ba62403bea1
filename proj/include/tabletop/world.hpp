#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/action.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

inline constexpr double kTableWidth = 0.6;  // y extent
inline constexpr double kTableLength = 1.0; // x extent

/// Ground-truth description of a scene: objects with true poses and true
/// physical values. z and supported_by are ignored on input; init_world
/// settles everything onto the table.
struct SceneSpec {
  int id = 0;
  std::vector<ObjectNode> objects;

  bool operator==(const SceneSpec&) const = default;
};

struct NoiseProfile {
  double pose_sigma = 0.0;
  double attr_flip_prob = 0.0;
  double id_fault_prob = 0.0;
  double slip_prob = 0.0;
  double weigh_rel_err = 0.10;
  double stiffness_cov = 0.025;
  std::uint64_t seed = 0;
  /// Constant offset added to every detected position (test hook for
  /// systematic calibration errors).
  double pose_bias_x = 0.0;
  double pose_bias_y = 0.0;
  double pose_bias_z = 0.0;

  bool operator==(const NoiseProfile&) const = default;
};

/// Throws std::invalid_argument when a probability is outside [0, 1] or a
/// spread is negative.
void validate(const NoiseProfile& noise);

struct WorldState {
  std::vector<ObjectNode> objects;  // true poses and values; relations unused
  EndEffector ee;
  Pose grasp_offset;               // held object pose minus ee pose
  std::set<ObjectId> off_table;    // objects that fell outside the workspace
  long step_index = 0;             // primitive actions executed
  long control_steps = 0;          // micro-steps of the physics loop

  const ObjectNode* find(ObjectId id) const;
  ObjectNode* find(ObjectId id);
  bool operator==(const WorldState&) const = default;
};

class InvalidScene : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DisturbanceRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a world at rest with the end effector at its home pose.
WorldState init_world(const SceneSpec& spec);

bool inside_table(double x, double y);
bool footprints_overlap(const ObjectNode& a, const ObjectNode& b);

enum class StepStatus { Ok, ExecutionError, PhysicsError };
std::string_view to_string(StepStatus status);

enum class ObservationKind { None, MassGrams, Stiffness };
std::string_view to_string(ObservationKind kind);

struct PhysicalObservation {
  ObservationKind kind = ObservationKind::None;
  std::optional<double> value;
  Pose ee_pose;
  bool gripper_closed = false;
  bool grasp_force_detected = false;

  bool operator==(const PhysicalObservation&) const = default;
};

struct StepResult {
  PhysicalObservation observation;
  StepStatus status = StepStatus::Ok;
  std::string message;
};

/// Runs one primitive action to completion through the internal control loop
/// (end effector at 0.5 m/s, 10 ms micro-steps). `rng` feeds the slip and
/// measurement noise draws.
StepResult step_primitive(WorldState& world, const PrimitiveAction& action, const NoiseProfile& noise,
                          std::mt19937_64& rng, const HeuristicParams& params = {});

/// Emulated scene parser. Pose and attribute errors are a deterministic
/// function of (episode_seed, object id, object state): an unchanged object
/// is perceived identically on every frame. `rng` drives the per-frame ID
/// fault injection.
ObservedScene perceive(const WorldState& world, const NoiseProfile& noise, std::uint64_t episode_seed,
                       std::mt19937_64& rng);

enum class DisturbanceKind { DisplaceObject, DropHeld, SwapTwoObjects };
std::string_view to_string(DisturbanceKind kind);
std::optional<DisturbanceKind> disturbance_kind_from_string(std::string_view name);

struct Disturbance {
  int at_keyframe = 1;
  DisturbanceKind kind = DisturbanceKind::DropHeld;
  ObjectId first = kNoObject;
  ObjectId second = kNoObject;
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const Disturbance&) const = default;
};

/// Applies an external disturbance and re-settles the world. Throws
/// DisturbanceRejected when an object would leave the table or does not exist.
void apply_disturbance(WorldState& world, const Disturbance& d);

/// Ground-truth scene graph with true attributes, poses and support. Physical
/// properties carry their true values; measured flags are left empty.
SceneGraph truth_graph(const WorldState& world, const HeuristicParams& params = {});

/// Checks the quasi-static invariants: resting objects sit on their support
/// (within eps_support), support chains are acyclic and end at the table, the
/// held object follows the end effector. Returns a description of the first
/// violation.
std::optional<std::string> check_invariants(const WorldState& world, const HeuristicParams& params = {});

}  // namespace tabletop
