#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "tabletop/world.hpp"

namespace tabletop {

/// One keyframe observation: camera detections plus proprioception. `ee.held`
/// is always kNoObject; only the gripper force flag in `scene` says whether
/// something is in hand.
struct Observation {
  ObservedScene scene;
  EndEffector ee;
};

/// The robot could not be reached or answered out of contract.
class RobotFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What the episode engine drives. Implemented in-process by SimRobot and over
/// TCP by RemoteRobot.
class Robot {
 public:
  virtual ~Robot() = default;

  virtual void reset(const SceneSpec& spec, const NoiseProfile& noise, std::uint64_t seed) = 0;
  virtual Observation observe() = 0;
  virtual StepResult execute(const PrimitiveAction& action) = 0;
  /// Throws DisturbanceRejected.
  virtual void disturb(const Disturbance& d) = 0;
  /// Simulator-private state, for scoring and ground-truth ablations only.
  virtual WorldState truth() = 0;
};

class SimRobot : public Robot {
 public:
  explicit SimRobot(HeuristicParams params = {}) : params_(params) {}

  void reset(const SceneSpec& spec, const NoiseProfile& noise, std::uint64_t seed) override;
  Observation observe() override;
  StepResult execute(const PrimitiveAction& action) override;
  void disturb(const Disturbance& d) override;
  WorldState truth() override { return world_; }

  bool ready() const { return ready_; }
  const WorldState& world() const { return world_; }

 private:
  HeuristicParams params_;
  WorldState world_;
  NoiseProfile noise_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 actuation_;
  std::mt19937_64 perception_;
  bool ready_ = false;
};

}  // namespace tabletop
