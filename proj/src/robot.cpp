#include "tabletop/robot.hpp"

#include <stdexcept>

namespace tabletop {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), salt};
  return std::mt19937_64(seq);
}

}  // namespace

void SimRobot::reset(const SceneSpec& spec, const NoiseProfile& noise, std::uint64_t seed) {
  validate(noise);
  world_ = init_world(spec);
  noise_ = noise;
  seed_ = seed;
  actuation_ = stream(seed, 1);
  perception_ = stream(seed, 2);
  ready_ = true;
}

Observation SimRobot::observe() {
  if (!ready_) throw std::logic_error("observe before reset");
  Observation o;
  o.scene = perceive(world_, noise_, seed_, perception_);
  o.ee = world_.ee;
  o.ee.held = kNoObject;
  return o;
}

StepResult SimRobot::execute(const PrimitiveAction& action) {
  if (!ready_) throw std::logic_error("execute before reset");
  return step_primitive(world_, action, noise_, actuation_, params_);
}

void SimRobot::disturb(const Disturbance& d) {
  if (!ready_) throw std::logic_error("disturb before reset");
  apply_disturbance(world_, d);
}

}  // namespace tabletop
