#include "tabletop/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tabletop {

namespace {

constexpr double kEeSpeed = 0.5;        // m/s
constexpr double kControlPeriod = 0.01; // s
constexpr double kStepLength = kEeSpeed * kControlPeriod;
constexpr double kDropRadius = 0.03;
constexpr double kIdFaultDisplacement = 0.08;
constexpr double kContactEps = 1e-6;
// Open fingers straddle an object whose centre is this close to the gripper
// axis; further out a finger comes down on top of it.
constexpr double kFingerClearance = 0.03;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::int64_t v) { return splitmix(h ^ static_cast<std::uint64_t>(v)); }

bool point_in_footprint(const ObjectNode& o, double x, double y) {
  return std::abs(x - o.pose.x) <= o.bbox.dx / 2.0 && std::abs(y - o.pose.y) <= o.bbox.dy / 2.0;
}

bool footprint_inside_table(const ObjectNode& o) {
  return o.pose.x - o.bbox.dx / 2.0 >= 0.0 && o.pose.x + o.bbox.dx / 2.0 <= kTableLength &&
         o.pose.y - o.bbox.dy / 2.0 >= 0.0 && o.pose.y + o.bbox.dy / 2.0 <= kTableWidth;
}

void sync_held(WorldState& w) {
  if (w.ee.held == kNoObject) return;
  ObjectNode* o = w.find(w.ee.held);
  o->pose.x = w.ee.pose.x + w.grasp_offset.x;
  o->pose.y = w.ee.pose.y + w.grasp_offset.y;
  o->pose.z = w.ee.pose.z + w.grasp_offset.z;
  o->supported_by = kInGripper;
}

/// Drives the end effector along a straight segment in fixed micro-steps.
void drive_to(WorldState& w, double x, double y, double z) {
  const Pose start = w.ee.pose;
  const double length = std::hypot(x - start.x, y - start.y, z - start.z);
  const long steps = std::max(1L, static_cast<long>(std::ceil(length / kStepLength)));
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    w.ee.pose.x = start.x + (x - start.x) * t;
    w.ee.pose.y = start.y + (y - start.y) * t;
    w.ee.pose.z = start.z + (z - start.z) * t;
    sync_held(w);
  }
  w.control_steps += steps;
}

/// Quasi-static settling: every resting object drops onto the highest
/// surface beneath its footprint. Returns a description of an invalid
/// resulting state, if any.
std::optional<std::string> settle_all(WorldState& w) {
  std::vector<ObjectNode*> order;
  for (auto& o : w.objects) {
    if (o.id == w.ee.held) continue;
    if (!inside_table(o.pose.x, o.pose.y)) {
      o.pose.z = 0.0;
      o.supported_by = kTable;
      w.off_table.insert(o.id);
      continue;
    }
    order.push_back(&o);
  }
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
    return std::make_pair(a->pose.z, a->id) < std::make_pair(b->pose.z, b->id);
  });
  std::vector<ObjectNode*> settled;
  for (ObjectNode* o : order) {
    double surface = 0.0;
    ObjectId support = kTable;
    for (ObjectNode* s : settled) {
      if (!footprints_overlap(*o, *s) || s->top() > o->pose.z + kContactEps) continue;
      if (s->top() > surface) {
        surface = s->top();
        support = s->id;
      }
    }
    o->pose.z = surface;
    o->supported_by = support;
    settled.push_back(o);
  }
  for (std::size_t i = 0; i < settled.size(); ++i) {
    for (std::size_t j = i + 1; j < settled.size(); ++j) {
      const ObjectNode& a = *settled[i];
      const ObjectNode& b = *settled[j];
      if (!footprints_overlap(a, b)) continue;
      const bool vertical = a.pose.z < b.top() - kContactEps && b.pose.z < a.top() - kContactEps;
      if (vertical) return "objects " + std::to_string(a.id) + " and " + std::to_string(b.id) + " interpenetrate";
    }
  }
  return std::nullopt;
}

std::optional<std::string> release_held(WorldState& w) {
  if (w.ee.held == kNoObject) return std::nullopt;
  w.ee.held = kNoObject;
  w.grasp_offset = Pose{};
  return settle_all(w);
}

bool graspable(const ObjectNode& o, const Pose& ee, const HeuristicParams& p) {
  // Closing fingers catch the object anywhere along its height.
  return horizontal_distance(o.pose, ee) < p.r_grasp && ee.z >= o.pose.z && ee.z <= o.top();
}

StepResult error(StepStatus status, std::string message) {
  StepResult r;
  r.status = status;
  r.message = std::move(message);
  return r;
}

template <typename Enum, std::size_t N>
Enum flip(Enum current, const std::array<Enum, N>& values, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, N - 2);
  std::size_t k = pick(rng);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (values[i] == current) idx = i;
  if (k >= idx) ++k;
  return values[k];
}

}  // namespace

void validate(const NoiseProfile& n) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  prob(n.attr_flip_prob, "attr_flip_prob");
  prob(n.id_fault_prob, "id_fault_prob");
  prob(n.slip_prob, "slip_prob");
  if (!(n.pose_sigma >= 0.0)) throw std::invalid_argument("pose_sigma must be non-negative");
  if (!(n.weigh_rel_err >= 0.0 && n.weigh_rel_err < 1.0)) throw std::invalid_argument("weigh_rel_err must lie in [0, 1)");
  if (!(n.stiffness_cov >= 0.0)) throw std::invalid_argument("stiffness_cov must be non-negative");
}

const ObjectNode* WorldState::find(ObjectId id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

ObjectNode* WorldState::find(ObjectId id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

bool inside_table(double x, double y) { return x >= 0.0 && x <= kTableLength && y >= 0.0 && y <= kTableWidth; }

bool footprints_overlap(const ObjectNode& a, const ObjectNode& b) {
  return std::abs(a.pose.x - b.pose.x) < (a.bbox.dx + b.bbox.dx) / 2.0 &&
         std::abs(a.pose.y - b.pose.y) < (a.bbox.dy + b.bbox.dy) / 2.0;
}

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Ok: return "ok";
    case StepStatus::ExecutionError: return "execution_error";
    case StepStatus::PhysicsError: return "physics_error";
  }
  return "?";
}

std::string_view to_string(ObservationKind k) {
  switch (k) {
    case ObservationKind::None: return "none";
    case ObservationKind::MassGrams: return "mass_grams";
    case ObservationKind::Stiffness: return "stiffness";
  }
  return "?";
}

std::string_view to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::DisplaceObject: return "displace_object";
    case DisturbanceKind::DropHeld: return "drop_held";
    case DisturbanceKind::SwapTwoObjects: return "swap_two_objects";
  }
  return "?";
}

std::optional<DisturbanceKind> disturbance_kind_from_string(std::string_view name) {
  for (auto k : {DisturbanceKind::DisplaceObject, DisturbanceKind::DropHeld, DisturbanceKind::SwapTwoObjects})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

WorldState init_world(const SceneSpec& spec) {
  if (spec.objects.empty()) throw InvalidScene("scene has no objects");
  WorldState w;
  w.objects = spec.objects;
  for (auto& o : w.objects) {
    o.pose.z = 0.0;
    o.pose.yaw = normalize_yaw(o.pose.yaw);
    o.supported_by = kTable;
    o.relations = {};
    o.mass.measured_value.reset();
    o.stiffness.measured_value.reset();
    if (!(o.bbox.dx > 0 && o.bbox.dy > 0 && o.bbox.dz > 0))
      throw InvalidScene("object " + std::to_string(o.id) + " has a degenerate bounding box");
    if (!(o.mass.true_value > 0 && o.stiffness.true_value > 0))
      throw InvalidScene("object " + std::to_string(o.id) + " needs positive physical properties");
    if (!footprint_inside_table(o)) throw InvalidScene("object " + std::to_string(o.id) + " is outside the table");
  }
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < w.objects.size(); ++j) {
      if (w.objects[i].id == w.objects[j].id) throw InvalidScene("duplicate object id " + std::to_string(w.objects[i].id));
      if (footprints_overlap(w.objects[i], w.objects[j]))
        throw InvalidScene("objects " + std::to_string(w.objects[i].id) + " and " + std::to_string(w.objects[j].id) +
                           " overlap");
    }
  }
  w.ee = EndEffector{};
  return w;
}

StepResult step_primitive(WorldState& w, const PrimitiveAction& action, const NoiseProfile& noise,
                          std::mt19937_64& rng, const HeuristicParams& params) {
  ++w.step_index;
  StepResult result;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  switch (action.op) {
    case ActionOp::Move: {
      if (!inside_table(action.at.x, action.at.y))
        return error(StepStatus::ExecutionError, "move target outside the workspace");
      if (w.ee.pose.z < kTravelHeight) drive_to(w, w.ee.pose.x, w.ee.pose.y, kTravelHeight);
      drive_to(w, action.at.x, action.at.y, kTravelHeight);
      break;
    }
    case ActionOp::Approach: {
      if (!inside_table(action.at.x, action.at.y))
        return error(StepStatus::ExecutionError, "approach target outside the workspace");
      if (w.ee.held != kNoObject) return error(StepStatus::ExecutionError, "approach while holding an object");
      w.ee.gripper_open = true;
      const double goal_z = std::max(action.at.z, 0.0);
      drive_to(w, action.at.x, action.at.y, w.ee.pose.z);
      // A finger lands on any object under the gripper that it cannot straddle.
      const ObjectNode* hit = nullptr;
      Pose grasp_point{action.at.x, action.at.y, goal_z, 0.0};
      for (const auto& o : w.objects) {
        if (!point_in_footprint(o, action.at.x, action.at.y) || o.top() <= goal_z) continue;
        if (graspable(o, grasp_point, params) || horizontal_distance(o.pose, grasp_point) < kFingerClearance) continue;
        if (!hit || o.top() > hit->top()) hit = &o;
      }
      if (hit) {
        drive_to(w, action.at.x, action.at.y, std::max(hit->top(), goal_z));
        return error(StepStatus::ExecutionError, "gripper collided with object " + std::to_string(hit->id));
      }
      drive_to(w, action.at.x, action.at.y, goal_z);
      break;
    }
    case ActionOp::CloseGripper: {
      w.ee.gripper_open = false;
      if (w.ee.held != kNoObject) break;
      const ObjectNode* best = nullptr;
      for (const auto& o : w.objects) {
        if (!graspable(o, w.ee.pose, params)) continue;
        if (!best || horizontal_distance(o.pose, w.ee.pose) < horizontal_distance(best->pose, w.ee.pose)) best = &o;
      }
      if (!best) break;
      if (unit(rng) < noise.slip_prob) break;  // slipped out while closing
      w.ee.held = best->id;
      w.grasp_offset = Pose{best->pose.x - w.ee.pose.x, best->pose.y - w.ee.pose.y, best->pose.z - w.ee.pose.z, 0.0};
      sync_held(w);
      if (auto err = settle_all(w)) return error(StepStatus::PhysicsError, *err);
      break;
    }
    case ActionOp::OpenGripper: {
      w.ee.gripper_open = true;
      if (auto err = release_held(w)) return error(StepStatus::PhysicsError, *err);
      break;
    }
    case ActionOp::Lift: {
      if (w.ee.held != kNoObject && unit(rng) < noise.slip_prob) {
        ObjectNode* o = w.find(w.ee.held);
        const double r = kDropRadius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        o->pose.x += r * std::cos(theta);
        o->pose.y += r * std::sin(theta);
        if (auto err = release_held(w)) return error(StepStatus::PhysicsError, *err);
      }
      drive_to(w, w.ee.pose.x, w.ee.pose.y, kTravelHeight);
      break;
    }
    case ActionOp::Lower: {
      if (w.ee.held != kNoObject) {
        const ObjectNode& held = *w.find(w.ee.held);
        double surface = 0.0;
        for (const auto& o : w.objects) {
          if (o.id == held.id || !footprints_overlap(o, held) || o.top() > held.pose.z + kContactEps) continue;
          surface = std::max(surface, o.top());
        }
        drive_to(w, w.ee.pose.x, w.ee.pose.y, w.ee.pose.z - (held.pose.z - surface));
      } else {
        double surface = 0.0;
        for (const auto& o : w.objects)
          if (point_in_footprint(o, w.ee.pose.x, w.ee.pose.y) && o.top() <= w.ee.pose.z) surface = std::max(surface, o.top());
        drive_to(w, w.ee.pose.x, w.ee.pose.y, surface + 0.02);
      }
      break;
    }
    case ActionOp::Weigh: {
      if (w.ee.held == kNoObject) return error(StepStatus::ExecutionError, "weigh with an empty gripper");
      const ObjectNode& held = *w.find(w.ee.held);
      if (!(held.pose.z > params.h_raised)) return error(StepStatus::ExecutionError, "weigh without lifting");
      std::uniform_real_distribution<double> err(-noise.weigh_rel_err, noise.weigh_rel_err);
      result.observation.kind = ObservationKind::MassGrams;
      result.observation.value = held.mass.true_value * (1.0 + (noise.weigh_rel_err > 0 ? err(rng) : 0.0));
      break;
    }
    case ActionOp::Squeeze: {
      if (w.ee.held == kNoObject) return error(StepStatus::ExecutionError, "squeeze with an empty gripper");
      const ObjectNode& held = *w.find(w.ee.held);
      std::normal_distribution<double> err(0.0, noise.stiffness_cov);
      result.observation.kind = ObservationKind::Stiffness;
      result.observation.value = held.stiffness.true_value * (1.0 + (noise.stiffness_cov > 0 ? err(rng) : 0.0));
      break;
    }
  }

  result.observation.ee_pose = w.ee.pose;
  result.observation.gripper_closed = !w.ee.gripper_open;
  result.observation.grasp_force_detected = w.ee.held != kNoObject;
  return result;
}

ObservedScene perceive(const WorldState& w, const NoiseProfile& noise, std::uint64_t episode_seed,
                       std::mt19937_64& rng) {
  ObservedScene obs;
  obs.holding_something = w.ee.held != kNoObject;
  for (const auto& o : w.objects) {
    if (o.id == w.ee.held) continue;  // occluded by the gripper
    Detection d{o.visual, o.pose, o.bbox};
    if (noise.pose_sigma > 0.0 || noise.attr_flip_prob > 0.0) {
      std::uint64_t object_key = mix(splitmix(episode_seed), o.id);
      object_key = mix(object_key, std::llround(o.pose.x * 1e4));
      object_key = mix(object_key, std::llround(o.pose.y * 1e4));
      object_key = mix(object_key, std::llround(o.pose.z * 1e4));
      object_key = mix(object_key, std::llround(o.pose.yaw * 1e3));
      if (noise.pose_sigma > 0.0) {
        std::mt19937_64 local(object_key);
        std::normal_distribution<double> gauss(0.0, noise.pose_sigma);
        d.pose.x += gauss(local);
        d.pose.y += gauss(local);
        d.pose.z += gauss(local);
      }
      if (noise.attr_flip_prob > 0.0) {
        std::mt19937_64 local(mix(object_key, 0x61747472));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(local) < noise.attr_flip_prob) d.visual.name = flip(d.visual.name, kCategories, local);
        if (unit(local) < noise.attr_flip_prob) d.visual.color = flip(d.visual.color, kColors, local);
        if (unit(local) < noise.attr_flip_prob) d.visual.material = flip(d.visual.material, kMaterials, local);
        if (unit(local) < noise.attr_flip_prob) d.visual.size = flip(d.visual.size, kSizes, local);
        if (unit(local) < noise.attr_flip_prob) d.visual.shape = flip(d.visual.shape, kShapes, local);
      }
    }
    d.pose.x += noise.pose_bias_x;
    d.pose.y += noise.pose_bias_y;
    d.pose.z += noise.pose_bias_z;
    obs.detections.push_back(d);
  }
  if (noise.id_fault_prob > 0.0 && obs.detections.size() >= 2) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < noise.id_fault_prob) {
      std::uniform_int_distribution<std::size_t> pick(0, obs.detections.size() - 1);
      const std::size_t victim = pick(rng);
      std::size_t donor = pick(rng);
      if (donor == victim) donor = (donor + 1) % obs.detections.size();
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      auto& d = obs.detections[victim];
      d.pose.x += kIdFaultDisplacement * std::cos(theta);
      d.pose.y += kIdFaultDisplacement * std::sin(theta);
      d.visual = obs.detections[donor].visual;
    }
  }
  return obs;
}

void apply_disturbance(WorldState& w, const Disturbance& d) {
  if (d.at_keyframe < 1) throw DisturbanceRejected("disturbances start at keyframe 1");
  switch (d.kind) {
    case DisturbanceKind::DropHeld: {
      if (w.ee.held == kNoObject) return;
      if (auto err = release_held(w)) throw DisturbanceRejected(*err);
      return;
    }
    case DisturbanceKind::DisplaceObject: {
      ObjectNode* o = w.find(d.first);
      if (!o) throw DisturbanceRejected("unknown object " + std::to_string(d.first));
      if (o->id == w.ee.held) throw DisturbanceRejected("cannot displace the held object");
      ObjectNode moved = *o;
      moved.pose.x += d.dx;
      moved.pose.y += d.dy;
      if (!footprint_inside_table(moved)) throw DisturbanceRejected("displacement leaves the table");
      const WorldState backup = w;
      o->pose.x = moved.pose.x;
      o->pose.y = moved.pose.y;
      o->pose.z = 1e3;  // dropped from above onto whatever lies there
      if (auto err = settle_all(w)) {
        w = backup;
        throw DisturbanceRejected(*err);
      }
      return;
    }
    case DisturbanceKind::SwapTwoObjects: {
      ObjectNode* a = w.find(d.first);
      ObjectNode* b = w.find(d.second);
      if (!a || !b || a == b) throw DisturbanceRejected("swap needs two distinct objects");
      if (a->id == w.ee.held || b->id == w.ee.held) throw DisturbanceRejected("cannot swap the held object");
      const WorldState backup = w;
      std::swap(a->pose.x, b->pose.x);
      std::swap(a->pose.y, b->pose.y);
      a->pose.z = 1e3;
      b->pose.z = 1e3 + 1.0;
      if (!footprint_inside_table(*a) || !footprint_inside_table(*b)) {
        w = backup;
        throw DisturbanceRejected("swap leaves the table");
      }
      if (auto err = settle_all(w)) {
        w = backup;
        throw DisturbanceRejected(*err);
      }
      return;
    }
  }
}

SceneGraph truth_graph(const WorldState& w, const HeuristicParams& params) {
  SceneGraph g;
  g.objects = w.objects;
  for (auto& o : g.objects) {
    o.mass.measured_value.reset();
    o.stiffness.measured_value.reset();
  }
  g.ee = w.ee;
  return update_relations(std::move(g), params);
}

std::optional<std::string> check_invariants(const WorldState& w, const HeuristicParams& params) {
  for (const auto& o : w.objects) {
    const std::string who = "object " + std::to_string(o.id);
    if (o.id == w.ee.held) {
      const double dx = o.pose.x - (w.ee.pose.x + w.grasp_offset.x);
      const double dy = o.pose.y - (w.ee.pose.y + w.grasp_offset.y);
      const double dz = o.pose.z - (w.ee.pose.z + w.grasp_offset.z);
      if (std::hypot(dx, dy, dz) > 1e-9) return who + " is not rigidly attached to the gripper";
      continue;
    }
    if (o.pose.z < 0.0) return who + " is below the table";
    if (o.supported_by == kTable) {
      if (std::abs(o.pose.z) > params.eps_support) return who + " floats above the table";
      continue;
    }
    const ObjectNode* s = w.find(o.supported_by);
    if (!s || s->id == w.ee.held) return who + " rests on a missing support";
    if (std::abs(o.pose.z - s->top()) > params.eps_support) return who + " is not in contact with its support";
    // Chain must reach the table within |objects| hops.
    ObjectId cur = o.supported_by;
    std::size_t hops = 0;
    while (cur != kTable) {
      const ObjectNode* c = w.find(cur);
      if (!c || ++hops > w.objects.size()) return who + " has a cyclic support chain";
      cur = c->supported_by;
    }
  }
  return std::nullopt;
}

}  // namespace tabletop
