#include "tabletop/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace tabletop {

double normalize_yaw(double yaw) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(yaw + std::numbers::pi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  wrapped -= std::numbers::pi;
  // fmod can round up to exactly +pi
  if (wrapped >= std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

double horizontal_distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z); }

const ObjectNode* SceneGraph::find(ObjectId id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

ObjectNode* SceneGraph::find(ObjectId id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

SceneGraph update_relations(SceneGraph graph, const HeuristicParams& params) {
  const EndEffector& ee = graph.ee;
  for (auto& o : graph.objects) {
    const double horizontal = horizontal_distance(ee.pose, o.pose);
    GripperRelations r;
    r.gripper_above = horizontal < params.r_above;
    r.within_feasible_grasp =
        horizontal < params.r_grasp && std::abs(ee.pose.z - o.grasp_height()) < params.h_grasp;
    r.in_gripper = r.within_feasible_grasp && !ee.gripper_open && ee.held == o.id;
    r.raised = o.pose.z > params.h_raised;
    o.relations = r;
  }
  return graph;
}

namespace {

bool footprint_contains(const ObjectNode& base, const Pose& p) {
  return std::abs(p.x - base.pose.x) <= base.bbox.dx / 2.0 && std::abs(p.y - base.pose.y) <= base.bbox.dy / 2.0;
}

}  // namespace

SceneGraph infer_support(SceneGraph graph) {
  for (auto& o : graph.objects) {
    if (graph.ee.held == o.id) {
      o.supported_by = kInGripper;
      continue;
    }
    ObjectId best = kTable;
    double best_top = -1.0;
    for (const auto& other : graph.objects) {
      if (other.id == o.id || other.id == graph.ee.held) continue;
      if (!footprint_contains(other, o.pose)) continue;
      if (other.pose.z + other.bbox.dz / 2.0 >= o.pose.z) continue;
      if (other.top() > best_top) {
        best_top = other.top();
        best = other.id;
      }
    }
    o.supported_by = best;
  }
  return graph;
}

SceneGraph graph_from_observation(const ObservedScene& obs, const EndEffector& ee) {
  SceneGraph g;
  g.ee = ee;
  g.ee.held = kNoObject;
  ObjectId next = 0;
  for (const auto& d : obs.detections) {
    ObjectNode n;
    n.id = next++;
    n.visual = d.visual;
    n.pose = d.pose;
    n.bbox = d.bbox;
    g.objects.push_back(n);
  }
  return g;
}

Pose held_object_pose(const EndEffector& ee, const ObjectNode& node) {
  return Pose{ee.pose.x, ee.pose.y, ee.pose.z - node.bbox.dz / 2.0, node.pose.yaw};
}

MatchResult match_ids(const SceneGraph& prev, const ObservedScene& obs, const HeuristicParams& params) {
  const std::size_t n_tracks = prev.objects.size();
  const std::size_t expected = n_tracks - (obs.holding_something ? 1 : 0);
  if (obs.holding_something && n_tracks == 0) return SceneInconsistent{"holding an object in an empty scene"};
  if (obs.detections.size() != expected) {
    return SceneInconsistent{"expected " + std::to_string(expected) + " detections, got " +
                             std::to_string(obs.detections.size())};
  }

  // Predicted pose per track: a still-held object follows the end effector.
  std::vector<Pose> predicted(n_tracks);
  for (std::size_t i = 0; i < n_tracks; ++i) {
    const auto& t = prev.objects[i];
    predicted[i] = (t.id == prev.ee.held) ? held_object_pose(prev.ee, t) : t.pose;
  }

  std::vector<int> det_of_track(n_tracks, -1);
  std::vector<int> track_of_det(obs.detections.size(), -1);
  std::optional<std::size_t> held_track;
  if (obs.holding_something && prev.ee.held != kNoObject) {
    for (std::size_t i = 0; i < n_tracks; ++i)
      if (prev.objects[i].id == prev.ee.held) held_track = i;
  }

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n_tracks; ++i) {
    if (held_track == i) continue;
    for (std::size_t j = 0; j < obs.detections.size(); ++j) {
      const double d = distance(predicted[i], obs.detections[j].pose);
      if (d < params.d_match) pairs.emplace_back(d, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [d, i, j] : pairs) {
    if (det_of_track[i] >= 0 || track_of_det[j] >= 0) continue;
    det_of_track[i] = static_cast<int>(j);
    track_of_det[j] = static_cast<int>(i);
  }

  std::vector<std::size_t> free_tracks;
  for (std::size_t i = 0; i < n_tracks; ++i)
    if (det_of_track[i] < 0 && held_track != i) free_tracks.push_back(i);

  // A newly grasped object vanishes from view: the unassigned track closest
  // to the gripper is the one in hand.
  if (obs.holding_something && !held_track) {
    if (free_tracks.empty()) return SceneInconsistent{"gripper holds an object but no track is unaccounted for"};
    auto closest = std::min_element(free_tracks.begin(), free_tracks.end(), [&](std::size_t a, std::size_t b) {
      Pose ga = predicted[a], gb = predicted[b];
      ga.z = prev.objects[a].grasp_height();
      gb.z = prev.objects[b].grasp_height();
      return std::make_pair(distance(ga, prev.ee.pose), a) < std::make_pair(distance(gb, prev.ee.pose), b);
    });
    held_track = *closest;
    free_tracks.erase(closest);
  }

  std::vector<std::size_t> free_dets;
  for (std::size_t j = 0; j < obs.detections.size(); ++j)
    if (track_of_det[j] < 0) free_dets.push_back(j);

  // Appearance re-identification for tracks that moved beyond the gate.
  for (std::size_t i : free_tracks) {
    const auto& visual = prev.objects[i].visual;
    std::vector<std::size_t> same_dets;
    for (std::size_t j : free_dets)
      if (obs.detections[j].visual == visual) same_dets.push_back(j);
    std::size_t same_tracks = 0;
    for (std::size_t k : free_tracks)
      if (prev.objects[k].visual == visual) ++same_tracks;
    if (same_dets.size() != 1 || same_tracks != 1) {
      return SceneInconsistent{"cannot re-identify object " + std::to_string(prev.objects[i].id)};
    }
    det_of_track[i] = static_cast<int>(same_dets.front());
    track_of_det[same_dets.front()] = static_cast<int>(i);
  }

  SceneGraph next;
  next.ee = prev.ee;
  next.ee.held = kNoObject;
  next.frame_index = prev.frame_index;
  for (std::size_t i = 0; i < n_tracks; ++i) {
    ObjectNode node = prev.objects[i];
    if (held_track == i) {
      node.pose = held_object_pose(prev.ee, node);
      next.ee.held = node.id;
    } else {
      const Detection& d = obs.detections[static_cast<std::size_t>(det_of_track[i])];
      node.visual = d.visual;
      node.pose = d.pose;
      node.bbox = d.bbox;
    }
    next.objects.push_back(node);
  }
  return next;
}

namespace {

class Fnv1a {
 public:
  void add(std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
      hash_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

std::int64_t quantize(double v, double quantum) { return static_cast<std::int64_t>(std::llround(v / quantum)); }

void add_pose(Fnv1a& h, const Pose& p) {
  h.add(quantize(p.x, 0.01));
  h.add(quantize(p.y, 0.01));
  h.add(quantize(p.z, 0.01));
  h.add(quantize(p.yaw, 0.1));
}

}  // namespace

std::uint64_t scene_signature(const SceneGraph& graph) {
  std::vector<const ObjectNode*> sorted;
  for (const auto& o : graph.objects) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  Fnv1a h;
  for (const auto* o : sorted) {
    h.add(o->id);
    add_pose(h, o->pose);
    const auto& r = o->relations;
    h.add((r.in_gripper ? 1 : 0) | (r.within_feasible_grasp ? 2 : 0) | (r.raised ? 4 : 0) | (r.gripper_above ? 8 : 0));
    h.add(o->supported_by);
    h.add((o->mass.measured() ? 1 : 0) | (o->stiffness.measured() ? 2 : 0));
  }
  add_pose(h, graph.ee.pose);
  h.add(graph.ee.gripper_open ? 1 : 0);
  h.add(graph.ee.held);
  return h.value();
}

}  // namespace tabletop
