#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace tabletop;

namespace {

PrimitiveAction act(ActionOp op, ObjectId target = kNoObject, Pose at = {}) { return PrimitiveAction{op, target, false, at}; }

std::vector<StepResult> pick_up(WorldState& w, ObjectId id, const NoiseProfile& noise, std::mt19937_64& rng) {
  const ObjectNode o = *w.find(id);
  std::vector<StepResult> out;
  out.push_back(step_primitive(w, act(ActionOp::Move, id, Pose{o.pose.x, o.pose.y, 0, 0}), noise, rng));
  out.push_back(step_primitive(w, act(ActionOp::Approach, id, Pose{o.pose.x, o.pose.y, o.grasp_height(), 0}), noise, rng));
  out.push_back(step_primitive(w, act(ActionOp::CloseGripper, id), noise, rng));
  out.push_back(step_primitive(w, act(ActionOp::Lift, id), noise, rng));
  return out;
}

void place_at(WorldState& w, double x, double y, const NoiseProfile& noise, std::mt19937_64& rng) {
  PrimitiveAction move = act(ActionOp::Move, kNoObject, Pose{x, y, 0, 0});
  move.waypoint = true;
  REQUIRE(step_primitive(w, move, noise, rng).status == StepStatus::Ok);
  REQUIRE(step_primitive(w, act(ActionOp::Lower), noise, rng).status == StepStatus::Ok);
  REQUIRE(step_primitive(w, act(ActionOp::OpenGripper), noise, rng).status == StepStatus::Ok);
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("init_world rejects invalid scenes") {
  CHECK_THROWS_AS(init_world(SceneSpec{}), InvalidScene);

  SceneSpec overlap = fixtures::four_objects();
  overlap.objects[1].pose = Pose{0.22, 0.17, 0, 0};
  CHECK_THROWS_AS(init_world(overlap), InvalidScene);

  SceneSpec outside = fixtures::four_objects();
  outside.objects[0].pose.x = 0.99;
  CHECK_THROWS_AS(init_world(outside), InvalidScene);

  SceneSpec dup = fixtures::four_objects();
  dup.objects[1].id = 0;
  CHECK_THROWS_AS(init_world(dup), InvalidScene);

  SceneSpec flat = fixtures::four_objects();
  flat.objects[2].bbox.dz = 0;
  CHECK_THROWS_AS(init_world(flat), InvalidScene);

  SceneSpec weightless = fixtures::four_objects();
  weightless.objects[3].mass.true_value = 0;
  CHECK_THROWS_AS(init_world(weightless), InvalidScene);

  const WorldState w = init_world(fixtures::four_objects());
  CHECK_FALSE(check_invariants(w));
}

TEST_CASE("noise profiles are validated") {
  NoiseProfile n;
  CHECK_NOTHROW(validate(n));
  n.pose_sigma = -0.1;
  CHECK_THROWS(validate(n));
  n = {};
  n.slip_prob = 1.5;
  CHECK_THROWS(validate(n));
  n = {};
  n.weigh_rel_err = 1.0;
  CHECK_THROWS(validate(n));
}

TEST_CASE("noise-free perception reproduces the true scene") {
  const WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  const ObservedScene obs = perceive(w, NoiseProfile{}, 99, rng);
  REQUIRE(obs.detections.size() == w.objects.size());
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    CHECK(obs.detections[i].pose == w.objects[i].pose);
    CHECK(obs.detections[i].visual == w.objects[i].visual);
  }
  CHECK_FALSE(obs.holding_something);
}

TEST_CASE("detected positions scatter with the configured sigma") {
  const WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.pose_sigma = 0.02;
  std::mt19937_64 rng(3);
  std::vector<double> ex, ez;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const ObservedScene obs = perceive(w, noise, seed, rng);
    for (std::size_t i = 0; i < w.objects.size(); ++i) {
      ex.push_back(obs.detections[i].pose.x - w.objects[i].pose.x);
      ez.push_back(obs.detections[i].pose.z - w.objects[i].pose.z);
    }
  }
  CHECK(std::abs(mean(ex)) < 0.001);
  CHECK(stddev(ex) == doctest::Approx(0.02).epsilon(0.05));
  CHECK(stddev(ez) == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("perception of an unchanged object is stable within an episode") {
  const WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.pose_sigma = 0.02;
  noise.attr_flip_prob = 0.3;
  std::mt19937_64 rng(3);
  CHECK(perceive(w, noise, 5, rng) == perceive(w, noise, 5, rng));
  CHECK_FALSE(perceive(w, noise, 5, rng) == perceive(w, noise, 6, rng));
}

TEST_CASE("attribute flips occur at the configured rate") {
  const WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.attr_flip_prob = 0.1;
  std::mt19937_64 rng(3);
  int colour_flips = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5000; ++seed) {
    const ObservedScene obs = perceive(w, noise, seed, rng);
    for (std::size_t i = 0; i < w.objects.size(); ++i, ++total)
      if (obs.detections[i].visual.color != w.objects[i].visual.color) ++colour_flips;
  }
  CHECK(static_cast<double>(colour_flips) / total == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("pose bias shifts every detection") {
  const WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.pose_bias_x = 0.03;
  std::mt19937_64 rng(1);
  const ObservedScene obs = perceive(w, noise, 0, rng);
  CHECK(obs.detections[2].pose.x == doctest::Approx(w.objects[2].pose.x + 0.03));
}

TEST_CASE("pick up holds the object above the table") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  for (const auto& r : pick_up(w, 2, NoiseProfile{}, rng)) CHECK(r.status == StepStatus::Ok);
  CHECK(w.ee.held == 2);
  CHECK(w.find(2)->pose.z > HeuristicParams{}.h_raised);
  CHECK(w.step_index == 4);
  CHECK(w.control_steps > 0);
  CHECK_FALSE(check_invariants(w));
  std::mt19937_64 r2(1);
  const ObservedScene obs = perceive(w, NoiseProfile{}, 0, r2);
  CHECK(obs.holding_something);
  CHECK(obs.detections.size() == 3);
}

TEST_CASE("weighing needs a lifted object") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  CHECK(step_primitive(w, act(ActionOp::Weigh), NoiseProfile{}, rng).status == StepStatus::ExecutionError);
  pick_up(w, 3, NoiseProfile{}, rng);
  WorldState low = init_world(fixtures::four_objects());
  const ObjectNode box = *low.find(3);
  step_primitive(low, act(ActionOp::Move, 3, box.pose), NoiseProfile{}, rng);
  step_primitive(low, act(ActionOp::Approach, 3, Pose{box.pose.x, box.pose.y, box.grasp_height(), 0}), NoiseProfile{}, rng);
  step_primitive(low, act(ActionOp::CloseGripper, 3), NoiseProfile{}, rng);
  CHECK(low.ee.held == 3);
  CHECK(step_primitive(low, act(ActionOp::Weigh), NoiseProfile{}, rng).status == StepStatus::ExecutionError);

  NoiseProfile exact;
  exact.weigh_rel_err = 0.0;
  const StepResult r = step_primitive(w, act(ActionOp::Weigh), exact, rng);
  CHECK(r.status == StepStatus::Ok);
  CHECK(r.observation.kind == ObservationKind::MassGrams);
  CHECK(*r.observation.value == 450.0);
}

TEST_CASE("weighings stay within the relative error bound") {
  WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.weigh_rel_err = 0.1;
  std::mt19937_64 rng(8);
  pick_up(w, 1, NoiseProfile{}, rng);
  std::vector<double> v;
  for (int i = 0; i < 4000; ++i) v.push_back(*step_primitive(w, act(ActionOp::Weigh), noise, rng).observation.value);
  CHECK(*std::min_element(v.begin(), v.end()) >= 270.0);
  CHECK(*std::max_element(v.begin(), v.end()) <= 330.0);
  CHECK(*std::min_element(v.begin(), v.end()) < 272.0);
  CHECK(*std::max_element(v.begin(), v.end()) > 328.0);
  CHECK(mean(v) == doctest::Approx(300.0).epsilon(0.005));
}

TEST_CASE("squeeze readings have the configured coefficient of variation") {
  WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  std::mt19937_64 rng(8);
  pick_up(w, 0, NoiseProfile{}, rng);
  std::vector<double> v;
  for (int i = 0; i < 4000; ++i) v.push_back(*step_primitive(w, act(ActionOp::Squeeze), noise, rng).observation.value);
  CHECK(mean(v) == doctest::Approx(5.0).epsilon(0.005));
  CHECK(stddev(v) / mean(v) == doctest::Approx(noise.stiffness_cov).epsilon(0.06));
  CHECK(stddev(v) / mean(v) >= 0.016);
  CHECK(stddev(v) / mean(v) <= 0.034);
}

TEST_CASE("released objects settle on what lies beneath") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  pick_up(w, 2, NoiseProfile{}, rng);
  place_at(w, 0.8, 0.45, NoiseProfile{}, rng);
  CHECK(w.ee.held == kNoObject);
  CHECK(w.find(2)->pose.z == doctest::Approx(0.10));
  CHECK(truth_graph(w).find(2)->pose.z == doctest::Approx(0.10));
  CHECK(infer_support(truth_graph(w)).find(2)->supported_by == 3);
  CHECK_FALSE(check_invariants(w));

  pick_up(w, 2, NoiseProfile{}, rng);
  place_at(w, 0.5, 0.3, NoiseProfile{}, rng);
  CHECK(w.find(2)->pose.z == doctest::Approx(0.0));
}

TEST_CASE("a finger landing on an object is an execution error") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  const Pose p = w.find(3)->pose;
  step_primitive(w, act(ActionOp::Move, 3, p), NoiseProfile{}, rng);
  const StepResult r =
      step_primitive(w, act(ActionOp::Approach, 3, Pose{p.x + 0.035, p.y, 0.05, 0}), NoiseProfile{}, rng);
  CHECK(r.status == StepStatus::ExecutionError);
  CHECK(w.ee.pose.z == doctest::Approx(0.10));
}

TEST_CASE("closing beside an object grasps nothing") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  const Pose p = w.find(2)->pose;
  step_primitive(w, act(ActionOp::Move, 2, p), NoiseProfile{}, rng);
  step_primitive(w, act(ActionOp::Approach, 2, Pose{p.x + 0.02, p.y, 0.05, 0}), NoiseProfile{}, rng);
  step_primitive(w, act(ActionOp::CloseGripper, 2), NoiseProfile{}, rng);
  CHECK(w.ee.held == kNoObject);
}

TEST_CASE("certain slip defeats every grasp") {
  WorldState w = init_world(fixtures::four_objects());
  NoiseProfile noise;
  noise.slip_prob = 1.0;
  std::mt19937_64 rng(1);
  pick_up(w, 2, noise, rng);
  CHECK(w.ee.held == kNoObject);
  CHECK(w.find(2)->pose.z == 0.0);
}

TEST_CASE("moving outside the workspace is refused") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);
  CHECK(step_primitive(w, act(ActionOp::Move, kNoObject, Pose{1.5, 0.3, 0, 0}), NoiseProfile{}, rng).status ==
        StepStatus::ExecutionError);
}

TEST_CASE("disturbances") {
  WorldState w = init_world(fixtures::four_objects());
  std::mt19937_64 rng(1);

  SUBCASE("drop_held releases the object onto the table") {
    pick_up(w, 2, NoiseProfile{}, rng);
    apply_disturbance(w, Disturbance{1, DisturbanceKind::DropHeld});
    CHECK(w.ee.held == kNoObject);
    CHECK(w.find(2)->pose.z == 0.0);
    CHECK_NOTHROW(apply_disturbance(w, Disturbance{2, DisturbanceKind::DropHeld}));
  }
  SUBCASE("displace lands on top of whatever is there") {
    apply_disturbance(w, Disturbance{1, DisturbanceKind::DisplaceObject, 2, kNoObject, 0.0, 0.3});
    CHECK(w.find(2)->pose.y == doctest::Approx(0.45));
    CHECK(w.find(2)->pose.z == doctest::Approx(0.10));
  }
  SUBCASE("displace off the table is rejected and leaves the world unchanged") {
    const WorldState before = w;
    CHECK_THROWS_AS(apply_disturbance(w, Disturbance{1, DisturbanceKind::DisplaceObject, 2, kNoObject, 0.5, 0}),
                    DisturbanceRejected);
    CHECK(w == before);
  }
  SUBCASE("swap exchanges positions") {
    apply_disturbance(w, Disturbance{1, DisturbanceKind::SwapTwoObjects, 0, 3});
    CHECK(w.find(0)->pose.x == doctest::Approx(0.8));
    CHECK(w.find(3)->pose.x == doctest::Approx(0.2));
  }
  SUBCASE("keyframe zero and unknown ids are rejected") {
    CHECK_THROWS_AS(apply_disturbance(w, Disturbance{0, DisturbanceKind::DropHeld}), DisturbanceRejected);
    CHECK_THROWS_AS(apply_disturbance(w, Disturbance{1, DisturbanceKind::DisplaceObject, 9}), DisturbanceRejected);
    CHECK_THROWS_AS(apply_disturbance(w, Disturbance{1, DisturbanceKind::SwapTwoObjects, 1, 1}),
                    DisturbanceRejected);
  }
}
