#include <doctest.h>

#include <random>
#include <thread>

#include "fixtures.hpp"
#include "tabletop/bridge.hpp"

using namespace tabletop;

namespace {

Json reply(BridgeSession& s, const Json& request) { return Json::parse(s.handle(request.dump())); }

Json reset_request(const SceneSpec& scene) { return Json{{"type", "reset"}, {"scene", scene}, {"seed", 4}}; }

/// Bridge server on an ephemeral port, served from a background thread.
class LocalServer {
 public:
  explicit LocalServer(std::optional<int> max_frames = std::nullopt)
      : server_(BridgeServer::Options{"127.0.0.1", 0, max_frames}) {
    server_.start();
    thread_ = std::thread([this] { server_.serve(); });
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  int port() const { return server_.port(); }

 private:
  BridgeServer server_;
  std::thread thread_;
};

}  // namespace

TEST_CASE("hello negotiates the protocol version") {
  BridgeSession s;
  const Json ok = reply(s, {{"type", "hello"}, {"protocol_version", kProtocolVersion}});
  CHECK(ok.at("status") == "ok");
  CHECK(ok.at("payload").at("protocol_version") == kProtocolVersion);
  const Json bad = reply(s, {{"type", "hello"}, {"protocol_version", 99}});
  CHECK(bad.at("status") == "error");
  CHECK(bad.at("code") == "bad_request");
}

TEST_CASE("requests before reset are bad_state") {
  BridgeSession s;
  for (const char* type : {"observe", "truth", "execute", "disturb"}) {
    const Json r = reply(s, {{"type", type}});
    CHECK(r.at("code") == "bad_state");
  }
}

TEST_CASE("malformed requests are bad_request") {
  BridgeSession s;
  for (const std::string line : {"", "{", "[]", "42", R"({"type": 3})", R"({"kind": "hello"})", R"({"type": "fly"})"}) {
    CAPTURE(line);
    const Json r = Json::parse(s.handle(line));
    CHECK(r.at("status") == "error");
    CHECK(r.at("code") == "bad_request");
  }
  SceneSpec broken = fixtures::four_objects();
  broken.objects[1].pose = broken.objects[0].pose;
  CHECK(reply(s, reset_request(broken)).at("code") == "bad_request");
}

TEST_CASE("a session drives the simulator") {
  BridgeSession s;
  const SceneSpec scene = fixtures::four_objects();
  REQUIRE(reply(s, reset_request(scene)).at("status") == "ok");
  const Json obs = reply(s, {{"type", "observe"}});
  CHECK(obs.at("payload").at("scene").at("detections").size() == 4);

  Json move = PrimitiveAction{ActionOp::Move, 2, false, Pose{0.8, 0.15, 0.3, 0}};
  move["type"] = "execute";
  const Json step = reply(s, move);
  REQUIRE(step.at("status") == "ok");
  CHECK(step.at("payload").get<StepResult>().status == StepStatus::Ok);

  const Json truth = reply(s, {{"type", "truth"}});
  CHECK(truth.at("payload").get<WorldState>().step_index == 1);

  const Json rejected = reply(s, {{"type", "disturb"},
                                  {"disturbance", Disturbance{1, DisturbanceKind::DisplaceObject, 2, kNoObject, 5, 0}}});
  CHECK(rejected.at("code") == "rejected");
  CHECK_FALSE(s.shutdown_requested());
  CHECK(reply(s, {{"type", "shutdown"}}).at("status") == "ok");
  CHECK(s.shutdown_requested());
}

TEST_CASE("the frame limit caps executes per reset") {
  BridgeSession s(2);
  reply(s, reset_request(fixtures::four_objects()));
  Json lift = PrimitiveAction{ActionOp::Lift, kNoObject, false, {}};
  lift["type"] = "execute";
  CHECK(reply(s, lift).at("status") == "ok");
  CHECK(reply(s, lift).at("status") == "ok");
  CHECK(reply(s, lift).at("code") == "bad_state");
  reply(s, reset_request(fixtures::four_objects()));
  CHECK(reply(s, lift).at("status") == "ok");
}

TEST_CASE("random request lines never break a session") {
  BridgeSession s;
  reply(s, reset_request(fixtures::four_objects()));
  std::mt19937_64 rng(2024);
  const std::vector<std::string> fragments = {
      "{", "}", "[", "]", "\"type\"", ":", ",", "\"execute\"", "\"observe\"", "\"reset\"", "\"op\"", "\"move\"",
      "\"target\"", "-1", "1e308", "null", "true", "\"at\"", "{\"x\":1}", "\"scene\"", "\xff", "\\u0000", " "};
  std::uniform_int_distribution<std::size_t> pick(0, fragments.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 2000; ++i) {
    std::string line;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) line += (i % 3 == 0) ? std::string(1, static_cast<char>(byte(rng))) : fragments[pick(rng)];
    std::string out;
    REQUIRE_NOTHROW(out = s.handle(line));
    const Json r = Json::parse(out);
    CHECK((r.at("status") == "ok" || r.at("status") == "error"));
  }
  CHECK(reply(s, {{"type", "observe"}}).at("status") == "ok");
}

TEST_CASE("remote episodes match in-process episodes") {
  LocalServer server;
  const Dataset d = generate_dataset(1, 12);
  NoiseProfile noise;
  noise.pose_sigma = 0.01;
  noise.slip_prob = 0.1;
  noise.attr_flip_prob = 0.02;
  RemoteRobot remote("127.0.0.1", server.port());
  for (const Task& task : d.tasks) {
    CAPTURE(task.instruction);
    const SceneSpec& scene = d.scenes[static_cast<std::size_t>(task.scene_id)];
    const std::uint64_t seed = episode_seed(noise.seed, task.id, 0);
    SimRobot local;
    const EpisodeTrace a = run_episode(task, scene, noise, {}, local, seed);
    const EpisodeTrace b = run_episode(task, scene, noise, {}, remote, seed);
    CHECK(a == b);
    CHECK(local.truth() == remote.truth());
  }
}

TEST_CASE("remote robot reports transport failures") {
  int port = 0;
  {
    LocalServer server;
    port = server.port();
  }
  RemoteRobot robot("127.0.0.1", port, std::chrono::milliseconds(500));
  CHECK_THROWS_AS(robot.observe(), RobotFailure);

  LocalServer server;
  RemoteRobot fresh("127.0.0.1", server.port());
  CHECK_THROWS_AS(fresh.observe(), RobotFailure);  // bad_state before reset
  fresh.reset(fixtures::four_objects(), {}, 1);
  CHECK(fresh.observe().scene.detections.size() == 4);
  CHECK_THROWS_AS(fresh.disturb(Disturbance{1, DisturbanceKind::SwapTwoObjects, 0, 0}), DisturbanceRejected);
}

TEST_CASE("port comes from the environment when valid") {
  ::setenv(kPortEnv, "9123", 1);
  CHECK(port_from_env(7878) == 9123);
  ::setenv(kPortEnv, "nope", 1);
  CHECK(port_from_env(7878) == 7878);
  ::unsetenv(kPortEnv);
  CHECK(port_from_env(7878) == 7878);
}
