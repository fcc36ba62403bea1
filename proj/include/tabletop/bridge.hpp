#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "tabletop/robot.hpp"
#include "tabletop/serialize.hpp"

namespace tabletop {

inline constexpr int kProtocolVersion = 1;
inline constexpr int kDefaultPort = 7878;
inline constexpr const char* kPortEnv = "TABLETOP_PORT";

/// Port from TABLETOP_PORT when set and valid, otherwise `fallback`.
int port_from_env(int fallback);

/// Handles one request line against a session's robot and returns the
/// response line (without the newline). Exposed for tests; never throws.
class BridgeSession {
 public:
  explicit BridgeSession(std::optional<int> max_frames = std::nullopt) : max_frames_(max_frames) {}

  std::string handle(const std::string& line);
  bool shutdown_requested() const { return shutdown_; }

 private:
  Json dispatch(const Json& request);

  SimRobot robot_;
  std::optional<int> max_frames_;
  int frames_ = 0;
  bool shutdown_ = false;
};

/// Newline-delimited JSON server over TCP. One client session at a time; each
/// session owns a fresh world.
class BridgeServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = kDefaultPort;  // 0 picks an ephemeral port
    std::optional<int> max_frames;
  };

  explicit BridgeServer(Options options) : opts_(std::move(options)) {}
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Binds and listens. Throws std::runtime_error when the endpoint is taken.
  void start();
  /// Bound port (valid after start).
  int port() const { return port_; }
  /// Accepts sessions until a client sends shutdown or stop() is called.
  void serve();
  /// Safe to call from another thread.
  void stop();

 private:
  void run_session(int fd);

  Options opts_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> session_fd_{-1};
};

/// Robot proxy speaking the bridge protocol. Transport failures and protocol
/// errors surface as RobotFailure (an ExecutionError in the episode).
class RemoteRobot : public Robot {
 public:
  RemoteRobot(std::string host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  ~RemoteRobot() override;
  RemoteRobot(const RemoteRobot&) = delete;
  RemoteRobot& operator=(const RemoteRobot&) = delete;

  void reset(const SceneSpec& spec, const NoiseProfile& noise, std::uint64_t seed) override;
  Observation observe() override;
  StepResult execute(const PrimitiveAction& action) override;
  void disturb(const Disturbance& d) override;
  WorldState truth() override;
  /// Asks the server to exit.
  void shutdown_server();

  /// One raw round trip; returns the parsed response.
  Json call(const Json& request);

 private:
  void connect_once();
  void close_socket();
  std::string read_line();

  std::string host_;
  int port_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace tabletop
