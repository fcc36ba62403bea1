#include "tabletop/bridge.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace tabletop {

namespace {

constexpr std::size_t kMaxLine = 8u << 20;

std::string encode(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

Json ok(Json payload = Json::object()) { return Json{{"status", "ok"}, {"payload", std::move(payload)}}; }

Json error(std::string_view code, std::string_view message) {
  return Json{{"status", "error"}, {"code", code}, {"message", message}};
}

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

class RequestError : public std::runtime_error {
 public:
  RequestError(std::string code, const std::string& message) : std::runtime_error(message), code(std::move(code)) {}
  std::string code;
};

}  // namespace

int port_from_env(int fallback) {
  const char* v = std::getenv(kPortEnv);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long p = std::strtol(v, &end, 10);
  if (*end != '\0' || p < 0 || p > 65535) return fallback;
  return static_cast<int>(p);
}

std::string BridgeSession::handle(const std::string& line) {
  Json response;
  try {
    Json request = Json::parse(line);
    if (!request.is_object() || !request.contains("type") || !request.at("type").is_string())
      throw RequestError("bad_request", "request must be an object with a string 'type'");
    response = dispatch(request);
  } catch (const RequestError& e) {
    response = error(e.code, e.what());
  } catch (const DisturbanceRejected& e) {
    response = error("rejected", e.what());
  } catch (const std::exception& e) {
    response = error("bad_request", e.what());
  }
  return encode(response);
}

Json BridgeSession::dispatch(const Json& req) {
  const std::string type = req.at("type").get<std::string>();
  if (type == "hello") {
    const int version = req.at("protocol_version").get<int>();
    if (version != kProtocolVersion)
      throw RequestError("bad_request", "protocol version " + std::to_string(version) + " is not supported");
    return ok(Json{{"protocol_version", kProtocolVersion}});
  }
  if (type == "shutdown") {
    shutdown_ = true;
    return ok();
  }
  if (type == "reset") {
    const SceneSpec spec = req.at("scene").get<SceneSpec>();
    const NoiseProfile noise = req.contains("noise") ? req.at("noise").get<NoiseProfile>() : NoiseProfile{};
    const auto seed = req.value("seed", std::uint64_t{0});
    try {
      robot_.reset(spec, noise, seed);
    } catch (const InvalidScene& e) {
      throw RequestError("bad_request", e.what());
    }
    frames_ = 0;
    return ok();
  }
  if (type != "observe" && type != "execute" && type != "disturb" && type != "truth")
    throw RequestError("bad_request", "unknown request type '" + type + "'");
  if (!robot_.ready()) throw RequestError("bad_state", type + " before reset");

  if (type == "observe") {
    const Observation o = robot_.observe();
    return ok(Json{{"scene", o.scene}, {"ee", o.ee}});
  }
  if (type == "execute") {
    const PrimitiveAction action = req.get<PrimitiveAction>();
    if (max_frames_ && frames_ >= *max_frames_)
      throw RequestError("bad_state", "frame limit of " + std::to_string(*max_frames_) + " reached");
    ++frames_;
    return ok(robot_.execute(action));
  }
  if (type == "disturb") {
    robot_.disturb(req.at("disturbance").get<Disturbance>());
    return ok();
  }
  return ok(robot_.world());
}

BridgeServer::~BridgeServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void BridgeServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
  if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("bad listen address " + opts_.host);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
    throw std::runtime_error("bind " + opts_.host + ":" + std::to_string(opts_.port) + ": " + std::strerror(errno));
  if (::listen(listen_fd_, 4) < 0) throw std::runtime_error(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

void BridgeServer::stop() {
  stopping_ = true;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  const int s = session_fd_.load();
  if (s >= 0) ::shutdown(s, SHUT_RDWR);
}

void BridgeServer::serve() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    session_fd_ = fd;
    if (stopping_) ::shutdown(fd, SHUT_RDWR);
    run_session(fd);
    session_fd_ = -1;
    ::close(fd);
  }
}

void BridgeServer::run_session(int fd) {
  BridgeSession session(opts_.max_frames);
  std::string buffer;
  char chunk[4096];
  bool overflow = false;
  while (!stopping_) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
      std::string line = buffer.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string reply =
          overflow ? encode(error("bad_request", "request line too long")) : session.handle(line);
      overflow = false;
      if (!send_all(fd, reply + "\n")) return;
      if (session.shutdown_requested()) {
        stopping_ = true;
        return;
      }
    }
    buffer.erase(0, start);
    if (buffer.size() > kMaxLine) {
      buffer.clear();
      overflow = true;
    }
  }
}

RemoteRobot::RemoteRobot(std::string host, int port, std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {}

RemoteRobot::~RemoteRobot() { close_socket(); }

void RemoteRobot::close_socket() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void RemoteRobot::connect_once() {
  if (fd_ >= 0) return;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || !res)
    throw RobotFailure("cannot resolve " + host_);
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd < 0 ? -1 : ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    const std::string why = std::strerror(errno);
    if (fd >= 0) ::close(fd);
    throw RobotFailure("connect " + host_ + ":" + std::to_string(port_) + ": " + why);
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  fd_ = fd;
  const Json hello = call(Json{{"type", "hello"}, {"protocol_version", kProtocolVersion}});
  (void)hello;
}

std::string RemoteRobot::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw RobotFailure("bridge timeout");
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) throw RobotFailure("bridge timeout");
    char chunk[8192];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) throw RobotFailure("bridge connection closed");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Json RemoteRobot::call(const Json& request) {
  if (fd_ < 0) connect_once();
  try {
    if (!send_all(fd_, encode(request) + "\n")) throw RobotFailure("bridge send failed");
    Json response = Json::parse(read_line());
    if (response.value("status", "") == "ok") return response.value("payload", Json::object());
    const std::string code = response.value("code", "unknown");
    const std::string message = response.value("message", "");
    if (code == "rejected") throw DisturbanceRejected(message);
    throw RobotFailure(code + ": " + message);
  } catch (const RobotFailure&) {
    close_socket();
    throw;
  } catch (const Json::exception& e) {
    close_socket();
    throw RobotFailure(std::string("bad response: ") + e.what());
  }
}

void RemoteRobot::reset(const SceneSpec& spec, const NoiseProfile& noise, std::uint64_t seed) {
  call(Json{{"type", "reset"}, {"scene", spec}, {"noise", noise}, {"seed", seed}});
}

Observation RemoteRobot::observe() {
  const Json p = call(Json{{"type", "observe"}});
  try {
    return Observation{p.at("scene").get<ObservedScene>(), p.at("ee").get<EndEffector>()};
  } catch (const std::exception& e) {
    throw RobotFailure(std::string("bad observe payload: ") + e.what());
  }
}

StepResult RemoteRobot::execute(const PrimitiveAction& action) {
  Json req = action;
  req["type"] = "execute";
  const Json p = call(req);
  try {
    return p.get<StepResult>();
  } catch (const std::exception& e) {
    throw RobotFailure(std::string("bad execute payload: ") + e.what());
  }
}

void RemoteRobot::disturb(const Disturbance& d) { call(Json{{"type", "disturb"}, {"disturbance", d}}); }

WorldState RemoteRobot::truth() {
  const Json p = call(Json{{"type", "truth"}});
  try {
    return p.get<WorldState>();
  } catch (const std::exception& e) {
    throw RobotFailure(std::string("bad truth payload: ") + e.what());
  }
}

void RemoteRobot::shutdown_server() { call(Json{{"type", "shutdown"}}); }

}  // namespace tabletop
