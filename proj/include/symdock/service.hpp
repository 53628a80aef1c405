/*
 * service.hpp
 *
 * Vessel <-> server split over plain TCP. Messages are newline-delimited
 * JSON objects with a "type" field; unknown fields are ignored.
 *
 *   -> {"type":"hello","version":1}          <- {"type":"hello","version":1}
 *   -> {"type":"ping"}                       <- {"type":"pong"}
 *   -> {"type":"synthesize","state":[x,y,psi],"prev_action":[u,v,r],
 *       "epoch_id":k[,"scenario":{...}]}
 *   <- {"type":"result","epoch_id":k,"selected":[u,v,r]|"at_target"|"not_winning",
 *       "candidate_count":n,"value":V,"synth_ms":t}
 *   <- {"type":"error","code":"...","message":"..."}
 *
 * The server re-synthesizes and selects on every synthesize request, using the
 * client's prev_action as the selector state. One request is in flight per
 * connection; the transition cache is shared by all connections.
 */

#ifndef SYMDOCK_SERVICE_HPP_
#define SYMDOCK_SERVICE_HPP_

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>

#include <json.hpp>

#include "closed_loop.hpp"
#include "config.hpp"
#include "errors.hpp"

namespace symdock {

inline constexpr int kProtocolVersion = 1;

// ---------------------------------------------------------------- messages

struct HelloMsg {
  int version = kProtocolVersion;
  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};
struct PingMsg {
  friend bool operator==(const PingMsg&, const PingMsg&) = default;
};
struct PongMsg {
  friend bool operator==(const PongMsg&, const PongMsg&) = default;
};
struct SynthesizeMsg {
  /* full scenario document; the server's preloaded scenario when absent */
  std::optional<json> scenario;
  Pose state;
  BodyVelocity prev_action;
  int epoch_id = 0;
  friend bool operator==(const SynthesizeMsg&, const SynthesizeMsg&) = default;
};
struct ResultMsg {
  enum class Selected { Action, AtTarget, NotWinning };
  int epoch_id = 0;
  Selected selected = Selected::NotWinning;
  BodyVelocity action;
  int candidate_count = 0;
  int value = -1;
  double synth_ms = 0.0;
  friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};
struct ErrorMsg {
  std::string code;
  std::string message;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using Message = std::variant<HelloMsg, PingMsg, PongMsg, SynthesizeMsg, ResultMsg, ErrorMsg>;

namespace detail {

inline std::array<double, 3> triple(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_array() || it->size() != 3)
    throw MalformedMessage(std::string("field '") + field + "' must be an array of 3 numbers", 0);
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(*it)[i].is_number())
      throw MalformedMessage(std::string("field '") + field + "' must be an array of 3 numbers", 0);
    out[i] = (*it)[i].get<double>();
  }
  return out;
}

inline int integer(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_number_integer())
    throw MalformedMessage(std::string("field '") + field + "' must be an integer", 0);
  return it->get<int>();
}

} // namespace detail

/* one message as a JSON line, including the trailing newline */
inline std::string encode(const Message& m) {
  json j = std::visit(
      [](const auto& msg) -> json {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          return {{"type", "hello"}, {"version", msg.version}};
        } else if constexpr (std::is_same_v<T, PingMsg>) {
          return {{"type", "ping"}};
        } else if constexpr (std::is_same_v<T, PongMsg>) {
          return {{"type", "pong"}};
        } else if constexpr (std::is_same_v<T, SynthesizeMsg>) {
          json o = {{"type", "synthesize"},
                    {"state", {msg.state.x, msg.state.y, msg.state.psi}},
                    {"prev_action", {msg.prev_action.u, msg.prev_action.v, msg.prev_action.r}},
                    {"epoch_id", msg.epoch_id}};
          if (msg.scenario)
            o["scenario"] = *msg.scenario;
          return o;
        } else if constexpr (std::is_same_v<T, ResultMsg>) {
          json sel;
          switch (msg.selected) {
          case ResultMsg::Selected::Action:
            sel = {msg.action.u, msg.action.v, msg.action.r};
            break;
          case ResultMsg::Selected::AtTarget:
            sel = "at_target";
            break;
          case ResultMsg::Selected::NotWinning:
            sel = "not_winning";
            break;
          }
          return {{"type", "result"},         {"epoch_id", msg.epoch_id},
                  {"selected", sel},          {"candidate_count", msg.candidate_count},
                  {"value", msg.value},       {"synth_ms", msg.synth_ms}};
        } else {
          return {{"type", "error"}, {"code", msg.code}, {"message", msg.message}};
        }
      },
      m);
  return j.dump() + "\n";
}

inline Message decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
    line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw MalformedMessage(std::string("invalid JSON: ") + e.what(), e.byte);
  }
  if (!j.is_object())
    throw MalformedMessage("message must be a JSON object", 0);
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string())
    throw MalformedMessage("missing string field 'type'", 0);
  const std::string type = type_it->get<std::string>();

  if (type == "hello")
    return HelloMsg{detail::integer(j, "version")};
  if (type == "ping")
    return PingMsg{};
  if (type == "pong")
    return PongMsg{};
  if (type == "synthesize") {
    SynthesizeMsg m;
    const auto s = detail::triple(j, "state");
    const auto a = detail::triple(j, "prev_action");
    m.state = {s[0], s[1], s[2]};
    m.prev_action = {a[0], a[1], a[2]};
    m.epoch_id = detail::integer(j, "epoch_id");
    if (const auto it = j.find("scenario"); it != j.end() && !it->is_null()) {
      if (!it->is_object())
        throw MalformedMessage("field 'scenario' must be an object", 0);
      m.scenario = *it;
    }
    return m;
  }
  if (type == "result") {
    ResultMsg m;
    m.epoch_id = detail::integer(j, "epoch_id");
    const auto it = j.find("selected");
    if (it == j.end())
      throw MalformedMessage("missing field 'selected'", 0);
    if (it->is_string()) {
      const std::string s = it->get<std::string>();
      if (s == "at_target")
        m.selected = ResultMsg::Selected::AtTarget;
      else if (s == "not_winning")
        m.selected = ResultMsg::Selected::NotWinning;
      else
        throw MalformedMessage("unknown selection '" + s + "'", 0);
    } else {
      const auto a = detail::triple(j, "selected");
      m.selected = ResultMsg::Selected::Action;
      m.action = {a[0], a[1], a[2]};
    }
    m.candidate_count = detail::integer(j, "candidate_count");
    m.value = detail::integer(j, "value");
    const auto ms = j.find("synth_ms");
    if (ms == j.end() || !ms->is_number())
      throw MalformedMessage("field 'synth_ms' must be a number", 0);
    m.synth_ms = ms->get<double>();
    return m;
  }
  if (type == "error") {
    ErrorMsg m;
    m.code = j.value("code", std::string{});
    m.message = j.value("message", std::string{});
    return m;
  }
  throw MalformedMessage("unknown message type '" + type + "'", 0);
}

// ---------------------------------------------------------------- sockets

class Socket {
public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0)
      ::close(fd_);
    fd_ = -1;
  }
  void shutdown() {
    if (fd_ >= 0)
      ::shutdown(fd_, SHUT_RDWR);
  }

private:
  int fd_ = -1;
};

/* buffered line reader/writer over a connected socket */
class LineChannel {
public:
  explicit LineChannel(Socket s) : sock_(std::move(s)) {}

  /* next line without its newline; nullopt on timeout; ConnectionLost on EOF or error */
  std::optional<std::string> read_line(int timeout_ms) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0)
        return std::nullopt;
      pollfd p{sock_.fd(), POLLIN, 0};
      const int rc = ::poll(&p, 1, static_cast<int>(left));
      if (rc < 0) {
        if (errno == EINTR)
          continue;
        throw ConnectionLost(std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0)
        return std::nullopt;
      char chunk[4096];
      const ssize_t n = ::recv(sock_.fd(), chunk, sizeof chunk, 0);
      if (n == 0)
        throw ConnectionLost("peer closed the connection");
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN)
          continue;
        throw ConnectionLost(std::string("recv: ") + std::strerror(errno));
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void write(std::string_view data) {
    while (!data.empty()) {
      const ssize_t n = ::send(sock_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR)
          continue;
        throw ConnectionLost(std::string("send: ") + std::strerror(errno));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  void send(const Message& m) { write(encode(m)); }
  Socket& socket() { return sock_; }

private:
  Socket sock_;
  std::string buf_;
};

inline Socket connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw ConnectionLost("resolve " + host + ": " + ::gai_strerror(rc));
  std::string last = "no address";
  for (addrinfo* a = res; a; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!s.valid())
      continue;
    if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw ConnectionLost("connect " + host + ":" + service + ": " + last);
}

/* "host:port" */
inline std::pair<std::string, int> parse_endpoint(const std::string& ep) {
  const auto colon = ep.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == ep.size())
    throw ConfigError("endpoint must be HOST:PORT, got '" + ep + "'");
  const std::string port = ep.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || p <= 0 || p > 65535)
    throw ConfigError("invalid port in endpoint '" + ep + "'");
  return {ep.substr(0, colon), static_cast<int>(p)};
}

// ---------------------------------------------------------------- server

struct ServerOptions {
  /* 0 picks an ephemeral port */
  int port = 0;
  std::string bind_address = "127.0.0.1";
  /* artificial delay before each synthesize reply (fault injection) */
  int delay_ms = 0;
  unsigned threads = 0;
};

class SynthServer {
public:
  SynthServer(ScenarioFile preloaded, ServerOptions opts)
      : scenario_(std::move(preloaded)), opts_(std::move(opts)), synth_(opts_.threads) {}

  SynthServer(const SynthServer&) = delete;
  SynthServer& operator=(const SynthServer&) = delete;
  ~SynthServer() { stop(); }

  /* bind and start accepting; throws Error when the port is unavailable */
  void start() {
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener_.valid())
      throw Error(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
    if (::inet_pton(AF_INET, opts_.bind_address.c_str(), &addr.sin_addr) != 1)
      throw Error("invalid bind address '" + opts_.bind_address + "'");
    if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw Error("bind port " + std::to_string(opts_.port) + ": " + std::strerror(errno));
    if (::listen(listener_.fd(), 16) != 0)
      throw Error(std::string("listen: ") + std::strerror(errno));
    socklen_t len = sizeof addr;
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    // warm the transition cache so the first epoch is not penalized
    synth_.transitions(Grid(scenario_.scenario.boundary, scenario_.synthesis.x_res,
                            scenario_.synthesis.y_res, scenario_.synthesis.heading_bins),
                       scenario_.synthesis.inputs, scenario_.synthesis.tau_s);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  int port() const { return port_; }
  bool running() const { return running_; }

  void stop() {
    if (!running_.exchange(false))
      return;
    if (acceptor_.joinable())
      acceptor_.join();
    listener_.close();
    std::list<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      workers.swap(workers_);
    }
    for (auto& w : workers)
      if (w.joinable())
        w.join();
  }

  /* handle one decoded request; exposed for direct testing */
  Message handle(const Message& req) const {
    if (const auto* h = std::get_if<HelloMsg>(&req)) {
      if (h->version != kProtocolVersion)
        return ErrorMsg{"unsupported_version",
                        "server speaks version " + std::to_string(kProtocolVersion)};
      return HelloMsg{kProtocolVersion};
    }
    if (std::holds_alternative<PingMsg>(req))
      return PongMsg{};
    if (const auto* s = std::get_if<SynthesizeMsg>(&req))
      return synthesize(*s);
    return ErrorMsg{"unexpected_type", "servers accept hello, ping and synthesize"};
  }

private:
  Message synthesize(const SynthesizeMsg& req) const {
    ScenarioFile sf;
    try {
      sf = req.scenario ? scenario_from_json(*req.scenario) : scenario_;
    } catch (const Error& e) {
      return ErrorMsg{"bad_scenario", e.what()};
    }
    if (!sf.scenario.boundary.contains(req.state.x, req.state.y))
      return ErrorMsg{"out_of_domain", "state outside the scenario boundary"};
    if (opts_.delay_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(opts_.delay_ms));
    const PlanResponse p = plan_epoch(sf, synth_, {req.state, req.prev_action, req.epoch_id});
    ResultMsg r;
    r.epoch_id = req.epoch_id;
    r.candidate_count = p.candidate_count;
    r.value = p.value;
    r.synth_ms = p.synth_ms;
    switch (p.kind) {
    case PlanResponse::Kind::Action:
      r.selected = ResultMsg::Selected::Action;
      r.action = p.action;
      break;
    case PlanResponse::Kind::AtTarget:
      r.selected = ResultMsg::Selected::AtTarget;
      break;
    default:
      r.selected = ResultMsg::Selected::NotWinning;
      break;
    }
    return r;
  }

  void accept_loop() {
    while (running_) {
      pollfd p{listener_.fd(), POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0)
        continue;
      Socket conn(::accept(listener_.fd(), nullptr, nullptr));
      if (!conn.valid())
        continue;
      const int one = 1;
      ::setsockopt(conn.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      workers_.emplace_back([this, c = std::move(conn)]() mutable { serve(std::move(c)); });
    }
  }

  void serve(Socket conn) {
    LineChannel ch(std::move(conn));
    try {
      while (running_) {
        const auto line = ch.read_line(100);
        if (!line)
          continue;
        if (line->empty())
          continue;
        Message reply;
        try {
          reply = handle(decode(*line));
        } catch (const MalformedMessage& e) {
          reply = ErrorMsg{"malformed", e.what()};
        } catch (const std::exception& e) {
          reply = ErrorMsg{"internal", e.what()};
        }
        ch.send(reply);
      }
    } catch (const ConnectionLost&) {
    }
  }

  ScenarioFile scenario_;
  ServerOptions opts_;
  Synthesizer synth_;
  Socket listener_;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<std::thread> workers_;
};

// ---------------------------------------------------------------- client

class SynthClient {
public:
  SynthClient(std::string host, int port, int timeout_ms = 5000)
      : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {}

  void set_timeout(int ms) { timeout_ms_ = ms; }
  int timeout() const { return timeout_ms_; }

  /* connect and negotiate the protocol version */
  void connect() {
    ch_.emplace(connect_tcp(host_, port_));
    const Message r = exchange(HelloMsg{}, [](const Message& m) {
      return std::holds_alternative<HelloMsg>(m) || std::holds_alternative<ErrorMsg>(m);
    });
    if (const auto* e = std::get_if<ErrorMsg>(&r))
      throw ConnectionLost("handshake rejected: " + e->message);
  }

  bool connected() const { return ch_.has_value(); }

  void ping() {
    ensure_connected();
    exchange(PingMsg{}, [](const Message& m) { return std::holds_alternative<PongMsg>(m); });
  }

  /* blocking request; Timeout when no matching result arrives in time */
  ResultMsg synthesize(const SynthesizeMsg& req) {
    ensure_connected();
    const Message r = exchange(req, [&](const Message& m) {
      if (const auto* res = std::get_if<ResultMsg>(&m))
        return res->epoch_id == req.epoch_id;
      return std::holds_alternative<ErrorMsg>(m);
    });
    if (const auto* e = std::get_if<ErrorMsg>(&r))
      throw Error("server error " + e->code + ": " + e->message);
    return std::get<ResultMsg>(r);
  }

private:
  void ensure_connected() {
    if (!ch_)
      connect();
  }

  template <class Accept>
  Message exchange(const Message& req, Accept&& accept) {
    try {
      ch_->send(req);
      const auto deadline =
          std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
      for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                              deadline - std::chrono::steady_clock::now())
                              .count();
        const auto line = ch_->read_line(static_cast<int>(std::max<long long>(left, 0)));
        if (!line)
          throw Timeout("no reply within " + std::to_string(timeout_ms_) + " ms");
        const Message m = decode(*line);
        // stale replies to requests that already timed out are dropped
        if (accept(m))
          return m;
      }
    } catch (const ConnectionLost&) {
      ch_.reset();
      throw;
    }
  }

  std::string host_;
  int port_;
  int timeout_ms_;
  std::optional<LineChannel> ch_;
};

/* runner-side planner backed by the service; timeouts and lost connections become EpochMiss */
inline Planner service_planner(std::shared_ptr<SynthClient> client,
                               std::optional<json> scenario = std::nullopt) {
  return [client, scenario](const PlanRequest& req) {
    PlanResponse resp;
    try {
      const ResultMsg r =
          client->synthesize({scenario, req.state, req.prev_action, req.epoch_id});
      resp.candidate_count = r.candidate_count;
      resp.value = r.value;
      resp.synth_ms = r.synth_ms;
      switch (r.selected) {
      case ResultMsg::Selected::Action:
        resp.kind = PlanResponse::Kind::Action;
        resp.action = r.action;
        break;
      case ResultMsg::Selected::AtTarget:
        resp.kind = PlanResponse::Kind::AtTarget;
        break;
      case ResultMsg::Selected::NotWinning:
        resp.kind = PlanResponse::Kind::NotWinning;
        break;
      }
    } catch (const Timeout&) {
      resp.kind = PlanResponse::Kind::EpochMiss;
    } catch (const ConnectionLost&) {
      resp.kind = PlanResponse::Kind::EpochMiss;
    }
    return resp;
  };
}

} // namespace symdock

#endif /* SYMDOCK_SERVICE_HPP_ */
