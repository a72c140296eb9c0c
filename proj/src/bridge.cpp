#include "ssrd/bridge.hpp"

#include "ssrd/error.hpp"
#include "ssrd/scenario_io.hpp"
#include "ssrd/sequences.hpp"
#include "ssrd/valuation.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

namespace ssrd {

using nlohmann::json;

void ScenarioRegistry::add(const std::string& name, Scenario scenario) {
  scenario.validate();
  scenarios_.insert_or_assign(name, std::move(scenario));
}

const Scenario* ScenarioRegistry::find(const std::string& name) const {
  auto it = scenarios_.find(name);
  return it == scenarios_.end() ? nullptr : &it->second;
}

std::vector<std::string> ScenarioRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : scenarios_) out.push_back(k);
  return out;
}

ScenarioRegistry ScenarioRegistry::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError(fmt::format("scenario directory {} not found", dir.string()));
  ScenarioRegistry reg;
  reg.base_dir = dir;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".scn") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) reg.add(f.stem().string(), load_scenario(f));
  return reg;
}

// ---------------------------------------------------------------------------

namespace {

/// Error surfaced to the client as {"code", "message"[, "constraint"]}.
struct ProtocolError {
  std::string code;
  std::string message;
  std::string constraint;
};

[[noreturn]] void fail(std::string code, std::string message) { throw ProtocolError{std::move(code), std::move(message), {}}; }

const json& require(const json& req, const char* key) {
  auto it = req.find(key);
  if (it == req.end()) fail("invalid_request", fmt::format("missing field '{}'", key));
  return *it;
}

std::uint64_t as_seed(const json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail("invalid_request", fmt::format("'{}' must be a non-negative integer", key));
}

InvestmentSequence as_sequence(const json& v) {
  if (v.is_string()) return parse_sequence(v.get<std::string>());
  if (!v.is_array()) fail("invalid_request", "'sequence' must be a string literal or an array of arrays");
  InvestmentSequence seq;
  for (const auto& p : v) {
    if (!p.is_array()) fail("invalid_request", "'sequence' entries must be arrays of region ids");
    Portfolio port;
    for (const auto& r : p) {
      if (!r.is_number_integer()) fail("invalid_request", "region ids must be integers");
      port.regions.push_back(r.get<int>());
    }
    seq.portfolios.push_back(std::move(port));
  }
  return seq;
}

json state_payload(const MdpEnv& env) {
  const MdpState& s = env.state();
  const MdpFeatures f = env.features();
  const ActionMask m = env.mask();
  json j;
  j["step"] = s.step;
  j["invested"] = s.invested;
  j["sequence"] = format_sequence(s.partial);
  j["node_features"] = f.node;
  j["node_shape"] = {f.n_regions, kNodeFeatures};
  j["global_features"] = f.global;
  j["global_shape"] = {kGlobalFeatures};
  j["mask"] = m.allowed;
  j["min_size"] = m.min_size;
  j["max_size"] = m.max_size;
  j["skip_allowed"] = m.skip_allowed;
  j["done"] = env.done();
  return j;
}

}  // namespace

Session::Session(const ScenarioRegistry& registry) : registry_(registry) {}

std::string Session::handle(const std::string& line) {
  json id = nullptr;
  json resp;
  try {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error& e) {
      fail("parse_error", e.what());
    }
    if (!req.is_object()) fail("invalid_request", "request must be a JSON object");
    if (auto it = req.find("id"); it != req.end()) id = *it;
    const json& verb_j = require(req, "verb");
    if (!verb_j.is_string()) fail("invalid_request", "'verb' must be a string");
    const std::string verb = verb_j.get<std::string>();
    resp["verb"] = verb;
    static constexpr std::array<std::string_view, 7> kVerbs{"hello", "init", "reset", "mask", "step", "eval", "close"};
    if (std::find(kVerbs.begin(), kVerbs.end(), verb) == kVerbs.end())
      fail("unknown_verb", fmt::format("unknown verb '{}'", verb));

    if (verb == "hello") {
      if (auto it = req.find("version"); it != req.end() && *it != kProtocolVersion)
        fail("unsupported_version", fmt::format("server speaks {}", kProtocolVersion));
      greeted_ = true;
      resp["version"] = kProtocolVersion;
      resp["scenarios"] = registry_.names();
    } else if (verb == "close") {
      closed_ = true;
    } else if (!greeted_) {
      fail("protocol_state", "hello must come first");
    } else if (verb == "init") {
      double gamma = 1.0;
      if (auto it = req.find("gamma"); it != req.end()) {
        if (!it->is_number()) fail("invalid_request", "'gamma' must be a number");
        gamma = it->get<double>();
      }
      Scenario scn;
      if (auto it = req.find("scenario_text"); it != req.end()) {
        if (!it->is_string()) fail("invalid_request", "'scenario_text' must be a string");
        scn = parse_scenario(it->get<std::string>(), registry_.base_dir);
      } else {
        const json& name = require(req, "scenario");
        if (!name.is_string()) fail("invalid_request", "'scenario' must be a string");
        const Scenario* found = registry_.find(name.get<std::string>());
        if (!found) fail("unknown_scenario", fmt::format("no scenario named '{}'", name.get<std::string>()));
        scn = *found;
      }
      MdpConfig cfg;
      cfg.gamma = gamma;
      env_.emplace(std::move(scn), cfg);
      const Scenario& s = env_->scenario();
      resp["scenario"] = s.name;
      resp["n_regions"] = s.n_regions();
      resp["k"] = s.k;
      resp["horizon"] = s.horizon;
      resp["n_paths"] = s.n_paths;
      resp["seed"] = s.seed;
      resp["gamma"] = gamma;
      resp["node_shape"] = {s.n_regions(), kNodeFeatures};
      resp["global_shape"] = {kGlobalFeatures};
    } else if (!env_) {
      fail("protocol_state", "init must precede this verb");
    } else if (verb == "reset") {
      std::uint64_t seed = env_->scenario().seed;
      if (auto it = req.find("episode_seed"); it != req.end()) seed = as_seed(*it, "episode_seed");
      env_->reset(seed);
      resp["episode_seed"] = seed;
      resp["state"] = state_payload(*env_);
    } else if (verb == "mask") {
      if (!env_->active()) fail("protocol_state", "reset must precede mask");
      const ActionMask m = env_->mask();
      resp["mask"] = m.allowed;
      resp["min_size"] = m.min_size;
      resp["max_size"] = m.max_size;
      resp["skip_allowed"] = m.skip_allowed;
    } else if (verb == "step") {
      if (!env_->active()) fail("protocol_state", "reset must precede step");
      const json& a = require(req, "action");
      if (!a.is_array()) fail("invalid_request", "'action' must be an array");
      std::vector<int> action;
      for (const auto& v : a) {
        if (v.is_boolean()) action.push_back(v.get<bool>() ? 1 : 0);
        else if (v.is_number_integer()) action.push_back(v.get<int>());
        else fail("invalid_request", "'action' entries must be 0/1 or booleans");
      }
      const StepOutcome o = env_->step(action);
      resp["reward"] = o.reward;
      resp["done"] = o.done;
      resp["cumulative_reward"] = env_->cumulative_reward();
      resp["discounted_return"] = env_->discounted_return();
      resp["state"] = state_payload(*env_);
    } else if (verb == "eval") {
      const InvestmentSequence seq = as_sequence(require(req, "sequence"));
      std::uint64_t seed = env_->active() ? env_->episode_seed() : env_->scenario().seed;
      if (auto it = req.find("seed"); it != req.end()) seed = as_seed(*it, "seed");
      const RoaResult r = roa_evaluate(env_->scenario(), seq, seed);
      resp["sequence"] = format_sequence(seq);
      resp["seed"] = seed;
      resp["option_value"] = r.option_value;
      resp["std_error"] = r.std_error;
      resp["mean_stopping_times"] = r.mean_stopping_times;
    }
    resp["ok"] = true;
  } catch (const ProtocolError& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", e.code}, {"message", e.message}};
    if (!e.constraint.empty()) resp["error"]["constraint"] = e.constraint;
  } catch (const InvalidActionError& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", "invalid_action"}, {"message", e.what()}, {"constraint", e.constraint()}};
  } catch (const InfeasibleError& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", "infeasible"}, {"message", e.what()}};
  } catch (const ParseError& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", "invalid_request"}, {"message", e.what()}};
  } catch (const DataError& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", "invalid_request"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    resp["ok"] = false;
    resp["error"] = {{"code", "internal"}, {"message", e.what()}};
  }
  resp["id"] = id;
  return resp.dump();
}

void serve_stream(std::istream& in, std::ostream& out, const ScenarioRegistry& registry) {
  Session session(registry);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------

std::pair<std::string, int> parse_listen_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port_s = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_s, &used);
    if (used != port_s.size()) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw ParseError(fmt::format("bad listen address '{}'", addr));
  return {host, port};
}

namespace {

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

void serve_socket(int fd, const ScenarioRegistry& registry) {
  Session session(registry);
  std::string buffer;
  char chunk[4096];
  while (!session.closed()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while (!session.closed() && (pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!send_all(fd, session.handle(line) + "\n")) return;
    }
  }
}

}  // namespace

TcpServer::TcpServer(const ScenarioRegistry& registry, const std::string& host, int port) : registry_(registry) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(fmt::format("socket: {}", std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ParseError(fmt::format("bad IPv4 address '{}'", host));
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0 || ::listen(listen_fd_, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(fmt::format("bind {}:{}: {}", host, port, msg));
  }
  socklen_t len = sizeof sa;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  workers_.clear();
  for (int fd : client_fds_) ::close(fd);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] {
      serve_socket(fd, registry_);
      ::shutdown(fd, SHUT_RDWR);
    });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(mutex_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

}  // namespace ssrd
