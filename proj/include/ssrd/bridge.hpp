#pragma once

#include "ssrd/mdp_env.hpp"
#include "ssrd/scenario.hpp"

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ssrd {

inline constexpr const char* kProtocolVersion = "ssrd/1";

/// Named scenarios a server may hand out. Read-only once serving starts.
class ScenarioRegistry {
 public:
  void add(const std::string& name, Scenario scenario);
  const Scenario* find(const std::string& name) const;
  std::vector<std::string> names() const;
  bool empty() const { return scenarios_.empty(); }

  /// Loads every `*.scn` file in `dir`, keyed by file stem.
  static ScenarioRegistry from_directory(const std::filesystem::path& dir);

  std::filesystem::path base_dir;  ///< resolves relative paths in inline scenarios

 private:
  std::map<std::string, Scenario> scenarios_;
};

/// One protocol session: hello, init, then any number of episodes. Each
/// request line yields exactly one response line; errors never end the
/// session.
class Session {
 public:
  explicit Session(const ScenarioRegistry& registry);

  std::string handle(const std::string& line);
  bool closed() const { return closed_; }

 private:
  const ScenarioRegistry& registry_;
  bool greeted_ = false;
  bool closed_ = false;
  std::optional<MdpEnv> env_;
};

/// Serves one session over a pair of streams until `close` or end of input.
void serve_stream(std::istream& in, std::ostream& out, const ScenarioRegistry& registry);

/// IPv4 TCP listener with one thread and one session per connection.
class TcpServer {
 public:
  /// Binds immediately; port 0 picks an ephemeral port.
  TcpServer(const ScenarioRegistry& registry, const std::string& host, int port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }
  /// Accepts connections until stop().
  void run();
  void stop();

 private:
  const ScenarioRegistry& registry_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::vector<std::jthread> workers_;
  std::vector<int> client_fds_;
};

/// Splits `host:port`; a bare port binds 127.0.0.1.
std::pair<std::string, int> parse_listen_address(const std::string& addr);

}  // namespace ssrd
