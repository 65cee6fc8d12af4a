#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "boxnet/datagen.hpp"
#include "boxnet/json_io.hpp"
#include "boxnet/reward.hpp"

namespace httplib {
class Server;
}

namespace boxnet {

enum class SessionStatus { open, done_success, done_failure, expired };
std::string_view to_string(SessionStatus s);

struct ServiceOptions {
  std::size_t session_capacity = 1024;
  std::chrono::seconds ttl{600};
  /// 0 selects min(3 * golden_len, 30) per session.
  std::size_t step_cap = 0;
  std::size_t max_iterations = kDefaultMaxIterations;
};

struct ServiceResponse {
  int status = 200;
  ojson body;
};

/// Scoring and replan rollout endpoints. Handlers are transport independent
/// so they can be exercised without sockets; `mount` wires them into an
/// HTTP server.
class RewardService {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RewardService(std::vector<DatasetRecord> dataset, ServiceOptions opts = {},
                         std::function<Clock::time_point()> now = Clock::now);
  ~RewardService();

  ServiceResponse handle(const std::string& method, const std::string& path,
                         const std::string& body);

  ServiceResponse score(const ojson& req);
  ServiceResponse score_group(const ojson& req);
  ServiceResponse rollout_start(const ojson& req);
  ServiceResponse rollout_step(const ojson& req);

  void mount(httplib::Server& server);
  std::size_t live_sessions();

 private:
  struct Session;
  struct ResolvedEnv {
    EnvConfig cfg;
    std::size_t golden_len;
  };

  ResolvedEnv resolve_env(const ojson& req);
  std::shared_ptr<Session> find_session(const std::string& id);
  void purge_expired_locked(Clock::time_point now);

  std::vector<DatasetRecord> dataset_;
  std::unordered_map<std::string, std::size_t> by_id_;
  ServiceOptions opts_;
  std::function<Clock::time_point()> now_;
  GoldenCache golden_;

  std::mutex sessions_mu_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
};

/// Blocks serving HTTP on host:port until the process stops.
void run_server(RewardService& service, const std::string& host, int port);

}  // namespace boxnet
