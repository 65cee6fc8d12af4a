#include "boxnet/reward_service.hpp"

#include <algorithm>
#include <cstdio>

#include <httplib.h>

#include "boxnet/errors.hpp"
#include "boxnet/plan_language.hpp"

namespace boxnet {

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::open: return "open";
    case SessionStatus::done_success: return "done_success";
    case SessionStatus::done_failure: return "done_failure";
    case SessionStatus::expired: return "expired";
  }
  return "expired";
}

struct RewardService::Session {
  std::mutex mu;
  std::string id;
  EnvConfig cfg;
  EnvState state;
  std::size_t golden_len = 0;
  std::size_t step_cap = 0;
  std::size_t steps_taken = 0;
  std::vector<TranscriptTurn> transcript;
  std::string observation;
  SessionStatus status = SessionStatus::open;
  Clock::time_point deadline;
};

namespace {

// Status-carrying failure raised inside handlers.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

ServiceResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, ojson{{"error", code}, {"message", message}}};
}

std::string wrap_observation(const std::string& obs) {
  return "<observation>\n" + obs + "</observation>";
}

const ojson& field(const ojson& req, const char* key) {
  if (!req.is_object() || !req.contains(key)) {
    throw HttpError{400, "BadRequest", std::string("missing field '") + key + "'"};
  }
  return req.at(key);
}

std::string string_field(const ojson& req, const char* key) {
  const auto& v = field(req, key);
  if (!v.is_string()) throw HttpError{400, "BadRequest", std::string("'") + key + "' must be a string"};
  return v.get<std::string>();
}

std::optional<std::size_t> optional_count(const ojson& req, const char* key) {
  if (!req.contains(key) || req.at(key).is_null()) return std::nullopt;
  const auto& v = req.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw HttpError{400, "BadRequest", std::string("'") + key + "' must be a nonnegative integer"};
  }
  return v.get<std::size_t>();
}

}  // namespace

RewardService::RewardService(std::vector<DatasetRecord> dataset, ServiceOptions opts,
                             std::function<Clock::time_point()> now)
    : dataset_(std::move(dataset)),
      opts_(opts),
      now_(std::move(now)),
      golden_(opts.max_iterations) {
  for (std::size_t i = 0; i < dataset_.size(); ++i) {
    by_id_.emplace(dataset_[i].cfg.id, i);
    golden_.put(dataset_[i].cfg, dataset_[i].golden_len);
  }
}

RewardService::~RewardService() = default;

RewardService::ResolvedEnv RewardService::resolve_env(const ojson& req) {
  const ojson* env = nullptr;
  if (req.is_object() && req.contains("env")) env = &req.at("env");
  else if (req.is_object() && req.contains("env_id")) env = &req.at("env_id");
  if (!env) throw HttpError{400, "BadRequest", "missing field 'env'"};

  const auto override_len = optional_count(req, "golden_len");
  if (env->is_string()) {
    const auto id = env->get<std::string>();
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw HttpError{404, "MissingEnv", "unknown env_id '" + id + "'"};
    const auto& rec = dataset_[it->second];
    return {rec.cfg, override_len.value_or(rec.golden_len)};
  }
  if (!env->is_object()) throw HttpError{400, "BadRequest", "'env' must be an env_id or a config object"};
  EnvConfig cfg = config_from_json(*env);
  validate_config(cfg);
  const std::size_t golden = override_len ? *override_len : golden_.get(cfg);
  return {std::move(cfg), golden};
}

ServiceResponse RewardService::score(const ojson& req) {
  const std::string mode = req.is_object() ? req.value("mode", std::string("fullplan")) : "";
  auto env = resolve_env(req);
  RewardOptions ro;
  ro.max_iterations = opts_.max_iterations;
  if (mode == "fullplan") {
    return {200, to_json(score_fullplan(env.cfg, string_field(req, "response"), env.golden_len, ro))};
  }
  if (mode == "replan") {
    std::vector<TranscriptTurn> turns;
    const auto& t = field(req, "transcript");
    if (!t.is_array()) throw HttpError{400, "BadRequest", "'transcript' must be an array"};
    for (const auto& turn : t) {
      turns.push_back({turn.is_object() ? turn.value("observation", "") : "",
                       string_field(turn, "response")});
    }
    return {200, to_json(score_replan_episode(env.cfg, turns, env.golden_len, ro))};
  }
  throw HttpError{400, "BadRequest", "'mode' must be fullplan or replan"};
}

ServiceResponse RewardService::score_group(const ojson& req) {
  const auto& responses = field(req, "responses");
  if (!responses.is_array()) throw HttpError{400, "BadRequest", "'responses' must be an array"};
  if (responses.empty()) throw HttpError{400, "EmptyGroup", "'responses' must not be empty"};
  auto env = resolve_env(req);
  RewardOptions ro;
  ro.max_iterations = opts_.max_iterations;
  ojson breakdowns = ojson::array();
  std::vector<double> totals;
  for (const auto& r : responses) {
    if (!r.is_string()) throw HttpError{400, "BadRequest", "responses must be strings"};
    const auto b = score_fullplan(env.cfg, r.get<std::string>(), env.golden_len, ro);
    totals.push_back(b.total);
    breakdowns.push_back(to_json(b));
  }
  const auto adv = group_advantages(totals);
  return {200, ojson{{"breakdowns", std::move(breakdowns)},
                     {"advantages", adv.advantages},
                     {"mean", adv.mean},
                     {"std", adv.std}}};
}

void RewardService::purge_expired_locked(Clock::time_point now) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second->deadline <= now) it = sessions_.erase(it);
    else ++it;
  }
}

ServiceResponse RewardService::rollout_start(const ojson& req) {
  auto env = resolve_env(req);
  const auto requested = optional_count(req, "max_steps");
  if (requested && *requested == 0) throw HttpError{400, "BadRequest", "'max_steps' must be positive"};

  auto s = std::make_shared<Session>();
  s->cfg = std::move(env.cfg);
  s->state = init_state(s->cfg);
  s->golden_len = env.golden_len;
  s->step_cap = requested ? *requested
                : opts_.step_cap ? opts_.step_cap
                                 : std::min<std::size_t>(3 * env.golden_len, 30);
  s->step_cap = std::max<std::size_t>(s->step_cap, 1);
  s->observation = wrap_observation(render_observation(s->cfg, s->state));

  const auto now = now_();
  {
    std::lock_guard lock(sessions_mu_);
    // Expired sessions linger so their status stays observable until the
    // slot is needed.
    if (sessions_.size() >= opts_.session_capacity) purge_expired_locked(now);
    if (sessions_.size() >= opts_.session_capacity) {
      throw HttpError{429, "CapacityExceeded",
                      "session capacity of " + std::to_string(opts_.session_capacity) + " reached"};
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "sess-%08llx", static_cast<unsigned long long>(next_session_++));
    s->id = buf;
    s->deadline = now + opts_.ttl;
    sessions_.emplace(s->id, s);
  }
  return {200, ojson{{"session_id", s->id},
                     {"observation", s->observation},
                     {"max_steps", s->step_cap},
                     {"golden_len", s->golden_len}}};
}

std::shared_ptr<RewardService::Session> RewardService::find_session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError{404, "UnknownSession", "unknown session '" + id + "'"};
  return it->second;
}

ServiceResponse RewardService::rollout_step(const ojson& req) {
  const auto id = string_field(req, "session_id");
  const auto response = string_field(req, "response");
  auto s = find_session(id);

  std::unique_lock lock(s->mu, std::try_to_lock);
  if (!lock.owns_lock()) throw HttpError{409, "StepInFlight", "session '" + id + "' is busy"};

  const auto now = now_();
  if (s->status == SessionStatus::open && s->deadline <= now) s->status = SessionStatus::expired;
  if (s->status == SessionStatus::expired) {
    return {404, ojson{{"error", "SessionExpired"},
                       {"message", "session '" + id + "' expired"},
                       {"status", "expired"}}};
  }
  if (s->status != SessionStatus::open) {
    return {409, ojson{{"error", "SessionTerminal"},
                       {"message", "session '" + id + "' already finished"},
                       {"status", std::string(to_string(s->status))}}};
  }
  s->deadline = now + opts_.ttl;
  s->transcript.push_back({s->observation, response});

  const auto parsed = parse_response(response, PlanMode::replan);
  bool done = false;
  if (!parsed.plan) {
    s->status = SessionStatus::done_failure;
    done = true;
  } else {
    auto [next, violations] = apply_step(s->cfg, s->state, parsed.plan->steps.front());
    if (!violations.empty()) {
      s->status = SessionStatus::done_failure;
      done = true;
    } else {
      s->state = std::move(next);
      ++s->steps_taken;
      if (is_goal(s->cfg, s->state)) {
        s->status = SessionStatus::done_success;
        done = true;
      } else if (s->steps_taken >= s->step_cap) {
        s->status = SessionStatus::done_failure;
        done = true;
      }
    }
  }

  ojson body{{"status", std::string(to_string(s->status))}, {"steps_taken", s->steps_taken}};
  if (done) {
    RewardOptions ro;
    ro.max_iterations = opts_.max_iterations;
    body["breakdown"] = to_json(score_replan_episode(s->cfg, s->transcript, s->golden_len, ro));
  } else {
    s->observation = wrap_observation(render_observation(s->cfg, s->state));
    body["observation"] = s->observation;
  }
  return {200, std::move(body)};
}

std::size_t RewardService::live_sessions() {
  const auto now = now_();
  std::lock_guard lock(sessions_mu_);
  return static_cast<std::size_t>(std::count_if(sessions_.begin(), sessions_.end(), [&](const auto& kv) {
    return kv.second->deadline > now;
  }));
}

ServiceResponse RewardService::handle(const std::string& method, const std::string& path,
                                      const std::string& body) {
  try {
    if (method == "GET" && path == "/v1/health") return {200, ojson{{"status", "ok"}}};
    using Handler = ServiceResponse (RewardService::*)(const ojson&);
    Handler h = nullptr;
    if (path == "/v1/score") h = &RewardService::score;
    else if (path == "/v1/score_group") h = &RewardService::score_group;
    else if (path == "/v1/rollout/start") h = &RewardService::rollout_start;
    else if (path == "/v1/rollout/step") h = &RewardService::rollout_step;
    if (!h) return error_response(404, "NotFound", "no route for " + path);
    if (method != "POST") return error_response(405, "MethodNotAllowed", "use POST for " + path);

    ojson req;
    try {
      req = ojson::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return error_response(400, "BadRequest", std::string("invalid JSON body: ") + e.what());
    }
    if (!req.is_object()) return error_response(400, "BadRequest", "request body must be a JSON object");
    return (this->*h)(req);
  } catch (const HttpError& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const GoldenPlanUnavailable& e) {
    return error_response(422, e.code(), e.what());
  } catch (const EmptyGroup& e) {
    return error_response(400, e.code(), e.what());
  } catch (const Error& e) {
    return error_response(400, e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "BadRequest", e.what());
  }
}

void RewardService::mount(httplib::Server& server) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto out = handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  for (const char* path : {"/v1/score", "/v1/score_group", "/v1/rollout/start", "/v1/rollout/step"}) {
    server.Post(path, route);
    server.Get(path, route);
  }
  server.Get("/v1/health", route);
}

void run_server(RewardService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) {
    throw FormatError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace boxnet
