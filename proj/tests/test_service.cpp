#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "boxnet/reward_service.hpp"
#include "boxnet/plan_language.hpp"

using namespace boxnet;
using namespace std::chrono_literals;

namespace {

std::vector<DatasetRecord> dataset() {
  static const auto ds = [] {
    GenOptions o;
    o.min_size = 2;
    o.max_size = 3;
    o.min_objects = 1;
    o.max_objects = 3;
    o.count_per_config = 2;
    o.seed = 33;
    o.threads = 1;
    return gen_standard(o);
  }();
  return ds;
}

struct FakeClock {
  std::shared_ptr<std::atomic<long>> seconds = std::make_shared<std::atomic<long>>(0);
  std::function<RewardService::Clock::time_point()> fn() const {
    auto s = seconds;
    return [s] { return RewardService::Clock::time_point(std::chrono::seconds(s->load())); };
  }
};

std::string respond(const Plan& p) { return "<think>t</think>\n" + serialize_plan(p); }
std::string respond_step(const Step& s) { return "<think>t</think>\n" + serialize_step(s); }

ServiceResponse post(RewardService& svc, const std::string& path, const ojson& body) {
  return svc.handle("POST", path, body.dump());
}

Plan broken(Plan p) {
  p.steps[0].actions[0].end = {99, 99};
  return p;
}

}  // namespace

TEST(Service, Health) {
  RewardService svc(dataset());
  const auto r = svc.handle("GET", "/v1/health", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("status"), "ok");
}

TEST(Service, ScoreExamples) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& rec = ds[3];
  auto r = post(svc, "/v1/score", {{"env", rec.cfg.id}, {"response", respond(rec.golden_plan)}, {"mode", "fullplan"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_NEAR(r.body.at("total").get<double>(), 1.1, 1e-12);

  r = post(svc, "/v1/score", {{"env_id", rec.cfg.id}, {"response", "hello"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("total").get<double>(), 0.0);
  EXPECT_EQ(r.body.at("r_format").get<double>(), 0.0);

  // inline config without a golden length triggers a solve
  r = post(svc, "/v1/score", {{"env", to_json(rec.cfg)}, {"response", respond(rec.golden_plan)}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("golden_len").get<std::size_t>(), rec.golden_len);

  // explicit golden length override
  r = post(svc, "/v1/score",
           {{"env", rec.cfg.id}, {"response", respond(rec.golden_plan)}, {"golden_len", rec.golden_len - 1}});
  EXPECT_NEAR(r.body.at("total").get<double>(), 1.0, 1e-12);
}

TEST(Service, ScoreErrors) {
  RewardService svc(dataset());
  EXPECT_EQ(post(svc, "/v1/score", {{"env", "nope"}, {"response", "x"}}).status, 404);
  EXPECT_EQ(svc.handle("POST", "/v1/score", "{not json").status, 400);
  EXPECT_EQ(svc.handle("POST", "/v1/score", "[1,2]").status, 400);
  EXPECT_EQ(post(svc, "/v1/score", {{"env", dataset()[0].cfg.id}}).status, 400);
  EXPECT_EQ(post(svc, "/v1/score", {{"env", dataset()[0].cfg.id}, {"response", 5}}).status, 400);
  EXPECT_EQ(post(svc, "/v1/score", {{"env", dataset()[0].cfg.id}, {"response", "x"}, {"mode", "bogus"}}).status,
            400);
  EXPECT_EQ(svc.handle("GET", "/v1/score", "").status, 405);
  EXPECT_EQ(svc.handle("POST", "/v1/nothing", "{}").status, 404);

  ojson unsolvable{{"width", 4},
                   {"height", 4},
                   {"robots", {{{"name", "Robot 0"}, {"base", {1, 1}}}}},
                   {"objects", {{{"name", "Object 0"}, {"start", {3.75, 3.75}}, {"target", {0.25, 0.25}}}}}};
  const auto r = post(svc, "/v1/score", {{"env", unsolvable}, {"response", "x"}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body.at("error"), "GoldenPlanUnavailable");

  ojson invalid = unsolvable;
  invalid["robots"][0]["base"] = {0.5, 0.5};
  EXPECT_EQ(post(svc, "/v1/score", {{"env", invalid}, {"response", "x"}}).status, 400);
}

TEST(Service, ScoreGroup) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& rec = ds[2];
  const std::string good = respond(rec.golden_plan), bad = respond(broken(rec.golden_plan));
  auto r = post(svc, "/v1/score_group", {{"env", rec.cfg.id}, {"responses", {good, bad, bad, bad}}});
  ASSERT_EQ(r.status, 200);
  const auto adv = r.body.at("advantages").get<std::vector<double>>();
  ASSERT_EQ(adv.size(), 4u);
  EXPECT_NEAR(adv[0], 1.7321, 1e-4);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(adv[i], -0.5774, 1e-4);
  EXPECT_EQ(r.body.at("breakdowns").size(), 4u);

  r = post(svc, "/v1/score_group", {{"env", rec.cfg.id}, {"responses", {good, good, good}}});
  for (double a : r.body.at("advantages").get<std::vector<double>>()) EXPECT_EQ(a, 0.0);

  std::vector<std::string> eight{good, bad, "x", bad, good, "<think>a</think>", bad, bad};
  r = post(svc, "/v1/score_group", {{"env", rec.cfg.id}, {"responses", eight}});
  ASSERT_EQ(r.status, 200);
  const auto a8 = r.body.at("advantages").get<std::vector<double>>();
  EXPECT_EQ(a8.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    if (eight[i] == good) {
      for (std::size_t j = 0; j < 8; ++j) {
        if (eight[j] != good) {
          EXPECT_GT(a8[i], a8[j]);
        }
      }
    }
  }

  EXPECT_EQ(post(svc, "/v1/score_group", {{"env", rec.cfg.id}, {"responses", ojson::array()}}).status, 400);
}

TEST(Service, BitIdenticalToLibrary) {
  const auto ds = dataset();
  RewardService svc(ds);
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const auto& rec = ds[rng() % ds.size()];
    std::string response;
    switch (rng() % 4) {
      case 0: response = respond(rec.golden_plan); break;
      case 1: response = respond(broken(rec.golden_plan)); break;
      case 2: response = serialize_plan(rec.golden_plan); break;
      default: response = "<think>" + std::to_string(rng()) + "</think>";
    }
    const auto lib = to_json(score_fullplan(rec.cfg, response, rec.golden_len));
    const auto r = post(svc, "/v1/score", {{"env", rec.cfg.id}, {"response", response}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.dump(), lib.dump());
  }
}

TEST(Service, ReplanScoreMatchesLibrary) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& rec = ds[5];
  ojson transcript = ojson::array();
  std::vector<TranscriptTurn> turns;
  for (const auto& s : rec.golden_plan.steps) {
    transcript.push_back({{"observation", "o"}, {"response", respond_step(s)}});
    turns.push_back({"o", respond_step(s)});
  }
  const auto r = post(svc, "/v1/score", {{"env", rec.cfg.id}, {"mode", "replan"}, {"transcript", transcript}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.dump(), to_json(score_replan_episode(rec.cfg, turns, rec.golden_len)).dump());
}

TEST(Service, RolloutGoldenEpisode) {
  const auto ds = dataset();
  RewardService svc(ds);
  for (const auto& rec : ds) {
    auto r = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}});
    ASSERT_EQ(r.status, 200);
    const auto id = r.body.at("session_id").get<std::string>();
    EXPECT_EQ(r.body.at("observation").get<std::string>().rfind("<observation>\nObject positions:", 0), 0u);
    EXPECT_EQ(r.body.at("max_steps").get<std::size_t>(), std::min<std::size_t>(3 * rec.golden_len, 30));
    for (std::size_t i = 0; i < rec.golden_plan.steps.size(); ++i) {
      r = post(svc, "/v1/rollout/step", {{"session_id", id}, {"response", respond_step(rec.golden_plan.steps[i])}});
      ASSERT_EQ(r.status, 200);
      if (i + 1 < rec.golden_plan.steps.size()) {
        EXPECT_EQ(r.body.at("status"), "open");
        EXPECT_TRUE(r.body.contains("observation"));
      }
    }
    EXPECT_EQ(r.body.at("status"), "done_success");
    EXPECT_NEAR(r.body.at("breakdown").at("total").get<double>(), 1.1, 1e-12);
    r = post(svc, "/v1/rollout/step", {{"session_id", id}, {"response", "x"}});
    EXPECT_EQ(r.status, 409);
  }
}

TEST(Service, RolloutFailures) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& rec = ds[4];
  ASSERT_GE(rec.golden_len, 2u);

  auto a = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}});
  auto b = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}});
  EXPECT_NE(a.body.at("session_id"), b.body.at("session_id"));

  // colliding step
  const auto bad_step = broken(rec.golden_plan).steps[0];
  auto r = post(svc, "/v1/rollout/step", {{"session_id", a.body.at("session_id")}, {"response", respond_step(bad_step)}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("status"), "done_failure");
  EXPECT_FALSE(r.body.at("breakdown").at("violations").empty());
  EXPECT_NEAR(r.body.at("breakdown").at("total").get<double>(), 0.1, 1e-12);

  // malformed response
  r = post(svc, "/v1/rollout/step", {{"session_id", b.body.at("session_id")}, {"response", "no idea"}});
  EXPECT_EQ(r.body.at("status"), "done_failure");

  // step cap of one
  auto c = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}, {"max_steps", 1}});
  EXPECT_EQ(c.body.at("max_steps"), 1);
  r = post(svc, "/v1/rollout/step",
           {{"session_id", c.body.at("session_id")}, {"response", respond_step(rec.golden_plan.steps[0])}});
  EXPECT_EQ(r.body.at("status"), "done_failure");
  EXPECT_EQ(r.body.at("steps_taken"), 1);

  EXPECT_EQ(post(svc, "/v1/rollout/step", {{"session_id", "sess-nope"}, {"response", "x"}}).status, 404);
  EXPECT_EQ(post(svc, "/v1/rollout/start", {{"env", "nope"}}).status, 404);
  EXPECT_EQ(post(svc, "/v1/rollout/step", {{"response", "x"}}).status, 400);
}

TEST(Service, ExpiryAndCapacity) {
  const auto ds = dataset();
  FakeClock clock;
  ServiceOptions o;
  o.session_capacity = 2;
  o.ttl = 60s;
  RewardService svc(ds, o, clock.fn());
  const auto& rec = ds[4];
  ASSERT_GE(rec.golden_len, 3u);
  const auto s1 = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}}).body.at("session_id");
  *clock.seconds = 30;
  const auto s2 = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}}).body.at("session_id");
  EXPECT_EQ(post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}}).status, 429);

  // activity slides the deadline of s2
  *clock.seconds = 80;
  auto r = post(svc, "/v1/rollout/step", {{"session_id", s2}, {"response", respond_step(rec.golden_plan.steps[0])}});
  EXPECT_EQ(r.status, 200);
  r = post(svc, "/v1/rollout/step", {{"session_id", s1}, {"response", "x"}});
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body.at("status"), "expired");
  EXPECT_EQ(svc.live_sessions(), 1u);

  // expired s1 makes room
  EXPECT_EQ(post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}}).status, 200);
  *clock.seconds = 130;
  r = post(svc, "/v1/rollout/step", {{"session_id", s2}, {"response", respond_step(rec.golden_plan.steps[1])}});
  EXPECT_EQ(r.status, 200);
}

TEST(Service, SessionsAreIsolated) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& x = ds[4];
  const auto& y = ds[5];
  const auto sx = post(svc, "/v1/rollout/start", {{"env", x.cfg.id}}).body.at("session_id");
  const auto sy = post(svc, "/v1/rollout/start", {{"env", y.cfg.id}}).body.at("session_id");
  const std::size_t n = std::max(x.golden_len, y.golden_len);
  ojson last_x, last_y;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < x.golden_len) {
      last_x = post(svc, "/v1/rollout/step", {{"session_id", sx}, {"response", respond_step(x.golden_plan.steps[i])}}).body;
    }
    if (i < y.golden_len) {
      last_y = post(svc, "/v1/rollout/step", {{"session_id", sy}, {"response", respond_step(y.golden_plan.steps[i])}}).body;
    }
  }
  EXPECT_EQ(last_x.at("status"), "done_success");
  EXPECT_EQ(last_y.at("status"), "done_success");
}

TEST(Service, ConcurrentStepsOnOneSession) {
  const auto ds = dataset();
  RewardService svc(ds);
  const auto& rec = ds[4];
  const auto id = post(svc, "/v1/rollout/start", {{"env", rec.cfg.id}}).body.at("session_id");
  const std::string first = respond_step(rec.golden_plan.steps[0]);
  std::atomic<int> ok{0}, busy{0}, other{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) {
    ts.emplace_back([&] {
      const auto r = post(svc, "/v1/rollout/step", {{"session_id", id}, {"response", first}});
      if (r.status == 200) ++ok;
      else if (r.status == 409) ++busy;
      else ++other;
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(other.load(), 0);
  EXPECT_GE(ok.load(), 1);
  EXPECT_EQ(ok.load() + busy.load(), 8);
}

TEST(Service, OverHttp) {
  const auto ds = dataset();
  RewardService svc(ds);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  const auto& rec = ds[1];
  auto res = cli.Get("/v1/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  const ojson body{{"env", rec.cfg.id}, {"response", respond(rec.golden_plan)}};
  res = cli.Post("/v1/score", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(ojson::parse(res->body).dump(), to_json(score_fullplan(rec.cfg, respond(rec.golden_plan), rec.golden_len)).dump());

  res = cli.Get("/v1/score");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 405);

  res = cli.Post("/v1/rollout/start", ojson{{"env", rec.cfg.id}}.dump(), "application/json");
  ASSERT_TRUE(res);
  const auto id = ojson::parse(res->body).at("session_id");
  ojson last;
  for (const auto& s : rec.golden_plan.steps) {
    res = cli.Post("/v1/rollout/step", ojson{{"session_id", id}, {"response", respond_step(s)}}.dump(),
                   "application/json");
    ASSERT_TRUE(res);
    last = ojson::parse(res->body);
  }
  EXPECT_EQ(last.at("status"), "done_success");
  EXPECT_NEAR(last.at("breakdown").at("total").get<double>(), 1.1, 1e-12);

  server.stop();
  th.join();
}
