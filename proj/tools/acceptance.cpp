// Prints one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failed criteria.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "boxnet/datagen.hpp"
#include "boxnet/eval_harness.hpp"
#include "boxnet/geometry.hpp"
#include "boxnet/json_io.hpp"
#include "boxnet/plan_language.hpp"
#include "boxnet/planner.hpp"
#include "boxnet/reward.hpp"
#include "boxnet/reward_service.hpp"
#include "oracles.hpp"

using namespace boxnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-24s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string respond(const Plan& p) { return "<think>plan</think>\n" + serialize_plan(p); }
std::string respond_step(const Step& s) { return "<think>step</think>\n" + serialize_step(s); }

EnvConfig cfg_of(int w, int h, std::vector<RobotSpec> robots) {
  EnvConfig cfg;
  cfg.id = "rule";
  cfg.width = w;
  cfg.height = h;
  cfg.points = quarter_lattice(w, h);
  cfg.robots = std::move(robots);
  for (std::size_t i = 0; i < cfg.robots.size(); ++i) cfg.robots[i].name = "Robot " + std::to_string(i);
  return cfg;
}

bool collides(const EnvConfig& cfg, const Step& step) {
  for (const auto& v : validate_step(cfg, init_state(cfg), step)) {
    if (v.kind == ViolationKind::RobotRobotCollision) return true;
  }
  return false;
}

Action act(int r, Point a, Point b) { return {"Robot " + std::to_string(r), a, b, false}; }

Outcome rule_conformance() {
  const auto same_end = cfg_of(3, 3, {{"", {1, 1}, Point{0.75, 0.75}}, {"", {2, 2}, Point{2.25, 1.75}}});
  const auto on_arm = cfg_of(2, 2, {{"", {0, 0}, Point{0.25, 0.25}}, {"", {1, 0}, Point{1.25, 0.25}}});
  const auto crossing = cfg_of(2, 2, {{"", {0, 0}, Point{0.25, 0.25}}, {"", {1, 0}, Point{0.25, 0.75}}});
  const bool c1 = collides(same_end, {{act(0, {0.75, 0.75}, {0.75, 1.25}), act(1, {2.25, 1.75}, {0.75, 1.25})}});
  const bool c2 = collides(on_arm, {{act(0, {0.25, 0.25}, {0.75, 0.25}), act(1, {1.25, 0.25}, {0.25, 0.75})}});
  const bool c3 = collides(crossing, {{act(0, {0.25, 0.25}, {0.75, 0.75}), act(1, {0.25, 0.75}, {0.75, 0.25})}});
  const bool r1 = geometry::in_reach_band({1, 1}, {0.25, 0.75});
  const bool r2 = geometry::in_reach_band({1, 1}, {1.25, 1.75});
  const bool r3 = geometry::in_reach_band({1, 1}, {0, 0.25});
  const bool r4 = geometry::in_reach_band({1, 1}, {2.0, 0.75});
  const bool ok = c1 && c2 && c3 && r1 && r2 && !r3 && !r4;
  return {ok, fmt("collisions %d/%d/%d reach %d/%d/%d/%d (want 1/1/1 1/1/0/0)", c1, c2, c3, r1, r2, r3, r4)};
}

Outcome geometry_oracle() {
  std::mt19937_64 rng(20240611);
  std::size_t agree = 0, hits = 0;
  constexpr std::size_t kPairs = 100000;
  for (std::size_t i = 0; i < kPairs; ++i) {
    const oracle::GridPoint a = oracle::random_grid_point(rng), b = oracle::random_grid_point(rng),
                            c = oracle::random_grid_point(rng), d = oracle::random_grid_point(rng);
    const bool want = oracle::segments_intersect(a.exact(), b.exact(), c.exact(), d.exact());
    const bool got = geometry::segments_intersect({a.approx(), b.approx()}, {c.approx(), d.approx()});
    agree += want == got;
    hits += want;
  }
  return {agree == kPairs, fmt("%zu/%zu agree (%zu intersecting)", agree, kPairs, hits)};
}

Outcome solver_soundness() {
  std::vector<DatasetRecord> envs;
  for (std::uint64_t seed = 1000; envs.size() < 500; ++seed) {
    GenOptions o;
    o.count_per_config = 20;
    o.seed = seed;
    o.allow_shortfall = true;
    for (auto& r : gen_standard(o)) {
      if (envs.size() < 500) envs.push_back(std::move(r));
    }
  }
  std::size_t solved = 0, clean = 0;
  for (const auto& rec : envs) {
    const auto r = solve(rec.cfg);
    if (r.status != SolveStatus::solved || !r.plan) continue;
    ++solved;
    const auto rep = replay(rec.cfg, *r.plan);
    clean += rep.reached_goal && rep.violations.empty();
  }
  return {solved == envs.size() && clean == envs.size(),
          fmt("%zu envs, solved %zu, replayed clean %zu", envs.size(), solved, clean)};
}

Outcome solver_optimality() {
  const auto lattice = quarter_lattice(2, 2);
  std::size_t configs = 0, agree = 0, solvable = 0;
  for (const auto layout : {RobotLayout::checkerboard, RobotLayout::odd_joints}) {
    for (std::size_t s = 0; s < lattice.size(); ++s) {
      for (std::size_t t = 0; t < lattice.size(); ++t) {
        if (s == t) continue;
        EnvConfig cfg;
        cfg.id = "opt";
        cfg.width = cfg.height = 2;
        cfg.points = lattice;
        cfg.robots = standard_robot_layout(2, 2, layout);
        cfg.objects = {{"Object 0", lattice[s], lattice[t]}};
        const auto best = oracle::bfs_optimum(cfg);
        const auto r = solve(cfg);
        ++configs;
        solvable += best.has_value();
        const bool same = best ? (r.plan && r.plan->steps.size() == *best) : !r.plan.has_value();
        agree += same;
      }
    }
  }
  return {agree == configs,
          fmt("%zu configs over both layouts, A* = BFS on %zu (%zu with a plan, rest unsolvable for both)",
              configs, agree, solvable)};
}

Outcome reward_table() {
  GenOptions o;
  o.min_size = o.max_size = 3;
  o.min_objects = o.max_objects = 2;
  o.count_per_config = 1;
  o.seed = 5;
  const auto rec = gen_standard(o).at(0);
  const auto& cfg = rec.cfg;
  const auto g = rec.golden_len;
  auto pad = [&](std::size_t k) {
    Plan plan = rec.golden_plan;
    EnvState st = init_state(cfg);
    for (const auto& s : plan.steps) st = apply_step(cfg, st, s).first;
    while (plan.steps.size() < g + k) {
      bool moved = false;
      for (std::size_t r = 0; r < cfg.robots.size() && !moved; ++r) {
        const auto alt = alternative_arm_destinations(cfg, st, r);
        if (alt.empty()) continue;
        const Step step{{{cfg.robots[r].name, st.arm_pos[r], alt.front(), false}}};
        st = apply_step(cfg, st, step).first;
        plan.steps.push_back(step);
        moved = true;
      }
      if (!moved) throw std::runtime_error("cannot pad plan");
    }
    return plan;
  };
  Plan invalid = rec.golden_plan;
  invalid.steps[0].actions[0].end = {99, 99};
  const double t0 = score_fullplan(cfg, respond(rec.golden_plan), g).total;
  const double t3 = score_fullplan(cfg, respond(pad(3)), g).total;
  const double t12 = score_fullplan(cfg, respond(pad(12)), g).total;
  const double ti = score_fullplan(cfg, respond(invalid), g).total;
  const double tu = score_fullplan(cfg, "no format here", g).total;
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  const bool ok = near(t0, 1.1) && near(t3, 0.8) && near(t12, 0.2) && near(ti, 0.1) && near(tu, 0.0);
  return {ok, fmt("%.12g %.12g %.12g %.12g %.12g (want 1.1 0.8 0.2 0.1 0)", t0, t3, t12, ti, tu)};
}

Outcome advantages() {
  const std::vector<double> r{1.1, 0.1, 0.1, 0.1};
  const auto a = group_advantages(r).advantages;
  bool ok = std::abs(a[0] - 1.7320508) <= 1e-4;
  for (int i = 1; i < 4; ++i) ok = ok && std::abs(a[i] + 0.5773503) <= 1e-4;
  const std::vector<double> flat{0.3, 0.3, 0.3};
  for (double v : group_advantages(flat).advantages) ok = ok && v == 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 1.1);
  double worst = 0.0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> xs(2 + g % 15);
    for (auto& x : xs) x = u(rng);
    double sum = 0.0;
    for (double v : group_advantages(xs).advantages) sum += v;
    worst = std::max(worst, std::abs(sum));
  }
  ok = ok && worst <= 1e-9;
  return {ok, fmt("[%.4f %.4f %.4f %.4f], max |sum| %.2e", a[0], a[1], a[2], a[3], worst)};
}

Outcome dataset_stats(const std::vector<DatasetRecord>& ds) {
  const auto s = summarize(ds);
  const bool ok = ds.size() == 250 && std::abs(s.avg_optimal_steps - 8.32) <= 1.5 &&
                  std::abs(s.avg_para - 1.75) <= 0.4;
  return {ok, fmt("%zu/250 envs, avg steps %.3f (want 8.32+-1.5), avg para %.3f (want 1.75+-0.4)", ds.size(),
                  s.avg_optimal_steps, s.avg_para)};
}

Outcome determinism(const fs::path& dir) {
  GenOptions o;
  o.max_size = 4;
  o.max_objects = 3;
  o.count_per_config = 3;
  o.seed = 7;
  o.allow_shortfall = true;
  o.threads = 1;
  const auto a = gen_standard(o);
  o.threads = 4;
  const auto b = gen_standard(o);
  write_dataset(dir / "a.jsonl", a);
  write_dataset(dir / "b.jsonl", b);
  const bool files = read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl");
  std::size_t same = 0;
  for (const auto& rec : a) {
    const auto p1 = solve(rec.cfg), p2 = solve(rec.cfg);
    same += p1.plan && p2.plan && *p1.plan == *p2.plan && *p1.plan == rec.golden_plan;
  }
  return {files && same == a.size(), fmt("dataset bytes identical: %s, %zu/%zu plans identical",
                                         files ? "yes" : "no", same, a.size())};
}

Outcome harness(const std::vector<DatasetRecord>& ds) {
  std::vector<Attempt> attempts;
  for (const auto& r : ds) {
    for (std::size_t t = 0; t < 4; ++t) attempts.push_back({r.cfg.id, t, respond(r.golden_plan), {}, {}});
  }
  EvalOptions opts;
  opts.trials = 4;
  const auto rep = evaluate(ds, attempts, PlanMode::fullplan, opts);
  return {rep.success == 1.0 && rep.step_diff == 0.0,
          fmt("%zu envs x 4 trials: Success %.17g, StepDiff %.17g", rep.envs, rep.success, rep.step_diff)};
}

Outcome service_parity(const std::vector<DatasetRecord>& ds) {
  RewardService svc(ds);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) return {false, "could not bind"};
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  std::mt19937_64 rng(77);
  std::size_t identical = 0;
  for (int i = 0; i < 100; ++i) {
    const auto& rec = ds[rng() % ds.size()];
    Plan plan = rec.golden_plan;
    std::string response;
    switch (rng() % 4) {
      case 0: response = respond(plan); break;
      case 1:
        plan.steps[rng() % plan.steps.size()].actions[0].end = {0.25, 0.25};
        response = respond(plan);
        break;
      case 2: response = serialize_plan(plan); break;
      default: response = "<think>" + std::to_string(rng()) + "</think>";
    }
    const std::string lib = to_json(score_fullplan(rec.cfg, response, rec.golden_len)).dump();
    const auto res = cli.Post("/v1/score", ojson{{"env", rec.cfg.id}, {"response", response}}.dump(),
                              "application/json");
    identical += res && res->status == 200 && ojson::parse(res->body).dump() == lib;
  }

  const auto& rec = ds[ds.size() / 2];
  std::string status = "none";
  double total = -1.0;
  auto res = cli.Post("/v1/rollout/start", ojson{{"env", rec.cfg.id}}.dump(), "application/json");
  if (res && res->status == 200) {
    const auto id = ojson::parse(res->body).at("session_id").get<std::string>();
    for (const auto& step : rec.golden_plan.steps) {
      res = cli.Post("/v1/rollout/step", ojson{{"session_id", id}, {"response", respond_step(step)}}.dump(),
                     "application/json");
      if (!res || res->status != 200) break;
    }
    if (res && res->status == 200) {
      const auto body = ojson::parse(res->body);
      status = body.at("status").get<std::string>();
      if (body.contains("breakdown")) total = body.at("breakdown").at("total").get<double>();
    }
  }
  server.stop();
  th.join();
  const bool ok = identical == 100 && status == "done_success" && std::abs(total - 1.1) <= 1e-12;
  return {ok, fmt("%zu/100 bit-identical, rollout %s total %.12g", identical, status.c_str(), total)};
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "boxnet_acceptance";
  fs::create_directories(dir);

  criterion("rule-conformance", rule_conformance);
  criterion("geometry-oracle", geometry_oracle);
  criterion("solver-soundness", solver_soundness);
  criterion("solver-optimality-2x2", solver_optimality);
  criterion("reward-arithmetic", reward_table);
  criterion("advantage-arithmetic", advantages);

  // The test preset: square maps 2..6, 1..5 objects, 10 per config, seed 7.
  std::vector<DatasetRecord> preset;
  criterion("dataset-statistics", [&] {
    GenOptions o;
    o.seed = 7;
    o.allow_shortfall = true;
    preset = gen_standard(o);
    return dataset_stats(preset);
  });
  criterion("determinism", [&] { return determinism(dir); });
  criterion("harness-self-consistency", [&] { return harness(preset); });
  criterion("service-parity", [&] { return service_parity(preset); });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
