// boxnet: dataset generation, planning, scoring, evaluation, serving and
// rendering for the BoxNet2D environment.
//
// Exit codes: 0 success, 2 validation failed, 3 I/O or configuration error.
// Failures print one JSON line {"error": ..., "message": ...} on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "boxnet/datagen.hpp"
#include "boxnet/errors.hpp"
#include "boxnet/eval_harness.hpp"
#include "boxnet/json_io.hpp"
#include "boxnet/plan_language.hpp"
#include "boxnet/planner.hpp"
#include "boxnet/render.hpp"
#include "boxnet/reward.hpp"
#include "boxnet/reward_service.hpp"

namespace {

using namespace boxnet;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct ValidationFailed {
  std::string message;
};

struct EnvSource {
  std::string env_path;
  std::string dataset_path;
  std::string id;
};

void add_env_options(CLI::App* cmd, EnvSource& src) {
  cmd->add_option("--env", src.env_path, "JSON file holding one environment config or record");
  cmd->add_option("--dataset", src.dataset_path, "Dataset JSONL file (with --id)");
  cmd->add_option("--id", src.id, "Environment id inside --dataset");
}

// Loads the environment and, when it comes from a dataset record, its golden
// length.
std::pair<EnvConfig, std::optional<std::size_t>> load_env(const EnvSource& src) {
  if (!src.env_path.empty()) {
    const auto j = parse_json(read_text_file(src.env_path), src.env_path);
    EnvConfig cfg = config_from_json(j);
    validate_config(cfg);
    std::optional<std::size_t> golden;
    if (j.contains("golden_len")) golden = j.at("golden_len").get<std::size_t>();
    return {std::move(cfg), golden};
  }
  if (src.dataset_path.empty()) throw ConfigInvalid("pass --env or --dataset with --id");
  const auto records = read_dataset(src.dataset_path);
  for (const auto& r : records) {
    if (src.id.empty() || r.cfg.id == src.id) return {r.cfg, r.golden_len};
  }
  throw MissingEnv("no environment '" + src.id + "' in " + src.dataset_path);
}

// A plan file holds either a bare JSON plan or a full model response.
Plan load_plan(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return plan_from_json_text(text);
  auto parsed = parse_response(text, PlanMode::fullplan);
  if (!parsed.plan) {
    throw FormatError(parsed.parse_errors.empty() ? "no plan found in " + path
                                                  : parsed.parse_errors.front());
  }
  return std::move(*parsed.plan);
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_text_file(out_path, text);
  }
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dash = s.find('-');
  try {
    if (dash == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, dash)), std::stoi(s.substr(dash + 1))};
  } catch (const std::exception&) {
    throw ConfigInvalid("bad range '" + s + "', expected N or A-B");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BoxNet2D planning kit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a dataset");
  std::string variant = "standard";
  int min_size = 2, max_size = 6;
  std::string objects = "1-5";
  std::size_t count = 10, retries = 50, threads = 0, gen_iters = kDefaultMaxIterations;
  std::uint64_t seed = 0;
  std::string gen_out = "dataset.jsonl", summary_out, base_path, layout = "checkerboard";
  bool allow_shortfall = false, all_shapes = false;
  gen->add_option("--variant", variant, "standard | randrob | newcoord")
      ->check(CLI::IsMember({"standard", "randrob", "newcoord"}));
  gen->add_option("--min-size", min_size, "Smallest map side");
  gen->add_option("--max-size", max_size, "Largest map side");
  gen->add_option("--objects", objects, "Object count or range, e.g. 1-5");
  gen->add_option("--count", count, "Records per (size, objects) config");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output JSONL path");
  gen->add_option("--summary", summary_out, "Summary JSON path (default <out>.summary.json)");
  gen->add_option("--base", base_path, "Standard dataset to perturb (newcoord)");
  gen->add_option("--layout", layout, "Robot layout")
      ->check(CLI::IsMember({"checkerboard", "odd_joints"}));
  gen->add_option("--retries", retries, "Resamples per record before giving up");
  gen->add_option("--max-iters", gen_iters, "Planner iteration cap");
  gen->add_option("--threads", threads, "Worker threads (0 = all cores)");
  gen->add_flag("--allow-shortfall", allow_shortfall, "Keep going when a config runs out of retries");
  gen->add_flag("--all-shapes", all_shapes, "Include non-square maps");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Plan one environment with A*");
  EnvSource solve_env;
  std::string solve_out;
  std::size_t solve_iters = kDefaultMaxIterations;
  add_env_options(solve_cmd, solve_env);
  solve_cmd->add_option("--out", solve_out, "Write the plan JSON here instead of stdout");
  solve_cmd->add_option("--max-iters", solve_iters, "Iteration cap");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Replay a plan and report violations");
  EnvSource validate_env;
  std::string validate_plan;
  add_env_options(validate_cmd, validate_env);
  validate_cmd->add_option("--plan", validate_plan, "Plan JSON or model response")->required();

  // score
  auto* score_cmd = app.add_subcommand("score", "Score one response");
  EnvSource score_env;
  std::string response_path, mode = "fullplan";
  std::optional<std::size_t> golden_len;
  std::size_t score_iters = kDefaultMaxIterations;
  bool clamp = false;
  add_env_options(score_cmd, score_env);
  score_cmd->add_option("--response", response_path,
                        "Response text (fullplan) or JSON transcript array (replan)")
      ->required();
  score_cmd->add_option("--mode", mode, "fullplan | replan")
      ->check(CLI::IsMember({"fullplan", "replan"}));
  score_cmd->add_option("--golden-len", golden_len, "Override the golden length");
  score_cmd->add_option("--max-iters", score_iters, "Planner cap for the golden length");
  score_cmd->add_flag("--clamp", clamp, "Clamp totals at 0");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate attempts against a dataset");
  std::string eval_dataset, attempts_path, eval_out, csv_out, eval_mode = "fullplan";
  std::size_t trials = kDefaultTrials, eval_threads = 0;
  eval_cmd->add_option("--dataset", eval_dataset, "Dataset JSONL")->required();
  eval_cmd->add_option("--attempts", attempts_path, "Attempts JSONL")->required();
  eval_cmd->add_option("--mode", eval_mode, "fullplan | replan")
      ->check(CLI::IsMember({"fullplan", "replan"}));
  eval_cmd->add_option("--trials", trials, "Trials per environment");
  eval_cmd->add_option("--out", eval_out, "Report JSON path (default stdout)");
  eval_cmd->add_option("--csv", csv_out, "Per-environment CSV path");
  eval_cmd->add_option("--threads", eval_threads, "Worker threads (0 = all cores)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the reward service");
  std::string serve_dataset, host = "127.0.0.1";
  int port = 8080;
  ServiceOptions sopts;
  long ttl_seconds = 600;
  serve_cmd->add_option("--dataset", serve_dataset, "Dataset JSONL for env_id lookups");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--session-cap", sopts.session_capacity, "Maximum live sessions");
  serve_cmd->add_option("--step-cap", sopts.step_cap, "Rollout step cap (0 = min(3*golden, 30))");
  serve_cmd->add_option("--ttl", ttl_seconds, "Session idle timeout in seconds");
  serve_cmd->add_option("--max-iters", sopts.max_iterations, "Planner cap for golden lengths");

  // render
  auto* render_cmd = app.add_subcommand("render", "Draw an environment (and plan) as SVG");
  EnvSource render_env;
  std::string render_plan, render_out = "env.svg";
  bool render_golden = false;
  add_env_options(render_cmd, render_env);
  render_cmd->add_option("--plan", render_plan, "Plan JSON or model response to overlay");
  render_cmd->add_flag("--solve", render_golden, "Overlay the A* plan");
  render_cmd->add_option("--out", render_out, "SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << ojson{{"error", "UsageError"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  }

  try {
    if (*gen) {
      GenOptions o;
      o.min_size = min_size;
      o.max_size = max_size;
      std::tie(o.min_objects, o.max_objects) = parse_range(objects);
      o.count_per_config = count;
      o.seed = seed;
      o.retries = retries;
      o.max_iterations = gen_iters;
      o.threads = threads;
      o.layout = robot_layout_from_string(layout);
      o.allow_shortfall = allow_shortfall;
      o.square_only = !all_shapes;
      std::vector<DatasetRecord> records;
      if (variant == "standard") {
        records = gen_standard(o);
      } else if (variant == "randrob") {
        records = gen_randrob(o);
      } else {
        const auto base = base_path.empty() ? gen_standard(o) : read_dataset(base_path);
        records = gen_newcoord(base, seed, o);
      }
      write_dataset(gen_out, records);
      const auto summary = to_json(summarize(records)).dump(2);
      write_text_file(summary_out.empty() ? gen_out + ".summary.json" : summary_out, summary + "\n");
      std::cout << summary << '\n';
      return 0;
    }

    if (*solve_cmd) {
      const auto [cfg, golden] = load_env(solve_env);
      const auto result = solve(cfg, solve_iters);
      std::cerr << ojson{{"status", std::string(to_string(result.status))},
                         {"iterations", result.iterations},
                         {"expanded", result.expanded},
                         {"steps", result.plan ? result.plan->steps.size() : 0}}
                       .dump()
                << '\n';
      if (!result.plan) throw ValidationFailed{"no plan found (" + std::string(to_string(result.status)) + ")"};
      emit(solve_out, plan_to_json_text(*result.plan) + "\n");
      return 0;
    }

    if (*validate_cmd) {
      const auto [cfg, golden] = load_env(validate_env);
      const Plan plan = load_plan(validate_plan);
      const auto rep = replay(cfg, plan);
      for (const auto& v : rep.violations) {
        std::cout << "step " << rep.steps_ok + 1 << ": " << to_string(v.kind) << ": " << v.detail << '\n';
      }
      std::cout << rep.violations.size() << " violations, " << rep.steps_ok << "/" << plan.steps.size()
                << " steps valid, goal " << (rep.reached_goal ? "reached" : "not reached") << '\n';
      if (!rep.violations.empty()) throw ValidationFailed{"plan violates constraints"};
      if (!rep.reached_goal) throw ValidationFailed{"plan does not reach the goal"};
      return 0;
    }

    if (*score_cmd) {
      const auto [cfg, golden] = load_env(score_env);
      RewardOptions ro;
      ro.clamp_at_zero = clamp;
      ro.max_iterations = score_iters;
      const auto gl = golden_len ? golden_len : golden;
      const std::string text = read_text_file(response_path);
      ScoreBreakdown b;
      if (mode == "fullplan") {
        b = score_fullplan(cfg, text, gl, ro);
      } else {
        std::vector<TranscriptTurn> turns;
        for (const auto& t : parse_json(text, response_path)) {
          turns.push_back({t.value("observation", ""), t.at("response").get<std::string>()});
        }
        b = score_replan_episode(cfg, turns, gl, ro);
      }
      std::cout << to_json(b).dump(2) << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const auto dataset = read_dataset(eval_dataset);
      const auto pm = plan_mode_from_string(eval_mode);
      auto attempts = read_attempts(attempts_path, pm);
      EvalOptions eo;
      eo.trials = trials;
      eo.threads = eval_threads;
      const auto report = evaluate(dataset, attempts, pm, eo);
      emit(eval_out, to_json(report).dump(2) + "\n");
      if (!csv_out.empty()) write_text_file(csv_out, report_to_csv(report));
      return 0;
    }

    if (*serve_cmd) {
      std::vector<DatasetRecord> dataset;
      if (!serve_dataset.empty()) dataset = read_dataset(serve_dataset);
      sopts.ttl = std::chrono::seconds(ttl_seconds);
      RewardService service(std::move(dataset), sopts);
      std::cerr << ojson{{"listening", host + ":" + std::to_string(port)}}.dump() << '\n';
      run_server(service, host, port);
      return 0;
    }

    if (*render_cmd) {
      const auto [cfg, golden] = load_env(render_env);
      std::optional<Plan> plan;
      if (!render_plan.empty()) {
        plan = load_plan(render_plan);
      } else if (render_golden) {
        auto result = solve(cfg);
        if (result.plan) plan = std::move(result.plan);
      }
      emit(render_out, render_svg(cfg, plan ? &*plan : nullptr));
      return 0;
    }
  } catch (const ValidationFailed& e) {
    std::cerr << ojson{{"error", "ValidationFailed"}, {"message", e.message}}.dump() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << ojson{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << ojson{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return kExitIo;
  }
  return 0;
}
