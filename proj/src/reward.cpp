#include "boxnet/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "boxnet/errors.hpp"
#include "boxnet/plan_language.hpp"

namespace boxnet {

std::size_t golden_length(const EnvConfig& cfg, std::size_t max_iterations) {
  const auto result = solve(cfg, max_iterations);
  if (result.status != SolveStatus::solved) {
    throw GoldenPlanUnavailable("planner found no plan for environment '" + cfg.id + "' (" +
                                std::string(to_string(result.status)) + ")");
  }
  return plan_length(*result.plan);
}

void finalize_total(ScoreBreakdown& b, const RewardOptions& opts) {
  const double excess =
      static_cast<double>(b.plan_len) - static_cast<double>(b.golden_len);
  b.r_efficiency = std::max(0.0, kEfficiencyRate * excess);
  const double raw = b.r_format + b.r_execute - b.r_efficiency;
  b.floored = false;
  b.total = raw;
  if (b.r_execute > 0.0 && raw < 2.0 * b.r_format) {
    b.total = 2.0 * b.r_format;
    b.floored = true;
  }
  if (opts.clamp_at_zero) b.total = std::max(0.0, b.total);
}

namespace {

std::size_t resolve_golden(const EnvConfig& cfg, std::optional<std::size_t> golden_len,
                           const RewardOptions& opts) {
  return golden_len ? *golden_len : golden_length(cfg, opts.max_iterations);
}

}  // namespace

ScoreBreakdown score_fullplan(const EnvConfig& cfg, std::string_view response,
                              std::optional<std::size_t> golden_len, const RewardOptions& opts) {
  validate_config(cfg);
  ScoreBreakdown b;
  b.golden_len = resolve_golden(cfg, golden_len, opts);

  auto parsed = parse_response(response, PlanMode::fullplan);
  b.parse_errors = std::move(parsed.parse_errors);
  if (parsed.plan) {
    b.plan_len = plan_length(*parsed.plan);
    b.para = para_of(*parsed.plan);
  } else {
    // Nothing to measure, so no efficiency penalty.
    b.plan_len = b.golden_len;
  }

  if (parsed.format_ok) {
    b.r_format = kFormatReward;
    const auto rep = replay(cfg, *parsed.plan);
    b.steps_executed = rep.steps_ok;
    b.violations = rep.violations;
    b.r_execute = (rep.violations.empty() && rep.reached_goal) ? kExecuteReward : 0.0;
  }
  finalize_total(b, opts);
  if (!parsed.plan) b.plan_len = 0;
  return b;
}

ScoreBreakdown score_replan_episode(const EnvConfig& cfg, std::span<const TranscriptTurn> transcript,
                                    std::optional<std::size_t> golden_len,
                                    const RewardOptions& opts) {
  EnvState st = init_state(cfg);
  ScoreBreakdown b;
  b.golden_len = resolve_golden(cfg, golden_len, opts);

  bool all_formatted = !transcript.empty();
  bool reached = false;
  for (const auto& turn : transcript) {
    auto parsed = parse_response(turn.response, PlanMode::replan);
    if (!parsed.format_ok) all_formatted = false;
    for (auto& e : parsed.parse_errors) b.parse_errors.push_back(std::move(e));
    if (!parsed.plan) break;

    const Step& step = parsed.plan->steps.front();
    auto [next, violations] = apply_step(cfg, st, step);
    if (!violations.empty()) {
      b.violations = std::move(violations);
      break;
    }
    st = std::move(next);
    ++b.steps_executed;
    b.para = std::max(b.para, step.actions.size());
    if (is_goal(cfg, st)) {
      reached = true;
      break;
    }
  }

  b.plan_len = b.steps_executed;
  b.r_format = all_formatted ? kFormatReward : 0.0;
  b.r_execute = reached ? kExecuteReward : 0.0;
  finalize_total(b, opts);
  return b;
}

GroupAdvantages group_advantages(std::span<const double> rewards) {
  if (rewards.empty()) throw EmptyGroup("advantages need at least one reward");
  GroupAdvantages g;
  g.rewards.assign(rewards.begin(), rewards.end());
  const double n = static_cast<double>(rewards.size());
  g.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - g.mean) * (r - g.mean);
  g.std = std::sqrt(var / n);
  g.advantages.resize(rewards.size(), 0.0);
  if (g.std > kAdvantageEps) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      g.advantages[i] = (rewards[i] - g.mean) / g.std;
    }
  }
  return g;
}

std::size_t GoldenCache::get(const EnvConfig& cfg) {
  const std::uint64_t key = config_key(cfg);
  std::promise<std::optional<std::size_t>> promise;
  std::shared_future<std::optional<std::size_t>> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      future = promise.get_future().share();
      entries_.emplace(key, future);
      ++computations_;
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    std::optional<std::size_t> value;
    try {
      value = golden_length(cfg, max_iterations_);
    } catch (const GoldenPlanUnavailable&) {
    } catch (...) {
      promise.set_exception(std::current_exception());
      throw;
    }
    promise.set_value(value);
  }
  const auto value = future.get();
  if (!value) {
    throw GoldenPlanUnavailable("planner found no plan for environment '" + cfg.id + "'");
  }
  return *value;
}

void GoldenCache::put(const EnvConfig& cfg, std::size_t golden_len) {
  std::promise<std::optional<std::size_t>> promise;
  promise.set_value(golden_len);
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(config_key(cfg), promise.get_future().share());
}

std::size_t GoldenCache::computations() const {
  std::lock_guard lock(mu_);
  return computations_;
}

}  // namespace boxnet
