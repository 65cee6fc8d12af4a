#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boxnet/datagen.hpp"
#include "boxnet/json_io.hpp"
#include "boxnet/plan_language.hpp"
#include "boxnet/reward.hpp"

namespace boxnet {

inline constexpr std::size_t kDefaultTrials = 4;

/// One planner output for one environment. Fullplan attempts carry
/// `response`; replan attempts carry `transcript`.
struct Attempt {
  std::string env_id;
  std::size_t trial = 0;
  std::string response;
  std::vector<TranscriptTurn> transcript;
  std::optional<ScoreBreakdown> breakdown;
};

struct EnvRow {
  std::string env_id;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  /// Means over this env's successful attempts; absent without successes.
  std::optional<double> step_diff;
  std::optional<double> para;
};

struct EvalReport {
  double success = 0.0;
  /// Means over successful attempts; 0 when there are none.
  double step_diff = 0.0;
  double para = 0.0;
  std::size_t trials = kDefaultTrials;
  std::size_t envs = 0;
  std::size_t attempts = 0;
  std::size_t successful_attempts = 0;
  std::vector<EnvRow> per_env;
};

struct EvalOptions {
  std::size_t trials = kDefaultTrials;
  std::size_t threads = 0;
  RewardOptions reward;
};

/// Scores every attempt against its record's golden length. Every dataset
/// env must have exactly `trials` attempts with distinct trial indices.
/// Throws MissingEnv / TrialCountMismatch. Attempts get their breakdowns
/// filled in.
EvalReport evaluate(const std::vector<DatasetRecord>& dataset, std::vector<Attempt>& attempts,
                    PlanMode mode, const EvalOptions& opts = {});

/// Line-delimited {env_id, trial, response} or {env_id, trial, transcript}.
std::vector<Attempt> read_attempts(const std::filesystem::path& path, PlanMode mode);
ojson attempt_to_json(const Attempt& a, PlanMode mode);

ojson to_json(const EvalReport& r);
std::string report_to_csv(const EvalReport& r);

}  // namespace boxnet
