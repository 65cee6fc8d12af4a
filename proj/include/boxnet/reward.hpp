#pragma once

#include <cstddef>
#include <cstdint>
#include <future>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "boxnet/env.hpp"
#include "boxnet/planner.hpp"

namespace boxnet {

inline constexpr double kFormatReward = 0.1;
inline constexpr double kExecuteReward = 1.0;
inline constexpr double kEfficiencyRate = 0.1;
inline constexpr double kAdvantageEps = 1e-8;

struct ScoreBreakdown {
  double r_format = 0.0;
  double r_execute = 0.0;
  double r_efficiency = 0.0;
  double total = 0.0;
  bool floored = false;
  std::vector<Violation> violations;
  std::vector<std::string> parse_errors;
  std::size_t steps_executed = 0;
  std::size_t golden_len = 0;
  /// len(s): extracted plan length (fullplan) or executed steps (replan).
  std::size_t plan_len = 0;
  /// Widest step among the steps counted in `plan_len`.
  std::size_t para = 0;
};

struct RewardOptions {
  /// Clamp totals at 0 for trainers that need nonnegative rewards.
  bool clamp_at_zero = false;
  std::size_t max_iterations = kDefaultMaxIterations;
};

struct TranscriptTurn {
  std::string observation;
  std::string response;
};

/// Golden plan length from the planner; throws GoldenPlanUnavailable.
std::size_t golden_length(const EnvConfig& cfg, std::size_t max_iterations = kDefaultMaxIterations);

/// total = r_format + r_execute - r_efficiency, floored at 2 * r_format for
/// successful plans.
void finalize_total(ScoreBreakdown& b, const RewardOptions& opts = {});

ScoreBreakdown score_fullplan(const EnvConfig& cfg, std::string_view response,
                              std::optional<std::size_t> golden_len,
                              const RewardOptions& opts = {});

/// Steps are applied in order until the goal, a response without a parseable
/// step, or a violating step. r_format is earned only when every response up
/// to the end of the episode is well formatted.
ScoreBreakdown score_replan_episode(const EnvConfig& cfg, std::span<const TranscriptTurn> transcript,
                                    std::optional<std::size_t> golden_len,
                                    const RewardOptions& opts = {});

struct GroupAdvantages {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double mean = 0.0;
  double std = 0.0;
};

/// Group-relative advantages with population std; all zeros when the group
/// has no spread. Throws EmptyGroup.
GroupAdvantages group_advantages(std::span<const double> rewards);

/// Thread-safe golden-length memo keyed by the config digest. Concurrent
/// callers for the same config wait on a single planner run.
class GoldenCache {
 public:
  explicit GoldenCache(std::size_t max_iterations = kDefaultMaxIterations)
      : max_iterations_(max_iterations) {}

  /// Throws GoldenPlanUnavailable when the planner cannot solve `cfg`.
  std::size_t get(const EnvConfig& cfg);
  void put(const EnvConfig& cfg, std::size_t golden_len);
  std::size_t computations() const;

 private:
  std::size_t max_iterations_;
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_future<std::optional<std::size_t>>> entries_;
  std::size_t computations_ = 0;
};

}  // namespace boxnet
