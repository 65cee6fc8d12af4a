#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "boxnet/env.hpp"

namespace boxnet {

/// Maximum number of verified successors kept per expansion.
inline constexpr std::size_t kBranchLimit = 20;
/// Largest group of robots combined into one parallel step.
inline constexpr std::size_t kMaxGroup = 4;
inline constexpr std::size_t kDefaultMaxIterations = 1000;

enum class SolveStatus { solved, exhausted, iteration_cap };

std::string_view to_string(SolveStatus s);

struct SolveResult {
  std::optional<Plan> plan;
  std::size_t expanded = 0;
  std::size_t iterations = 0;
  SolveStatus status = SolveStatus::exhausted;
};

struct Successor {
  Step step;
  EnvState state;
};

/// Lattice points the robot could drop `object` on: inside its reach band,
/// not occupied by another object and different from the object's current
/// position. Lattice order.
std::vector<Point> candidate_drop_points(const EnvConfig& cfg, const EnvState& st,
                                         std::size_t robot, std::size_t object);

/// In-band lattice points free of objects, different from the arm tip and
/// reachable by a lone collision-free move of this robot. Lattice order.
std::vector<Point> alternative_arm_destinations(const EnvConfig& cfg, const EnvState& st,
                                                std::size_t robot);

/// Productive moves for one robot: for every reachable object that is not yet
/// on its target, an align move (when the arm is elsewhere) plus one carry
/// per drop point that brings the object closer to its target (carries start
/// at the object). When an
/// object offers no carry, a single repositioning move is proposed instead.
/// Duplicates are removed, first occurrence wins.
std::vector<IndexedAction> single_robot_actions(const EnvConfig& cfg, const EnvState& st,
                                                std::size_t robot);

/// Verified successor steps: every single-robot action plus every
/// cross-product combination over robot groups of size 2..min(4, objects,
/// active robots). Survivors are ranked by (heuristic, carry count desc,
/// action count desc, generation order) and the best 20 are returned.
std::vector<Successor> expand(const EnvConfig& cfg, const EnvState& st);

/// Best-first search with unit step cost, closed set and g-score updates.
/// Ties in f are broken by insertion order.
SolveResult solve(const EnvConfig& cfg, std::size_t max_iterations = kDefaultMaxIterations);

/// Replays `plan` from the initial state. Returns the index of the first
/// failing step (or plan length when all steps pass) and the final state.
struct ReplayResult {
  std::size_t steps_ok = 0;
  EnvState final_state;
  std::vector<Violation> violations;
  bool reached_goal = false;
};
ReplayResult replay(const EnvConfig& cfg, const Plan& plan);

/// Execution time under constant arm speed: each step lasts as long as its
/// longest arm movement.
double plan_duration(const Plan& plan, double speed = 0.5);

Action to_action(const EnvConfig& cfg, const IndexedAction& a);

}  // namespace boxnet
