#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boxnet/geometry.hpp"

namespace boxnet {

enum class Variant { standard, randrob, newcoord };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct RobotSpec {
  std::string name;
  Point base;
  /// Explicit starting arm tip; when absent the default placement rule applies.
  std::optional<Point> initial_arm;
};

struct ObjectSpec {
  std::string name;
  Point start;
  Point target;
};

/// Immutable world description. Call `validate_config` (or `init_state`,
/// which validates) before simulating.
struct EnvConfig {
  std::string id;
  Variant variant = Variant::standard;
  int width = 2;
  int height = 2;
  std::vector<Point> points;
  std::vector<RobotSpec> robots;
  std::vector<ObjectSpec> objects;
  std::uint64_t seed = 0;
};

/// Throws ConfigInvalid describing the first broken invariant.
void validate_config(const EnvConfig& cfg);

/// Canonical robot key: lowercase with whitespace and underscores removed, so
/// "Robot 1", "robot_1" and "ROBOT1" all compare equal.
std::string normalize_robot_name(std::string_view name);

/// Index of the robot whose normalized name matches, if any.
std::optional<std::size_t> find_robot(const EnvConfig& cfg, std::string_view name);

/// Arm tips and object positions, both in config order.
struct EnvState {
  std::vector<Point> arm_pos;
  std::vector<Point> obj_pos;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct Action {
  std::string robot;
  Point start;
  Point end;
  bool move_object = false;

  friend bool operator==(const Action&, const Action&) = default;
};

struct Step {
  std::vector<Action> actions;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Plan {
  std::vector<Step> steps;

  friend bool operator==(const Plan&, const Plan&) = default;
};

enum class ViolationKind {
  Unreachable,
  StartMismatch,
  ArmNotAligned,
  RobotRobotCollision,
  ObjectObjectCollision,
  UnknownRobot,
  DuplicateRobot,
  MalformedAction,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
  std::vector<std::string> actors;
};

/// Action whose robot has already been resolved to a config index.
struct IndexedAction {
  std::size_t robot;
  Point start;
  Point end;
  bool move_object = false;
};

EnvState init_state(const EnvConfig& cfg);

/// Default arm tip for a robot: base + (0.25, 0.25), each axis flipped inward
/// when it would leave the map.
Point default_arm_position(const EnvConfig& cfg, const Point& base);

/// Every violation of the step against the pre-step state `st`.
std::vector<Violation> validate_step(const EnvConfig& cfg, const EnvState& st, const Step& step);

/// Post-step state on success; the unchanged state plus violations otherwise.
std::pair<EnvState, std::vector<Violation>> apply_step(const EnvConfig& cfg, const EnvState& st,
                                                       const Step& step);

/// Resolved-action variants used by the planner. `violations` may be null when
/// only validity is needed; the return value is the post-step state when valid.
std::optional<EnvState> simulate_indexed(const EnvConfig& cfg, const EnvState& st,
                                         std::span<const IndexedAction> actions,
                                         std::vector<Violation>* violations = nullptr);

bool is_goal(const EnvConfig& cfg, const EnvState& st, double eps = geometry::kPositionEps);

/// Squared Euclidean distance between an object and its target.
double placement_quality(const Point& obj, const Point& target);

/// sqrt of the summed placement quality over all objects.
double heuristic(const EnvConfig& cfg, const EnvState& st);

/// Coordinates in micro-units, the quantization shared by hashing and ranking.
std::int64_t quantize(double v);

/// Sum of squared object-to-target distances on the quantized state, in
/// micro-units squared. Exact integer ranking key equivalent to `heuristic`.
std::int64_t quantized_distance_sum(const EnvConfig& cfg, const EnvState& st);

/// 64-bit digest of the quantized state, robots then objects in config order.
std::uint64_t state_key(const EnvState& st);

/// 64-bit digest of the canonical config contents (ids excluded).
std::uint64_t config_key(const EnvConfig& cfg);

/// Coordinate text in the prompt style: at most `max_decimals` decimals,
/// trailing zeros trimmed but at least one decimal kept ("1.0", "0.75").
std::string format_coord(double v, int max_decimals = 2);
std::string format_point(const Point& p, int max_decimals = 2);

/// Observation block: object, target and robot sections in config order.
std::string render_observation(const EnvConfig& cfg, const EnvState& st);

}  // namespace boxnet
