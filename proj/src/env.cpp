#include "boxnet/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "boxnet/errors.hpp"

namespace boxnet {

using geometry::kPositionEps;
using geometry::points_equal;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::randrob: return "randrob";
    case Variant::newcoord: return "newcoord";
  }
  return "standard";
}

Variant variant_from_string(std::string_view s) {
  if (s == "standard") return Variant::standard;
  if (s == "randrob") return Variant::randrob;
  if (s == "newcoord") return Variant::newcoord;
  throw ConfigInvalid("unknown variant '" + std::string(s) + "'");
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Unreachable: return "Unreachable";
    case ViolationKind::StartMismatch: return "StartMismatch";
    case ViolationKind::ArmNotAligned: return "ArmNotAligned";
    case ViolationKind::RobotRobotCollision: return "RobotRobotCollision";
    case ViolationKind::ObjectObjectCollision: return "ObjectObjectCollision";
    case ViolationKind::UnknownRobot: return "UnknownRobot";
    case ViolationKind::DuplicateRobot: return "DuplicateRobot";
    case ViolationKind::MalformedAction: return "MalformedAction";
  }
  return "MalformedAction";
}

std::string normalize_robot_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::optional<std::size_t> find_robot(const EnvConfig& cfg, std::string_view name) {
  const std::string key = normalize_robot_name(name);
  for (std::size_t i = 0; i < cfg.robots.size(); ++i) {
    if (normalize_robot_name(cfg.robots[i].name) == key) return i;
  }
  return std::nullopt;
}

namespace {

bool inside_map(const EnvConfig& cfg, const Point& p) {
  return p.x >= -kPositionEps && p.x <= cfg.width + kPositionEps && p.y >= -kPositionEps &&
         p.y <= cfg.height + kPositionEps;
}

bool is_joint(const Point& p) {
  return std::abs(p.x - std::round(p.x)) <= kPositionEps &&
         std::abs(p.y - std::round(p.y)) <= kPositionEps;
}

bool in_points(const EnvConfig& cfg, const Point& p) {
  return std::any_of(cfg.points.begin(), cfg.points.end(),
                     [&](const Point& q) { return points_equal(p, q); });
}

std::string describe(const Point& p) { return format_point(p, 6); }

}  // namespace

void validate_config(const EnvConfig& cfg) {
  if (cfg.width < 2 || cfg.height < 2) {
    throw ConfigInvalid("map must be at least 2x2, got " + std::to_string(cfg.width) + "x" +
                        std::to_string(cfg.height));
  }
  for (const auto& p : cfg.points) {
    if (!geometry::is_finite(p) || !inside_map(cfg, p)) {
      throw ConfigInvalid("placement point " + describe(p) + " lies outside the map");
    }
  }
  for (std::size_t i = 0; i < cfg.robots.size(); ++i) {
    const auto& r = cfg.robots[i];
    if (!geometry::is_finite(r.base) || !inside_map(cfg, r.base)) {
      throw ConfigInvalid(r.name + " base " + describe(r.base) + " lies outside the map");
    }
    if (cfg.variant != Variant::randrob && !is_joint(r.base)) {
      throw ConfigInvalid(r.name + " base " + describe(r.base) + " is not a grid joint");
    }
    if (r.initial_arm && (!geometry::is_finite(*r.initial_arm) ||
                          !geometry::in_reach_band(r.base, *r.initial_arm))) {
      throw ConfigInvalid(r.name + " initial arm is outside its reach band");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (normalize_robot_name(cfg.robots[j].name) == normalize_robot_name(r.name)) {
        throw ConfigInvalid("duplicate robot name '" + r.name + "'");
      }
    }
  }
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    const auto& o = cfg.objects[i];
    for (const Point* p : {&o.start, &o.target}) {
      if (!geometry::is_finite(*p) || !inside_map(cfg, *p)) {
        throw ConfigInvalid(o.name + " position " + describe(*p) + " lies outside the map");
      }
      if (!in_points(cfg, *p)) {
        throw ConfigInvalid(o.name + " position " + describe(*p) + " is not a placement point");
      }
    }
    if (points_equal(o.start, o.target)) throw ConfigInvalid(o.name + " starts on its target");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& other = cfg.objects[j];
      if (other.name == o.name) throw ConfigInvalid("duplicate object name '" + o.name + "'");
      if (points_equal(other.start, o.start)) {
        throw ConfigInvalid(other.name + " and " + o.name + " share a start position");
      }
      if (points_equal(other.target, o.target)) {
        throw ConfigInvalid(other.name + " and " + o.name + " share a target position");
      }
    }
  }
}

Point default_arm_position(const EnvConfig& cfg, const Point& base) {
  constexpr double kOffset = 0.25;
  Point arm{base.x + kOffset, base.y + kOffset};
  if (arm.x > cfg.width) arm.x = base.x - kOffset;
  if (arm.y > cfg.height) arm.y = base.y - kOffset;
  return arm;
}

EnvState init_state(const EnvConfig& cfg) {
  validate_config(cfg);
  EnvState st;
  st.arm_pos.reserve(cfg.robots.size());
  for (const auto& r : cfg.robots) {
    st.arm_pos.push_back(r.initial_arm ? *r.initial_arm : default_arm_position(cfg, r.base));
  }
  st.obj_pos.reserve(cfg.objects.size());
  for (const auto& o : cfg.objects) st.obj_pos.push_back(o.start);
  return st;
}

namespace {

std::optional<std::size_t> object_at(const EnvState& st, const Point& p) {
  for (std::size_t i = 0; i < st.obj_pos.size(); ++i) {
    if (points_equal(st.obj_pos[i], p)) return i;
  }
  return std::nullopt;
}

// Core checker shared by the named and indexed entry points. Geometric checks
// only consider `actions`; per-action violations found by the caller are
// already in `out`. Returns the post-step state when no violation was found.
std::optional<EnvState> check_and_apply(const EnvConfig& cfg, const EnvState& st,
                                        std::span<const IndexedAction> actions, bool prior_failures,
                                        std::vector<Violation>* out) {
  bool ok = !prior_failures;
  auto report = [&](ViolationKind kind, std::string detail, std::vector<std::string> actors) {
    ok = false;
    if (out) out->push_back(Violation{kind, std::move(detail), std::move(actors)});
  };
  const auto& robots = cfg.robots;

  // Per-action checks.
  for (const auto& a : actions) {
    const auto& name = robots[a.robot].name;
    if (!points_equal(a.start, st.arm_pos[a.robot])) {
      report(ViolationKind::StartMismatch,
             name + " action starts at " + describe(a.start) + " but its arm is at " +
                 describe(st.arm_pos[a.robot]),
             {name});
    }
    if (!geometry::in_reach_band(robots[a.robot].base, a.end)) {
      report(ViolationKind::Unreachable,
             name + " cannot reach " + describe(a.end) + " from base " +
                 describe(robots[a.robot].base),
             {name});
    }
    if (a.move_object && !object_at(st, a.start)) {
      report(ViolationKind::ArmNotAligned,
             name + " is asked to move an object but none is at " + describe(a.start), {name});
    }
    if (!out && !ok) return std::nullopt;
  }

  // Trajectories of acting robots against each other.
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t j = i + 1; j < actions.size(); ++j) {
      const auto& a = actions[i];
      const auto& b = actions[j];
      if (geometry::segments_intersect({a.start, a.end}, {b.start, b.end})) {
        report(ViolationKind::RobotRobotCollision,
               "trajectories of " + robots[a.robot].name + " and " + robots[b.robot].name +
                   " intersect",
               {robots[a.robot].name, robots[b.robot].name});
        if (!out) return std::nullopt;
      }
    }
  }

  std::vector<char> acting(robots.size(), 0);
  std::vector<Point> arm_after = st.arm_pos;
  for (const auto& a : actions) {
    acting[a.robot] = 1;
    arm_after[a.robot] = a.end;
  }

  // Acting trajectories against the arm links of robots that stay still.
  for (const auto& a : actions) {
    for (std::size_t s = 0; s < robots.size(); ++s) {
      if (acting[s]) continue;
      if (geometry::segments_intersect({a.start, a.end}, {robots[s].base, st.arm_pos[s]})) {
        report(ViolationKind::RobotRobotCollision,
               "trajectory of " + robots[a.robot].name + " crosses the arm of " + robots[s].name,
               {robots[a.robot].name, robots[s].name});
        if (!out) return std::nullopt;
      }
    }
  }

  // Arm links after the step. Pairs of still robots are unchanged from the
  // pre-step state and are skipped.
  for (std::size_t i = 0; i < robots.size(); ++i) {
    for (std::size_t j = i + 1; j < robots.size(); ++j) {
      if (!acting[i] && !acting[j]) continue;
      if (geometry::segments_intersect({robots[i].base, arm_after[i]},
                                       {robots[j].base, arm_after[j]})) {
        report(ViolationKind::RobotRobotCollision,
               "arms of " + robots[i].name + " and " + robots[j].name +
                   " intersect after the step",
               {robots[i].name, robots[j].name});
        if (!out) return std::nullopt;
      }
    }
  }

  // Object occupancy after carried objects are dropped at their arm's end.
  std::vector<Point> obj_after = st.obj_pos;
  std::vector<char> moved(obj_after.size(), 0);
  for (const auto& a : actions) {
    if (!a.move_object) continue;
    if (auto idx = object_at(st, a.start); idx && !moved[*idx]) {
      obj_after[*idx] = a.end;
      moved[*idx] = 1;
    }
  }
  for (std::size_t i = 0; i < obj_after.size(); ++i) {
    for (std::size_t j = i + 1; j < obj_after.size(); ++j) {
      if (!moved[i] && !moved[j]) continue;
      if (points_equal(obj_after[i], obj_after[j])) {
        const auto& ni = cfg.objects[i].name;
        const auto& nj = cfg.objects[j].name;
        report(ViolationKind::ObjectObjectCollision,
               ni + " and " + nj + " would both occupy " + describe(obj_after[i]), {ni, nj});
        if (!out) return std::nullopt;
      }
    }
  }

  if (!ok) return std::nullopt;
  return EnvState{std::move(arm_after), std::move(obj_after)};
}

}  // namespace

std::optional<EnvState> simulate_indexed(const EnvConfig& cfg, const EnvState& st,
                                         std::span<const IndexedAction> actions,
                                         std::vector<Violation>* violations) {
  return check_and_apply(cfg, st, actions, false, violations);
}

namespace {

std::optional<EnvState> resolve_and_apply(const EnvConfig& cfg, const EnvState& st,
                                          const Step& step, std::vector<Violation>& out) {
  std::vector<IndexedAction> resolved;
  std::vector<char> seen(cfg.robots.size(), 0);
  bool failed = false;
  for (const auto& a : step.actions) {
    if (!geometry::is_finite(a.start) || !geometry::is_finite(a.end)) {
      out.push_back({ViolationKind::MalformedAction, a.robot + " action has non-finite coordinates",
                     {a.robot}});
      failed = true;
      continue;
    }
    const auto idx = find_robot(cfg, a.robot);
    if (!idx) {
      out.push_back({ViolationKind::UnknownRobot, "no robot named '" + a.robot + "'", {a.robot}});
      failed = true;
      continue;
    }
    if (seen[*idx]) {
      out.push_back({ViolationKind::DuplicateRobot,
                     cfg.robots[*idx].name + " appears more than once in the step",
                     {cfg.robots[*idx].name}});
      failed = true;
      continue;
    }
    seen[*idx] = 1;
    resolved.push_back({*idx, a.start, a.end, a.move_object});
  }
  return check_and_apply(cfg, st, resolved, failed, &out);
}

}  // namespace

std::vector<Violation> validate_step(const EnvConfig& cfg, const EnvState& st, const Step& step) {
  std::vector<Violation> out;
  resolve_and_apply(cfg, st, step, out);
  return out;
}

std::pair<EnvState, std::vector<Violation>> apply_step(const EnvConfig& cfg, const EnvState& st,
                                                       const Step& step) {
  std::vector<Violation> out;
  auto next = resolve_and_apply(cfg, st, step, out);
  if (next && out.empty()) return {std::move(*next), std::move(out)};
  return {st, std::move(out)};
}

bool is_goal(const EnvConfig& cfg, const EnvState& st, double eps) {
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    if (!points_equal(st.obj_pos[i], cfg.objects[i].target, eps)) return false;
  }
  return true;
}

double placement_quality(const Point& obj, const Point& target) {
  return geometry::squared_distance(obj, target);
}

double heuristic(const EnvConfig& cfg, const EnvState& st) {
  double h = 0.0;
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    h += placement_quality(st.obj_pos[i], cfg.objects[i].target);
  }
  return h > 0 ? std::sqrt(h) : 0.0;
}

std::int64_t quantize(double v) { return static_cast<std::int64_t>(std::llround(v * 1e6)); }

std::int64_t quantized_distance_sum(const EnvConfig& cfg, const EnvState& st) {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    const std::int64_t dx = quantize(st.obj_pos[i].x) - quantize(cfg.objects[i].target.x);
    const std::int64_t dy = quantize(st.obj_pos[i].y) - quantize(cfg.objects[i].target.y);
    sum += dx * dx + dy * dy;
  }
  return sum;
}

namespace {

class Digest {
 public:
  void add(std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h_ ^= (u >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  void add(const Point& p) {
    add(quantize(p.x));
    add(quantize(p.y));
  }
  void add(std::string_view s) {
    add(static_cast<std::int64_t>(s.size()));
    for (char c : s) {
      h_ ^= static_cast<unsigned char>(c);
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t finish() const {
    // splitmix64 finalizer for avalanche on top of FNV-1a.
    std::uint64_t z = h_ + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace

std::uint64_t state_key(const EnvState& st) {
  Digest d;
  for (const auto& p : st.arm_pos) d.add(p);
  for (const auto& p : st.obj_pos) d.add(p);
  return d.finish();
}

std::uint64_t config_key(const EnvConfig& cfg) {
  Digest d;
  d.add(to_string(cfg.variant));
  d.add(cfg.width);
  d.add(cfg.height);
  d.add(static_cast<std::int64_t>(cfg.points.size()));
  for (const auto& p : cfg.points) d.add(p);
  d.add(static_cast<std::int64_t>(cfg.robots.size()));
  for (const auto& r : cfg.robots) {
    d.add(r.name);
    d.add(r.base);
    d.add(r.initial_arm ? 1 : 0);
    if (r.initial_arm) d.add(*r.initial_arm);
  }
  d.add(static_cast<std::int64_t>(cfg.objects.size()));
  for (const auto& o : cfg.objects) {
    d.add(o.name);
    d.add(o.start);
    d.add(o.target);
  }
  return d.finish();
}

std::string format_coord(double v, int max_decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", max_decimals, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.push_back('0');
  } else {
    s += ".0";
  }
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string format_point(const Point& p, int max_decimals) {
  return "[" + format_coord(p.x, max_decimals) + ", " + format_coord(p.y, max_decimals) + "]";
}

std::string render_observation(const EnvConfig& cfg, const EnvState& st) {
  std::ostringstream os;
  os << "Object positions:\n";
  for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
    os << "    " << cfg.objects[i].name << ": " << format_point(st.obj_pos[i]) << "\n";
  }
  os << "Target positions:\n";
  for (const auto& o : cfg.objects) {
    os << "    " << o.name << " target: " << format_point(o.target) << "\n";
  }
  os << "Robot positions:\n";
  for (std::size_t i = 0; i < cfg.robots.size(); ++i) {
    os << "    " << cfg.robots[i].name << ": base " << format_point(cfg.robots[i].base)
       << ", arm " << format_point(st.arm_pos[i]) << "\n";
  }
  return os.str();
}

}  // namespace boxnet
