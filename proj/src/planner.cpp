#include "boxnet/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace boxnet {

using geometry::in_reach_band;
using geometry::points_equal;

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::exhausted: return "exhausted";
    case SolveStatus::iteration_cap: return "iteration_cap";
  }
  return "exhausted";
}

Action to_action(const EnvConfig& cfg, const IndexedAction& a) {
  return Action{cfg.robots[a.robot].name, a.start, a.end, a.move_object};
}

namespace {

std::int64_t quantized_sq(const Point& p, const Point& q) {
  const std::int64_t dx = quantize(p.x) - quantize(q.x);
  const std::int64_t dy = quantize(p.y) - quantize(q.y);
  return dx * dx + dy * dy;
}

bool occupied(const EnvState& st, const Point& p, std::size_t skip = static_cast<std::size_t>(-1)) {
  for (std::size_t i = 0; i < st.obj_pos.size(); ++i) {
    if (i != skip && points_equal(st.obj_pos[i], p)) return true;
  }
  return false;
}

std::optional<std::size_t> object_at(const EnvState& st, const Point& p) {
  for (std::size_t i = 0; i < st.obj_pos.size(); ++i) {
    if (points_equal(st.obj_pos[i], p)) return i;
  }
  return std::nullopt;
}

}  // namespace

std::vector<Point> candidate_drop_points(const EnvConfig& cfg, const EnvState& st,
                                         std::size_t robot, std::size_t object) {
  std::vector<Point> out;
  const Point& base = cfg.robots[robot].base;
  const Point& current = st.obj_pos[object];
  for (const auto& p : cfg.points) {
    if (!in_reach_band(base, p) || points_equal(p, current) || occupied(st, p, object)) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<Point> alternative_arm_destinations(const EnvConfig& cfg, const EnvState& st,
                                                std::size_t robot) {
  std::vector<Point> out;
  const Point& base = cfg.robots[robot].base;
  for (const auto& p : cfg.points) {
    if (!in_reach_band(base, p) || points_equal(p, st.arm_pos[robot]) || occupied(st, p)) continue;
    const IndexedAction move{robot, st.arm_pos[robot], p, false};
    if (!simulate_indexed(cfg, st, std::span<const IndexedAction>(&move, 1), nullptr)) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<IndexedAction> single_robot_actions(const EnvConfig& cfg, const EnvState& st,
                                                std::size_t robot) {
  std::vector<IndexedAction> out;
  const Point& base = cfg.robots[robot].base;
  const Point& arm = st.arm_pos[robot];
  auto push_unique = [&](const IndexedAction& a) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const IndexedAction& b) {
      return b.move_object == a.move_object && points_equal(b.end, a.end);
    });
    if (!dup) out.push_back(a);
  };

  for (std::size_t o = 0; o < cfg.objects.size(); ++o) {
    const Point& pos = st.obj_pos[o];
    const Point& target = cfg.objects[o].target;
    if (!in_reach_band(base, pos) || points_equal(pos, target)) continue;

    const std::int64_t current_quality = quantized_sq(pos, target);
    bool any_carry = false;
    for (const auto& drop : candidate_drop_points(cfg, st, robot, o)) {
      if (quantized_sq(drop, target) >= current_quality) continue;
      if (!points_equal(arm, pos)) push_unique({robot, arm, pos, false});
      push_unique({robot, pos, drop, true});
      any_carry = true;
    }
    if (!any_carry) {
      const auto alternatives = alternative_arm_destinations(cfg, st, robot);
      if (!alternatives.empty()) push_unique({robot, arm, alternatives.front(), false});
    }
  }
  return out;
}

namespace {

struct Candidate {
  IndexedAction action;
  std::int64_t delta = 0;  // change of the quantized distance sum
  bool carry = false;
  std::vector<std::size_t> static_conflicts;  // robots this action collides with if they stay
};

struct RankKey {
  std::int64_t sum;
  int neg_carries;
  int neg_actions;
  std::size_t order;

  auto tie() const { return std::tie(sum, neg_carries, neg_actions, order); }
  bool operator<(const RankKey& o) const { return tie() < o.tie(); }
};

struct Ranked {
  RankKey key;
  std::vector<IndexedAction> actions;
  EnvState state;
  bool operator<(const Ranked& o) const { return key < o.key; }
};

// Enumerates the candidate steps in generation order and keeps the best
// `kBranchLimit` by rank. Subtrees whose optimistic rank cannot beat the
// current worst survivor are skipped; every survivor is confirmed by the
// full step checker, so the result equals exhaustive verification.
class Expander {
 public:
  Expander(const EnvConfig& cfg, const EnvState& st) : cfg_(cfg), st_(st) {
    base_sum_ = quantized_distance_sum(cfg, st);
    const std::size_t n_robots = cfg.robots.size();
    per_robot_.resize(n_robots);
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < n_robots; ++r) {
      const auto raw = single_robot_actions(cfg, st, r);
      if (!raw.empty()) active.push_back(r);
      for (const auto& a : raw) {
        if (auto c = make_candidate(a)) per_robot_[r].push_back(std::move(*c));
      }
    }
    active_ = std::move(active);
  }

  std::vector<Successor> run() {
    if (active_.empty()) return {};
    std::size_t max_group = 1;
    if (active_.size() >= 2) {
      max_group = std::min({kMaxGroup, cfg_.objects.size(), active_.size()});
    }
    for (std::size_t k = 1; k <= max_group; ++k) {
      std::vector<std::size_t> idx(k);
      for (std::size_t i = 0; i < k; ++i) idx[i] = i;
      while (true) {
        group_.clear();
        for (auto i : idx) group_.push_back(active_[i]);
        run_group();
        // next combination in lexicographic order
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == active_.size() - k + (i - 1)) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
      }
    }

    std::vector<Ranked> best;
    while (!heap_.empty()) {
      best.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(best.begin(), best.end());
    std::vector<Successor> out;
    out.reserve(best.size());
    for (auto& b : best) {
      Step step;
      for (const auto& a : b.actions) step.actions.push_back(to_action(cfg_, a));
      out.push_back({std::move(step), std::move(b.state)});
    }
    return out;
  }

 private:
  std::optional<Candidate> make_candidate(const IndexedAction& a) const {
    const Point& base = cfg_.robots[a.robot].base;
    if (!points_equal(a.start, st_.arm_pos[a.robot]) || !in_reach_band(base, a.end)) {
      return std::nullopt;
    }
    Candidate c;
    c.action = a;
    if (a.move_object) {
      const auto obj = object_at(st_, a.start);
      if (!obj) return std::nullopt;
      const Point& target = cfg_.objects[*obj].target;
      c.carry = true;
      c.delta = quantized_sq(a.end, target) - quantized_sq(st_.obj_pos[*obj], target);
    }
    const Segment path{a.start, a.end};
    const Segment link_after{base, a.end};
    for (std::size_t s = 0; s < cfg_.robots.size(); ++s) {
      if (s == a.robot) continue;
      const Segment other{cfg_.robots[s].base, st_.arm_pos[s]};
      if (geometry::segments_intersect(path, other) ||
          geometry::segments_intersect(link_after, other)) {
        c.static_conflicts.push_back(s);
      }
    }
    return c;
  }

  static bool compatible(const Candidate& a, const Candidate& b, const EnvConfig& cfg) {
    if (geometry::segments_intersect({a.action.start, a.action.end}, {b.action.start, b.action.end})) {
      return false;
    }
    return !geometry::segments_intersect({cfg.robots[a.action.robot].base, a.action.end},
                                         {cfg.robots[b.action.robot].base, b.action.end});
  }

  void run_group() {
    const std::size_t k = group_.size();
    std::vector<char> in_group(cfg_.robots.size(), 0);
    for (auto r : group_) in_group[r] = 1;

    usable_.assign(k, {});
    for (std::size_t i = 0; i < k; ++i) {
      for (const auto& c : per_robot_[group_[i]]) {
        const bool blocked = std::any_of(c.static_conflicts.begin(), c.static_conflicts.end(),
                                         [&](std::size_t s) { return !in_group[s]; });
        if (!blocked) usable_[i].push_back(&c);
      }
      if (usable_[i].empty()) return;
    }

    // Optimistic completions for the remaining levels.
    suffix_min_.assign(k + 1, 0);
    suffix_carry_.assign(k + 1, 0);
    for (std::size_t i = k; i-- > 0;) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      int carry = 0;
      for (const auto* c : usable_[i]) {
        best = std::min(best, c->delta);
        carry = std::max(carry, c->carry ? 1 : 0);
      }
      suffix_min_[i] = suffix_min_[i + 1] + best;
      suffix_carry_[i] = suffix_carry_[i + 1] + carry;
    }
    chosen_.assign(k, nullptr);
    dfs(0, 0, 0);
  }

  bool can_improve(std::int64_t sum, int carries, std::size_t actions) const {
    if (heap_.size() < kBranchLimit) return true;
    const RankKey& worst = heap_.top().key;
    const auto bound = std::make_tuple(sum, -carries, -static_cast<int>(actions));
    return bound < std::make_tuple(worst.sum, worst.neg_carries, worst.neg_actions);
  }

  void dfs(std::size_t level, std::int64_t partial, int carries) {
    const std::size_t k = group_.size();
    if (level == k) {
      leaf(carries);
      return;
    }
    for (const auto* c : usable_[level]) {
      bool ok = true;
      for (std::size_t j = 0; j < level && ok; ++j) ok = compatible(*chosen_[j], *c, cfg_);
      if (!ok) continue;
      const std::int64_t next_partial = partial + c->delta;
      const int next_carries = carries + (c->carry ? 1 : 0);
      if (!can_improve(base_sum_ + next_partial + suffix_min_[level + 1],
                       next_carries + suffix_carry_[level + 1], k)) {
        continue;
      }
      chosen_[level] = c;
      dfs(level + 1, next_partial, next_carries);
    }
  }

  void leaf(int carries) {
    const std::size_t order = order_++;
    std::vector<IndexedAction> actions;
    actions.reserve(chosen_.size());
    for (const auto* c : chosen_) actions.push_back(c->action);
    auto next = simulate_indexed(cfg_, st_, actions);
    if (!next) return;
    RankKey key{quantized_distance_sum(cfg_, *next), -carries, -static_cast<int>(actions.size()),
                order};
    if (heap_.size() == kBranchLimit) {
      if (!(key < heap_.top().key)) return;
      heap_.pop();
    }
    heap_.push(Ranked{key, std::move(actions), std::move(*next)});
  }

  const EnvConfig& cfg_;
  const EnvState& st_;
  std::int64_t base_sum_ = 0;
  std::vector<std::vector<Candidate>> per_robot_;
  std::vector<std::size_t> active_;

  std::vector<std::size_t> group_;
  std::vector<std::vector<const Candidate*>> usable_;
  std::vector<std::int64_t> suffix_min_;
  std::vector<int> suffix_carry_;
  std::vector<const Candidate*> chosen_;
  std::size_t order_ = 0;
  std::priority_queue<Ranked> heap_;
};

}  // namespace

std::vector<Successor> expand(const EnvConfig& cfg, const EnvState& st) {
  return Expander(cfg, st).run();
}

ReplayResult replay(const EnvConfig& cfg, const Plan& plan) {
  ReplayResult out;
  out.final_state = init_state(cfg);
  for (const auto& step : plan.steps) {
    auto [next, violations] = apply_step(cfg, out.final_state, step);
    if (!violations.empty()) {
      out.violations = std::move(violations);
      out.reached_goal = is_goal(cfg, out.final_state);
      return out;
    }
    out.final_state = std::move(next);
    ++out.steps_ok;
  }
  out.reached_goal = is_goal(cfg, out.final_state);
  return out;
}

SolveResult solve(const EnvConfig& cfg, std::size_t max_iterations) {
  struct Node {
    double g = 0.0;
    std::optional<std::uint64_t> parent;
    Step step;
    EnvState state;
  };
  struct OpenEntry {
    double f;
    std::uint64_t counter;
    std::uint64_t key;
    bool operator>(const OpenEntry& o) const {
      return std::tie(f, counter) > std::tie(o.f, o.counter);
    }
  };

  SolveResult result;
  EnvState start = init_state(cfg);
  const std::uint64_t start_key = state_key(start);

  std::unordered_map<std::uint64_t, Node> nodes;
  std::unordered_set<std::uint64_t> closed;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::uint64_t counter = 0;

  open.push({heuristic(cfg, start), counter++, start_key});
  nodes.emplace(start_key, Node{0.0, std::nullopt, {}, std::move(start)});

  while (!open.empty() && result.iterations < max_iterations) {
    ++result.iterations;
    const OpenEntry top = open.top();
    open.pop();
    if (closed.contains(top.key)) continue;
    closed.insert(top.key);

    const Node& current = nodes.at(top.key);
    if (is_goal(cfg, current.state)) {
      Plan plan;
      for (std::optional<std::uint64_t> k = top.key; k;) {
        const Node& n = nodes.at(*k);
        if (!n.parent) break;
        plan.steps.push_back(n.step);
        k = n.parent;
      }
      std::reverse(plan.steps.begin(), plan.steps.end());
      const auto check = replay(cfg, plan);
      if (!check.violations.empty() || !check.reached_goal) {
        throw std::logic_error("planner produced a plan that does not replay to the goal");
      }
      result.plan = std::move(plan);
      result.status = SolveStatus::solved;
      return result;
    }

    ++result.expanded;
    const double g_here = current.g;
    auto successors = expand(cfg, current.state);
    for (auto& succ : successors) {
      const std::uint64_t key = state_key(succ.state);
      if (closed.contains(key)) continue;
      const double tentative = g_here + 1.0;
      auto it = nodes.find(key);
      if (it != nodes.end() && tentative >= it->second.g) continue;
      const double f = tentative + heuristic(cfg, succ.state);
      Node node{tentative, top.key, std::move(succ.step), std::move(succ.state)};
      if (it == nodes.end()) nodes.emplace(key, std::move(node));
      else it->second = std::move(node);
      open.push({f, counter++, key});
    }
  }
  result.status = open.empty() ? SolveStatus::exhausted : SolveStatus::iteration_cap;
  return result;
}

double plan_duration(const Plan& plan, double speed) {
  double total = 0.0;
  for (const auto& step : plan.steps) {
    double longest = 0.0;
    for (const auto& a : step.actions) {
      longest = std::max(longest, std::sqrt(geometry::squared_distance(a.start, a.end)));
    }
    total += longest / speed;
  }
  return total;
}

}  // namespace boxnet
