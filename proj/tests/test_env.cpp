#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "boxnet/datagen.hpp"
#include "boxnet/env.hpp"
#include "boxnet/errors.hpp"
#include "boxnet/planner.hpp"
#include "fixtures.hpp"

using namespace boxnet;
using fx::act;
using fx::has_kind;
using fx::make_cfg;

TEST(InitState, CopiesStarts) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {1.75, 1.75}}});
  const auto st = init_state(cfg);
  ASSERT_EQ(st.obj_pos.size(), 1u);
  EXPECT_EQ(st.obj_pos[0], (Point{0.25, 0.25}));
  EXPECT_EQ(st.arm_pos[0], (Point{1.25, 1.25}));
}

TEST(InitState, ArmClippedInward) {
  const auto cfg = make_cfg(2, 2, {{{2, 2}}, {{0, 2}}, {{2, 0}}}, {});
  const auto st = init_state(cfg);
  EXPECT_EQ(st.arm_pos[0], (Point{1.75, 1.75}));
  EXPECT_EQ(st.arm_pos[1], (Point{0.25, 1.75}));
  EXPECT_EQ(st.arm_pos[2], (Point{1.75, 0.25}));
}

TEST(InitState, ExplicitArm) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.25, 0.75}}}, {});
  EXPECT_EQ(init_state(cfg).arm_pos[0], (Point{0.25, 0.75}));
}

TEST(InitState, RejectsSharedStart) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {1.75, 1.75}}, {{0.25, 0.25}, {0.75, 0.75}}});
  EXPECT_THROW(init_state(cfg), ConfigInvalid);
}

TEST(InitState, RejectsOffJointBase) {
  const auto cfg = make_cfg(2, 2, {{{0.5, 0.5}}}, {{{0.25, 0.25}, {1.75, 1.75}}});
  EXPECT_THROW(init_state(cfg), ConfigInvalid);
}

TEST(InitState, RejectsOtherInvariants) {
  EXPECT_THROW(init_state(make_cfg(1, 2, {}, {})), ConfigInvalid);
  EXPECT_THROW(init_state(make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {0.25, 0.25}}})), ConfigInvalid);
  EXPECT_THROW(init_state(make_cfg(2, 2, {{{1, 1}}}, {{{0.3, 0.25}, {0.75, 0.25}}})), ConfigInvalid);
  EXPECT_THROW(init_state(make_cfg(2, 2, {{{1, 1}, Point{1.75, 0.0}}}, {})), ConfigInvalid);
  EXPECT_THROW(init_state(make_cfg(2, 2, {{{1, 1}}},
                                   {{{0.25, 0.25}, {1.75, 1.75}}, {{0.75, 0.25}, {1.75, 1.75}}})),
               ConfigInvalid);
}

// Rule examples from the prompt's collision list.
TEST(ValidateStep, SameEndpoint) {
  const auto cfg = make_cfg(3, 3, {{{1, 1}, Point{0.75, 0.75}}, {{2, 2}, Point{2.25, 1.75}}}, {});
  const Step step{{act(0, {0.75, 0.75}, {0.75, 1.25}), act(1, {2.25, 1.75}, {0.75, 1.25})}};
  EXPECT_TRUE(has_kind(validate_step(cfg, init_state(cfg), step), ViolationKind::RobotRobotCollision));
}

TEST(ValidateStep, EndpointOnArm) {
  const auto cfg = make_cfg(2, 2, {{{0, 0}, Point{0.25, 0.25}}, {{1, 0}, Point{1.25, 0.25}}}, {});
  const Step step{{act(0, {0.25, 0.25}, {0.75, 0.25}), act(1, {1.25, 0.25}, {0.25, 0.75})}};
  const auto vs = validate_step(cfg, init_state(cfg), step);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::RobotRobotCollision);
}

TEST(ValidateStep, CrossingTrajectories) {
  const auto cfg = make_cfg(2, 2, {{{0, 0}, Point{0.25, 0.25}}, {{1, 0}, Point{0.25, 0.75}}}, {});
  const Step step{{act(0, {0.25, 0.25}, {0.75, 0.75}), act(1, {0.25, 0.75}, {0.75, 0.25})}};
  const auto vs = validate_step(cfg, init_state(cfg), step);
  EXPECT_TRUE(has_kind(vs, ViolationKind::RobotRobotCollision));
  for (const auto& v : vs) EXPECT_EQ(v.kind, ViolationKind::RobotRobotCollision);
}

TEST(ValidateStep, SingleRobotValid) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.75}}}, {});
  const Step step{{act(0, {0.75, 0.75}, {1.25, 1.75})}};
  EXPECT_TRUE(validate_step(cfg, init_state(cfg), step).empty());
}

TEST(ValidateStep, ArmNotAligned) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.75}}}, {{{0.25, 0.25}, {1.75, 1.75}}});
  const Step step{{act(0, {0.75, 0.75}, {1.25, 0.75}, true)}};
  const auto vs = validate_step(cfg, init_state(cfg), step);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, ViolationKind::ArmNotAligned);
}

TEST(ValidateStep, PerActionChecks) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.75}}}, {});
  const auto st = init_state(cfg);
  EXPECT_TRUE(has_kind(validate_step(cfg, st, {{act(3, {0.75, 0.75}, {1.25, 0.75})}}),
                       ViolationKind::UnknownRobot));
  EXPECT_TRUE(has_kind(validate_step(cfg, st, {{act(0, {0.75, 0.75}, {1.25, 0.75}),
                                                act(0, {0.75, 0.75}, {0.25, 0.75})}}),
                       ViolationKind::DuplicateRobot));
  EXPECT_TRUE(has_kind(validate_step(cfg, st, {{act(0, {0.25, 0.25}, {1.25, 0.75})}}),
                       ViolationKind::StartMismatch));
  EXPECT_TRUE(has_kind(validate_step(cfg, st, {{act(0, {0.75, 0.75}, {2.0, 0.75})}}),
                       ViolationKind::Unreachable));
  // Name matching ignores case, spaces and underscores.
  EXPECT_TRUE(validate_step(cfg, st, {{{"robot_0", {0.75, 0.75}, {1.25, 0.75}, false}}}).empty());
}

TEST(ValidateStep, ReportsEveryViolation) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.75}}}, {});
  const auto vs = validate_step(cfg, init_state(cfg), {{act(0, {0.25, 0.25}, {2.5, 0.75}, true)}});
  EXPECT_TRUE(has_kind(vs, ViolationKind::StartMismatch));
  EXPECT_TRUE(has_kind(vs, ViolationKind::Unreachable));
  EXPECT_TRUE(has_kind(vs, ViolationKind::ArmNotAligned));
}

TEST(ValidateStep, TrajectoryThroughStaticArm) {
  // Robot 1 stands still with its link from (2,0) to (1.25,0.75); Robot 0
  // sweeps across it.
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.25}}, {{2, 0}, Point{1.25, 0.75}}}, {});
  const auto vs = validate_step(cfg, init_state(cfg), {{act(0, {0.75, 0.25}, {1.75, 0.25})}});
  EXPECT_TRUE(has_kind(vs, ViolationKind::RobotRobotCollision));
}

TEST(ValidateStep, ObjectCollisions) {
  const auto cfg = make_cfg(2, 2, {{{0, 0}, Point{0.25, 0.25}}, {{2, 2}, Point{1.75, 1.75}}},
                            {{{0.25, 0.25}, {1.75, 0.25}}, {{1.75, 1.75}, {0.25, 1.75}},
                             {{0.75, 0.75}, {1.75, 0.75}}});
  const auto st = init_state(cfg);
  // onto a resting object
  EXPECT_TRUE(has_kind(validate_step(cfg, st, {{act(0, {0.25, 0.25}, {0.75, 0.75}, true)}}),
                       ViolationKind::ObjectObjectCollision));
  // both carried to one point: (0.75,0.25) and (1.25,0.75) are not shared, use
  // a point inside both bands instead.
  const auto cfg2 = make_cfg(2, 2, {{{0, 0}, Point{0.25, 0.25}}, {{1, 1}, Point{1.25, 1.25}}},
                             {{{0.25, 0.25}, {1.75, 0.25}}, {{1.25, 1.25}, {0.25, 1.75}}});
  const auto vs = validate_step(cfg2, init_state(cfg2), {{act(0, {0.25, 0.25}, {0.75, 0.75}, true),
                                                         act(1, {1.25, 1.25}, {0.75, 0.75}, true)}});
  EXPECT_TRUE(has_kind(vs, ViolationKind::ObjectObjectCollision));
}

TEST(ApplyStep, CarryMovesObject) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}, Point{0.75, 0.75}}}, {{{0.75, 0.75}, {1.75, 1.75}}});
  const auto [next, vs] = apply_step(cfg, init_state(cfg), {{act(0, {0.75, 0.75}, {1.25, 0.25}, true)}});
  EXPECT_TRUE(vs.empty());
  EXPECT_EQ(next.obj_pos[0], (Point{1.25, 0.25}));
  EXPECT_EQ(next.arm_pos[0], (Point{1.25, 0.25}));
}

TEST(ApplyStep, FailedStepIsNoOp) {
  const auto cfg = make_cfg(2, 2, {{{0, 0}, Point{0.25, 0.25}}, {{1, 0}, Point{0.25, 0.75}}}, {});
  const auto st = init_state(cfg);
  const auto [next, vs] = apply_step(cfg, st, {{act(0, {0.25, 0.25}, {0.75, 0.75}), act(1, {0.25, 0.75}, {0.75, 0.25})}});
  EXPECT_FALSE(vs.empty());
  EXPECT_EQ(next, st);
}

TEST(ApplyStep, EmptyStep) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {1.75, 1.75}}});
  const auto st = init_state(cfg);
  const auto [next, vs] = apply_step(cfg, st, {});
  EXPECT_TRUE(vs.empty());
  EXPECT_EQ(next, st);
}

TEST(Goal, Examples) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {0.75, 0.25}}});
  auto st = init_state(cfg);
  EXPECT_FALSE(is_goal(cfg, st));
  st.obj_pos[0] = {0.75, 0.25};
  EXPECT_TRUE(is_goal(cfg, st));
  st.obj_pos[0] = {0.75 + 1e-7, 0.25};
  EXPECT_TRUE(is_goal(cfg, st, 1e-6));
  st.obj_pos[0] = {0.75, 0.75};
  EXPECT_FALSE(is_goal(cfg, st));
}

TEST(PlacementQuality, Examples) {
  EXPECT_DOUBLE_EQ(placement_quality({0.25, 0.25}, {0.25, 0.25}), 0.0);
  EXPECT_DOUBLE_EQ(placement_quality({0.25, 0.25}, {1.25, 0.25}), 1.0);
  EXPECT_DOUBLE_EQ(placement_quality({0, 0}, {3, 4}), 25.0);
}

TEST(Heuristic, Examples) {
  const auto cfg = make_cfg(3, 3, {{{1, 1}}}, {{{0.25, 0.25}, {1.25, 0.25}}, {{0.25, 1.25}, {1.25, 1.25}}});
  auto st = init_state(cfg);
  EXPECT_NEAR(heuristic(cfg, st), std::sqrt(2.0), 1e-12);
  st.obj_pos[1] = {1.25, 1.25};
  EXPECT_DOUBLE_EQ(heuristic(cfg, st), 1.0);
  st.obj_pos[0] = {1.25, 0.25};
  EXPECT_DOUBLE_EQ(heuristic(cfg, st), 0.0);
  EXPECT_TRUE(is_goal(cfg, st));
}

TEST(StateKey, QuantizationAndDeterminism) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.25, 0.25}, {1.75, 1.75}}});
  auto st = init_state(cfg);
  EXPECT_EQ(state_key(st), state_key(init_state(cfg)));
  auto near = st;
  near.obj_pos[0].x += 1e-9;
  EXPECT_EQ(state_key(st), state_key(near));
  auto moved = st;
  moved.obj_pos[0] = {0.75, 0.25};
  EXPECT_NE(state_key(st), state_key(moved));
}

TEST(StateKey, NoCollisionsOnRandomStates) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coord(1, 119);
  std::unordered_set<std::uint64_t> keys;
  std::set<std::vector<int>> distinct;
  for (int i = 0; i < 100000; ++i) {
    EnvState st;
    std::vector<int> raw;
    for (int k = 0; k < 4; ++k) {
      const int x = coord(rng), y = coord(rng);
      raw.push_back(x);
      raw.push_back(y);
      (k < 2 ? st.arm_pos : st.obj_pos).push_back({x / 20.0, y / 20.0});
    }
    if (distinct.insert(raw).second) keys.insert(state_key(st));
  }
  EXPECT_EQ(keys.size(), distinct.size());
}

TEST(Observation, Format) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {{{0.75, 0.75}, {1.25, 0.25}}});
  const auto text = render_observation(cfg, init_state(cfg));
  EXPECT_EQ(text,
            "Object positions:\n    Object 0: [0.75, 0.75]\n"
            "Target positions:\n    Object 0 target: [1.25, 0.25]\n"
            "Robot positions:\n    Robot 0: base [1.0, 1.0], arm [1.25, 1.25]\n");
  EXPECT_EQ(text, render_observation(cfg, init_state(cfg)));
}

TEST(Observation, NoObjects) {
  const auto cfg = make_cfg(2, 2, {{{1, 1}}}, {});
  EXPECT_EQ(render_observation(cfg, init_state(cfg)),
            "Object positions:\nTarget positions:\nRobot positions:\n    Robot 0: base [1.0, 1.0], arm [1.25, 1.25]\n");
}

TEST(FormatCoord, Style) {
  EXPECT_EQ(format_coord(1.0), "1.0");
  EXPECT_EQ(format_coord(0.75), "0.75");
  EXPECT_EQ(format_coord(2.5), "2.5");
  EXPECT_EQ(format_coord(0.3500000001), "0.35");
}

// Property suite over random states of generated environments.
namespace {

struct Scenario {
  EnvConfig cfg;
  EnvState st;
};

std::vector<Scenario> random_scenarios(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Scenario> out;
  GenOptions o;
  o.min_size = 2;
  o.max_size = 4;
  o.min_objects = 1;
  o.max_objects = 3;
  o.count_per_config = 2;
  o.seed = seed;
  o.allow_shortfall = true;
  o.threads = 1;
  for (const auto& rec : gen_standard(o)) {
    EnvState st = init_state(rec.cfg);
    out.push_back({rec.cfg, st});
    for (const auto& step : rec.golden_plan.steps) {
      st = apply_step(rec.cfg, st, step).first;
      out.push_back({rec.cfg, st});
    }
    if (out.size() >= n) break;
  }
  return out;
}

Step random_step(const EnvConfig& cfg, const EnvState& st, std::mt19937_64& rng) {
  Step step;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t r = 0; r < cfg.robots.size(); ++r) {
    if (!coin(rng)) continue;
    std::vector<Point> band;
    for (const auto& p : cfg.points) {
      if (geometry::in_reach_band(cfg.robots[r].base, p)) band.push_back(p);
    }
    const Point end = band[uniform_below(rng, band.size())];
    step.actions.push_back({cfg.robots[r].name, st.arm_pos[r], end, coin(rng)});
  }
  return step;
}

std::multiset<std::pair<int, std::set<std::string>>> signature(const std::vector<Violation>& vs) {
  std::multiset<std::pair<int, std::set<std::string>>> out;
  for (const auto& v : vs) out.insert({static_cast<int>(v.kind), {v.actors.begin(), v.actors.end()}});
  return out;
}

}  // namespace

TEST(EnvProperties, StepSemantics) {
  std::mt19937_64 rng(21);
  std::size_t valid = 0, invalid = 0;
  for (const auto& sc : random_scenarios(200, 4)) {
    for (int k = 0; k < 20; ++k) {
      const Step step = random_step(sc.cfg, sc.st, rng);
      const auto vs = validate_step(sc.cfg, sc.st, step);
      const auto [next, applied_vs] = apply_step(sc.cfg, sc.st, step);
      EXPECT_EQ(signature(vs), signature(applied_vs));

      // Permuting the actions does not change the verdict.
      Step shuffled = step;
      std::shuffle(shuffled.actions.begin(), shuffled.actions.end(), rng);
      EXPECT_EQ(signature(vs), signature(validate_step(sc.cfg, sc.st, shuffled)));

      if (!vs.empty()) {
        ++invalid;
        EXPECT_EQ(next, sc.st);
        continue;
      }
      ++valid;
      for (std::size_t r = 0; r < sc.cfg.robots.size(); ++r) {
        EXPECT_TRUE(geometry::in_reach_band(sc.cfg.robots[r].base, next.arm_pos[r]));
      }
      for (std::size_t i = 0; i < next.obj_pos.size(); ++i) {
        for (std::size_t j = i + 1; j < next.obj_pos.size(); ++j) {
          EXPECT_FALSE(geometry::points_equal(next.obj_pos[i], next.obj_pos[j]));
        }
      }
      EXPECT_EQ(heuristic(sc.cfg, next) == 0.0, is_goal(sc.cfg, next));

      // Undoing non-carrying moves restores the state.
      bool carries = false;
      Step reverse;
      for (const auto& a : step.actions) {
        carries |= a.move_object;
        reverse.actions.push_back({a.robot, a.end, a.start, false});
      }
      if (!carries) {
        const auto [back, back_vs] = apply_step(sc.cfg, next, reverse);
        EXPECT_TRUE(back_vs.empty());
        EXPECT_EQ(state_key(back), state_key(sc.st));
      }
    }
  }
  EXPECT_GT(valid, 100u);
  EXPECT_GT(invalid, 100u);
}
