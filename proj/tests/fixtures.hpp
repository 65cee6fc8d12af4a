#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boxnet/datagen.hpp"
#include "boxnet/env.hpp"

namespace fx {

struct RobotAt {
  boxnet::Point base;
  std::optional<boxnet::Point> arm = std::nullopt;
};

struct ObjectAt {
  boxnet::Point start;
  boxnet::Point target;
};

inline boxnet::EnvConfig make_cfg(int w, int h, const std::vector<RobotAt>& robots,
                                  const std::vector<ObjectAt>& objects,
                                  boxnet::Variant variant = boxnet::Variant::standard) {
  boxnet::EnvConfig cfg;
  cfg.id = "fixture";
  cfg.variant = variant;
  cfg.width = w;
  cfg.height = h;
  cfg.points = boxnet::quarter_lattice(w, h);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    cfg.robots.push_back({"Robot " + std::to_string(i), robots[i].base, robots[i].arm});
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    cfg.objects.push_back({"Object " + std::to_string(i), objects[i].start, objects[i].target});
  }
  return cfg;
}

inline boxnet::Action act(int robot, boxnet::Point from, boxnet::Point to, bool carry = false) {
  return {"Robot " + std::to_string(robot), from, to, carry};
}

inline bool has_kind(const std::vector<boxnet::Violation>& vs, boxnet::ViolationKind k) {
  for (const auto& v : vs) {
    if (v.kind == k) return true;
  }
  return false;
}

}  // namespace fx
