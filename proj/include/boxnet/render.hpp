#pragma once

#include <string>

#include "boxnet/env.hpp"

namespace boxnet {

/// SVG figure of the initial environment: grid, lattice points, robot bases
/// with arm links, objects and their targets. When `plan` is given each
/// action adds one red trajectory line (class "trajectory"), shaded by step.
std::string render_svg(const EnvConfig& cfg, const Plan* plan = nullptr, double scale = 100.0);

}  // namespace boxnet
