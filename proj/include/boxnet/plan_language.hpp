#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boxnet/env.hpp"

namespace boxnet {

enum class PlanMode { fullplan, replan };

std::string_view to_string(PlanMode m);
PlanMode plan_mode_from_string(std::string_view s);

/// Result of reading one model response. In replan mode `plan` holds exactly
/// one step when present.
struct ParsedResponse {
  std::string think;
  std::optional<Plan> plan;
  bool has_think = false;
  bool format_ok = false;
  std::vector<std::string> parse_errors;
};

/// Never throws; all problems end up in `parse_errors`.
///
/// A response is well formatted when it holds exactly one <think>...</think>
/// block followed by a fenced code block (``` with an optional language tag)
/// whose content is a JSON array of step objects (fullplan) or a single step
/// object (replan), and every value is an action string. The plan is still
/// extracted when only the think block is missing, so replan episodes can
/// execute the step while withholding the format reward.
ParsedResponse parse_response(std::string_view text, PlanMode mode);

/// Parses "[x, y] -> [x, y], True" (parentheses and the unicode arrow are
/// also accepted; the boolean is case-insensitive). Throws MalformedAction.
Action parse_action(std::string_view robot, std::string_view value);

/// Value string for one action, the inverse of `parse_action`.
std::string format_action(const Action& a);

/// Canonical fenced JSON block for a plan / a single replan step.
std::string serialize_plan(const Plan& plan);
std::string serialize_step(const Step& step);

/// Number of steps; the unit used for len(s) in the reward and StepDiff.
inline std::size_t plan_length(const Plan& plan) { return plan.steps.size(); }

/// Widest step, i.e. the most robots acting at once. 0 for the empty plan.
std::size_t para_of(const Plan& plan);

/// Plan as a bare JSON document (array of {robot: action} objects), used in
/// dataset files. `plan_from_json_text` throws FormatError on bad input.
std::string plan_to_json_text(const Plan& plan);
Plan plan_from_json_text(std::string_view text);

}  // namespace boxnet
