#include "boxnet/plan_language.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "boxnet/errors.hpp"

namespace boxnet {

std::string_view to_string(PlanMode m) { return m == PlanMode::fullplan ? "fullplan" : "replan"; }

PlanMode plan_mode_from_string(std::string_view s) {
  if (s == "fullplan") return PlanMode::fullplan;
  if (s == "replan") return PlanMode::replan;
  throw FormatError("unknown mode '" + std::string(s) + "'");
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  bool at_end() {
    skip_ws();
    return pos_ == s_.size();
  }
  std::optional<double> number() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '+') ++pos_;
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc{} || ptr == first || !std::isfinite(v)) return std::nullopt;
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }
  std::optional<bool> boolean() {
    skip_ws();
    auto word_is = [&](std::string_view w) {
      if (s_.size() - pos_ < w.size()) return false;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s_[pos_ + i])) != w[i]) return false;
      }
      return true;
    };
    if (word_is("true")) {
      pos_ += 4;
      return true;
    }
    if (word_is("false")) {
      pos_ += 5;
      return false;
    }
    return std::nullopt;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<Point> read_point(Cursor& c) {
  char close = 0;
  if (c.eat("[")) close = ']';
  else if (c.eat("(")) close = ')';
  else return std::nullopt;
  auto x = c.number();
  if (!x || !c.eat(",")) return std::nullopt;
  auto y = c.number();
  if (!y || !c.eat(std::string_view(&close, 1))) return std::nullopt;
  return Point{*x, *y};
}

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 80;
  if (s.size() <= kMax) return std::string(s);
  return std::string(s.substr(0, kMax)) + "...";
}

}  // namespace

Action parse_action(std::string_view robot, std::string_view value) {
  Cursor c(value);
  auto fail = [&]() -> Action {
    throw MalformedAction("cannot parse action for " + std::string(robot) + ": '" +
                          excerpt(value) + "'");
  };
  auto start = read_point(c);
  if (!start) return fail();
  if (!c.eat("->") && !c.eat("→")) return fail();
  auto end = read_point(c);
  if (!end || !c.eat(",")) return fail();
  auto flag = c.boolean();
  if (!flag || !c.at_end()) return fail();
  return Action{std::string(robot), *start, *end, *flag};
}

std::string format_action(const Action& a) {
  return format_point(a.start, 6) + " -> " + format_point(a.end, 6) + ", " +
         (a.move_object ? "True" : "False");
}

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

// SAX handler that keeps duplicate keys and insertion order, which a DOM
// parse would silently collapse.
class StepCollector : public nlohmann::json_sax<nlohmann::json> {
 public:
  explicit StepCollector(PlanMode mode) : mode_(mode) {}

  std::vector<Pairs> steps;
  std::string error;

  bool null() override { return scalar("null"); }
  bool boolean(bool) override { return scalar("a boolean"); }
  bool number_integer(number_integer_t) override { return scalar("a number"); }
  bool number_unsigned(number_unsigned_t) override { return scalar("a number"); }
  bool number_float(number_float_t, const string_t&) override { return scalar("a number"); }
  bool binary(binary_t&) override { return scalar("binary data"); }

  bool string(string_t& val) override {
    if (depth_ == step_depth() && pending_key_) {
      steps.back().emplace_back(std::move(*pending_key_), std::move(val));
      pending_key_.reset();
      return true;
    }
    return scalar("a string");
  }

  bool start_object(std::size_t) override {
    if (depth_ + 1 != step_depth()) return fail("steps must be JSON objects of robot actions");
    ++depth_;
    steps.emplace_back();
    return true;
  }
  bool key(string_t& val) override {
    pending_key_ = std::move(val);
    return true;
  }
  bool end_object() override {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    if (mode_ == PlanMode::replan) return fail("expected a single JSON object for a replan step");
    if (depth_ != 0) return fail("nested arrays are not allowed in a plan");
    ++depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    return true;
  }
  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    if (error.empty()) error = "invalid JSON near byte " + std::to_string(position) + ": " + ex.what();
    return false;
  }

 private:
  int step_depth() const { return mode_ == PlanMode::fullplan ? 2 : 1; }

  bool scalar(const char* what) {
    if (depth_ == step_depth() && pending_key_) {
      return fail("action for '" + *pending_key_ + "' must be a string, got " + what);
    }
    if (depth_ == 0) {
      return fail(mode_ == PlanMode::fullplan ? "expected a JSON list of steps"
                                              : "expected a JSON object for the step");
    }
    return fail(std::string("unexpected ") + what + " in plan");
  }
  bool fail(std::string msg) {
    if (error.empty()) error = std::move(msg);
    return false;
  }

  PlanMode mode_;
  int depth_ = 0;
  std::optional<std::string> pending_key_;
};

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

// Content of the first fenced block at or after `from`.
std::optional<std::string_view> fenced_block(std::string_view text, std::size_t from,
                                             std::string& error) {
  constexpr std::string_view kFence = "```";
  const auto open = text.find(kFence, from);
  if (open == std::string_view::npos) {
    error = "no fenced code block found";
    return std::nullopt;
  }
  auto line_end = text.find('\n', open + kFence.size());
  if (line_end == std::string_view::npos) {
    error = "fenced code block is not terminated";
    return std::nullopt;
  }
  const auto tag = text.substr(open + kFence.size(), line_end - open - kFence.size());
  const bool tag_ok = std::all_of(tag.begin(), tag.end(), [](char ch) {
    const auto u = static_cast<unsigned char>(ch);
    return std::isalnum(u) || ch == '-' || ch == '_' || ch == ' ' || ch == '\t' || ch == '\r';
  });
  if (!tag_ok) {
    error = "fenced code block has an invalid language tag";
    return std::nullopt;
  }
  const auto close = text.find(kFence, line_end + 1);
  if (close == std::string_view::npos) {
    error = "fenced code block is not terminated";
    return std::nullopt;
  }
  return text.substr(line_end + 1, close - line_end - 1);
}

}  // namespace

ParsedResponse parse_response(std::string_view text, PlanMode mode) {
  ParsedResponse out;
  constexpr std::string_view kOpen = "<think>";
  constexpr std::string_view kClose = "</think>";

  const auto opens = count_occurrences(text, kOpen);
  const auto closes = count_occurrences(text, kClose);
  std::size_t search_from = 0;
  if (opens == 1 && closes == 1) {
    const auto o = text.find(kOpen);
    const auto c = text.find(kClose);
    if (o < c) {
      out.has_think = true;
      out.think = std::string(text.substr(o + kOpen.size(), c - o - kOpen.size()));
      search_from = c + kClose.size();
    } else {
      out.parse_errors.emplace_back("</think> appears before <think>");
    }
  } else if (opens == 0 && closes == 0) {
    out.parse_errors.emplace_back("missing <think>...</think> block");
  } else {
    out.parse_errors.emplace_back("expected exactly one <think>...</think> block, found " +
                                  std::to_string(opens) + " opening and " +
                                  std::to_string(closes) + " closing tags");
  }
  if (!out.has_think && closes > 0) search_from = text.rfind(kClose) + kClose.size();

  std::string fence_error;
  const auto block = fenced_block(text, search_from, fence_error);
  if (!block) {
    out.parse_errors.push_back(std::move(fence_error));
    return out;
  }

  StepCollector collector(mode);
  const bool parsed = nlohmann::json::sax_parse(*block, &collector, nlohmann::json::input_format_t::json,
                                                true);
  if (!parsed || !collector.error.empty()) {
    out.parse_errors.push_back(collector.error.empty() ? "invalid plan JSON" : collector.error);
    return out;
  }
  if (mode == PlanMode::replan && collector.steps.size() != 1) {
    out.parse_errors.emplace_back("expected a single JSON object for the step");
    return out;
  }

  Plan plan;
  bool actions_ok = true;
  for (auto& pairs : collector.steps) {
    Step step;
    for (auto& [robot, value] : pairs) {
      try {
        step.actions.push_back(parse_action(robot, value));
      } catch (const MalformedAction& e) {
        out.parse_errors.emplace_back(e.what());
        actions_ok = false;
      }
    }
    plan.steps.push_back(std::move(step));
  }
  if (!actions_ok) return out;

  out.plan = std::move(plan);
  out.format_ok = out.has_think && out.parse_errors.empty();
  return out;
}

namespace {

std::string step_object(const Step& step) {
  std::string s = "{";
  for (std::size_t i = 0; i < step.actions.size(); ++i) {
    if (i) s += ", ";
    s += nlohmann::json(step.actions[i].robot).dump();
    s += ": ";
    s += nlohmann::json(format_action(step.actions[i])).dump();
  }
  s += "}";
  return s;
}

}  // namespace

std::string serialize_plan(const Plan& plan) {
  return "```json\n" + plan_to_json_text(plan) + "\n```";
}

std::string serialize_step(const Step& step) { return "```json\n" + step_object(step) + "\n```"; }

std::size_t para_of(const Plan& plan) {
  std::size_t widest = 0;
  for (const auto& s : plan.steps) widest = std::max(widest, s.actions.size());
  return widest;
}

std::string plan_to_json_text(const Plan& plan) {
  if (plan.steps.empty()) return "[]";
  std::string s = "[\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    s += "    " + step_object(plan.steps[i]);
    s += (i + 1 < plan.steps.size()) ? ",\n" : "\n";
  }
  s += "]";
  return s;
}

Plan plan_from_json_text(std::string_view text) {
  const std::string wrapped = "<think></think>\n```json\n" + std::string(text) + "\n```";
  auto parsed = parse_response(wrapped, PlanMode::fullplan);
  if (!parsed.plan) {
    throw FormatError(parsed.parse_errors.empty() ? "invalid plan" : parsed.parse_errors.front());
  }
  return std::move(*parsed.plan);
}

}  // namespace boxnet
