#include "boxnet/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "boxnet/datagen.hpp"
#include "boxnet/errors.hpp"
#include "boxnet/plan_language.hpp"

namespace boxnet {

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no negative zero in output
}

ojson to_json(const Point& p) { return ojson::array({round6(p.x), round6(p.y)}); }

Point point_from_json(const ojson& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw FormatError("expected a point [x, y], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

const ojson& require(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get_as(const ojson& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

EnvConfig config_from_json(const ojson& j) {
  EnvConfig cfg;
  cfg.id = j.contains("id") ? get_as<std::string>(j, "id") : "";
  cfg.variant = j.contains("variant") ? variant_from_string(get_as<std::string>(j, "variant"))
                                      : Variant::standard;
  cfg.width = get_as<int>(j, "width");
  cfg.height = get_as<int>(j, "height");
  cfg.seed = j.contains("seed") ? get_as<std::uint64_t>(j, "seed") : 0;
  if (j.contains("points")) {
    for (const auto& p : require(j, "points")) cfg.points.push_back(point_from_json(p));
  } else {
    cfg.points = quarter_lattice(cfg.width, cfg.height);
  }
  for (const auto& r : require(j, "robots")) {
    RobotSpec spec{get_as<std::string>(r, "name"), point_from_json(require(r, "base")),
                   std::nullopt};
    if (r.contains("arm")) spec.initial_arm = point_from_json(r.at("arm"));
    cfg.robots.push_back(std::move(spec));
  }
  for (const auto& o : require(j, "objects")) {
    cfg.objects.push_back({get_as<std::string>(o, "name"), point_from_json(require(o, "start")),
                           point_from_json(require(o, "target"))});
  }
  return cfg;
}

namespace {

void put_config_fields(ojson& j, const EnvConfig& cfg) {
  j["id"] = cfg.id;
  j["variant"] = std::string(to_string(cfg.variant));
  j["width"] = cfg.width;
  j["height"] = cfg.height;
  ojson points = ojson::array();
  for (const auto& p : cfg.points) points.push_back(to_json(p));
  j["points"] = std::move(points);
  ojson robots = ojson::array();
  for (const auto& r : cfg.robots) {
    ojson rj{{"name", r.name}, {"base", to_json(r.base)}};
    if (r.initial_arm) rj["arm"] = to_json(*r.initial_arm);
    robots.push_back(std::move(rj));
  }
  j["robots"] = std::move(robots);
  ojson objects = ojson::array();
  for (const auto& o : cfg.objects) {
    objects.push_back({{"name", o.name}, {"start", to_json(o.start)}, {"target", to_json(o.target)}});
  }
  j["objects"] = std::move(objects);
}

}  // namespace

ojson to_json(const EnvConfig& cfg) {
  ojson j = ojson::object();
  put_config_fields(j, cfg);
  j["seed"] = cfg.seed;
  return j;
}

ojson to_json(const Plan& plan) {
  ojson steps = ojson::array();
  for (const auto& step : plan.steps) {
    ojson s = ojson::object();
    for (const auto& a : step.actions) s[a.robot] = format_action(a);
    steps.push_back(std::move(s));
  }
  return steps;
}

Plan plan_from_json(const ojson& j) {
  if (!j.is_array()) throw FormatError("plan must be a JSON array of steps");
  Plan plan;
  for (const auto& s : j) {
    if (!s.is_object()) throw FormatError("plan steps must be JSON objects");
    Step step;
    for (const auto& [robot, value] : s.items()) {
      if (!value.is_string()) throw FormatError("action for '" + robot + "' must be a string");
      step.actions.push_back(parse_action(robot, value.get<std::string>()));
    }
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

ojson to_json(const DatasetRecord& r) {
  ojson j = ojson::object();
  put_config_fields(j, r.cfg);
  j["golden_plan"] = to_json(r.golden_plan);
  j["golden_len"] = r.golden_len;
  j["golden_para"] = r.golden_para;
  j["seed"] = r.cfg.seed;
  return j;
}

DatasetRecord record_from_json(const ojson& j) {
  DatasetRecord r;
  r.cfg = config_from_json(j);
  r.golden_plan = plan_from_json(require(j, "golden_plan"));
  r.golden_len = j.contains("golden_len") ? get_as<std::size_t>(j, "golden_len")
                                          : plan_length(r.golden_plan);
  r.golden_para = j.contains("golden_para") ? get_as<std::size_t>(j, "golden_para")
                                            : para_of(r.golden_plan);
  return r;
}

ojson to_json(const Violation& v) {
  return {{"kind", std::string(to_string(v.kind))}, {"detail", v.detail}, {"actors", v.actors}};
}

ojson to_json(const ScoreBreakdown& b) {
  ojson violations = ojson::array();
  for (const auto& v : b.violations) violations.push_back(to_json(v));
  return {{"r_format", b.r_format},
          {"r_execute", b.r_execute},
          {"r_efficiency", b.r_efficiency},
          {"total", b.total},
          {"floored", b.floored},
          {"violations", std::move(violations)},
          {"parse_errors", b.parse_errors},
          {"steps_executed", b.steps_executed},
          {"plan_len", b.plan_len},
          {"para", b.para},
          {"golden_len", b.golden_len}};
}

ojson to_json(const DatasetSummary& s) {
  ojson by_objects = ojson::object();
  for (const auto& [n, c] : s.by_objects) by_objects[std::to_string(n)] = c;
  return {{"count", s.count},
          {"avg_optimal_steps", s.avg_optimal_steps},
          {"avg_para", s.avg_para},
          {"by_size", s.by_size},
          {"by_objects", std::move(by_objects)}};
}

ojson to_json(const GroupAdvantages& g) {
  return {{"rewards", g.rewards}, {"advantages", g.advantages}, {"mean", g.mean}, {"std", g.std}};
}

ojson parse_json(std::string_view text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("invalid JSON in " + what + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string dataset_to_jsonl(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(parse_json(line, path.string())));
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  write_text_file(path, dataset_to_jsonl(records));
}

}  // namespace boxnet
