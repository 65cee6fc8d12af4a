#include "boxnet/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "boxnet/errors.hpp"

namespace boxnet {

namespace {

bool succeeded(const ScoreBreakdown& b) { return b.r_execute > 0.0; }

void score_all(const std::vector<DatasetRecord>& dataset,
               const std::unordered_map<std::string, std::size_t>& index,
               std::vector<Attempt>& attempts, PlanMode mode, const EvalOptions& opts) {
  std::size_t threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, attempts.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < attempts.size(); i = next++) {
      Attempt& a = attempts[i];
      const DatasetRecord& rec = dataset[index.at(a.env_id)];
      a.breakdown = mode == PlanMode::fullplan
                        ? score_fullplan(rec.cfg, a.response, rec.golden_len, opts.reward)
                        : score_replan_episode(rec.cfg, a.transcript, rec.golden_len, opts.reward);
    }
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::future<void>> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();
}

}  // namespace

EvalReport evaluate(const std::vector<DatasetRecord>& dataset, std::vector<Attempt>& attempts,
                    PlanMode mode, const EvalOptions& opts) {
  if (dataset.empty()) throw EmptyDataset("evaluation needs at least one environment");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) index.emplace(dataset[i].cfg.id, i);

  std::map<std::string, std::set<std::size_t>> trials_seen;
  for (const auto& a : attempts) {
    if (!index.contains(a.env_id)) throw MissingEnv("attempt references unknown env '" + a.env_id + "'");
    if (!trials_seen[a.env_id].insert(a.trial).second) {
      throw TrialCountMismatch("env '" + a.env_id + "' has trial " + std::to_string(a.trial) +
                               " more than once");
    }
  }
  for (const auto& rec : dataset) {
    const std::size_t have = trials_seen.contains(rec.cfg.id) ? trials_seen[rec.cfg.id].size() : 0;
    if (have != opts.trials) {
      throw TrialCountMismatch("env '" + rec.cfg.id + "' has " + std::to_string(have) +
                               " attempts, expected " + std::to_string(opts.trials));
    }
  }

  score_all(dataset, index, attempts, mode, opts);

  EvalReport report;
  report.trials = opts.trials;
  report.envs = dataset.size();
  report.attempts = attempts.size();

  struct Acc {
    std::size_t successes = 0;
    double diff = 0.0;
    double para = 0.0;
  };
  std::vector<Acc> acc(dataset.size());
  double diff_total = 0.0;
  double para_total = 0.0;
  for (const auto& a : attempts) {
    const auto& b = *a.breakdown;
    if (!succeeded(b)) continue;
    const auto& rec = dataset[index.at(a.env_id)];
    const double diff = static_cast<double>(b.plan_len) - static_cast<double>(rec.golden_len);
    Acc& e = acc[index.at(a.env_id)];
    ++e.successes;
    e.diff += diff;
    e.para += static_cast<double>(b.para);
    diff_total += diff;
    para_total += static_cast<double>(b.para);
    ++report.successful_attempts;
  }

  double rate_sum = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    EnvRow row;
    row.env_id = dataset[i].cfg.id;
    row.trials = opts.trials;
    row.successes = acc[i].successes;
    row.success_rate = static_cast<double>(row.successes) / static_cast<double>(opts.trials);
    if (row.successes) {
      row.step_diff = acc[i].diff / static_cast<double>(row.successes);
      row.para = acc[i].para / static_cast<double>(row.successes);
    }
    rate_sum += row.success_rate;
    report.per_env.push_back(std::move(row));
  }
  report.success = rate_sum / static_cast<double>(dataset.size());
  if (report.successful_attempts) {
    report.step_diff = diff_total / static_cast<double>(report.successful_attempts);
    report.para = para_total / static_cast<double>(report.successful_attempts);
  }
  return report;
}

std::vector<Attempt> read_attempts(const std::filesystem::path& path, PlanMode mode) {
  std::istringstream in(read_text_file(path));
  std::vector<Attempt> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto j = parse_json(line, where);
    try {
      Attempt a;
      a.env_id = j.at("env_id").get<std::string>();
      a.trial = j.at("trial").get<std::size_t>();
      if (mode == PlanMode::fullplan) {
        a.response = j.at("response").get<std::string>();
      } else {
        for (const auto& t : j.at("transcript")) {
          a.transcript.push_back({t.value("observation", ""), t.at("response").get<std::string>()});
        }
      }
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": bad attempt: " + e.what());
    }
  }
  return out;
}

ojson attempt_to_json(const Attempt& a, PlanMode mode) {
  ojson j{{"env_id", a.env_id}, {"trial", a.trial}};
  if (mode == PlanMode::fullplan) {
    j["response"] = a.response;
  } else {
    ojson turns = ojson::array();
    for (const auto& t : a.transcript) {
      turns.push_back({{"observation", t.observation}, {"response", t.response}});
    }
    j["transcript"] = std::move(turns);
  }
  return j;
}

ojson to_json(const EvalReport& r) {
  ojson rows = ojson::array();
  for (const auto& row : r.per_env) {
    rows.push_back({{"env_id", row.env_id},
                    {"trials", row.trials},
                    {"successes", row.successes},
                    {"success_rate", row.success_rate},
                    {"step_diff", row.step_diff ? ojson(*row.step_diff) : ojson(nullptr)},
                    {"para", row.para ? ojson(*row.para) : ojson(nullptr)}});
  }
  return {{"success", r.success},
          {"step_diff", r.step_diff},
          {"para", r.para},
          {"trials", r.trials},
          {"envs", r.envs},
          {"attempts", r.attempts},
          {"successful_attempts", r.successful_attempts},
          {"per_env", std::move(rows)}};
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "env_id,trials,successes,success_rate,step_diff,para\n";
  for (const auto& row : r.per_env) {
    out << row.env_id << ',' << row.trials << ',' << row.successes << ',' << row.success_rate << ',';
    if (row.step_diff) out << *row.step_diff;
    out << ',';
    if (row.para) out << *row.para;
    out << '\n';
  }
  return out.str();
}

}  // namespace boxnet
