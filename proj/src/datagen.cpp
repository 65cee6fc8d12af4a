#include "boxnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <unordered_set>

#include "boxnet/errors.hpp"
#include "boxnet/plan_language.hpp"

namespace boxnet {

std::string_view to_string(RobotLayout l) {
  return l == RobotLayout::checkerboard ? "checkerboard" : "odd_joints";
}

RobotLayout robot_layout_from_string(std::string_view s) {
  if (s == "checkerboard") return RobotLayout::checkerboard;
  if (s == "odd_joints") return RobotLayout::odd_joints;
  throw ConfigInvalid("unknown robot layout '" + std::string(s) + "'");
}

std::vector<RobotSpec> standard_robot_layout(int width, int height, RobotLayout layout) {
  std::vector<RobotSpec> robots;
  for (int x = 0; x <= width; ++x) {
    for (int y = 0; y <= height; ++y) {
      const bool keep = layout == RobotLayout::checkerboard ? (x + y) % 2 == 0
                                                            : (x % 2 == 1 && y % 2 == 1);
      if (!keep) continue;
      robots.push_back({"Robot " + std::to_string(robots.size()),
                        Point{static_cast<double>(x), static_cast<double>(y)}, std::nullopt});
    }
  }
  return robots;
}

std::vector<Point> quarter_lattice(int width, int height) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(4 * width * height));
  for (int i = 0; i < 2 * width; ++i) {
    for (int j = 0; j < 2 * height; ++j) pts.push_back({0.25 + 0.5 * i, 0.25 + 0.5 * j});
  }
  return pts;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ull + b + 0x632be59bd9b4e019ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct MapConfig {
  int width;
  int height;
  int objects;
};

std::vector<MapConfig> map_configs(const GenOptions& o) {
  std::vector<MapConfig> out;
  for (int w = o.min_size; w <= o.max_size; ++w) {
    for (int h = o.square_only ? w : o.min_size; h <= (o.square_only ? w : o.max_size); ++h) {
      for (int n = o.min_objects; n <= o.max_objects; ++n) out.push_back({w, h, n});
    }
  }
  return out;
}

// Partial Fisher-Yates: `k` distinct indices from [0, n).
std::vector<std::size_t> sample_distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<ObjectSpec> sample_objects(std::mt19937_64& rng, const std::vector<Point>& lattice,
                                       int count) {
  const auto n = static_cast<std::size_t>(count);
  if (lattice.size() < n + 1) throw GenerationExhausted("not enough placement points for objects");
  const auto starts = sample_distinct(rng, lattice.size(), n);
  std::vector<char> used_target(lattice.size(), 0);
  std::vector<ObjectSpec> objects;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> free;
    for (std::size_t p = 0; p < lattice.size(); ++p) {
      if (!used_target[p] && p != starts[i]) free.push_back(p);
    }
    const auto t = free[uniform_below(rng, free.size())];
    used_target[t] = 1;
    objects.push_back({"Object " + std::to_string(i), lattice[starts[i]], lattice[t]});
  }
  return objects;
}

std::string record_id(Variant v, const MapConfig& m, std::size_t sample) {
  return std::string(to_string(v)) + "-" + std::to_string(m.width) + "x" +
         std::to_string(m.height) + "-o" + std::to_string(m.objects) + "-" + std::to_string(sample);
}

template <typename Fn>
std::vector<DatasetRecord> run_configs(std::size_t n_configs, std::size_t threads, Fn&& per_config) {
  std::vector<std::vector<DatasetRecord>> parts(n_configs);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1) {
    for (std::size_t c = 0; c < n_configs; ++c) parts[c] = per_config(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t c = next++; c < n_configs; c = next++) parts[c] = per_config(c);
      }));
    }
    for (auto& w : workers) w.get();
  }
  std::vector<DatasetRecord> out;
  for (auto& p : parts) {
    for (auto& r : p) out.push_back(std::move(r));
  }
  return out;
}

std::optional<DatasetRecord> try_record(EnvConfig cfg, std::size_t max_iterations) {
  auto result = solve(cfg, max_iterations);
  if (result.status != SolveStatus::solved) return std::nullopt;
  DatasetRecord rec;
  rec.golden_plan = std::move(*result.plan);
  rec.golden_len = plan_length(rec.golden_plan);
  rec.golden_para = para_of(rec.golden_plan);
  rec.cfg = std::move(cfg);
  return rec;
}

// Samples `count_per_config` unique solvable environments for one map config.
template <typename Sampler>
std::vector<DatasetRecord> sample_config(const GenOptions& opts, Variant variant,
                                         const MapConfig& m, std::uint64_t config_seed,
                                         Sampler&& sampler) {
  std::mt19937_64 rng(config_seed);
  std::vector<DatasetRecord> out;
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t sample = 0; sample < opts.count_per_config; ++sample) {
    bool done = false;
    for (std::size_t attempt = 0; attempt <= opts.retries && !done; ++attempt) {
      EnvConfig cfg = sampler(rng);
      cfg.variant = variant;
      cfg.width = m.width;
      cfg.height = m.height;
      cfg.seed = config_seed;
      cfg.id = record_id(variant, m, sample);
      validate_config(cfg);
      if (seen.contains(config_key(cfg))) continue;
      if (auto rec = try_record(std::move(cfg), opts.max_iterations)) {
        seen.insert(config_key(rec->cfg));
        out.push_back(std::move(*rec));
        done = true;
      }
    }
    if (!done) {
      if (opts.allow_shortfall) break;
      throw GenerationExhausted("no solvable environment for " + std::to_string(m.width) + "x" +
                                std::to_string(m.height) + " with " + std::to_string(m.objects) +
                                " objects after " + std::to_string(opts.retries) + " retries");
    }
  }
  return out;
}

}  // namespace

DatasetRecord make_record(EnvConfig cfg, std::size_t max_iterations) {
  validate_config(cfg);
  const std::string id = cfg.id;
  auto rec = try_record(std::move(cfg), max_iterations);
  if (!rec) throw GenerationExhausted("environment " + id + " is not solvable by the planner");
  return std::move(*rec);
}

std::vector<DatasetRecord> gen_standard(const GenOptions& opts) {
  const auto configs = map_configs(opts);
  return run_configs(configs.size(), opts.threads, [&](std::size_t c) {
    const MapConfig& m = configs[c];
    const auto lattice = quarter_lattice(m.width, m.height);
    const auto robots = standard_robot_layout(m.width, m.height, opts.layout);
    return sample_config(opts, Variant::standard, m, mix(opts.seed, c), [&](std::mt19937_64& rng) {
      EnvConfig cfg;
      cfg.points = lattice;
      cfg.robots = robots;
      cfg.objects = sample_objects(rng, lattice, m.objects);
      return cfg;
    });
  });
}

std::vector<DatasetRecord> gen_randrob(const GenOptions& opts) {
  const auto configs = map_configs(opts);
  return run_configs(configs.size(), opts.threads, [&](std::size_t c) {
    const MapConfig& m = configs[c];
    const auto lattice = quarter_lattice(m.width, m.height);
    const std::size_t n_robots = standard_robot_layout(m.width, m.height, opts.layout).size();
    std::vector<Point> joints;
    for (int x = 0; x <= m.width; ++x) {
      for (int y = 0; y <= m.height; ++y) joints.push_back({double(x), double(y)});
    }
    return sample_config(opts, Variant::randrob, m, mix(opts.seed ^ 0x5241ull, c),
                         [&](std::mt19937_64& rng) {
                           auto picks = sample_distinct(rng, joints.size(), n_robots);
                           std::sort(picks.begin(), picks.end());
                           EnvConfig cfg;
                           cfg.points = lattice;
                           for (auto p : picks) {
                             cfg.robots.push_back({"Robot " + std::to_string(cfg.robots.size()),
                                                   joints[p], std::nullopt});
                           }
                           cfg.objects = sample_objects(rng, lattice, m.objects);
                           return cfg;
                         });
  });
}

namespace {

constexpr int kOffsetSteps = 4;  // offsets are k * 0.05 for k in [-4, 4]

double draw_offset(std::mt19937_64& rng) {
  const auto k = static_cast<int>(uniform_below(rng, 2 * kOffsetSteps + 1)) - kOffsetSteps;
  return k * 0.05;
}

// Keeps coordinates on the 0.05 grain despite binary rounding.
double snap(double v) { return std::round(v * 20.0) / 20.0; }

Point perturb(std::mt19937_64& rng, const Point& p, const EnvConfig& cfg) {
  while (true) {
    Point q{snap(p.x + draw_offset(rng)), snap(p.y + draw_offset(rng))};
    if (q.x > 0 && q.x < cfg.width && q.y > 0 && q.y < cfg.height) return q;
  }
}

}  // namespace

std::vector<DatasetRecord> gen_newcoord(const std::vector<DatasetRecord>& base, std::uint64_t seed,
                                        const GenOptions& opts) {
  return run_configs(base.size(), opts.threads, [&](std::size_t i) {
    const EnvConfig& src = base[i].cfg;
    std::mt19937_64 rng(mix(seed ^ 0x4e43ull, i));
    for (std::size_t attempt = 0; attempt <= opts.retries; ++attempt) {
      EnvConfig cfg = src;
      cfg.variant = Variant::newcoord;
      cfg.seed = seed;
      cfg.id = "newcoord-" + src.id;
      cfg.points = quarter_lattice(src.width, src.height);
      bool clash = false;
      for (std::size_t o = 0; o < cfg.objects.size(); ++o) {
        auto& obj = cfg.objects[o];
        obj.start = perturb(rng, src.objects[o].start, cfg);
        obj.target = perturb(rng, src.objects[o].target, cfg);
        if (geometry::points_equal(obj.start, obj.target)) clash = true;
        for (std::size_t p = 0; p < o; ++p) {
          if (geometry::points_equal(cfg.objects[p].start, obj.start) ||
              geometry::points_equal(cfg.objects[p].target, obj.target)) {
            clash = true;
          }
        }
      }
      if (clash) continue;
      for (const auto& obj : cfg.objects) {
        for (const Point* p : {&obj.start, &obj.target}) {
          const bool known = std::any_of(cfg.points.begin(), cfg.points.end(), [&](const Point& q) {
            return geometry::points_equal(q, *p);
          });
          if (!known) cfg.points.push_back(*p);
        }
      }
      validate_config(cfg);
      if (auto rec = try_record(std::move(cfg), opts.max_iterations)) {
        return std::vector<DatasetRecord>{std::move(*rec)};
      }
    }
    if (opts.allow_shortfall) return std::vector<DatasetRecord>{};
    throw GenerationExhausted("no solvable perturbation of " + src.id + " after " +
                              std::to_string(opts.retries) + " retries");
  });
}

DatasetSummary summarize(const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw EmptyDataset("cannot summarize an empty dataset");
  DatasetSummary s;
  s.count = records.size();
  double steps = 0.0;
  double para = 0.0;
  for (const auto& r : records) {
    steps += static_cast<double>(r.golden_len);
    para += static_cast<double>(r.golden_para);
    ++s.by_size[std::to_string(r.cfg.width) + "x" + std::to_string(r.cfg.height)];
    ++s.by_objects[r.cfg.objects.size()];
  }
  s.avg_optimal_steps = steps / static_cast<double>(s.count);
  s.avg_para = para / static_cast<double>(s.count);
  return s;
}

}  // namespace boxnet
