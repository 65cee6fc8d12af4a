#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "boxnet/env.hpp"
#include "boxnet/planner.hpp"

namespace boxnet {

struct DatasetRecord {
  EnvConfig cfg;
  Plan golden_plan;
  std::size_t golden_len = 0;
  std::size_t golden_para = 0;
};

struct DatasetSummary {
  std::size_t count = 0;
  double avg_optimal_steps = 0.0;
  double avg_para = 0.0;
  std::map<std::string, std::size_t> by_size;     // "WxH" -> records
  std::map<std::size_t, std::size_t> by_objects;  // object count -> records
};

/// Robot base layouts.
///   checkerboard: every joint (x, y) with x + y even; each cell is covered by
///                 its two even corners, so neighbouring reach bands overlap
///                 on whole cells and objects can be handed over.
///   odd_joints:   joints with both coordinates odd; covers every cell but
///                 the bands only touch at their open borders.
enum class RobotLayout { checkerboard, odd_joints };

std::string_view to_string(RobotLayout l);
RobotLayout robot_layout_from_string(std::string_view s);

std::vector<RobotSpec> standard_robot_layout(int width, int height,
                                             RobotLayout layout = RobotLayout::checkerboard);

/// Four quarter points per cell, ordered by x then y.
std::vector<Point> quarter_lattice(int width, int height);

struct GenOptions {
  int min_size = 2;
  int max_size = 6;
  /// When false every (width, height) pair is generated, otherwise only squares.
  bool square_only = true;
  int min_objects = 1;
  int max_objects = 5;
  std::size_t count_per_config = 10;
  std::uint64_t seed = 0;
  std::size_t retries = 50;
  std::size_t max_iterations = kDefaultMaxIterations;
  RobotLayout layout = RobotLayout::checkerboard;
  /// When a config exhausts its retries, keep the records found so far and
  /// move on instead of throwing GenerationExhausted.
  bool allow_shortfall = false;
  /// Worker threads; 0 picks the hardware concurrency. Output order does not
  /// depend on it.
  std::size_t threads = 0;
};

/// Standard variant: quarter-point lattice, layout robots, objects sampled
/// without replacement, each record verified solvable by the planner.
/// Records come out ordered by (config index, sample index).
std::vector<DatasetRecord> gen_standard(const GenOptions& opts);

/// Robot bases drawn uniformly without replacement from all joints, as many as
/// the standard layout places on the same map.
std::vector<DatasetRecord> gen_randrob(const GenOptions& opts);

/// Object starts and targets each shifted by an independent offset in
/// [-0.2, 0.2]^2 (0.05 grain); the shifted positions join the lattice.
std::vector<DatasetRecord> gen_newcoord(const std::vector<DatasetRecord>& base, std::uint64_t seed,
                                        const GenOptions& opts = {});

/// Throws EmptyDataset on an empty input.
DatasetSummary summarize(const std::vector<DatasetRecord>& records);

/// Builds a record from a solved config; throws GenerationExhausted when the
/// planner cannot solve it.
DatasetRecord make_record(EnvConfig cfg, std::size_t max_iterations = kDefaultMaxIterations);

/// Deterministic uniform integer in [0, n) independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

}  // namespace boxnet
