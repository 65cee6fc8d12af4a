#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxnet/datagen.hpp"
#include "boxnet/env.hpp"
#include "boxnet/reward.hpp"

namespace boxnet {

using ojson = nlohmann::ordered_json;

/// Coordinates are written rounded to 6 decimals.
double round6(double v);

ojson to_json(const Point& p);
Point point_from_json(const ojson& j);

/// Accepts both bare configs and dataset records. Missing `variant` defaults
/// to standard, missing `id` to "", missing `seed` to 0. Does not validate.
EnvConfig config_from_json(const ojson& j);
ojson to_json(const EnvConfig& cfg);

ojson to_json(const Plan& plan);
/// Array of {robot: "action"} objects. Throws FormatError / MalformedAction.
Plan plan_from_json(const ojson& j);

ojson to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const ojson& j);

ojson to_json(const Violation& v);
ojson to_json(const ScoreBreakdown& b);
ojson to_json(const DatasetSummary& s);
ojson to_json(const GroupAdvantages& g);

/// Throws FormatError on malformed JSON text.
ojson parse_json(std::string_view text, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// One record per line.
std::string dataset_to_jsonl(const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

}  // namespace boxnet
