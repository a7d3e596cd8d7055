#pragma once
// File helpers, JSON conversions for the trajectory model, and the JSONL
// dataset reader/writer.

#include "keystep/trajectory.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace keystep {

using Json = nlohmann::ordered_json;

// Writes to a sibling temporary file and renames it into place so readers
// never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

Json action_to_json(const Action& a);
// Throws DataError on unknown fields, bad enum values or wrong types.
// ANSWER actions have any element_id dropped.
Action action_from_json(const Json& j);

Json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

// One trajectory per line. Reading rejects malformed lines, invalid
// trajectories and duplicate traj_ids, citing the 1-based line number.
std::vector<Trajectory> read_dataset(const std::filesystem::path& path);
std::vector<Trajectory> parse_dataset(const std::string& content);
std::string serialize_dataset(const std::vector<Trajectory>& trajectories);
void write_dataset(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);

// Parses a JSONL file of arbitrary objects, failing with the line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

} // namespace keystep
