#include "keystep/io.hpp"

#include "keystep/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace keystep {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into place: " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw DataError(std::string(where) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw DataError("unknown field '" + key + "' in " + std::string(where));
    }
}

bool present(const Json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

const Json& require(const Json& j, const char* key, std::string_view where) {
    if (!j.contains(key)) throw DataError("missing field '" + std::string(key) + "' in " + std::string(where));
    return j.at(key);
}

std::string require_string(const Json& j, const char* key, std::string_view where) {
    const Json& v = require(j, key, where);
    if (!v.is_string()) throw DataError("field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

} // namespace

Json action_to_json(const Action& a) {
    Json j;
    j["kind"] = std::string(to_string(a.kind));
    if (a.element_id) j["element_id"] = *a.element_id;
    if (a.text) j["text"] = *a.text;
    if (a.direction) j["direction"] = std::string(to_string(*a.direction));
    return j;
}

Action action_from_json(const Json& j) {
    reject_unknown(j, {"kind", "element_id", "text", "direction"}, "action");
    Action a;
    const std::string kind = require_string(j, "kind", "action");
    auto parsed = parse_action_kind(kind);
    if (!parsed) throw DataError("invalid action kind '" + kind + "'");
    a.kind = *parsed;
    if (present(j, "element_id")) {
        const Json& e = j.at("element_id");
        if (!e.is_number_integer()) throw DataError("element_id must be an integer");
        a.element_id = e.get<std::int64_t>();
    }
    if (present(j, "text")) {
        if (!j.at("text").is_string()) throw DataError("text must be a string");
        a.text = j.at("text").get<std::string>();
    }
    if (present(j, "direction")) {
        if (!j.at("direction").is_string()) throw DataError("direction must be a string");
        const auto d = j.at("direction").get<std::string>();
        auto dir = parse_direction(d);
        if (!dir) throw DataError("invalid direction '" + d + "'");
        a.direction = *dir;
    }
    if (a.kind == ActionKind::Answer) a.element_id.reset();
    return a;
}

Json trajectory_to_json(const Trajectory& t) {
    Json j;
    j["traj_id"] = t.traj_id;
    j["goal_id"] = t.goal_id;
    j["instruction"] = t.instruction;
    j["success"] = t.success;
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        Json sj;
        sj["action"] = action_to_json(s.action);
        sj["observation"] = s.observation;
        if (s.milestone_reward) sj["milestone_reward"] = *s.milestone_reward;
        steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);
    return j;
}

Trajectory trajectory_from_json(const Json& j) {
    reject_unknown(j, {"traj_id", "goal_id", "instruction", "success", "steps"}, "trajectory");
    Trajectory t;
    t.traj_id = require_string(j, "traj_id", "trajectory");
    t.goal_id = require_string(j, "goal_id", "trajectory");
    t.instruction = require_string(j, "instruction", "trajectory");
    const Json& success = require(j, "success", "trajectory");
    if (!success.is_boolean()) throw DataError("success must be a boolean");
    t.success = success.get<bool>();
    const Json& steps = require(j, "steps", "trajectory");
    if (!steps.is_array()) throw DataError("steps must be an array");
    for (const auto& sj : steps) {
        reject_unknown(sj, {"action", "observation", "milestone_reward"}, "step");
        Step s;
        s.action = action_from_json(require(sj, "action", "step"));
        s.observation = require_string(sj, "observation", "step");
        if (present(sj, "milestone_reward")) {
            const Json& m = sj.at("milestone_reward");
            if (!m.is_number()) throw DataError("milestone_reward must be a number");
            s.milestone_reward = m.get<double>();
        }
        t.steps.push_back(std::move(s));
    }
    return t;
}

std::vector<Trajectory> parse_dataset(const std::string& content) {
    std::vector<Trajectory> out;
    std::unordered_set<std::string> seen;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Trajectory t;
        try {
            t = trajectory_from_json(Json::parse(line));
        } catch (const Json::exception& e) {
            throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
        auto violations = validate_trajectory(t);
        if (!violations.empty()) throw DataError("invalid trajectory: " + describe(violations.front()), lineno);
        if (!seen.insert(t.traj_id).second) throw DataError("duplicate traj_id '" + t.traj_id + "'", lineno);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Trajectory> read_dataset(const fs::path& path) { return parse_dataset(read_file(path)); }

std::string serialize_dataset(const std::vector<Trajectory>& trajectories) {
    std::string out;
    for (const auto& t : trajectories) {
        out += trajectory_to_json(t).dump();
        out += '\n';
    }
    return out;
}

void write_dataset(const fs::path& path, const std::vector<Trajectory>& trajectories) {
    std::set<std::string> ids;
    for (const auto& t : trajectories) {
        if (!ids.insert(t.traj_id).second) throw DataError("duplicate traj_id '" + t.traj_id + "'");
    }
    write_file_atomic(path, serialize_dataset(trajectories));
}

std::vector<Json> read_jsonl(const fs::path& path) {
    std::vector<Json> out;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& e) {
            throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
        }
    }
    return out;
}

} // namespace keystep
