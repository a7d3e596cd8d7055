#include "keystep/recipes.hpp"

#include "keystep/io.hpp"
#include "keystep/parallel.hpp"
#include "keystep/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace keystep {

namespace {

std::vector<Trajectory> sorted_by_id(std::vector<Trajectory> trajs) {
    std::sort(trajs.begin(), trajs.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.traj_id < b.traj_id; });
    return trajs;
}

Json config_to_json(const LibraryConfig& cfg) {
    Json j;
    j["grouping_threshold"] = cfg.grouping_threshold;
    j["nothing_weight"] = cfg.nothing_weight;
    j["text_similarity"] = cfg.text_similarity_id;
    return j;
}

} // namespace

LibraryConfig library_config(const ActionMatcher& matcher, double grouping_threshold) {
    return {grouping_threshold, matcher.nothing_weight(), matcher.text_similarity().id()};
}

std::string config_hash(const LibraryConfig& cfg) { return hex64(fnv1a64(config_to_json(cfg).dump())); }

const std::vector<Recipe>* RecipeLibrary::recipes_for(const std::string& goal_id) const {
    auto it = by_goal.find(goal_id);
    if (it == by_goal.end() || it->second.empty()) return nullptr;
    return &it->second;
}

std::size_t RecipeLibrary::recipe_count() const {
    std::size_t n = 0;
    for (const auto& [goal, recipes] : by_goal) n += recipes.size();
    return n;
}

EmptyRecipeError::EmptyRecipeError(std::vector<std::string> group)
    : Error([&] {
          std::string msg = "empty recipe for group [";
          for (std::size_t i = 0; i < group.size(); ++i) msg += (i ? ", " : "") + group[i];
          return msg + "]";
      }()),
      group_(std::move(group)) {}

std::vector<std::vector<double>> similarity_matrix(const std::vector<Trajectory>& trajs, const ActionMatcher& matcher,
                                                   unsigned threads) {
    const std::size_t n = trajs.size();
    std::vector<std::vector<Action>> actions(n);
    for (std::size_t i = 0; i < n; ++i) actions[i] = trajs[i].actions();
    std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
    // Row i owns the upper-triangle entries (i, j > i).
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) sim[i][j] = similarity(actions[i], actions[j], matcher);
    });
    for (std::size_t i = 0; i < n; ++i) {
        sim[i][i] = similarity(actions[i], actions[i], matcher);
        for (std::size_t j = 0; j < i; ++j) sim[i][j] = sim[j][i];
    }
    return sim;
}

std::vector<std::vector<std::string>> group_trajectories(const std::vector<Trajectory>& successes, double threshold,
                                                         const ActionMatcher& matcher, unsigned threads) {
    if (successes.empty()) return {};
    for (const auto& t : successes) {
        if (!t.success) throw std::invalid_argument("group_trajectories: '" + t.traj_id + "' is not successful");
        if (t.goal_id != successes.front().goal_id) {
            throw std::invalid_argument("group_trajectories: mixed goal ids");
        }
    }
    const auto trajs = sorted_by_id(successes);
    const auto sim = similarity_matrix(trajs, matcher, threads);

    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        auto fits = [&](const std::vector<std::size_t>& g) {
            return std::all_of(g.begin(), g.end(), [&](std::size_t m) { return sim[i][m] >= threshold; });
        };
        auto it = std::find_if(groups.begin(), groups.end(), fits);
        if (it != groups.end()) {
            it->push_back(i);
        } else {
            groups.push_back({i});
        }
    }

    std::vector<std::vector<std::string>> out;
    out.reserve(groups.size());
    for (const auto& g : groups) {
        std::vector<std::string> ids;
        for (std::size_t m : g) ids.push_back(trajs[m].traj_id);
        out.push_back(std::move(ids));
    }
    return out;
}

Recipe extract_recipe(const std::vector<Trajectory>& group, const ActionMatcher& matcher) {
    if (group.empty()) throw std::invalid_argument("extract_recipe: empty group");
    const auto members = sorted_by_id(group);
    std::vector<std::vector<Action>> seqs;
    std::vector<std::string> ids;
    for (const auto& t : members) {
        seqs.push_back(t.actions());
        ids.push_back(t.traj_id);
    }
    auto actions = fold_lcs(seqs, matcher);
    if (actions.empty()) throw EmptyRecipeError(ids);

    Recipe r;
    r.goal_id = members.front().goal_id;
    r.recipe_id = r.goal_id + "/" + ids.front();
    r.actions = std::move(actions);
    r.group_size = ids.size();
    r.source_traj_ids = std::move(ids);
    return r;
}

RecipeLibrary build_library(const std::vector<Trajectory>& dataset, double threshold, const ActionMatcher& matcher,
                            unsigned threads) {
    RecipeLibrary lib;
    lib.config = library_config(matcher, threshold);

    std::map<std::string, std::vector<Trajectory>> successes;
    for (const auto& t : dataset) {
        if (t.success) successes[t.goal_id].push_back(t);
    }
    for (const auto& [goal, trajs] : successes) {
        std::map<std::string, const Trajectory*> by_id;
        for (const auto& t : trajs) by_id[t.traj_id] = &t;

        std::vector<Recipe> recipes;
        for (const auto& ids : group_trajectories(trajs, threshold, matcher, threads)) {
            std::vector<Trajectory> members;
            for (const auto& id : ids) members.push_back(*by_id.at(id));
            try {
                recipes.push_back(extract_recipe(members, matcher));
            } catch (const EmptyRecipeError& e) {
                lib.empty_groups.push_back(e.group());
            }
        }
        std::sort(recipes.begin(), recipes.end(), [](const Recipe& a, const Recipe& b) {
            if (a.group_size != b.group_size) return a.group_size > b.group_size;
            return a.recipe_id < b.recipe_id;
        });
        if (!recipes.empty()) lib.by_goal[goal] = std::move(recipes);
    }
    return lib;
}

std::string serialize_library(const RecipeLibrary& lib) {
    Json j;
    j["schema_version"] = kLibrarySchemaVersion;
    j["config"] = config_to_json(lib.config);
    Json goals = Json::object();
    for (const auto& [goal, recipes] : lib.by_goal) {
        Json arr = Json::array();
        for (const auto& r : recipes) {
            Json rj;
            rj["recipe_id"] = r.recipe_id;
            rj["goal_id"] = r.goal_id;
            rj["group_size"] = r.group_size;
            rj["source_traj_ids"] = r.source_traj_ids;
            Json acts = Json::array();
            for (const auto& a : r.actions) acts.push_back(action_to_json(a));
            rj["actions"] = std::move(acts);
            arr.push_back(std::move(rj));
        }
        goals[goal] = std::move(arr);
    }
    j["goals"] = std::move(goals);
    j["empty_groups"] = lib.empty_groups;
    return j.dump(2) + "\n";
}

void save_library(const std::filesystem::path& path, const RecipeLibrary& lib) {
    write_file_atomic(path, serialize_library(lib));
}

RecipeLibrary parse_library(const std::string& content) {
    RecipeLibrary lib;
    try {
        const Json j = Json::parse(content);
        if (!j.is_object() || !j.contains("schema_version")) throw DataError("recipe library: missing schema_version");
        const auto version = j.at("schema_version").get<std::string>();
        if (version != kLibrarySchemaVersion) {
            throw DataError("recipe library: unsupported schema version '" + version + "'");
        }
        const Json& cfg = j.at("config");
        lib.config.grouping_threshold = cfg.at("grouping_threshold").get<double>();
        lib.config.nothing_weight = cfg.at("nothing_weight").get<double>();
        lib.config.text_similarity_id = cfg.at("text_similarity").get<std::string>();
        for (const auto& [goal, arr] : j.at("goals").items()) {
            std::vector<Recipe> recipes;
            for (const auto& rj : arr) {
                Recipe r;
                r.recipe_id = rj.at("recipe_id").get<std::string>();
                r.goal_id = rj.at("goal_id").get<std::string>();
                r.group_size = rj.at("group_size").get<std::size_t>();
                r.source_traj_ids = rj.at("source_traj_ids").get<std::vector<std::string>>();
                for (const auto& aj : rj.at("actions")) r.actions.push_back(action_from_json(aj));
                if (r.actions.empty()) throw DataError("recipe library: recipe '" + r.recipe_id + "' has no actions");
                recipes.push_back(std::move(r));
            }
            lib.by_goal[goal] = std::move(recipes);
        }
        if (j.contains("empty_groups")) {
            lib.empty_groups = j.at("empty_groups").get<std::vector<std::vector<std::string>>>();
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("recipe library: ") + e.what());
    }
    return lib;
}

LoadedLibrary load_library(const std::filesystem::path& path, const std::optional<LibraryConfig>& expected) {
    LoadedLibrary out{parse_library(read_file(path)), {}};
    if (expected) {
        const auto& have = out.library.config;
        if (have.grouping_threshold != expected->grouping_threshold) {
            out.warnings.push_back("library grouping threshold " + std::to_string(have.grouping_threshold) +
                                   " differs from configured " + std::to_string(expected->grouping_threshold));
        }
        if (have.nothing_weight != expected->nothing_weight) {
            out.warnings.push_back("library NOTHING weight " + std::to_string(have.nothing_weight) +
                                   " differs from configured " + std::to_string(expected->nothing_weight));
        }
        if (have.text_similarity_id != expected->text_similarity_id) {
            out.warnings.push_back("library text similarity '" + have.text_similarity_id + "' differs from configured '" +
                                   expected->text_similarity_id + "'");
        }
    }
    return out;
}

} // namespace keystep
