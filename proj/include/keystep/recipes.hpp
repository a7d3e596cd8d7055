#pragma once
// Recipe library: successful trajectories of a goal are grouped so that
// every pair within a group is at least theta-similar, and each group is
// reduced to its common action subsequence (the recipe).

#include "keystep/errors.hpp"
#include "keystep/soft_lcs.hpp"
#include "keystep/trajectory.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace keystep {

inline constexpr double kDefaultGroupingThreshold = 0.6;
inline constexpr const char* kLibrarySchemaVersion = "keystep.recipe-library/1";

struct Recipe {
    std::string recipe_id;
    std::string goal_id;
    std::vector<Action> actions;
    std::vector<std::string> source_traj_ids;
    std::size_t group_size = 0;

    bool operator==(const Recipe&) const = default;
};

// Constants that produced a library.
struct LibraryConfig {
    double grouping_threshold = kDefaultGroupingThreshold;
    double nothing_weight = kDefaultNothingWeight;
    std::string text_similarity_id;

    bool operator==(const LibraryConfig&) const = default;
};

LibraryConfig library_config(const ActionMatcher& matcher, double grouping_threshold);
// Stable digest of the config, embedded in label files.
std::string config_hash(const LibraryConfig& cfg);

struct RecipeLibrary {
    LibraryConfig config;
    std::map<std::string, std::vector<Recipe>> by_goal;
    // Groups whose fold came out empty; kept so they are reported rather
    // than silently dropped.
    std::vector<std::vector<std::string>> empty_groups;

    const std::vector<Recipe>* recipes_for(const std::string& goal_id) const;
    std::size_t recipe_count() const;

    bool operator==(const RecipeLibrary&) const = default;
};

class EmptyRecipeError : public Error {
public:
    explicit EmptyRecipeError(std::vector<std::string> group);
    const std::vector<std::string>& group() const { return group_; }

private:
    std::vector<std::string> group_;
};

// Symmetric matrix of pairwise similarities, computed in parallel.
std::vector<std::vector<double>> similarity_matrix(const std::vector<Trajectory>& trajs, const ActionMatcher& matcher,
                                                   unsigned threads = 1);

// Greedy complete linkage in traj_id order: each trajectory joins the first
// group whose every member is at least `threshold`-similar, otherwise it
// opens a new group. Inputs must be successes of a single goal.
std::vector<std::vector<std::string>> group_trajectories(const std::vector<Trajectory>& successes, double threshold,
                                                         const ActionMatcher& matcher, unsigned threads = 1);

// Folds the group members in ascending traj_id order.
Recipe extract_recipe(const std::vector<Trajectory>& group, const ActionMatcher& matcher);

RecipeLibrary build_library(const std::vector<Trajectory>& dataset, double threshold, const ActionMatcher& matcher,
                            unsigned threads = 1);

std::string serialize_library(const RecipeLibrary& lib);
void save_library(const std::filesystem::path& path, const RecipeLibrary& lib);

struct LoadedLibrary {
    RecipeLibrary library;
    std::vector<std::string> warnings;
};

RecipeLibrary parse_library(const std::string& content);
// Warns (does not fail) when `expected` differs from the stored config.
LoadedLibrary load_library(const std::filesystem::path& path, const std::optional<LibraryConfig>& expected = std::nullopt);

} // namespace keystep
