#pragma once
// Progress label assignment.
//
// Key steps get a progress value from their position in a reference
// schedule (recipe positions, or environment milestones); every other step
// inherits the label of the nearest preceding key step, and steps before
// the first key step are labeled 0.

#include "keystep/io.hpp"
#include "keystep/recipes.hpp"
#include "keystep/soft_lcs.hpp"
#include "keystep/trajectory.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace keystep {

enum class Labeler { Lcs, Env, Linear };

std::string_view to_string(Labeler l);
std::optional<Labeler> parse_labeler(std::string_view s);

struct LabeledTrajectory {
    std::string traj_id;
    std::string goal_id;
    Labeler labeler = Labeler::Lcs;
    std::optional<std::string> matched_recipe_id;
    std::optional<double> completion_ratio;
    std::vector<LabeledStep> labels;

    double final_progress() const { return labels.empty() ? 0.0 : labels.back().progress; }
    bool operator==(const LabeledTrajectory&) const = default;
};

// Soft-LCS score against the recipe divided by recipe length, in [0, 1].
double completion_ratio(const Trajectory& t, const Recipe& r, const ActionMatcher& matcher);

struct RecipeMatch {
    Recipe recipe;
    Alignment alignment; // trajectory actions (A) against recipe actions (B)
    double completion_ratio = 0.0;
};

// Highest completion ratio wins; ties go to the longer recipe, then the
// smaller recipe_id. Throws DataError when the goal has no recipe.
RecipeMatch select_recipe(const Trajectory& t, const RecipeLibrary& lib, const ActionMatcher& matcher);

LabeledTrajectory assign_progress_lcs(const Trajectory& t, const RecipeLibrary& lib, const ActionMatcher& matcher);
LabeledTrajectory assign_progress_env(const Trajectory& t, std::size_t milestone_total);
LabeledTrajectory assign_progress_linear(const Trajectory& t);

// Steps with a strictly positive milestone reward.
std::vector<std::size_t> milestone_steps(const Trajectory& t);

// Violations of range [0, 1], monotonicity and length; empty when sound.
std::vector<std::string> check_labels(const LabeledTrajectory& lt, std::size_t step_count);

struct LabelingOptions {
    Labeler mode = Labeler::Lcs;
    // ENV mode: per-goal milestone totals overriding the inferred ones.
    std::map<std::string, std::size_t> milestone_totals;
    unsigned threads = 1;
};

struct SkippedTrajectory {
    std::string traj_id;
    std::string goal_id;
    std::string reason;
};

struct LabelingSummary {
    std::size_t input_count = 0;
    std::size_t labeled_count = 0;
    std::vector<SkippedTrajectory> skipped;
    std::map<std::string, std::size_t> skipped_by_reason;
    // Failed trajectories whose labels nonetheless reach 1.0.
    std::vector<std::string> failed_full_matches;
};

struct LabelingResult {
    std::vector<LabeledTrajectory> labeled; // input order
    LabelingSummary summary;
};

// ENV milestone total per goal: the largest milestone count seen among the
// goal's successful trajectories.
std::map<std::string, std::size_t> infer_milestone_totals(const std::vector<Trajectory>& dataset);

LabelingResult label_dataset(const std::vector<Trajectory>& dataset, const RecipeLibrary* lib,
                             const ActionMatcher& matcher, const LabelingOptions& opts = {});

Json labeled_to_json(const LabeledTrajectory& lt, const std::optional<std::string>& library_hash);
LabeledTrajectory labeled_from_json(const Json& j);
void write_labels(const std::filesystem::path& path, const std::vector<LabeledTrajectory>& labeled,
                  const std::optional<std::string>& library_hash);
std::vector<LabeledTrajectory> read_labels(const std::filesystem::path& path);

} // namespace keystep
