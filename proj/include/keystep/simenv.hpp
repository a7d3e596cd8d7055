#pragma once
// Synthetic milestone environment.
//
// Each task has one to three alternative core recipes of equal length. Every
// core step earns a milestone reward, so ground-truth key steps and progress
// labels are known exactly. Scripted agents produce optimal, noisy,
// early-stopping and random trajectories.

#include "keystep/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace keystep {

struct TaskSpec {
    std::string goal_id;
    std::string instruction;
    std::vector<std::vector<Action>> core_recipes;
    // Milestone indices per core recipe (every core index).
    std::vector<std::vector<std::size_t>> milestone_positions;
    std::vector<Action> distractor_pool;
    // Shown on screen once the matching milestone has been reached.
    std::vector<std::string> subgoal_words;

    std::size_t core_length() const { return core_recipes.front().size(); }
};

struct DifficultyConfig {
    std::size_t min_recipe_length = 4;
    std::size_t max_recipe_length = 10;
    std::size_t max_recipes = 3;
    // Alternative recipes of one task must be less similar than this.
    double distinctness_threshold = 0.6;
    std::size_t max_retries = 64;
};

enum class PolicyKind { Optimal, Noisy, EarlyStop, Random };

std::string_view to_string(PolicyKind k);

struct AgentPolicy {
    PolicyKind kind = PolicyKind::Optimal;
    double noise_rate = 0.3;   // [0, 1)
    double stop_fraction = 0.5; // (0, 1]
};

void validate_policy(const AgentPolicy& p);

std::vector<TaskSpec> generate_tasks(std::size_t n, std::uint64_t seed, const DifficultyConfig& cfg = {});

// Key steps are the milestone-rewarded steps.
struct AgentRun {
    Trajectory trajectory;
    PolicyKind policy = PolicyKind::Optimal;
    std::optional<std::size_t> recipe_index; // absent for RANDOM
    std::vector<std::size_t> key_steps;
};

AgentRun run_agent(const TaskSpec& task, const AgentPolicy& policy, std::uint64_t seed, const std::string& traj_id);

struct PolicyMix {
    double optimal = 0.25;
    double noisy = 0.35;
    double early_stop = 0.20;
    double random = 0.20;
    double noise_rate = 0.3;
    double stop_fraction = 0.5;

    // Parses "optimal=0.25,noisy=0.35,early=0.2,random=0.2".
    static PolicyMix parse(const std::string& spec);
};

struct TruthRow {
    std::string traj_id;
    std::size_t step_index = 0;
    double true_progress = 0.0;
    bool is_key = false;

    bool operator==(const TruthRow&) const = default;
};

struct Corpus {
    std::vector<Trajectory> dataset; // sorted by traj_id
    std::vector<TruthRow> truth;     // grouped by trajectory, in dataset order
    std::map<std::string, PolicyKind> policies;
};

Corpus generate_corpus(const std::vector<TaskSpec>& tasks, const PolicyMix& mix, std::size_t per_task,
                       std::uint64_t seed, unsigned threads = 1);

std::string serialize_truth(const std::vector<TruthRow>& rows);
void write_truth(const std::filesystem::path& path, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth(const std::filesystem::path& path);

// Rows regrouped per trajectory.
std::map<std::string, std::vector<TruthRow>> truth_by_trajectory(const std::vector<TruthRow>& rows);

} // namespace keystep
