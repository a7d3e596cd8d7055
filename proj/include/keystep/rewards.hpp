#pragma once
// Dense progress rewards: r_t = p_t - p_{t-k}, with indices before the
// first step clamped to the initial-state progress p0.

#include "keystep/estimator.hpp"
#include "keystep/io.hpp"
#include "keystep/labeling.hpp"
#include "keystep/remote.hpp"
#include "keystep/trajectory.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace keystep {

enum class RewardSource { Estimator, Labels, Remote };

std::string_view to_string(RewardSource s);
std::optional<RewardSource> parse_reward_source(std::string_view s);

struct RewardSeries {
    std::string traj_id;
    std::size_t k = 1;
    std::vector<double> rewards;
    RewardSource source = RewardSource::Labels;
};

std::vector<double> progress_rewards(std::span<const double> progress, std::size_t k, double p0);

// Sparse terminal reward: 1 at the final step iff judged successful.
std::vector<double> outcome_reward(bool success, std::size_t length);

// Builds the series from a progress sequence; `clip` bounds each reward to
// [-clip, clip] when set.
RewardSeries make_reward_series(const Trajectory& t, std::span<const double> progress, double p0, std::size_t k,
                                RewardSource source, std::optional<double> clip = std::nullopt);

// Where the progress sequence comes from. Exactly the member matching
// `source` must be set.
struct RewardConfig {
    RewardSource source = RewardSource::Labels;
    std::size_t k = 1;
    const ProgressModel* model = nullptr;
    const LabeledTrajectory* labels = nullptr;
    std::optional<Endpoint> endpoint;
    std::chrono::duration<double> timeout{5.0};
    unsigned max_in_flight = 4;
    std::optional<double> clip;
};

// Labels and remote scores start from p0 = 0; the estimator evaluates p0 on
// the goal with an empty history and an empty observation.
RewardSeries reward_trajectory(const Trajectory& t, const RewardConfig& cfg);

Json reward_series_to_json(const RewardSeries& s);
void write_rewards(const std::filesystem::path& path, const std::vector<RewardSeries>& series);

} // namespace keystep
