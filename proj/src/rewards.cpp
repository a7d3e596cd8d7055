#include "keystep/rewards.hpp"

#include "keystep/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace keystep {

std::string_view to_string(RewardSource s) {
    switch (s) {
    case RewardSource::Estimator: return "estimator";
    case RewardSource::Labels: return "labels";
    case RewardSource::Remote: return "remote";
    }
    return "labels";
}

std::optional<RewardSource> parse_reward_source(std::string_view s) {
    if (s == "estimator") return RewardSource::Estimator;
    if (s == "labels") return RewardSource::Labels;
    if (s == "remote") return RewardSource::Remote;
    return std::nullopt;
}

std::vector<double> progress_rewards(std::span<const double> progress, std::size_t k, double p0) {
    if (k < 1) throw std::invalid_argument("progress_rewards: k must be at least 1");
    auto in_range = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_range(p0)) throw std::invalid_argument("progress_rewards: p0 outside [0, 1]");
    if (!std::all_of(progress.begin(), progress.end(), in_range)) {
        throw std::invalid_argument("progress_rewards: progress outside [0, 1]");
    }
    std::vector<double> out(progress.size());
    for (std::size_t t = 0; t < progress.size(); ++t) {
        const double earlier = t >= k ? progress[t - k] : p0;
        out[t] = progress[t] - earlier;
    }
    return out;
}

std::vector<double> outcome_reward(bool success, std::size_t length) {
    std::vector<double> out(length, 0.0);
    if (success && length > 0) out.back() = 1.0;
    return out;
}

RewardSeries make_reward_series(const Trajectory& t, std::span<const double> progress, double p0, std::size_t k,
                                RewardSource source, std::optional<double> clip) {
    if (progress.size() != t.steps.size()) {
        throw DataError("trajectory '" + t.traj_id + "': " + std::to_string(progress.size()) +
                        " progress values for " + std::to_string(t.steps.size()) + " steps");
    }
    RewardSeries s{t.traj_id, k, progress_rewards(progress, k, p0), source};
    if (clip) {
        for (double& r : s.rewards) r = std::clamp(r, -*clip, *clip);
    }
    return s;
}

RewardSeries reward_trajectory(const Trajectory& t, const RewardConfig& cfg) {
    std::vector<double> progress;
    double p0 = 0.0;
    switch (cfg.source) {
    case RewardSource::Labels:
        if (!cfg.labels) throw DataError("no labels for trajectory '" + t.traj_id + "'");
        if (cfg.labels->traj_id != t.traj_id) throw DataError("labels belong to '" + cfg.labels->traj_id + "'");
        for (const auto& l : cfg.labels->labels) progress.push_back(l.progress);
        break;
    case RewardSource::Estimator: {
        if (!cfg.model) throw DataError("no progress model loaded");
        p0 = predict_progress(*cfg.model, StateView{t.instruction, {}, ""});
        for (std::size_t i = 0; i < t.steps.size(); ++i) progress.push_back(predict_progress(*cfg.model, state_at(t, i)));
        break;
    }
    case RewardSource::Remote: {
        if (!cfg.endpoint) throw DataError("no remote scorer endpoint configured");
        std::vector<StateView> states;
        for (std::size_t i = 0; i < t.steps.size(); ++i) states.push_back(state_at(t, i));
        for (const auto& s : score_remote_batch(*cfg.endpoint, states, cfg.timeout, cfg.max_in_flight)) {
            progress.push_back(s.progress);
        }
        break;
    }
    }
    return make_reward_series(t, progress, p0, cfg.k, cfg.source, cfg.clip);
}

Json reward_series_to_json(const RewardSeries& s) {
    Json j;
    j["traj_id"] = s.traj_id;
    j["k"] = s.k;
    j["source"] = std::string(to_string(s.source));
    j["rewards"] = s.rewards;
    return j;
}

void write_rewards(const std::filesystem::path& path, const std::vector<RewardSeries>& series) {
    std::string out;
    for (const auto& s : series) out += reward_series_to_json(s).dump() + "\n";
    write_file_atomic(path, out);
}

} // namespace keystep
