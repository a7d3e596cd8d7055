#pragma once
// Training-data augmentation for the progress estimator: synthetic failures
// (instruction/trajectory mismatches and random walks), synthetic successes
// (prototype variants with effectless tuples added or NOTHING steps
// removed), and success/failure step balancing.

#include "keystep/random.hpp"
#include "keystep/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace keystep {

// Syntactic templates whose insertion leaves the outcome unchanged.
enum class EffectlessPattern {
    Nothing,    // NOTHING
    ScrollPair, // SCROLL d, SCROLL opposite(d)
    BackRepeat, // GOBACK, repeat of the previous action
};

struct SynthesisConfig {
    std::uint64_t seed = 0;
    double target_ratio = 1.0; // success steps / failure steps
    double tolerance = 0.1;    // accepted relative deviation from target_ratio
    std::size_t max_insertions = 2;
    std::vector<EffectlessPattern> effectless_patterns = {EffectlessPattern::Nothing, EffectlessPattern::ScrollPair,
                                                          EffectlessPattern::BackRepeat};
    double mismatch_fraction = 0.5; // share of synthetic failures built by mismatch
    std::size_t max_synthesized = 100000;
};

void validate_config(const SynthesisConfig& cfg);

struct GoalRef {
    std::string goal_id;
    std::string instruction;
};

// The donor's steps under another goal's instruction, as a failure.
// Milestone rewards are stripped.
Trajectory synth_failed_mismatch(const GoalRef& goal, const Trajectory& donor, std::size_t serial = 0);

// Uniform sampler over a fixed pool of valid actions.
class ActionSampler {
public:
    explicit ActionSampler(std::vector<Action> pool);
    // Distinct actions observed in `dataset`, in first-seen order.
    static ActionSampler from_dataset(const std::vector<Trajectory>& dataset);

    Action operator()(Rng& rng) const;
    const std::vector<Action>& pool() const { return pool_; }

private:
    std::vector<Action> pool_;
};

Trajectory synth_failed_randomwalk(const ActionSampler& sampler, std::size_t length, Rng& rng, const GoalRef& goal,
                                   std::string traj_id);

// Inserts `pattern` before step `position` (0..size). BackRepeat needs
// position >= 1. Inserted steps reuse the preceding observation and carry no
// milestone reward.
Trajectory insert_effectless(const Trajectory& t, std::size_t position, EffectlessPattern pattern,
                             Direction scroll_direction = Direction::Down);

// Throws if the trajectory consists only of NOTHING steps.
Trajectory remove_nothing_steps(const Trajectory& t);

struct SuccessVariant {
    Trajectory trajectory;
    std::vector<bool> inserted; // per step of `trajectory`
};

SuccessVariant synth_success_variant(const Trajectory& prototype, Rng& rng, const SynthesisConfig& cfg,
                                     std::string traj_id);

struct BalanceRow {
    std::string source; // real, mismatch, randomwalk, variant
    bool success = false;
    std::size_t trajectories = 0;
    std::size_t steps = 0;
};

struct BalanceResult {
    std::vector<Trajectory> dataset; // real trajectories first, then synthetic ones
    std::vector<BalanceRow> report;
    double ratio_before = 0.0;
    double ratio_after = 0.0;
};

double success_failure_step_ratio(const std::vector<Trajectory>& dataset);

BalanceResult balance_dataset(const std::vector<Trajectory>& real, const SynthesisConfig& cfg);

std::string serialize_balance_report(const std::vector<BalanceRow>& rows);
void write_balance_report(const std::filesystem::path& path, const std::vector<BalanceRow>& rows);

} // namespace keystep
