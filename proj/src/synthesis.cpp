#include "keystep/synthesis.hpp"

#include "keystep/errors.hpp"
#include "keystep/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace keystep {

namespace {

struct StepCounts {
    std::size_t success = 0;
    std::size_t failure = 0;
};

StepCounts count_steps(const std::vector<Trajectory>& ds) {
    StepCounts c;
    for (const auto& t : ds) (t.success ? c.success : c.failure) += t.steps.size();
    return c;
}

double ratio_of(const StepCounts& c) {
    if (c.failure == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(c.success) / static_cast<double>(c.failure);
}

} // namespace

void validate_config(const SynthesisConfig& cfg) {
    if (!(cfg.target_ratio > 0.0) || !std::isfinite(cfg.target_ratio)) {
        throw std::invalid_argument("target ratio must be positive");
    }
    if (!(cfg.tolerance > 0.0 && cfg.tolerance < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
    if (!(cfg.mismatch_fraction >= 0.0 && cfg.mismatch_fraction <= 1.0)) {
        throw std::invalid_argument("mismatch fraction must lie in [0, 1]");
    }
    if (cfg.effectless_patterns.empty()) throw std::invalid_argument("at least one effectless pattern is required");
}

Trajectory synth_failed_mismatch(const GoalRef& goal, const Trajectory& donor, std::size_t serial) {
    if (donor.goal_id == goal.goal_id) {
        throw std::invalid_argument("mismatch synthesis needs a donor from a different goal");
    }
    Trajectory t;
    t.traj_id = "mm~" + goal.goal_id + "~" + donor.traj_id + "~" + std::to_string(serial);
    t.goal_id = goal.goal_id;
    t.instruction = goal.instruction;
    t.success = false;
    t.steps = donor.steps;
    for (auto& s : t.steps) s.milestone_reward.reset();
    return t;
}

ActionSampler::ActionSampler(std::vector<Action> pool) : pool_(std::move(pool)) {
    if (pool_.empty()) throw std::invalid_argument("action sampler needs a non-empty pool");
    for (const auto& a : pool_) {
        if (!validate_action(a).empty()) throw std::invalid_argument("action sampler pool holds an invalid action");
    }
}

ActionSampler ActionSampler::from_dataset(const std::vector<Trajectory>& dataset) {
    std::vector<Action> pool;
    for (const auto& t : dataset) {
        for (const auto& s : t.steps) {
            if (std::find(pool.begin(), pool.end(), s.action) == pool.end()) pool.push_back(s.action);
        }
    }
    return ActionSampler(std::move(pool));
}

Action ActionSampler::operator()(Rng& rng) const { return pool_[uniform_index(rng, pool_.size())]; }

Trajectory synth_failed_randomwalk(const ActionSampler& sampler, std::size_t length, Rng& rng, const GoalRef& goal,
                                   std::string traj_id) {
    if (length == 0) throw std::invalid_argument("random walk length must be at least 1");
    Trajectory t;
    t.traj_id = std::move(traj_id);
    t.goal_id = goal.goal_id;
    t.instruction = goal.instruction;
    t.success = false;
    for (std::size_t i = 0; i < length; ++i) t.steps.push_back({sampler(rng), "", std::nullopt});
    return t;
}

Trajectory insert_effectless(const Trajectory& t, std::size_t position, EffectlessPattern pattern,
                             Direction scroll_direction) {
    if (position > t.steps.size()) throw std::out_of_range("insert_effectless: position past the end");
    const std::string screen = position > 0 ? t.steps[position - 1].observation : std::string();
    std::vector<Step> tuple;
    switch (pattern) {
    case EffectlessPattern::Nothing:
        tuple.push_back({Action::nothing(), screen, std::nullopt});
        break;
    case EffectlessPattern::ScrollPair:
        tuple.push_back({Action::scroll(scroll_direction), screen, std::nullopt});
        tuple.push_back({Action::scroll(opposite(scroll_direction)), screen, std::nullopt});
        break;
    case EffectlessPattern::BackRepeat: {
        if (position == 0) throw std::invalid_argument("GOBACK/repeat needs a preceding action");
        const std::string before = position > 1 ? t.steps[position - 2].observation : std::string();
        tuple.push_back({Action::go_back(), before, std::nullopt});
        tuple.push_back({t.steps[position - 1].action, screen, std::nullopt});
        break;
    }
    }
    Trajectory out = t;
    out.steps.insert(out.steps.begin() + static_cast<std::ptrdiff_t>(position), tuple.begin(), tuple.end());
    return out;
}

Trajectory remove_nothing_steps(const Trajectory& t) {
    Trajectory out = t;
    std::erase_if(out.steps, [](const Step& s) { return s.action.kind == ActionKind::Nothing; });
    if (out.steps.empty()) throw std::invalid_argument("removing NOTHING steps would leave no steps");
    return out;
}

SuccessVariant synth_success_variant(const Trajectory& prototype, Rng& rng, const SynthesisConfig& cfg,
                                     std::string traj_id) {
    if (!prototype.success) throw std::invalid_argument("success variants need a successful prototype");
    if (cfg.effectless_patterns.empty()) throw std::invalid_argument("no effectless patterns configured");

    SuccessVariant v{prototype, std::vector<bool>(prototype.steps.size(), false)};
    const bool has_nothing = std::any_of(prototype.steps.begin(), prototype.steps.end(),
                                         [](const Step& s) { return s.action.kind == ActionKind::Nothing; });
    const bool all_nothing = std::all_of(prototype.steps.begin(), prototype.steps.end(),
                                         [](const Step& s) { return s.action.kind == ActionKind::Nothing; });
    if (has_nothing && !all_nothing && bernoulli(rng, 0.5)) {
        v.trajectory = remove_nothing_steps(prototype);
        v.inserted.assign(v.trajectory.steps.size(), false);
    }

    const std::size_t insertions =
        cfg.max_insertions == 0 ? 0 : static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(cfg.max_insertions)));
    for (std::size_t n = 0; n < insertions; ++n) {
        const auto pattern = cfg.effectless_patterns[uniform_index(rng, cfg.effectless_patterns.size())];
        const std::size_t size = v.trajectory.steps.size();
        const std::size_t position = pattern == EffectlessPattern::BackRepeat ? 1 + uniform_index(rng, size)
                                                                              : uniform_index(rng, size + 1);
        const auto dir = static_cast<Direction>(uniform_index(rng, 4));
        v.trajectory = insert_effectless(v.trajectory, position, pattern, dir);
        const std::size_t added = pattern == EffectlessPattern::Nothing ? 1 : 2;
        v.inserted.insert(v.inserted.begin() + static_cast<std::ptrdiff_t>(position), added, true);
    }
    v.trajectory.traj_id = std::move(traj_id);
    v.trajectory.success = true;
    return v;
}

double success_failure_step_ratio(const std::vector<Trajectory>& dataset) { return ratio_of(count_steps(dataset)); }

BalanceResult balance_dataset(const std::vector<Trajectory>& real, const SynthesisConfig& cfg) {
    validate_config(cfg);
    if (real.empty()) throw DataError("balance: empty input");

    BalanceResult out;
    out.dataset = real;
    StepCounts counts = count_steps(real);
    out.ratio_before = ratio_of(counts);

    std::map<std::string, BalanceRow> rows;
    rows["real/1"] = {"real", true, 0, 0};
    rows["real/0"] = {"real", false, 0, 0};
    for (const auto& t : real) {
        auto& row = rows[t.success ? "real/1" : "real/0"];
        ++row.trajectories;
        row.steps += t.steps.size();
    }

    const double lo = cfg.target_ratio * (1.0 - cfg.tolerance);
    const double hi = cfg.target_ratio * (1.0 + cfg.tolerance);
    auto in_band = [&](double r) { return r >= lo && r <= hi; };

    std::set<std::string> ids;
    for (const auto& t : real) ids.insert(t.traj_id);
    auto add = [&](Trajectory t, const std::string& source) {
        if (!ids.insert(t.traj_id).second) throw std::logic_error("synthetic id collision: " + t.traj_id);
        auto& row = rows[source + (t.success ? "/1" : "/0")];
        row.source = source;
        row.success = t.success;
        ++row.trajectories;
        row.steps += t.steps.size();
        (t.success ? counts.success : counts.failure) += t.steps.size();
        out.dataset.push_back(std::move(t));
        if (out.dataset.size() - real.size() > cfg.max_synthesized) {
            throw DataError("balance: target ratio needs more than " + std::to_string(cfg.max_synthesized) +
                            " synthetic trajectories");
        }
    };

    Rng rng(cfg.seed);
    if (!in_band(ratio_of(counts)) && ratio_of(counts) > cfg.target_ratio) {
        // Too few failure steps.
        std::map<std::string, GoalRef> goals;
        for (const auto& t : real) goals.emplace(t.goal_id, GoalRef{t.goal_id, t.instruction});
        std::vector<GoalRef> goal_list;
        for (auto& [id, g] : goals) goal_list.push_back(g);
        std::vector<std::size_t> fail_lengths;
        for (const auto& t : real) {
            if (!t.success) fail_lengths.push_back(t.steps.size());
        }
        if (fail_lengths.empty()) {
            for (const auto& t : real) fail_lengths.push_back(t.steps.size());
        }
        const bool can_mismatch = goal_list.size() >= 2;
        if (!can_mismatch && cfg.mismatch_fraction >= 1.0) {
            throw DataError("balance: mismatch synthesis needs at least two goals and random walks are disabled");
        }
        const ActionSampler sampler = ActionSampler::from_dataset(real);
        std::size_t serial = 0;
        while (ratio_of(counts) > cfg.target_ratio) {
            const GoalRef& goal = goal_list[uniform_index(rng, goal_list.size())];
            const bool mismatch = can_mismatch && bernoulli(rng, cfg.mismatch_fraction);
            if (mismatch) {
                const Trajectory* donor = nullptr;
                while (!donor || donor->goal_id == goal.goal_id) donor = &real[uniform_index(rng, real.size())];
                add(synth_failed_mismatch(goal, *donor, serial++), "mismatch");
            } else {
                const std::string id = "rw~" + goal.goal_id + "~" + std::to_string(serial++);
                Rng item(derive_seed(cfg.seed, id));
                const std::size_t length = fail_lengths[uniform_index(rng, fail_lengths.size())];
                add(synth_failed_randomwalk(sampler, length, item, goal, id), "randomwalk");
            }
        }
    } else if (!in_band(ratio_of(counts))) {
        // Too few success steps.
        std::vector<const Trajectory*> prototypes;
        for (const auto& t : real) {
            if (t.success) prototypes.push_back(&t);
        }
        if (prototypes.empty()) throw DataError("balance: no successful trajectories to build variants from");
        std::size_t serial = 0;
        while (ratio_of(counts) < cfg.target_ratio) {
            const Trajectory& proto = *prototypes[uniform_index(rng, prototypes.size())];
            const std::string id = proto.traj_id + "~v" + std::to_string(serial++);
            Rng item(derive_seed(cfg.seed, id));
            add(synth_success_variant(proto, item, cfg, id).trajectory, "variant");
        }
    }

    out.ratio_after = ratio_of(counts);
    if (!in_band(out.ratio_after)) {
        std::ostringstream ss;
        ss << "balance: step ratio " << out.ratio_after << " outside [" << lo << ", " << hi
           << "]; the dataset is too small for single trajectories to land inside the band";
        throw DataError(ss.str());
    }
    for (const char* key : {"real/1", "real/0", "mismatch/0", "randomwalk/0", "variant/1"}) {
        auto it = rows.find(key);
        if (it != rows.end()) {
            out.report.push_back(it->second);
        } else {
            const std::string k = key;
            const auto slash = k.find('/');
            out.report.push_back({k.substr(0, slash), k.substr(slash + 1) == "1", 0, 0});
        }
    }
    return out;
}

std::string serialize_balance_report(const std::vector<BalanceRow>& rows) {
    std::string out = "source,success,count_trajectories,count_steps\n";
    for (const auto& r : rows) {
        out += r.source + "," + (r.success ? "true" : "false") + "," + std::to_string(r.trajectories) + "," +
               std::to_string(r.steps) + "\n";
    }
    return out;
}

void write_balance_report(const std::filesystem::path& path, const std::vector<BalanceRow>& rows) {
    write_file_atomic(path, serialize_balance_report(rows));
}

} // namespace keystep
