#include "keystep/labeling.hpp"

#include "keystep/errors.hpp"
#include "keystep/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace keystep {

namespace {

struct KeyStep {
    std::size_t step_index;
    double progress;
    std::optional<std::size_t> recipe_position;
};

// Key steps must be sorted by step index.
std::vector<LabeledStep> spread_labels(std::size_t step_count, const std::vector<KeyStep>& keys) {
    std::vector<LabeledStep> out(step_count);
    double current = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < step_count; ++i) {
        out[i].step_index = i;
        if (k < keys.size() && keys[k].step_index == i) {
            current = keys[k].progress;
            out[i].is_key = true;
            out[i].recipe_position = keys[k].recipe_position;
            ++k;
        }
        out[i].progress = current;
    }
    return out;
}

} // namespace

std::string_view to_string(Labeler l) {
    switch (l) {
    case Labeler::Lcs: return "lcs";
    case Labeler::Env: return "env";
    case Labeler::Linear: return "linear";
    }
    return "lcs";
}

std::optional<Labeler> parse_labeler(std::string_view s) {
    if (s == "lcs") return Labeler::Lcs;
    if (s == "env") return Labeler::Env;
    if (s == "linear") return Labeler::Linear;
    return std::nullopt;
}

double completion_ratio(const Trajectory& t, const Recipe& r, const ActionMatcher& matcher) {
    if (r.actions.empty()) throw std::invalid_argument("completion_ratio: empty recipe");
    const auto actions = t.actions();
    return std::clamp(soft_lcs(actions, r.actions, matcher) / static_cast<double>(r.actions.size()), 0.0, 1.0);
}

RecipeMatch select_recipe(const Trajectory& t, const RecipeLibrary& lib, const ActionMatcher& matcher) {
    const auto* recipes = lib.recipes_for(t.goal_id);
    if (!recipes) throw DataError("no recipe for goal '" + t.goal_id + "'");
    const auto actions = t.actions();

    const Recipe* best = nullptr;
    double best_cr = -1.0;
    for (const auto& r : *recipes) {
        const double cr = completion_ratio(t, r, matcher);
        bool better = false;
        if (!best || cr > best_cr + kTieTolerance) {
            better = true;
        } else if (std::abs(cr - best_cr) <= kTieTolerance) {
            better = r.actions.size() > best->actions.size() ||
                     (r.actions.size() == best->actions.size() && r.recipe_id < best->recipe_id);
        }
        if (better) {
            best = &r;
            best_cr = cr;
        }
    }
    return {*best, soft_lcs_align(actions, best->actions, matcher), best_cr};
}

LabeledTrajectory assign_progress_lcs(const Trajectory& t, const RecipeLibrary& lib, const ActionMatcher& matcher) {
    auto match = select_recipe(t, lib, matcher);
    const double len = static_cast<double>(match.recipe.actions.size());
    std::vector<KeyStep> keys;
    for (const auto& p : match.alignment.pairs) {
        if (p.contribution <= 0.0) continue;
        keys.push_back({p.i, static_cast<double>(p.j + 1) / len, p.j + 1});
    }
    LabeledTrajectory out;
    out.traj_id = t.traj_id;
    out.goal_id = t.goal_id;
    out.labeler = Labeler::Lcs;
    out.matched_recipe_id = match.recipe.recipe_id;
    out.completion_ratio = match.completion_ratio;
    out.labels = spread_labels(t.steps.size(), keys);
    return out;
}

std::vector<std::size_t> milestone_steps(const Trajectory& t) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].milestone_reward.value_or(0.0) > 0.0) out.push_back(i);
    }
    return out;
}

LabeledTrajectory assign_progress_env(const Trajectory& t, std::size_t milestone_total) {
    if (milestone_total == 0) throw std::invalid_argument("assign_progress_env: milestone total must be positive");
    const auto steps = milestone_steps(t);
    if (steps.size() > milestone_total) {
        throw DataError("trajectory '" + t.traj_id + "' has " + std::to_string(steps.size()) +
                        " milestones but the declared total is " + std::to_string(milestone_total));
    }
    std::vector<KeyStep> keys;
    for (std::size_t lambda = 1; lambda <= steps.size(); ++lambda) {
        keys.push_back({steps[lambda - 1], static_cast<double>(lambda) / static_cast<double>(milestone_total), std::nullopt});
    }
    LabeledTrajectory out;
    out.traj_id = t.traj_id;
    out.goal_id = t.goal_id;
    out.labeler = Labeler::Env;
    out.labels = spread_labels(t.steps.size(), keys);
    return out;
}

LabeledTrajectory assign_progress_linear(const Trajectory& t) {
    if (!t.success) throw std::invalid_argument("linear labels are only defined for successful trajectories");
    const double n = static_cast<double>(t.steps.size());
    LabeledTrajectory out;
    out.traj_id = t.traj_id;
    out.goal_id = t.goal_id;
    out.labeler = Labeler::Linear;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        out.labels.push_back({i, static_cast<double>(i + 1) / n, true, std::nullopt});
    }
    return out;
}

std::vector<std::string> check_labels(const LabeledTrajectory& lt, std::size_t step_count) {
    std::vector<std::string> out;
    if (lt.labels.size() != step_count) {
        out.push_back(lt.traj_id + ": " + std::to_string(lt.labels.size()) + " labels for " +
                      std::to_string(step_count) + " steps");
    }
    for (std::size_t i = 0; i < lt.labels.size(); ++i) {
        const double p = lt.labels[i].progress;
        if (!(p >= 0.0 && p <= 1.0)) out.push_back(lt.traj_id + ": label out of range at step " + std::to_string(i));
        if (i > 0 && p < lt.labels[i - 1].progress) {
            out.push_back(lt.traj_id + ": label decreases at step " + std::to_string(i));
        }
    }
    return out;
}

std::map<std::string, std::size_t> infer_milestone_totals(const std::vector<Trajectory>& dataset) {
    std::map<std::string, std::size_t> totals;
    for (const auto& t : dataset) {
        if (!t.success) continue;
        auto& n = totals[t.goal_id];
        n = std::max(n, milestone_steps(t).size());
    }
    return totals;
}

LabelingResult label_dataset(const std::vector<Trajectory>& dataset, const RecipeLibrary* lib,
                             const ActionMatcher& matcher, const LabelingOptions& opts) {
    if (opts.mode == Labeler::Lcs && !lib) throw std::invalid_argument("LCS labeling requires a recipe library");

    std::map<std::string, std::size_t> totals;
    if (opts.mode == Labeler::Env) {
        totals = infer_milestone_totals(dataset);
        for (const auto& [goal, n] : opts.milestone_totals) totals[goal] = n;
    }

    const std::size_t n = dataset.size();
    std::vector<std::optional<LabeledTrajectory>> results(n);
    std::vector<std::string> reasons(n);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        const Trajectory& t = dataset[i];
        switch (opts.mode) {
        case Labeler::Lcs:
            if (!lib->recipes_for(t.goal_id)) {
                reasons[i] = "no recipe for goal";
                return;
            }
            results[i] = assign_progress_lcs(t, *lib, matcher);
            return;
        case Labeler::Env: {
            auto it = totals.find(t.goal_id);
            if (it == totals.end() || it->second == 0) {
                reasons[i] = "no milestone schedule for goal";
                return;
            }
            if (milestone_steps(t).size() > it->second) {
                reasons[i] = "more milestones than the goal's schedule";
                return;
            }
            results[i] = assign_progress_env(t, it->second);
            return;
        }
        case Labeler::Linear:
            if (!t.success) {
                reasons[i] = "linear labels require a successful trajectory";
                return;
            }
            results[i] = assign_progress_linear(t);
            return;
        }
    });

    LabelingResult out;
    out.summary.input_count = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i]) {
            if (!dataset[i].success && results[i]->final_progress() >= 1.0) {
                out.summary.failed_full_matches.push_back(dataset[i].traj_id);
            }
            out.labeled.push_back(std::move(*results[i]));
        } else {
            out.summary.skipped.push_back({dataset[i].traj_id, dataset[i].goal_id, reasons[i]});
            ++out.summary.skipped_by_reason[reasons[i]];
        }
    }
    out.summary.labeled_count = out.labeled.size();
    return out;
}

Json labeled_to_json(const LabeledTrajectory& lt, const std::optional<std::string>& library_hash) {
    Json j;
    j["traj_id"] = lt.traj_id;
    j["goal_id"] = lt.goal_id;
    j["labeler"] = std::string(to_string(lt.labeler));
    j["library_config_hash"] = library_hash ? Json(*library_hash) : Json(nullptr);
    j["matched_recipe_id"] = lt.matched_recipe_id ? Json(*lt.matched_recipe_id) : Json(nullptr);
    j["completion_ratio"] = lt.completion_ratio ? Json(*lt.completion_ratio) : Json(nullptr);
    Json labels = Json::array();
    for (const auto& l : lt.labels) {
        Json lj;
        lj["step_index"] = l.step_index;
        lj["progress"] = l.progress;
        lj["is_key"] = l.is_key;
        lj["recipe_position"] = l.recipe_position ? Json(*l.recipe_position) : Json(nullptr);
        labels.push_back(std::move(lj));
    }
    j["labels"] = std::move(labels);
    return j;
}

LabeledTrajectory labeled_from_json(const Json& j) {
    LabeledTrajectory lt;
    try {
        lt.traj_id = j.at("traj_id").get<std::string>();
        lt.goal_id = j.at("goal_id").get<std::string>();
        auto labeler = parse_labeler(j.at("labeler").get<std::string>());
        if (!labeler) throw DataError("unknown labeler '" + j.at("labeler").get<std::string>() + "'");
        lt.labeler = *labeler;
        if (j.contains("matched_recipe_id") && !j.at("matched_recipe_id").is_null()) {
            lt.matched_recipe_id = j.at("matched_recipe_id").get<std::string>();
        }
        if (j.contains("completion_ratio") && !j.at("completion_ratio").is_null()) {
            lt.completion_ratio = j.at("completion_ratio").get<double>();
        }
        for (const auto& lj : j.at("labels")) {
            LabeledStep s;
            s.step_index = lj.at("step_index").get<std::size_t>();
            s.progress = lj.at("progress").get<double>();
            s.is_key = lj.at("is_key").get<bool>();
            if (lj.contains("recipe_position") && !lj.at("recipe_position").is_null()) {
                s.recipe_position = lj.at("recipe_position").get<std::size_t>();
            }
            lt.labels.push_back(s);
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("labels: ") + e.what());
    }
    auto problems = check_labels(lt, lt.labels.size());
    if (!problems.empty()) throw DataError("labels: " + problems.front());
    return lt;
}

void write_labels(const std::filesystem::path& path, const std::vector<LabeledTrajectory>& labeled,
                  const std::optional<std::string>& library_hash) {
    std::string out;
    for (const auto& lt : labeled) out += labeled_to_json(lt, library_hash).dump() + "\n";
    write_file_atomic(path, out);
}

std::vector<LabeledTrajectory> read_labels(const std::filesystem::path& path) {
    std::vector<LabeledTrajectory> out;
    std::size_t lineno = 0;
    for (const auto& j : read_jsonl(path)) {
        ++lineno;
        try {
            out.push_back(labeled_from_json(j));
        } catch (const DataError& e) {
            throw DataError(e.what(), lineno);
        }
    }
    return out;
}

} // namespace keystep
