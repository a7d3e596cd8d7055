#include "keystep/simenv.hpp"

#include "keystep/errors.hpp"
#include "keystep/io.hpp"
#include "keystep/parallel.hpp"
#include "keystep/random.hpp"
#include "keystep/soft_lcs.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace keystep {

namespace {

constexpr std::array<std::string_view, 20> kScreenWords = {
    "menu",   "banner", "home",   "search", "settings", "profile", "loading", "footer", "sidebar", "promo",
    "list",   "item",   "tab",    "icon",   "button",   "dialog",  "header",  "card",   "feed",    "toast"};

constexpr std::array<std::string_view, 8> kNoiseTexts = {
    "hello there", "test entry", "random words", "lorem ipsum", "search query", "open menu", "tap here", "go home"};

constexpr std::array<char, 14> kConsonants = {'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z'};
constexpr std::array<char, 5> kVowels = {'a', 'e', 'i', 'o', 'u'};

constexpr std::int64_t kElementRange = 400;
constexpr std::size_t kDistractorClicks = 12;

std::string pseudo_word(Rng& rng) {
    std::string w;
    for (int s = 0; s < 3; ++s) {
        w.push_back(kConsonants[uniform_index(rng, kConsonants.size())]);
        w.push_back(kVowels[uniform_index(rng, kVowels.size())]);
    }
    return w;
}

std::string unique_word(Rng& rng, std::set<std::string>& used) {
    for (;;) {
        auto w = pseudo_word(rng);
        if (std::find(kScreenWords.begin(), kScreenWords.end(), w) != kScreenWords.end()) continue;
        if (used.insert(w).second) return w;
    }
}

std::vector<Action> make_recipe(Rng& rng, std::size_t length, const std::vector<std::string>& subgoals,
                                std::set<std::string>& used_words) {
    std::vector<Action> recipe;
    std::set<std::int64_t> elements;
    for (std::size_t j = 0; j < length; ++j) {
        std::int64_t element;
        do {
            element = uniform_int(rng, 0, kElementRange - 1);
        } while (!elements.insert(element).second);
        const double roll = uniform_unit(rng);
        if (roll < 0.65) {
            recipe.push_back(Action::click(element));
        } else if (roll < 0.8) {
            recipe.push_back(Action::long_click(element));
        } else {
            recipe.push_back(Action::input(element, subgoals[j] + " " + unique_word(rng, used_words)));
        }
    }
    return recipe;
}

std::string observation_for(const TaskSpec& task, std::size_t reached, Rng& rng) {
    std::string obs = "page ";
    obs += kScreenWords[uniform_index(rng, kScreenWords.size())];
    obs += " | done:";
    for (std::size_t i = 0; i < reached; ++i) obs += " " + task.subgoal_words[i];
    obs += " | ";
    obs += kScreenWords[uniform_index(rng, kScreenWords.size())];
    if (reached == task.core_length()) obs += " | complete";
    return obs;
}

// Tracks milestone progress while an agent acts.
class Episode {
public:
    Episode(const TaskSpec& task, std::optional<std::size_t> recipe, Rng& rng)
        : task_(task), recipe_(recipe), rng_(rng), progress_(task.core_recipes.size(), 0) {}

    void act(const Action& a) {
        bool milestone = false;
        if (recipe_) {
            auto& p = progress_[*recipe_];
            const auto& core = task_.core_recipes[*recipe_];
            if (p < core.size() && core[p] == a) {
                ++p;
                milestone = true;
            }
        } else {
            // Undirected agents earn a milestone whenever they extend the best
            // prefix of any recipe.
            const std::size_t before = reached();
            for (std::size_t r = 0; r < progress_.size(); ++r) {
                const auto& core = task_.core_recipes[r];
                if (progress_[r] < core.size() && core[progress_[r]] == a) ++progress_[r];
            }
            milestone = reached() > before;
        }
        if (milestone) run_.key_steps.push_back(run_.trajectory.steps.size());
        run_.trajectory.steps.push_back({a, observation_for(task_, reached(), rng_), milestone ? 1.0 : 0.0});
    }

    std::size_t reached() const { return *std::max_element(progress_.begin(), progress_.end()); }

    AgentRun finish(std::string traj_id, PolicyKind kind, bool success) {
        run_.trajectory.traj_id = std::move(traj_id);
        run_.trajectory.goal_id = task_.goal_id;
        run_.trajectory.instruction = task_.instruction;
        run_.trajectory.success = success;
        run_.policy = kind;
        run_.recipe_index = recipe_;
        return std::move(run_);
    }

private:
    const TaskSpec& task_;
    std::optional<std::size_t> recipe_;
    Rng& rng_;
    std::vector<std::size_t> progress_;
    AgentRun run_;
};

// A distractor action or an effectless tuple.
std::vector<Action> noise_unit(const TaskSpec& task, Rng& rng) {
    const double roll = uniform_unit(rng);
    if (roll < 0.6) return {task.distractor_pool[uniform_index(rng, task.distractor_pool.size())]};
    if (roll < 0.8) return {Action::nothing()};
    const auto d = static_cast<Direction>(uniform_index(rng, 4));
    return {Action::scroll(d), Action::scroll(opposite(d))};
}

void emit_with_noise(Episode& ep, const TaskSpec& task, const std::vector<Action>& core, std::size_t count,
                     double noise_rate, Rng& rng) {
    for (std::size_t j = 0; j < count; ++j) {
        for (int inserted = 0; inserted < 3 && bernoulli(rng, noise_rate); ++inserted) {
            for (const auto& a : noise_unit(task, rng)) ep.act(a);
        }
        ep.act(core[j]);
    }
}

} // namespace

std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::Optimal: return "optimal";
    case PolicyKind::Noisy: return "noisy";
    case PolicyKind::EarlyStop: return "early";
    case PolicyKind::Random: return "random";
    }
    return "optimal";
}

void validate_policy(const AgentPolicy& p) {
    if (!(p.noise_rate >= 0.0 && p.noise_rate < 1.0)) throw std::invalid_argument("noise_rate must lie in [0, 1)");
    if (!(p.stop_fraction > 0.0 && p.stop_fraction <= 1.0)) {
        throw std::invalid_argument("stop_fraction must lie in (0, 1]");
    }
}

std::vector<TaskSpec> generate_tasks(std::size_t n, std::uint64_t seed, const DifficultyConfig& cfg) {
    if (n == 0) throw std::invalid_argument("generate_tasks: n must be at least 1");
    if (cfg.min_recipe_length < 1 || cfg.max_recipe_length < cfg.min_recipe_length || cfg.max_recipes < 1) {
        throw std::invalid_argument("generate_tasks: bad difficulty config");
    }
    const ActionMatcher matcher;
    std::vector<TaskSpec> tasks;
    tasks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "g%04zu", i);
        TaskSpec task;
        task.goal_id = id;
        Rng rng(derive_seed(seed, task.goal_id));

        const auto length = static_cast<std::size_t>(
            uniform_int(rng, static_cast<std::int64_t>(cfg.min_recipe_length), static_cast<std::int64_t>(cfg.max_recipe_length)));
        const auto recipes = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(cfg.max_recipes)));

        std::set<std::string> used_words;
        for (std::size_t j = 0; j < length; ++j) task.subgoal_words.push_back(unique_word(rng, used_words));
        task.instruction = "complete:";
        for (const auto& w : task.subgoal_words) task.instruction += " " + w;

        for (std::size_t r = 0; r < recipes; ++r) {
            bool placed = false;
            for (std::size_t attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
                auto candidate = make_recipe(rng, length, task.subgoal_words, used_words);
                placed = std::all_of(task.core_recipes.begin(), task.core_recipes.end(), [&](const auto& other) {
                    return similarity(candidate, other, matcher) < cfg.distinctness_threshold;
                });
                if (placed) task.core_recipes.push_back(std::move(candidate));
            }
            if (!placed) {
                throw DataError("generate_tasks: could not make recipe " + std::to_string(r + 1) + " of " +
                                task.goal_id + " distinct after " + std::to_string(cfg.max_retries) + " attempts");
            }
            std::vector<std::size_t> positions(length);
            for (std::size_t j = 0; j < length; ++j) positions[j] = j;
            task.milestone_positions.push_back(std::move(positions));
        }

        std::set<std::int64_t> core_elements;
        for (const auto& recipe : task.core_recipes) {
            for (const auto& a : recipe) core_elements.insert(*a.element_id);
        }
        std::set<std::int64_t> distractor_elements;
        while (distractor_elements.size() < kDistractorClicks) {
            const auto e = uniform_int(rng, 0, kElementRange - 1);
            if (!core_elements.count(e)) distractor_elements.insert(e);
        }
        for (auto e : distractor_elements) task.distractor_pool.push_back(Action::click(e));
        task.distractor_pool.push_back(Action::long_click(*distractor_elements.begin()));
        for (std::size_t d = 0; d < 4; ++d) task.distractor_pool.push_back(Action::scroll(static_cast<Direction>(d)));
        task.distractor_pool.push_back(Action::go_back());
        task.distractor_pool.push_back(Action::nothing());
        for (std::size_t t = 0; t < 3; ++t) {
            task.distractor_pool.push_back(
                Action::input(*std::next(distractor_elements.begin(), static_cast<long>(t + 1)), std::string(kNoiseTexts[t * 2 + (i % 2)])));
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

AgentRun run_agent(const TaskSpec& task, const AgentPolicy& policy, std::uint64_t seed, const std::string& traj_id) {
    validate_policy(policy);
    Rng rng(seed);
    const std::size_t length = task.core_length();

    if (policy.kind == PolicyKind::Random) {
        Episode ep(task, std::nullopt, rng);
        const auto steps = static_cast<std::size_t>(
            uniform_int(rng, std::max<std::int64_t>(1, static_cast<std::int64_t>(length) / 2), static_cast<std::int64_t>(length) + 4));
        for (std::size_t s = 0; s < steps; ++s) ep.act(task.distractor_pool[uniform_index(rng, task.distractor_pool.size())]);
        return ep.finish(traj_id, policy.kind, false);
    }

    const std::size_t r = uniform_index(rng, task.core_recipes.size());
    const auto& core = task.core_recipes[r];
    Episode ep(task, r, rng);
    switch (policy.kind) {
    case PolicyKind::Optimal:
        for (const auto& a : core) ep.act(a);
        return ep.finish(traj_id, policy.kind, true);
    case PolicyKind::Noisy:
        emit_with_noise(ep, task, core, length, policy.noise_rate, rng);
        return ep.finish(traj_id, policy.kind, true);
    case PolicyKind::EarlyStop: {
        const auto reached = static_cast<std::size_t>(policy.stop_fraction * static_cast<double>(length));
        emit_with_noise(ep, task, core, std::min(reached, length), policy.noise_rate, rng);
        // The agent wanders before giving up.
        const auto wander = static_cast<std::size_t>(uniform_int(rng, 1, 3));
        for (std::size_t s = 0; s < wander; ++s) {
            ep.act(task.distractor_pool[uniform_index(rng, task.distractor_pool.size())]);
        }
        return ep.finish(traj_id, policy.kind, false);
    }
    case PolicyKind::Random: break;
    }
    throw std::logic_error("unreachable");
}

PolicyMix PolicyMix::parse(const std::string& spec) {
    PolicyMix mix{0.0, 0.0, 0.0, 0.0};
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("mix entry without '=': " + item);
        const auto key = item.substr(0, eq);
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad mix weight: " + item);
        }
        if (value < 0.0) throw std::invalid_argument("negative mix weight: " + item);
        if (key == "optimal") mix.optimal = value;
        else if (key == "noisy") mix.noisy = value;
        else if (key == "early") mix.early_stop = value;
        else if (key == "random") mix.random = value;
        else throw std::invalid_argument("unknown policy in mix: " + key);
    }
    const double total = mix.optimal + mix.noisy + mix.early_stop + mix.random;
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("mix weights must sum to 1");
    return mix;
}

Corpus generate_corpus(const std::vector<TaskSpec>& tasks, const PolicyMix& mix, std::size_t per_task,
                       std::uint64_t seed, unsigned threads) {
    const double total = mix.optimal + mix.noisy + mix.early_stop + mix.random;
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("generate_corpus: mix weights must sum to 1");

    struct Job {
        const TaskSpec* task;
        std::string traj_id;
    };
    std::vector<Job> jobs;
    for (const auto& task : tasks) {
        for (std::size_t m = 0; m < per_task; ++m) {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "-t%03zu", m);
            jobs.push_back({&task, task.goal_id + suffix});
        }
    }

    std::vector<AgentRun> runs(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, jobs[i].traj_id));
        const double roll = uniform_unit(rng);
        AgentPolicy policy;
        policy.noise_rate = mix.noise_rate;
        policy.stop_fraction = mix.stop_fraction;
        if (roll < mix.optimal) policy.kind = PolicyKind::Optimal;
        else if (roll < mix.optimal + mix.noisy) policy.kind = PolicyKind::Noisy;
        else if (roll < mix.optimal + mix.noisy + mix.early_stop) policy.kind = PolicyKind::EarlyStop;
        else policy.kind = PolicyKind::Random;
        runs[i] = run_agent(*jobs[i].task, policy, rng(), jobs[i].traj_id);
    });
    std::sort(runs.begin(), runs.end(),
              [](const AgentRun& a, const AgentRun& b) { return a.trajectory.traj_id < b.trajectory.traj_id; });

    std::map<std::string, std::size_t> core_length;
    for (const auto& task : tasks) core_length[task.goal_id] = task.core_length();

    Corpus out;
    for (auto& run : runs) {
        const auto& t = run.trajectory;
        const double total_milestones = static_cast<double>(core_length.at(t.goal_id));
        std::size_t next_key = 0;
        double progress = 0.0;
        for (std::size_t s = 0; s < t.steps.size(); ++s) {
            const bool key = next_key < run.key_steps.size() && run.key_steps[next_key] == s;
            if (key) progress = static_cast<double>(++next_key) / total_milestones;
            out.truth.push_back({t.traj_id, s, progress, key});
        }
        out.policies[t.traj_id] = run.policy;
        out.dataset.push_back(std::move(run.trajectory));
    }
    return out;
}

std::string serialize_truth(const std::vector<TruthRow>& rows) {
    std::string out = "traj_id,step_index,true_progress,is_key\n";
    for (const auto& r : rows) {
        out += r.traj_id + "," + std::to_string(r.step_index) + "," + Json(r.true_progress).dump() + "," +
               (r.is_key ? "1" : "0") + "\n";
    }
    return out;
}

void write_truth(const std::filesystem::path& path, const std::vector<TruthRow>& rows) {
    write_file_atomic(path, serialize_truth(rows));
}

std::vector<TruthRow> read_truth(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines.front() != "traj_id,step_index,true_progress,is_key") {
        throw DataError("truth table: missing or wrong header", 1);
    }
    std::vector<TruthRow> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        std::stringstream ss(lines[n]);
        std::string id, idx, prog, key;
        if (!std::getline(ss, id, ',') || !std::getline(ss, idx, ',') || !std::getline(ss, prog, ',') ||
            !std::getline(ss, key, ',')) {
            throw DataError("truth table: expected 4 columns", n + 1);
        }
        TruthRow r;
        r.traj_id = id;
        try {
            r.step_index = std::stoul(idx);
            r.true_progress = std::stod(prog);
        } catch (const std::exception&) {
            throw DataError("truth table: bad number", n + 1);
        }
        if (key != "0" && key != "1") throw DataError("truth table: is_key must be 0 or 1", n + 1);
        r.is_key = key == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::vector<TruthRow>> truth_by_trajectory(const std::vector<TruthRow>& rows) {
    std::map<std::string, std::vector<TruthRow>> out;
    for (const auto& r : rows) out[r.traj_id].push_back(r);
    return out;
}

} // namespace keystep
