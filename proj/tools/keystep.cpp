// keystep command-line tool.
//
// Exit codes: 0 ok, 1 internal, 2 usage, 3 data, 4 I/O (including remote
// scorer failures). Failures print one line: "error[<category>]: <message>".

#include "keystep/errors.hpp"
#include "keystep/estimator.hpp"
#include "keystep/evalkit.hpp"
#include "keystep/io.hpp"
#include "keystep/labeling.hpp"
#include "keystep/parallel.hpp"
#include "keystep/recipes.hpp"
#include "keystep/remote.hpp"
#include "keystep/rewards.hpp"
#include "keystep/simenv.hpp"
#include "keystep/synthesis.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace keystep;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool g_quiet = false;

void log_info(const std::string& msg) {
    if (!g_quiet) std::cerr << "[info] " << msg << "\n";
}

void log_warn(const std::string& msg) { std::cerr << "[warn] " << msg << "\n"; }

const std::set<std::string> kConfigKeys = {
    "seed",          "threads",        "tasks",          "per_task",       "mix",        "noise_rate",
    "stop_fraction", "min_length",     "max_length",     "max_recipes",    "theta",      "nothing_weight",
    "mode",          "ratio",          "tolerance",      "max_insertions", "mismatch_fraction",
    "max_synthesized", "epochs",       "lr",             "batch",          "optimizer",  "k",
    "source",        "endpoint",       "timeout",        "max_in_flight",  "clip",       "tau",
    "latency_reps",
};

// key=value lines; '#' starts a comment.
class Config {
public:
    void load(const fs::path& path) {
        std::size_t line_no = 0;
        for (const auto& raw : read_lines(path)) {
            ++line_no;
            std::string line = raw.substr(0, raw.find('#'));
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw UsageError("config " + path.string() + " line " + std::to_string(line_no) + ": expected key=value");
            }
            auto strip = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = strip(line.substr(0, eq));
            if (!kConfigKeys.contains(key)) {
                throw UsageError("config " + path.string() + " line " + std::to_string(line_no) + ": unknown key '" +
                                 key + "'");
            }
            values_[key] = strip(line.substr(eq + 1));
        }
    }

    template <class T>
    T get(const std::optional<T>& flag, const std::string& key, T fallback) const {
        if (flag) return *flag;
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return convert<T>(key, it->second);
    }

private:
    template <class T>
    static T convert(const std::string& key, const std::string& text) {
        if constexpr (std::is_same_v<T, std::string>) {
            return text;
        } else {
            T v{};
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size()) {
                throw UsageError("config key '" + key + "': cannot parse '" + text + "'");
            }
            return v;
        }
    }

    std::map<std::string, std::string> values_;
};

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_path;
    std::optional<unsigned> threads;
    Config config;

    std::uint64_t seed_value() const { return config.get(seed, "seed", std::uint64_t{0}); }
    unsigned thread_count() const { return resolve_threads(config.get(threads, "threads", 0u)); }
};

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw IoError("cannot open '" + path + "': no such file");
}

// ---------------------------------------------------------------- simenv gen

struct SimenvGen {
    std::optional<std::size_t> tasks, per_task, min_length, max_length, max_recipes;
    std::optional<std::string> mix;
    std::optional<double> noise_rate, stop_fraction;
    std::string out, truth;
};

void run_simenv_gen(const Common& c, const SimenvGen& o) {
    const auto n_tasks = c.config.get(o.tasks, "tasks", std::size_t{10});
    const auto per_task = c.config.get(o.per_task, "per_task", std::size_t{8});
    DifficultyConfig diff;
    diff.min_recipe_length = c.config.get(o.min_length, "min_length", diff.min_recipe_length);
    diff.max_recipe_length = c.config.get(o.max_length, "max_length", diff.max_recipe_length);
    diff.max_recipes = c.config.get(o.max_recipes, "max_recipes", diff.max_recipes);
    PolicyMix mix;
    const auto mix_spec = c.config.get(o.mix, "mix", std::string());
    if (!mix_spec.empty()) {
        try {
            mix = PolicyMix::parse(mix_spec);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--mix: ") + e.what());
        }
    }
    mix.noise_rate = c.config.get(o.noise_rate, "noise_rate", mix.noise_rate);
    mix.stop_fraction = c.config.get(o.stop_fraction, "stop_fraction", mix.stop_fraction);

    const auto tasks = generate_tasks(n_tasks, c.seed_value(), diff);
    const auto corpus = generate_corpus(tasks, mix, per_task, c.seed_value(), c.thread_count());
    write_dataset(o.out, corpus.dataset);
    write_truth(o.truth, corpus.truth);
    log_info("wrote " + std::to_string(corpus.dataset.size()) + " trajectories to " + o.out);
}

// ------------------------------------------------------------- recipes build

struct RecipesBuild {
    std::string in, out;
    std::optional<double> theta, nothing_weight;
};

ActionMatcher make_matcher(const Common& c, std::optional<double> flag) {
    return ActionMatcher(token_cosine_similarity(), c.config.get(flag, "nothing_weight", kDefaultNothingWeight));
}

void run_recipes_build(const Common& c, const RecipesBuild& o) {
    require_file(o.in);
    const auto dataset = read_dataset(o.in);
    const double theta = c.config.get(o.theta, "theta", kDefaultGroupingThreshold);
    if (!(theta > 0.0 && theta <= 1.0)) throw UsageError("--theta must lie in (0, 1]");
    const auto matcher = make_matcher(c, o.nothing_weight);
    const auto lib = build_library(dataset, theta, matcher, c.thread_count());
    for (const auto& g : lib.empty_groups) {
        std::string ids;
        for (const auto& id : g) ids += (ids.empty() ? "" : ",") + id;
        log_warn("group with empty recipe skipped: " + ids);
    }
    save_library(o.out, lib);
    log_info("wrote " + std::to_string(lib.recipe_count()) + " recipes for " + std::to_string(lib.by_goal.size()) +
             " goals to " + o.out);
}

// --------------------------------------------------------------------- label

struct Label {
    std::string in, out;
    std::optional<std::string> library, mode;
    std::optional<double> nothing_weight;
    std::vector<std::string> milestone_totals; // goal=N
};

void run_label(const Common& c, const Label& o) {
    const auto mode_text = c.config.get(o.mode, "mode", std::string("lcs"));
    const auto mode = parse_labeler(mode_text);
    if (!mode) throw UsageError("--mode must be lcs, env or linear");
    if (*mode == Labeler::Lcs && !o.library) throw UsageError("--mode lcs requires --library");
    require_file(o.in);
    const auto dataset = read_dataset(o.in);
    const auto matcher = make_matcher(c, o.nothing_weight);
    std::optional<LoadedLibrary> loaded;
    std::optional<std::string> hash;
    if (o.library) {
        require_file(*o.library);
        loaded = load_library(*o.library, library_config(matcher, kDefaultGroupingThreshold));
        for (const auto& w : loaded->warnings) {
            if (w.find("grouping") == std::string::npos) log_warn(w);
        }
        hash = config_hash(loaded->library.config);
    }
    LabelingOptions opts;
    opts.mode = *mode;
    opts.threads = c.thread_count();
    for (const auto& spec : o.milestone_totals) {
        const auto eq = spec.rfind('=');
        std::size_t n = 0;
        const char* end = spec.data() + spec.size();
        if (eq == std::string::npos || eq == 0 || std::from_chars(spec.data() + eq + 1, end, n).ptr != end || n == 0) {
            throw UsageError("--milestone-total expects goal=N with N > 0, got '" + spec + "'");
        }
        opts.milestone_totals[spec.substr(0, eq)] = n;
    }
    const auto result = label_dataset(dataset, loaded ? &loaded->library : nullptr, matcher, opts);
    for (const auto& [reason, count] : result.summary.skipped_by_reason) {
        log_warn(std::to_string(count) + " trajectories skipped: " + reason);
    }
    for (const auto& id : result.summary.failed_full_matches) {
        log_warn("failed trajectory fully matches a recipe: " + id);
    }
    write_labels(o.out, result.labeled, *mode == Labeler::Lcs ? hash : std::nullopt);
    log_info("labeled " + std::to_string(result.summary.labeled_count) + " of " +
             std::to_string(result.summary.input_count) + " trajectories");
}

// ------------------------------------------------------------- synth balance

struct SynthBalance {
    std::string in, out;
    std::optional<std::string> report;
    std::optional<double> ratio, tolerance, mismatch_fraction;
    std::optional<std::size_t> max_insertions, max_synthesized;
};

void run_synth_balance(const Common& c, const SynthBalance& o) {
    require_file(o.in);
    const auto real = read_dataset(o.in);
    SynthesisConfig cfg;
    cfg.seed = c.seed_value();
    cfg.target_ratio = c.config.get(o.ratio, "ratio", cfg.target_ratio);
    cfg.tolerance = c.config.get(o.tolerance, "tolerance", cfg.tolerance);
    cfg.mismatch_fraction = c.config.get(o.mismatch_fraction, "mismatch_fraction", cfg.mismatch_fraction);
    cfg.max_insertions = c.config.get(o.max_insertions, "max_insertions", cfg.max_insertions);
    cfg.max_synthesized = c.config.get(o.max_synthesized, "max_synthesized", cfg.max_synthesized);
    try {
        validate_config(cfg);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto result = balance_dataset(real, cfg);
    for (std::size_t i = real.size(); i < result.dataset.size(); ++i) {
        const auto v = validate_trajectory(result.dataset[i]);
        if (!v.empty()) throw DataError("synthesized trajectory '" + result.dataset[i].traj_id + "' invalid: " + v.front().message);
    }
    write_dataset(o.out, result.dataset);
    if (o.report) write_balance_report(*o.report, result.report);
    char line[128];
    std::snprintf(line, sizeof line, "step ratio %.4f -> %.4f (%zu synthesized)", result.ratio_before,
                  result.ratio_after, result.dataset.size() - real.size());
    log_info(line);
}

// --------------------------------------------------------------------- train

struct Train {
    std::string labels, corpus, out;
    std::optional<std::size_t> epochs, batch;
    std::optional<double> lr;
    std::optional<std::string> optimizer;
};

void run_train(const Common& c, const Train& o) {
    TrainingParams p;
    p.epochs = c.config.get(o.epochs, "epochs", p.epochs);
    p.batch_size = c.config.get(o.batch, "batch", p.batch_size);
    p.learning_rate = c.config.get(o.lr, "lr", p.learning_rate);
    p.seed = c.seed_value();
    const auto opt = c.config.get(o.optimizer, "optimizer", std::string("adam"));
    if (opt == "adam") {
        p.optimizer = Optimizer::Adam;
    } else if (opt == "sgd") {
        p.optimizer = Optimizer::Sgd;
    } else {
        throw UsageError("--optimizer must be adam or sgd");
    }
    if (p.epochs == 0) throw UsageError("--epochs must be at least 1");
    if (!(p.learning_rate > 0.0)) throw UsageError("--lr must be positive");
    require_file(o.corpus);
    require_file(o.labels);
    const auto corpus = read_dataset(o.corpus);
    const auto labels = read_labels(o.labels);
    const auto data = build_training_set(corpus, labels);
    if (data.empty()) throw DataError("no training examples: labels match no corpus trajectory");
    const auto result = train(data, p);
    save_model(o.out, result.model);
    char line[128];
    std::snprintf(line, sizeof line, "trained on %zu states, final loss %.6f", data.size(), result.loss_curve.back());
    log_info(line);
}

// -------------------------------------------------------------------- reward

struct Reward {
    std::string in, out;
    std::optional<std::string> source, model, labels, endpoint;
    std::optional<std::size_t> k, max_in_flight;
    std::optional<double> timeout, clip;
};

void run_reward(const Common& c, const Reward& o) {
    const auto source_text = c.config.get(o.source, "source", std::string("estimator"));
    const auto source = parse_reward_source(source_text);
    if (!source) throw UsageError("--source must be estimator, labels or remote");
    RewardConfig cfg;
    cfg.source = *source;
    cfg.k = c.config.get(o.k, "k", std::size_t{1});
    if (cfg.k < 1) throw UsageError("--k must be at least 1");
    cfg.max_in_flight = static_cast<unsigned>(c.config.get(o.max_in_flight, "max_in_flight", std::size_t{4}));
    cfg.timeout = std::chrono::duration<double>(c.config.get(o.timeout, "timeout", 5.0));
    const double clip = c.config.get(o.clip, "clip", -1.0);
    if (clip >= 0.0) cfg.clip = clip;

    const auto model_path = o.model;
    const auto endpoint_text = c.config.get(o.endpoint, "endpoint", std::string());
    if (*source == RewardSource::Estimator && !model_path) throw UsageError("--source estimator requires --model");
    if (*source == RewardSource::Labels && !o.labels) throw UsageError("--source labels requires --labels");
    if (*source == RewardSource::Remote && endpoint_text.empty()) throw UsageError("--source remote requires --endpoint");

    require_file(o.in);
    const auto dataset = read_dataset(o.in);
    std::optional<ProgressModel> model;
    if (model_path) {
        require_file(*model_path);
        model = load_model(*model_path);
    }
    std::map<std::string, LabeledTrajectory> labels;
    if (o.labels) {
        require_file(*o.labels);
        for (auto& l : read_labels(*o.labels)) labels.emplace(l.traj_id, std::move(l));
    }
    if (!endpoint_text.empty()) {
        try {
            cfg.endpoint = Endpoint::parse(endpoint_text);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--endpoint: ") + e.what());
        }
    }
    cfg.model = model ? &*model : nullptr;

    std::vector<const Trajectory*> todo;
    for (const auto& t : dataset) {
        if (*source == RewardSource::Labels && !labels.contains(t.traj_id)) {
            log_warn("no labels for '" + t.traj_id + "', skipped");
            continue;
        }
        todo.push_back(&t);
    }
    std::vector<RewardSeries> series(todo.size());
    const unsigned threads = *source == RewardSource::Remote ? 1 : c.thread_count();
    parallel_for(todo.size(), threads, [&](std::size_t i) {
        RewardConfig local = cfg;
        if (*source == RewardSource::Labels) local.labels = &labels.at(todo[i]->traj_id);
        series[i] = reward_trajectory(*todo[i], local);
    });
    write_rewards(o.out, series);
    log_info("wrote " + std::to_string(series.size()) + " reward series to " + o.out);
}

// ---------------------------------------------------------------------- eval

struct Eval {
    std::string corpus, truth, out_dir;
    std::optional<std::string> model, labels;
    std::optional<double> tau;
    std::optional<std::size_t> latency_reps;
};

struct ScoredSet {
    std::vector<double> key_estimates, key_truth, finals;
    std::vector<bool> outcomes, predicted;
};

void run_eval(const Common& c, const Eval& o) {
    if (!o.model && !o.labels) throw UsageError("eval needs --model, --labels or both");
    const double tau = c.config.get(o.tau, "tau", 0.5);
    const auto reps = c.config.get(o.latency_reps, "latency_reps", std::size_t{0});
    require_file(o.corpus);
    require_file(o.truth);
    const auto corpus = read_dataset(o.corpus);
    const auto truth = truth_by_trajectory(read_truth(o.truth));
    std::optional<ProgressModel> model;
    if (o.model) {
        require_file(*o.model);
        model = load_model(*o.model);
    }
    std::map<std::string, LabeledTrajectory> labels;
    if (o.labels) {
        require_file(*o.labels);
        for (auto& l : read_labels(*o.labels)) labels.emplace(l.traj_id, std::move(l));
    }
    for (const auto& t : corpus) {
        auto it = truth.find(t.traj_id);
        if (it == truth.end()) throw DataError("no ground truth for '" + t.traj_id + "'");
        if (it->second.size() != t.steps.size()) throw DataError("ground truth length mismatch for '" + t.traj_id + "'");
    }

    auto accumulate = [&](ScoredSet& set, const Trajectory& t, const std::vector<double>& progress) {
        const auto& rows = truth.at(t.traj_id);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].is_key) continue;
            set.key_estimates.push_back(progress[i]);
            set.key_truth.push_back(rows[i].true_progress);
        }
        set.finals.push_back(progress.back());
        set.outcomes.push_back(t.success);
        set.predicted.push_back(progress.back() >= tau);
    };

    std::vector<std::pair<std::string, ConfusionStats>> judges;
    std::vector<EstimatorRow> rows;
    auto add_rows = [&](const std::string& name, const ScoredSet& set) {
        if (set.finals.empty()) return;
        judges.emplace_back(name, confusion_stats(set.predicted, set.outcomes));
        EstimatorRow r;
        r.name = name;
        r.keystep_mae = set.key_truth.empty() ? 0.0 : keystep_mae(set.key_estimates, set.key_truth);
        r.final_score = avg_final_score(set.finals, set.outcomes);
        rows.push_back(r);
    };

    if (model) {
        std::vector<std::vector<double>> progress(corpus.size());
        parallel_for(corpus.size(), c.thread_count(), [&](std::size_t i) {
            for (std::size_t s = 0; s < corpus[i].steps.size(); ++s) {
                progress[i].push_back(predict_progress(*model, state_at(corpus[i], s)));
            }
        });
        ScoredSet set;
        for (std::size_t i = 0; i < corpus.size(); ++i) accumulate(set, corpus[i], progress[i]);
        add_rows("estimator", set);
        if (reps > 0 && !corpus.empty()) {
            const auto sv = state_at(corpus.front(), corpus.front().steps.size() - 1);
            rows.back().latency = measure_latency([&] { (void)predict_progress(*model, sv); }, reps);
            rows.back().has_latency = true;
        }
    }
    if (!labels.empty()) {
        ScoredSet set;
        std::string name = "labels";
        for (const auto& t : corpus) {
            auto it = labels.find(t.traj_id);
            if (it == labels.end()) continue;
            name = "labels-" + std::string(to_string(it->second.labeler));
            std::vector<double> progress;
            for (const auto& l : it->second.labels) progress.push_back(l.progress);
            if (progress.size() != t.steps.size()) throw DataError("label length mismatch for '" + t.traj_id + "'");
            accumulate(set, t, progress);
        }
        add_rows(name, set);
    }
    {
        std::vector<bool> outcomes;
        for (const auto& t : corpus) outcomes.push_back(t.success);
        const auto positives = static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), true));
        const bool majority = positives * 2 >= outcomes.size();
        if (!outcomes.empty()) {
            judges.emplace_back("majority", confusion_stats(std::vector<bool>(outcomes.size(), majority), outcomes));
        }
    }

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    write_file_atomic(dir / "table2.csv", table2_csv(judges));
    write_file_atomic(dir / "table3.csv", table3_csv(rows));
    write_file_atomic(dir / "summary.txt", summary_text(judges, rows));
    log_info("reports written to " + o.out_dir);
}

int fail(const std::string& category, const std::string& message, int code) {
    std::string flat = message;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::cerr << "error[" << category << "]: " << flat << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Progress labeling, estimation and dense reward toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--seed", common.seed, "Master seed");
    app.add_option("--config", common.config_path, "key=value config file; flags override it");
    app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    app.add_flag("-q,--quiet", g_quiet, "Only print warnings and errors");

    std::function<void()> action;

    auto* simenv = app.add_subcommand("simenv", "Synthetic milestone environment");
    simenv->require_subcommand(1);
    SimenvGen gen;
    auto* gen_cmd = simenv->add_subcommand("gen", "Generate a corpus with ground-truth progress");
    gen_cmd->add_option("--tasks", gen.tasks, "Number of tasks");
    gen_cmd->add_option("--per-task", gen.per_task, "Trajectories per task");
    gen_cmd->add_option("--mix", gen.mix, "Policy mix, e.g. optimal=0.25,noisy=0.35,early=0.2,random=0.2");
    gen_cmd->add_option("--noise-rate", gen.noise_rate);
    gen_cmd->add_option("--stop-fraction", gen.stop_fraction);
    gen_cmd->add_option("--min-length", gen.min_length, "Shortest core recipe");
    gen_cmd->add_option("--max-length", gen.max_length, "Longest core recipe");
    gen_cmd->add_option("--max-recipes", gen.max_recipes, "Alternative recipes per task");
    gen_cmd->add_option("--out", gen.out, "Corpus JSONL")->required();
    gen_cmd->add_option("--truth", gen.truth, "Ground-truth CSV")->required();
    gen_cmd->callback([&] { action = [&] { run_simenv_gen(common, gen); }; });

    auto* recipes = app.add_subcommand("recipes", "Recipe library");
    recipes->require_subcommand(1);
    RecipesBuild rb;
    auto* build_cmd = recipes->add_subcommand("build", "Mine recipes from successful trajectories");
    build_cmd->add_option("--in", rb.in, "Corpus JSONL")->required();
    build_cmd->add_option("--theta", rb.theta, "Grouping threshold");
    build_cmd->add_option("--nothing-weight", rb.nothing_weight, "Match weight of two NOTHING actions");
    build_cmd->add_option("--out", rb.out, "Library JSON")->required();
    build_cmd->callback([&] { action = [&] { run_recipes_build(common, rb); }; });

    Label lb;
    auto* label_cmd = app.add_subcommand("label", "Assign per-step progress labels");
    label_cmd->add_option("--in", lb.in, "Corpus JSONL")->required();
    label_cmd->add_option("--library", lb.library, "Library JSON (required for lcs)");
    label_cmd->add_option("--mode", lb.mode, "lcs, env or linear");
    label_cmd->add_option("--nothing-weight", lb.nothing_weight);
    label_cmd->add_option("--milestone-total", lb.milestone_totals, "Per-goal milestone count for env mode (goal=N)");
    label_cmd->add_option("--out", lb.out, "Labels JSONL")->required();
    label_cmd->callback([&] { action = [&] { run_label(common, lb); }; });

    auto* synth = app.add_subcommand("synth", "Training-data synthesis");
    synth->require_subcommand(1);
    SynthBalance sb;
    auto* balance_cmd = synth->add_subcommand("balance", "Balance success and failure steps");
    balance_cmd->add_option("--in", sb.in, "Corpus JSONL")->required();
    balance_cmd->add_option("--ratio", sb.ratio, "Target success/failure step ratio");
    balance_cmd->add_option("--tolerance", sb.tolerance, "Accepted relative deviation");
    balance_cmd->add_option("--mismatch-fraction", sb.mismatch_fraction);
    balance_cmd->add_option("--max-insertions", sb.max_insertions);
    balance_cmd->add_option("--max-synthesized", sb.max_synthesized);
    balance_cmd->add_option("--out", sb.out, "Balanced corpus JSONL")->required();
    balance_cmd->add_option("--report", sb.report, "Composition CSV");
    balance_cmd->callback([&] { action = [&] { run_synth_balance(common, sb); }; });

    Train tr;
    auto* train_cmd = app.add_subcommand("train", "Train the progress estimator");
    train_cmd->add_option("--labels", tr.labels, "Labels JSONL")->required();
    train_cmd->add_option("--corpus", tr.corpus, "Corpus JSONL")->required();
    train_cmd->add_option("--epochs", tr.epochs);
    train_cmd->add_option("--lr", tr.lr);
    train_cmd->add_option("--batch", tr.batch, "Minibatch size (0 = full batch)");
    train_cmd->add_option("--optimizer", tr.optimizer, "adam or sgd");
    train_cmd->add_option("--out", tr.out, "Model JSON")->required();
    train_cmd->callback([&] { action = [&] { run_train(common, tr); }; });

    Reward rw;
    auto* reward_cmd = app.add_subcommand("reward", "Emit dense progress rewards");
    reward_cmd->add_option("--in", rw.in, "Corpus JSONL")->required();
    reward_cmd->add_option("--source", rw.source, "estimator, labels or remote");
    reward_cmd->add_option("--k", rw.k, "Reward lag");
    reward_cmd->add_option("--model", rw.model, "Model JSON");
    reward_cmd->add_option("--labels", rw.labels, "Labels JSONL");
    reward_cmd->add_option("--endpoint", rw.endpoint, "Remote scorer URL");
    reward_cmd->add_option("--timeout", rw.timeout, "Remote timeout in seconds");
    reward_cmd->add_option("--max-in-flight", rw.max_in_flight);
    reward_cmd->add_option("--clip", rw.clip, "Clip rewards to [-c, c]");
    reward_cmd->add_option("--out", rw.out, "Rewards JSONL")->required();
    reward_cmd->callback([&] { action = [&] { run_reward(common, rw); }; });

    Eval ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluation reports");
    eval_cmd->add_option("--corpus", ev.corpus, "Corpus JSONL")->required();
    eval_cmd->add_option("--truth", ev.truth, "Ground-truth CSV")->required();
    eval_cmd->add_option("--model", ev.model, "Model JSON");
    eval_cmd->add_option("--labels", ev.labels, "Labels JSONL");
    eval_cmd->add_option("--tau", ev.tau, "Success threshold on final progress");
    eval_cmd->add_option("--latency-reps", ev.latency_reps, "Timed scoring calls (0 = skip)");
    eval_cmd->add_option("--out-dir", ev.out_dir, "Report directory")->required();
    eval_cmd->callback([&] { action = [&] { run_eval(common, ev); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (common.config_path) {
            require_file(*common.config_path);
            common.config.load(*common.config_path);
        }
        if (action) action();
        return 0;
    } catch (const UsageError& e) {
        return fail("usage", e.what(), 2);
    } catch (const RemoteError& e) {
        return fail("remote", e.what(), 4);
    } catch (const IoError& e) {
        return fail("io", e.what(), 4);
    } catch (const DataError& e) {
        return fail("data", e.what(), 3);
    } catch (const EmptyRecipeError& e) {
        return fail("data", e.what(), 3);
    } catch (const nlohmann::json::exception& e) {
        return fail("data", e.what(), 3);
    } catch (const std::invalid_argument& e) {
        return fail("data", e.what(), 3);
    } catch (const fs::filesystem_error& e) {
        return fail("io", e.what(), 4);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
