// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "support.hpp"

#include "keystep/estimator.hpp"
#include "keystep/evalkit.hpp"
#include "keystep/io.hpp"
#include "keystep/labeling.hpp"
#include "keystep/recipes.hpp"
#include "keystep/remote.hpp"
#include "keystep/rewards.hpp"
#include "keystep/simenv.hpp"
#include "keystep/soft_lcs.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

using namespace keystep;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;
std::map<int, std::string> lines;

void report(int n, const std::string& name, bool ok, const std::string& detail) {
    lines[n] = (ok ? "PASS " : "FAIL ") + std::to_string(n) + " " + name + ": " + detail;
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ActionMatcher matcher;

// Every labeled trajectory from every corpus below, for criterion 5.
std::vector<std::pair<LabeledTrajectory, std::size_t>> all_labels;

void collect(const LabelingResult& r, const std::vector<Trajectory>& ds) {
    std::map<std::string, std::size_t> len;
    for (const auto& t : ds) len[t.traj_id] = t.steps.size();
    for (const auto& lt : r.labeled) all_labels.emplace_back(lt, len.at(lt.traj_id));
}

std::vector<LabeledTrajectory> label_all_modes(const std::vector<Trajectory>& ds, const RecipeLibrary& lib) {
    std::vector<LabeledTrajectory> lcs;
    for (auto mode : {Labeler::Lcs, Labeler::Env, Labeler::Linear}) {
        LabelingOptions o;
        o.mode = mode;
        const auto r = label_dataset(ds, mode == Labeler::Lcs ? &lib : nullptr, matcher, o);
        collect(r, ds);
        if (mode == Labeler::Lcs) lcs = r.labeled;
    }
    return lcs;
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && '" KEYSTEP_CLI "' -q " + args + " 2>> stderr.txt";
    const int status = std::system(cmd.c_str());
    return status == 0 ? 0 : 1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "keystep-acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void soft_lcs_oracle() {
    const auto t0 = Clock::now();
    Rng rng(1001);
    double worst = 0.0;
    std::size_t pairs = 0, with_nothing = 0, with_text = 0;
    for (; pairs < 1000; ++pairs) {
        auto a = testkit::random_actions(rng, 8);
        auto b = testkit::random_actions(rng, 8);
        for (const auto* s : {&a, &b})
            for (const auto& x : *s) {
                if (x.kind == ActionKind::Nothing) ++with_nothing;
                if (x.text) ++with_text;
            }
        worst = std::max(worst, std::abs(soft_lcs(a, b, matcher) - testkit::exhaustive_soft_lcs(a, b)));
    }
    const double secs = seconds_since(t0);
    report(1, "soft-LCS equals exhaustive optimum", worst <= 1e-9 && secs < 60.0,
           fmt("%zu pairs, max |diff| %.3g, %zu NOTHING and %zu free-text actions, %.2fs", pairs, worst, with_nothing,
               with_text, secs));
}

void hard_lcs_degeneration() {
    Rng rng(2002);
    std::size_t mismatches = 0, oracle_mismatches = 0;
    for (int n = 0; n < 1000; ++n) {
        const auto a = testkit::random_actions(rng, 40, true);
        const auto b = testkit::random_actions(rng, 40, true);
        const double s = soft_lcs(a, b, matcher);
        if (s != static_cast<double>(classic_lcs_len(a, b))) ++mismatches;
        if (s != static_cast<double>(testkit::textbook_lcs(a, b))) ++oracle_mismatches;
    }
    report(2, "soft-LCS degenerates to classic LCS", mismatches == 0 && oracle_mismatches == 0,
           fmt("1000 discrete pairs, %zu mismatches vs classic_lcs_len, %zu vs textbook LCS", mismatches,
               oracle_mismatches));
}

void grouping_contract(const std::vector<std::pair<std::string, const std::vector<Trajectory>*>>& corpora,
                       const std::vector<const RecipeLibrary*>& libs) {
    std::size_t violations = 0, pairs = 0, groups = 0, goals_min = 1u << 30;
    for (std::size_t c = 0; c < corpora.size(); ++c) {
        const auto& ds = *corpora[c].second;
        std::map<std::string, const Trajectory*> by_id;
        std::set<std::string> goals;
        for (const auto& t : ds) {
            by_id[t.traj_id] = &t;
            goals.insert(t.goal_id);
        }
        goals_min = std::min(goals_min, goals.size());
        std::vector<std::vector<std::string>> all_groups = libs[c]->empty_groups;
        for (const auto& [goal, recipes] : libs[c]->by_goal)
            for (const auto& r : recipes) all_groups.push_back(r.source_traj_ids);
        for (const auto& g : all_groups) {
            ++groups;
            for (std::size_t i = 0; i < g.size(); ++i)
                for (std::size_t j = i + 1; j < g.size(); ++j) {
                    const auto a = by_id.at(g[i])->actions(), b = by_id.at(g[j])->actions();
                    const double sim = testkit::dp_soft_lcs(a, b) / static_cast<double>(std::min(a.size(), b.size()));
                    ++pairs;
                    if (sim < kDefaultGroupingThreshold) ++violations;
                }
        }
    }
    report(3, "intra-group similarity >= threshold", violations == 0 && goals_min >= 50,
           fmt("%zu corpora (min %zu goals), %zu groups, %zu pairs, %zu violations", corpora.size(), goals_min, groups,
               pairs, violations));
}

void key_step_recovery(const Corpus& corpus, const RecipeLibrary& lib, double build_secs) {
    const auto t0 = Clock::now();
    const auto truth = truth_by_trajectory(corpus.truth);
    auto mae_for = [&](Labeler mode, std::size_t& skipped, std::size_t& keys) {
        LabelingOptions o;
        o.mode = mode;
        const auto r = label_dataset(corpus.dataset, mode == Labeler::Lcs ? &lib : nullptr, matcher, o);
        collect(r, corpus.dataset);
        skipped = r.summary.skipped.size();
        std::vector<double> est, real;
        for (const auto& lt : r.labeled) {
            const auto& rows = truth.at(lt.traj_id);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (!rows[i].is_key) continue;
                est.push_back(lt.labels[i].progress);
                real.push_back(rows[i].true_progress);
            }
        }
        keys = est.size();
        return keystep_mae(est, real);
    };
    std::size_t env_skip = 0, lcs_skip = 0, env_keys = 0, lcs_keys = 0;
    const double env = mae_for(Labeler::Env, env_skip, env_keys);
    const double lcs = mae_for(Labeler::Lcs, lcs_skip, lcs_keys);
    const double secs = build_secs + seconds_since(t0);
    report(4, "key-step recovery ENV vs LCS", env == 0.0 && lcs <= 0.10 && env <= lcs && secs < 300.0,
           fmt("ENV MAE %.6f (%zu key steps, %zu skipped), LCS MAE %.6f (%zu key steps, %zu skipped), %.2fs", env,
               env_keys, env_skip, lcs, lcs_keys, lcs_skip, secs));
}

void label_monotonicity() {
    std::size_t violations = 0, checked = 0;
    std::map<std::string, std::size_t> per_mode;
    for (const auto& [lt, steps] : all_labels) {
        ++checked;
        ++per_mode[std::string(to_string(lt.labeler))];
        bool bad = !check_labels(lt, steps).empty() || lt.labels.size() != steps;
        for (std::size_t i = 0; i < lt.labels.size(); ++i) {
            const double p = lt.labels[i].progress;
            if (!(p >= 0.0 && p <= 1.0)) bad = true;
            if (i > 0 && p < lt.labels[i - 1].progress) bad = true;
        }
        if (bad) ++violations;
    }
    std::string modes;
    for (const auto& [m, n] : per_mode) modes += fmt(" %s=%zu", m.c_str(), n);
    report(5, "labels non-decreasing in [0,1]", violations == 0 && per_mode.size() == 3,
           fmt("%zu labeled trajectories (%s), %zu violations", checked, modes.c_str() + 1, violations));
}

void reward_telescoping() {
    Rng rng(6006);
    double worst_sum = 0.0, worst_k = 0.0;
    for (int n = 0; n < 1000; ++n) {
        const std::size_t len = 1 + uniform_index(rng, 30);
        const double p0 = uniform_unit(rng) * 0.1;
        std::vector<double> p(len);
        double cur = p0;
        for (auto& v : p) v = cur = std::min(1.0, cur + uniform_unit(rng) * 0.08);
        const auto r1 = progress_rewards(p, 1, p0);
        double sum = 0.0;
        for (double x : r1) sum += x;
        worst_sum = std::max(worst_sum, std::abs(sum - (p.back() - p0)));
        for (std::size_t k : {2u, 3u}) {
            const auto rk = progress_rewards(p, k, p0);
            for (std::size_t t = 0; t < len; ++t) {
                const double before = t >= k ? p[t - k] : p0;
                double acc = 0.0;
                for (std::size_t d = 0; d < k && d <= t; ++d) acc += r1[t - d];
                worst_k = std::max({worst_k, std::abs(rk[t] - acc), std::abs(rk[t] - (p[t] - before))});
            }
        }
    }
    report(6, "reward telescoping and k-composition", worst_sum < 1e-9 && worst_k < 1e-9,
           fmt("1000 series, max telescoping error %.3g, max k in {2,3} composition error %.3g", worst_sum, worst_k));
}

void gradient_check(const std::vector<Trajectory>& ds) {
    Rng rng(7007);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        ProgressModel m = ProgressModel::initial(kFeatureCount);
        for (auto& w : m.weights) w = uniform_unit(rng) * 4 - 2;
        m.bias = uniform_unit(rng) * 2 - 1;
        const auto& t = ds[uniform_index(rng, ds.size())];
        TrainingExample ex;
        ex.features = featurize(t.instruction, state_at(t, uniform_index(rng, t.steps.size())));
        ex.target = uniform_unit(rng);
        worst = std::max(worst, grad_check(m, ex, 1e-6).max_relative_error);
    }
    report(7, "estimator gradient check", worst < 1e-4,
           fmt("100 random (model, sample) pairs, max relative error %.3g", worst));
}

void discrimination(const Corpus& corpus) {
    const auto t0 = Clock::now();
    std::vector<std::string> goals;
    for (const auto& t : corpus.dataset)
        if (goals.empty() || goals.back() != t.goal_id) goals.push_back(t.goal_id);
    std::sort(goals.begin(), goals.end());
    goals.erase(std::unique(goals.begin(), goals.end()), goals.end());
    Rng rng(8008);
    for (std::size_t i = goals.size(); i > 1; --i) std::swap(goals[i - 1], goals[uniform_index(rng, i)]);
    const std::set<std::string> held(goals.begin(), goals.begin() + static_cast<std::ptrdiff_t>(goals.size() * 3 / 10));

    std::vector<Trajectory> train_set, test_set;
    for (const auto& t : corpus.dataset) (held.count(t.goal_id) ? test_set : train_set).push_back(t);
    const auto lib = build_library(train_set, kDefaultGroupingThreshold, matcher, 4);
    LabelingOptions o;
    o.mode = Labeler::Lcs;
    o.threads = 4;
    const auto labeled = label_dataset(train_set, &lib, matcher, o);
    collect(labeled, train_set);
    const auto examples = build_training_set(train_set, labeled.labeled);
    TrainingParams params;
    params.seed = 8;
    const auto model = train(examples, params).model;

    std::size_t train_success = 0;
    for (const auto& t : train_set) train_success += t.success ? 1 : 0;
    const bool majority = 2 * train_success >= train_set.size();
    std::vector<bool> pred, base, truth;
    for (const auto& t : test_set) {
        pred.push_back(predict_success(model, t, 0.5));
        base.push_back(majority);
        truth.push_back(t.success);
    }
    const auto s = confusion_stats(pred, truth);
    const auto b = confusion_stats(base, truth);
    const double secs = seconds_since(t0);
    report(8, "held-out goal discrimination", s.accuracy >= 0.85 && s.false_positive_rate() < b.false_positive_rate() &&
                                                   secs < 300.0,
           fmt("%zu train / %zu held-out goals, %zu test trajectories: accuracy %.4f, FPR %.4f vs majority-class FPR "
               "%.4f (majority=%s), %.2fs",
               goals.size() - held.size(), held.size(), test_set.size(), s.accuracy, s.false_positive_rate(),
               b.false_positive_rate(), majority ? "success" : "failure", secs));
}

void data_balance() {
    const auto dir = fresh_dir("balance");
    const auto corpus = generate_corpus(generate_tasks(60, 909, {}), PolicyMix{}, 8, 909, 4);
    std::vector<Trajectory> succ, fail;
    for (const auto& t : corpus.dataset) (t.success ? succ : fail).push_back(t);
    std::size_t s_steps = 0, f_steps = 0;
    for (const auto& t : succ) s_steps += t.steps.size();
    std::vector<Trajectory> input = succ;
    for (const auto& t : fail) {
        if (10 * (f_steps + t.steps.size()) > 3 * (s_steps + f_steps + t.steps.size()) + s_steps / 10) continue;
        input.push_back(t);
        f_steps += t.steps.size();
    }
    const double frac_in = static_cast<double>(s_steps) / static_cast<double>(s_steps + f_steps);
    write_dataset(dir / "in.jsonl", input);

    const bool ran = run_cli("synth balance --in in.jsonl --ratio 1.0 --tolerance 0.1 --out out.jsonl "
                             "--report balance.csv --seed 9",
                             dir) == 0;
    double ratio = 0.0;
    std::size_t synthesized = 0, invalid = 0;
    if (ran) {
        const auto out = read_dataset(dir / "out.jsonl");
        std::set<std::string> real_ids;
        for (const auto& t : input) real_ids.insert(t.traj_id);
        std::size_t so = 0, fo = 0;
        for (const auto& t : out) {
            (t.success ? so : fo) += t.steps.size();
            if (real_ids.count(t.traj_id)) continue;
            ++synthesized;
            if (!validate_trajectory(t).empty()) ++invalid;
        }
        ratio = static_cast<double>(so) / static_cast<double>(fo);
        const auto lib = build_library(out, kDefaultGroupingThreshold, matcher, 4);
        label_all_modes(out, lib);
    }
    const bool in_band = std::abs(frac_in - 0.7) < 0.02;
    report(9, "synth balance reaches 1:1 within 10%",
           ran && in_band && ratio >= 0.9 && ratio <= 1.1 && synthesized > 0 && invalid == 0,
           fmt("input success-step share %.3f, output success:failure step ratio %.4f, %zu synthesized, %zu invalid%s",
               frac_in, ratio, synthesized, invalid, ran ? "" : ", CLI failed"));
}

void cli_determinism() {
    const std::vector<std::string> steps = {
        "simenv gen --tasks 12 --per-task 8 --out corpus.jsonl --truth truth.csv --seed 11",
        "recipes build --in corpus.jsonl --out library.json --threads 4",
        "label --in corpus.jsonl --library library.json --mode lcs --out labels.jsonl --threads 4",
        "synth balance --in corpus.jsonl --out balanced.jsonl --report balance.csv --seed 11",
        "train --labels labels.jsonl --corpus corpus.jsonl --epochs 100 --batch 32 --out model.json --seed 11",
        "reward --in corpus.jsonl --source estimator --k 2 --model model.json --out rewards.jsonl",
        "eval --corpus corpus.jsonl --truth truth.csv --model model.json --labels labels.jsonl --out-dir reports",
    };
    const std::vector<std::string> outputs = {"corpus.jsonl",  "truth.csv",          "library.json",
                                              "labels.jsonl",  "balanced.jsonl",     "balance.csv",
                                              "model.json",    "rewards.jsonl",      "reports/table2.csv",
                                              "reports/table3.csv", "reports/summary.txt"};
    const auto a = fresh_dir("run-a"), b = fresh_dir("run-b");
    bool ran = true;
    for (const auto& dir : {a, b})
        for (const auto& s : steps) ran = ran && run_cli(s, dir) == 0;
    std::size_t differ = 0, missing = 0;
    std::uint64_t combined = 0;
    for (const auto& f : outputs) {
        if (!fs::exists(a / f) || !fs::exists(b / f)) {
            ++missing;
            continue;
        }
        const auto x = slurp(a / f), y = slurp(b / f);
        if (fnv1a64(x) != fnv1a64(y) || x != y) ++differ;
        combined = splitmix64(combined ^ fnv1a64(x));
    }
    report(10, "CLI pipeline is byte-identical across runs", ran && differ == 0 && missing == 0,
           fmt("%zu output files, %zu differ, %zu missing, combined hash %s%s", outputs.size(), differ, missing,
               hex64(combined).c_str(), ran ? "" : ", a CLI step failed"));
}

void latency(const std::vector<Trajectory>& ds) {
    ProgressModel m = ProgressModel::initial(kFeatureCount);
    for (std::size_t i = 0; i < m.weights.size(); ++i) m.weights[i] = 0.1 * static_cast<double>(i % 5) - 0.2;
    const auto& t = *std::max_element(ds.begin(), ds.end(), [](const Trajectory& x, const Trajectory& y) {
        return x.steps.size() < y.steps.size();
    });
    const auto sv = state_at(t, t.steps.size() - 1);
    volatile double sink = 0.0;
    const auto local = measure_latency([&] { sink = predict_progress(m, sv); }, 200);

    httplib::Server server;
    server.Post("/score", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"progress": 0.5})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    LatencyStats remote;
    bool remote_ok = true;
    try {
        const auto ep = Endpoint::parse("http://127.0.0.1:" + std::to_string(port) + "/score");
        remote = measure_latency([&] { score_remote(ep, sv, std::chrono::seconds(5)); }, 50);
    } catch (const std::exception&) {
        remote_ok = false;
    }
    server.stop();
    th.join();
    report(11, "scoring latency", local.p50 < 0.010 && remote_ok && remote.samples == 50 && std::isfinite(remote.p50),
           fmt("local estimator p50 %.3g ms (mean %.3g, p95 %.3g, %zu samples); remote stub p50 %.3g ms (mean %.3g, "
               "p95 %.3g, %zu samples)",
               local.p50 * 1e3, local.mean * 1e3, local.p95 * 1e3, local.samples, remote.p50 * 1e3, remote.mean * 1e3,
               remote.p95 * 1e3, remote.samples));
}

} // namespace

int main() {
    soft_lcs_oracle();
    hard_lcs_degeneration();

    PolicyMix mix;
    mix.optimal = 0.25;
    mix.noisy = 0.35;
    mix.early_stop = 0.20;
    mix.random = 0.20;
    const auto t0 = Clock::now();
    const auto main_corpus = generate_corpus(generate_tasks(50, 404, {}), mix, 8, 404, 4);
    const auto main_lib = build_library(main_corpus.dataset, kDefaultGroupingThreshold, matcher, 4);
    const double build_secs = seconds_since(t0);
    const auto second = generate_corpus(generate_tasks(64, 505, {}), mix, 8, 505, 4);
    const auto second_lib = build_library(second.dataset, kDefaultGroupingThreshold, matcher, 4);
    label_all_modes(second.dataset, second_lib);

    const auto disc_corpus = generate_corpus(generate_tasks(60, 808, {}), mix, 8, 808, 4);

    grouping_contract({{"main", &main_corpus.dataset}, {"second", &second.dataset}}, {&main_lib, &second_lib});
    key_step_recovery(main_corpus, main_lib, build_secs);
    {
        LabelingOptions o;
        o.mode = Labeler::Linear;
        collect(label_dataset(main_corpus.dataset, nullptr, matcher, o), main_corpus.dataset);
    }
    reward_telescoping();
    gradient_check(main_corpus.dataset);
    discrimination(disc_corpus);
    data_balance();
    cli_determinism();
    latency(main_corpus.dataset);
    label_monotonicity();

    for (const auto& [n, line] : lines) std::printf("%s\n", line.c_str());
    std::printf("%d of %zu criteria failed\n", failures, lines.size());
    return failures == 0 ? 0 : 1;
}
