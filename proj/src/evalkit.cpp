#include "keystep/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace keystep {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double nearest_rank(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

} // namespace

double ConfusionStats::false_positive_rate() const {
    return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double ConfusionStats::percent(std::size_t count) const {
    return total() == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total());
}

ConfusionStats confusion_stats(const std::vector<bool>& predictions, const std::vector<bool>& truth) {
    if (predictions.size() != truth.size()) throw std::invalid_argument("confusion_stats: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("confusion_stats: empty input");
    ConfusionStats s;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            ++(predictions[i] ? s.tp : s.fn);
        } else {
            ++(predictions[i] ? s.fp : s.tn);
        }
    }
    s.precision = s.tp + s.fp == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    s.recall = s.tp + s.fn == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    s.accuracy = static_cast<double>(s.tp + s.tn) / static_cast<double>(s.total());
    return s;
}

double keystep_mae(std::span<const double> estimated, std::span<const double> truth) {
    if (estimated.size() != truth.size()) throw std::invalid_argument("keystep_mae: length mismatch");
    if (estimated.empty()) throw std::invalid_argument("keystep_mae: no key steps");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(estimated[i] - truth[i]);
    return sum / static_cast<double>(truth.size());
}

FinalScore avg_final_score(std::span<const double> final_progress, const std::vector<bool>& success) {
    if (final_progress.size() != success.size()) throw std::invalid_argument("avg_final_score: length mismatch");
    if (final_progress.empty()) throw std::invalid_argument("avg_final_score: empty dataset");
    FinalScore f;
    double all = 0.0, ok = 0.0, bad = 0.0;
    for (std::size_t i = 0; i < success.size(); ++i) {
        all += final_progress[i];
        if (success[i]) {
            ok += final_progress[i];
            ++f.success_count;
        } else {
            bad += final_progress[i];
            ++f.failure_count;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    f.overall = all / static_cast<double>(success.size());
    f.success = f.success_count ? ok / static_cast<double>(f.success_count) : nan;
    f.failure = f.failure_count ? bad / static_cast<double>(f.failure_count) : nan;
    return f;
}

LatencyStats latency_stats(std::vector<double> seconds) {
    LatencyStats s;
    s.samples = seconds.size();
    if (seconds.empty()) return s;
    std::sort(seconds.begin(), seconds.end());
    s.mean = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
    s.p50 = nearest_rank(seconds, 0.50);
    s.p95 = nearest_rank(seconds, 0.95);
    if (seconds.size() == 1) s.p50 = s.mean;
    return s;
}

LatencyStats measure_latency(const std::function<void()>& scorer, std::size_t repetitions) {
    if (repetitions < 1) throw std::invalid_argument("measure_latency: repetitions must be at least 1");
    using Clock = std::chrono::steady_clock;
    std::vector<double> samples;
    samples.reserve(repetitions);
    try {
        scorer();
        for (std::size_t i = 0; i < repetitions; ++i) {
            const auto start = Clock::now();
            scorer();
            samples.push_back(std::chrono::duration<double>(Clock::now() - start).count());
        }
    } catch (const std::exception& e) {
        throw LatencyAborted(std::string("scorer failed after ") + std::to_string(samples.size()) +
                                 " timed calls: " + e.what(),
                             latency_stats(samples));
    }
    return latency_stats(std::move(samples));
}

std::string table2_csv(const std::vector<std::pair<std::string, ConfusionStats>>& rows) {
    std::string out = "judge,tp,fn,tn,fp,tp_pct,fn_pct,tn_pct,fp_pct,precision,recall,accuracy,fpr\n";
    for (const auto& [name, s] : rows) {
        out += name + "," + std::to_string(s.tp) + "," + std::to_string(s.fn) + "," + std::to_string(s.tn) + "," +
               std::to_string(s.fp) + "," + fmt(s.percent(s.tp)) + "," + fmt(s.percent(s.fn)) + "," +
               fmt(s.percent(s.tn)) + "," + fmt(s.percent(s.fp)) + "," + fmt(s.precision) + "," + fmt(s.recall) +
               "," + fmt(s.accuracy) + "," + fmt(s.false_positive_rate()) + "\n";
    }
    return out;
}

std::string table3_csv(const std::vector<EstimatorRow>& rows) {
    std::string out = "estimator,keystep_mae,final_score,final_score_success,final_score_failure,latency_mean_s,"
                      "latency_p50_s,latency_p95_s\n";
    for (const auto& r : rows) {
        out += r.name + "," + fmt(r.keystep_mae) + "," + fmt(r.final_score.overall) + "," +
               fmt(r.final_score.success) + "," + fmt(r.final_score.failure) + ",";
        if (r.has_latency) {
            out += fmt(r.latency.mean) + "," + fmt(r.latency.p50) + "," + fmt(r.latency.p95);
        } else {
            out += ",,";
        }
        out += "\n";
    }
    return out;
}

std::string summary_text(const std::vector<std::pair<std::string, ConfusionStats>>& judges,
                         const std::vector<EstimatorRow>& estimators) {
    std::string out = "Success judgment\n";
    for (const auto& [name, s] : judges) {
        char line[256];
        std::snprintf(line, sizeof line,
                      "  %-12s TP %zu (%.1f%%)  FN %zu (%.1f%%)  TN %zu (%.1f%%)  FP %zu (%.1f%%)  "
                      "prec %.3f  rec %.3f  acc %.3f\n",
                      name.c_str(), s.tp, s.percent(s.tp), s.fn, s.percent(s.fn), s.tn, s.percent(s.tn), s.fp,
                      s.percent(s.fp), s.precision, s.recall, s.accuracy);
        out += line;
    }
    out += "Progress estimation\n";
    for (const auto& r : estimators) {
        char line[256];
        std::snprintf(line, sizeof line, "  %-12s key-step MAE %.4f  final score %.4f (success %.4f, failure %.4f)\n",
                      r.name.c_str(), r.keystep_mae, r.final_score.overall, r.final_score.success,
                      r.final_score.failure);
        out += line;
    }
    return out;
}

} // namespace keystep
