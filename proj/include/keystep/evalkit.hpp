#pragma once
// Evaluation metrics: success-judgment confusion statistics, key-step
// progress error, average final-step score, and latency measurement.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace keystep {

struct ConfusionStats {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    double precision = 0.0; // 0 when nothing was predicted positive
    double recall = 0.0;    // 0 when there are no positives
    double accuracy = 0.0;

    std::size_t total() const { return tp + fn + tn + fp; }
    double false_positive_rate() const; // FP / (FP + TN); 0 without negatives
    double percent(std::size_t count) const;
};

ConfusionStats confusion_stats(const std::vector<bool>& predictions, const std::vector<bool>& truth);

double keystep_mae(std::span<const double> estimated, std::span<const double> truth);

struct FinalScore {
    double overall = 0.0;
    double success = 0.0; // NaN when the subset is empty
    double failure = 0.0;
    std::size_t success_count = 0;
    std::size_t failure_count = 0;
};

// `final_progress[i]` is the final-step progress of a trajectory whose
// outcome is `success[i]`.
FinalScore avg_final_score(std::span<const double> final_progress, const std::vector<bool>& success);

struct LatencyStats {
    double mean = 0.0; // seconds
    double p50 = 0.0;
    double p95 = 0.0;
    std::size_t samples = 0;
};

// Thrown when the scorer fails mid-run; carries the samples gathered so far.
class LatencyAborted : public std::runtime_error {
public:
    LatencyAborted(const std::string& what, LatencyStats partial)
        : std::runtime_error(what), partial_(partial) {}
    const LatencyStats& partial() const { return partial_; }

private:
    LatencyStats partial_;
};

LatencyStats latency_stats(std::vector<double> seconds);

// One warm-up call, then `repetitions` timed calls.
LatencyStats measure_latency(const std::function<void()>& scorer, std::size_t repetitions);

struct EstimatorRow {
    std::string name;
    double keystep_mae = 0.0;
    FinalScore final_score;
    LatencyStats latency;
    bool has_latency = false;
};

std::string table2_csv(const std::vector<std::pair<std::string, ConfusionStats>>& rows);
std::string table3_csv(const std::vector<EstimatorRow>& rows);
std::string summary_text(const std::vector<std::pair<std::string, ConfusionStats>>& judges,
                         const std::vector<EstimatorRow>& estimators);

} // namespace keystep
