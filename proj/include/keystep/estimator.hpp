#pragma once
// Desk-scale progress estimator: a sigmoid generalized-linear model over a
// fixed hand-designed featurization of (instruction, action history,
// current observation), trained with binary cross-entropy against soft
// progress labels.

#include "keystep/io.hpp"
#include "keystep/labeling.hpp"
#include "keystep/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace keystep {

inline constexpr const char* kFeatureSchemaVersion = "keystep.features/1";

// State at step t: actions a_1..a_{t-1} plus the observation o_t.
struct StateView {
    std::string instruction;
    std::vector<Action> action_history;
    std::string observation;
};

// State for step `index` (0-based) of `t`.
StateView state_at(const Trajectory& t, std::size_t index);

// Feature layout; kFeatureCount entries in this order.
enum Feature : std::size_t {
    kHistoryLength = 0,  // h / (h + 10)
    kKindCountBegin = 1, // raw per-kind counts, ActionKind order
    kDistinctElements = kKindCountBegin + kActionKindCount,
    kInstructionObservationOverlap,
    kInstructionTextOverlap,
    kLastIsNothing,
    kRepetition, // longest run of identical consecutive actions / h
    kFeatureCount
};

struct FeatureVector {
    std::vector<double> values;
    std::string schema_version = kFeatureSchemaVersion;
};

FeatureVector featurize(const std::string& instruction, const StateView& sv);

struct TrainingMetadata {
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    std::size_t batch_size = 0;
    std::string optimizer;
    std::uint64_t seed = 0;
    double final_loss = 0.0;

    bool operator==(const TrainingMetadata&) const = default;
};

struct ProgressModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::string schema_version = kFeatureSchemaVersion;
    TrainingMetadata metadata;

    // Zero weights and bias: predicts 0.5 everywhere.
    static ProgressModel initial(std::size_t dim = kFeatureCount);

    bool operator==(const ProgressModel&) const = default;
};

double sigmoid(double z);

// sigmoid(w . f + b), strictly inside (0, 1). Throws DataError on schema or
// dimension mismatch.
double predict_progress(const ProgressModel& m, const FeatureVector& f);
double predict_progress(const ProgressModel& m, const StateView& sv);

inline constexpr double kProbabilityGuard = 1e-7;

// -p* log p - (1 - p*) log(1 - p). p_hat must lie strictly inside (0, 1).
double bce_loss(double p_hat, double p_star);

struct TrainingExample {
    FeatureVector features;
    double target = 0.0;
};

enum class Optimizer { Sgd, Adam };

struct TrainingParams {
    double learning_rate = 0.05;
    std::size_t epochs = 200;
    std::size_t batch_size = 0; // 0 = full batch
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
    // Adam moments; defaults follow the reward-model setup (0.9, 0.95).
    double beta1 = 0.9;
    double beta2 = 0.95;
};

struct TrainingResult {
    ProgressModel model;
    std::vector<double> loss_curve; // mean BCE over the training set after each epoch
};

// Throws DataError when the loss diverges, naming the epoch.
TrainingResult train(std::span<const TrainingExample> data, const TrainingParams& params);

double mean_bce(const ProgressModel& m, std::span<const TrainingExample> data);

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

// Analytic gradient of the guarded BCE for one example.
Gradient bce_gradient(const ProgressModel& m, const TrainingExample& ex);

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
};

// Compares bce_gradient against central finite differences with step
// `epsilon` in every parameter.
GradCheckResult grad_check(const ProgressModel& m, const TrainingExample& ex, double epsilon);

bool predict_success(const ProgressModel& m, const Trajectory& t, double tau = 0.5);

// One example per step of every labeled trajectory found in `corpus`.
std::vector<TrainingExample> build_training_set(const std::vector<Trajectory>& corpus,
                                                const std::vector<LabeledTrajectory>& labels);

Json model_to_json(const ProgressModel& m);
ProgressModel model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const ProgressModel& m);
ProgressModel load_model(const std::filesystem::path& path);

} // namespace keystep
