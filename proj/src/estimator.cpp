#include "keystep/estimator.hpp"

#include "keystep/errors.hpp"
#include "keystep/random.hpp"
#include "keystep/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace keystep {

StateView state_at(const Trajectory& t, std::size_t index) {
    if (index >= t.steps.size()) throw std::out_of_range("state_at: step index out of range");
    StateView sv;
    sv.instruction = t.instruction;
    sv.action_history.reserve(index);
    for (std::size_t i = 0; i < index; ++i) sv.action_history.push_back(t.steps[i].action);
    sv.observation = t.steps[index].observation;
    return sv;
}

FeatureVector featurize(const std::string& instruction, const StateView& sv) {
    FeatureVector f;
    f.values.assign(kFeatureCount, 0.0);
    const auto& hist = sv.action_history;
    const double h = static_cast<double>(hist.size());

    f.values[kHistoryLength] = h / (h + 10.0);

    std::set<std::int64_t> elements;
    std::string typed;
    for (const auto& a : hist) {
        f.values[kKindCountBegin + static_cast<std::size_t>(a.kind)] += 1.0;
        if (a.element_id) elements.insert(*a.element_id);
        if ((a.kind == ActionKind::Input || a.kind == ActionKind::Answer) && a.text) {
            typed += *a.text;
            typed += ' ';
        }
    }
    f.values[kDistinctElements] = static_cast<double>(elements.size());

    const auto goal_tokens = token_set(instruction);
    f.values[kInstructionObservationOverlap] = token_coverage(goal_tokens, token_set(sv.observation));
    f.values[kInstructionTextOverlap] = token_coverage(goal_tokens, token_set(typed));

    if (!hist.empty()) {
        f.values[kLastIsNothing] = hist.back().kind == ActionKind::Nothing ? 1.0 : 0.0;
        std::size_t best = 1, run = 1;
        for (std::size_t i = 1; i < hist.size(); ++i) {
            run = hist[i] == hist[i - 1] ? run + 1 : 1;
            best = std::max(best, run);
        }
        f.values[kRepetition] = static_cast<double>(best) / h;
    }
    return f;
}

ProgressModel ProgressModel::initial(std::size_t dim) {
    ProgressModel m;
    m.weights.assign(dim, 0.0);
    return m;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double logit(const ProgressModel& m, const FeatureVector& f) {
    if (f.schema_version != m.schema_version) {
        throw DataError("feature schema '" + f.schema_version + "' does not match model schema '" + m.schema_version + "'");
    }
    if (f.values.size() != m.weights.size()) {
        throw DataError("feature dimension " + std::to_string(f.values.size()) + " does not match model dimension " +
                        std::to_string(m.weights.size()));
    }
    return std::inner_product(f.values.begin(), f.values.end(), m.weights.begin(), m.bias);
}

double guarded(double p) { return std::clamp(p, kProbabilityGuard, 1.0 - kProbabilityGuard); }

double guarded_loss(const ProgressModel& m, const TrainingExample& ex) {
    return bce_loss(guarded(sigmoid(logit(m, ex.features))), ex.target);
}

} // namespace

double predict_progress(const ProgressModel& m, const FeatureVector& f) {
    // Keep the result strictly inside (0, 1) even when the logit saturates.
    return std::clamp(sigmoid(logit(m, f)), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

double predict_progress(const ProgressModel& m, const StateView& sv) {
    return predict_progress(m, featurize(sv.instruction, sv));
}

double bce_loss(double p_hat, double p_star) {
    if (!(p_hat > 0.0 && p_hat < 1.0)) throw std::domain_error("bce_loss: prediction must lie strictly inside (0, 1)");
    if (!(p_star >= 0.0 && p_star <= 1.0)) throw std::domain_error("bce_loss: target must lie in [0, 1]");
    double loss = 0.0;
    if (p_star > 0.0) loss -= p_star * std::log(p_hat);
    if (p_star < 1.0) loss -= (1.0 - p_star) * std::log1p(-p_hat);
    return loss;
}

double mean_bce(const ProgressModel& m, std::span<const TrainingExample> data) {
    if (data.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ex : data) sum += guarded_loss(m, ex);
    return sum / static_cast<double>(data.size());
}

Gradient bce_gradient(const ProgressModel& m, const TrainingExample& ex) {
    const double p = sigmoid(logit(m, ex.features));
    // The guard clamp is flat outside its band, so the gradient vanishes there.
    const double dz = (p < kProbabilityGuard || p > 1.0 - kProbabilityGuard) ? 0.0 : p - ex.target;
    Gradient g;
    g.weights.resize(m.weights.size());
    for (std::size_t i = 0; i < g.weights.size(); ++i) g.weights[i] = dz * ex.features.values[i];
    g.bias = dz;
    return g;
}

GradCheckResult grad_check(const ProgressModel& m, const TrainingExample& ex, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("grad_check: epsilon must be positive");
    const Gradient analytic = bce_gradient(m, ex);
    GradCheckResult r;
    auto compare = [&](double a, double numeric) {
        const double abs_err = std::abs(a - numeric);
        const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
        r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
        r.max_relative_error = std::max(r.max_relative_error, abs_err / scale);
    };
    ProgressModel probe = m;
    for (std::size_t i = 0; i <= m.weights.size(); ++i) {
        double& param = i < m.weights.size() ? probe.weights[i] : probe.bias;
        const double original = param;
        param = original + epsilon;
        const double up = guarded_loss(probe, ex);
        param = original - epsilon;
        const double down = guarded_loss(probe, ex);
        param = original;
        compare(i < m.weights.size() ? analytic.weights[i] : analytic.bias, (up - down) / (2.0 * epsilon));
    }
    return r;
}

TrainingResult train(std::span<const TrainingExample> data, const TrainingParams& params) {
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    if (params.batch_size > data.size()) throw std::invalid_argument("train: batch larger than dataset");
    const std::size_t dim = data.front().features.values.size();
    for (const auto& ex : data) {
        if (!(ex.target >= 0.0 && ex.target <= 1.0)) throw DataError("train: label outside [0, 1]");
        if (ex.features.values.size() != dim) throw DataError("train: inconsistent feature dimension");
    }

    TrainingResult out;
    out.model = ProgressModel::initial(dim);
    out.model.schema_version = data.front().features.schema_version;
    ProgressModel& m = out.model;

    const std::size_t batch = params.batch_size == 0 ? data.size() : params.batch_size;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(params.seed);

    std::vector<double> m1(dim + 1, 0.0), m2(dim + 1, 0.0);
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
        if (batch < data.size()) {
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::vector<double> grad(dim + 1, 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const Gradient g = bce_gradient(m, data[order[k]]);
                for (std::size_t i = 0; i < dim; ++i) grad[i] += g.weights[i];
                grad[dim] += g.bias;
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            for (std::size_t i = 0; i <= dim; ++i) {
                const double gi = grad[i] * scale;
                double delta = gi;
                if (params.optimizer == Optimizer::Adam) {
                    m1[i] = params.beta1 * m1[i] + (1.0 - params.beta1) * gi;
                    m2[i] = params.beta2 * m2[i] + (1.0 - params.beta2) * gi * gi;
                    const double mhat = m1[i] / (1.0 - std::pow(params.beta1, static_cast<double>(step)));
                    const double vhat = m2[i] / (1.0 - std::pow(params.beta2, static_cast<double>(step)));
                    delta = mhat / (std::sqrt(vhat) + 1e-8);
                }
                double& param = i < dim ? m.weights[i] : m.bias;
                param -= params.learning_rate * delta;
            }
        }
        const double loss = mean_bce(m, data);
        const bool finite_params = std::isfinite(m.bias) && std::all_of(m.weights.begin(), m.weights.end(),
                                                                         [](double w) { return std::isfinite(w); });
        if (!std::isfinite(loss) || !finite_params) {
            throw DataError("training diverged at epoch " + std::to_string(epoch));
        }
        out.loss_curve.push_back(loss);
    }

    m.metadata.epochs = params.epochs;
    m.metadata.learning_rate = params.learning_rate;
    m.metadata.batch_size = params.batch_size;
    m.metadata.optimizer = params.optimizer == Optimizer::Adam ? "adam" : "sgd";
    m.metadata.seed = params.seed;
    m.metadata.final_loss = out.loss_curve.empty() ? mean_bce(m, data) : out.loss_curve.back();
    return out;
}

bool predict_success(const ProgressModel& m, const Trajectory& t, double tau) {
    if (t.steps.empty()) throw std::invalid_argument("predict_success: empty trajectory");
    return predict_progress(m, state_at(t, t.steps.size() - 1)) >= tau;
}

std::vector<TrainingExample> build_training_set(const std::vector<Trajectory>& corpus,
                                                const std::vector<LabeledTrajectory>& labels) {
    std::unordered_map<std::string, const Trajectory*> by_id;
    for (const auto& t : corpus) by_id[t.traj_id] = &t;
    std::vector<TrainingExample> out;
    for (const auto& lt : labels) {
        auto it = by_id.find(lt.traj_id);
        if (it == by_id.end()) throw DataError("labels reference unknown trajectory '" + lt.traj_id + "'");
        const Trajectory& t = *it->second;
        if (lt.labels.size() != t.steps.size()) {
            throw DataError("labels for '" + lt.traj_id + "' do not match its step count");
        }
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            out.push_back({featurize(t.instruction, state_at(t, i)), lt.labels[i].progress});
        }
    }
    return out;
}

Json model_to_json(const ProgressModel& m) {
    Json j;
    j["schema_version"] = m.schema_version;
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    Json meta;
    meta["epochs"] = m.metadata.epochs;
    meta["learning_rate"] = m.metadata.learning_rate;
    meta["batch_size"] = m.metadata.batch_size;
    meta["optimizer"] = m.metadata.optimizer;
    meta["seed"] = m.metadata.seed;
    meta["final_loss"] = m.metadata.final_loss;
    j["metadata"] = std::move(meta);
    return j;
}

ProgressModel model_from_json(const Json& j) {
    ProgressModel m;
    try {
        m.schema_version = j.at("schema_version").get<std::string>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        if (j.contains("metadata")) {
            const Json& meta = j.at("metadata");
            m.metadata.epochs = meta.value("epochs", std::size_t{0});
            m.metadata.learning_rate = meta.value("learning_rate", 0.0);
            m.metadata.batch_size = meta.value("batch_size", std::size_t{0});
            m.metadata.optimizer = meta.value("optimizer", std::string{});
            m.metadata.seed = meta.value("seed", std::uint64_t{0});
            m.metadata.final_loss = meta.value("final_loss", 0.0);
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    if (m.schema_version != kFeatureSchemaVersion) {
        throw DataError("model schema '" + m.schema_version + "' does not match featurizer '" + kFeatureSchemaVersion + "'");
    }
    if (m.weights.size() != kFeatureCount) throw DataError("model has the wrong number of weights");
    for (double w : m.weights) {
        if (!std::isfinite(w)) throw DataError("model has non-finite weights");
    }
    if (!std::isfinite(m.bias)) throw DataError("model has a non-finite bias");
    return m;
}

void save_model(const std::filesystem::path& path, const ProgressModel& m) {
    write_file_atomic(path, model_to_json(m).dump(2) + "\n");
}

ProgressModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(Json::parse(read_file(path)));
    } catch (const Json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

} // namespace keystep
