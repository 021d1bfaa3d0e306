#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/matrix.hpp"
#include "hybridface/pca.hpp"

namespace hybridface {

struct MlpConfig {
    std::size_t hidden_units = 70;
    double learn_rate = 0.1;
    double momentum = 0.5;
    std::size_t max_epochs = 1000;
    double target_mse = 0.01; // non-finite disables the early stop
    std::uint32_t seed = 0;
    // Uniform weight-init half-range. Much smaller values put tanh nets in
    // their linear regime, where problems without linear signal (XOR being
    // the classic case) stall in a constant-output trap for every seed.
    double init_scale = 0.5;
};

// One hidden layer, tanh on both layers. class_ids aligns output units with
// external labels; init fills it with 0..outputs-1 until a caller relabels.
struct MlpNetwork {
    Matrix w1;              // hidden x input
    std::vector<double> b1; // hidden
    Matrix w2;              // output x hidden
    std::vector<double> b2; // output
    std::vector<int> class_ids;

    std::size_t inputs() const { return w1.cols; }
    std::size_t hidden() const { return w1.rows; }
    std::size_t outputs() const { return w2.rows; }
};

struct ScoreVector {
    std::vector<double> scores; // one per class, each strictly inside (-1, 1)
    std::vector<int> class_ids;
};

struct TrainReport {
    std::size_t epochs_run = 0;
    double final_mse = 0.0;
    std::vector<double> mse_history; // one entry per completed epoch
};

struct Gradients {
    Matrix dw1;
    std::vector<double> db1;
    Matrix dw2;
    std::vector<double> db2;
};

struct TopScore {
    int class_id = 0;
    double score = 0.0;
};

namespace detail {

// raw-draw mapping keeps init byte-identical across standard libraries
inline double uniform_symmetric(std::mt19937& gen) {
    return 2.0 * (gen() / 4294967296.0) - 1.0;
}

inline void validate_mlp_config(const MlpConfig& cfg) {
    if (cfg.hidden_units == 0) throw ParamError("need at least one hidden unit");
    if (!(cfg.learn_rate > 0.0))
        throw ParamError("learn rate must be positive, got " + std::to_string(cfg.learn_rate));
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
        throw ParamError("momentum must lie in [0,1), got " + std::to_string(cfg.momentum));
    if (!(cfg.init_scale > 0.0))
        throw ParamError("init scale must be positive, got " + std::to_string(cfg.init_scale));
}

} // namespace detail

// +1 at the matching class, -1 everywhere else.
inline std::vector<double> encode_targets(std::size_t class_index, std::size_t n_classes) {
    if (class_index >= n_classes)
        throw ParamError("class index " + std::to_string(class_index) +
                         " out of range for " + std::to_string(n_classes) + " classes");
    std::vector<double> t(n_classes, -1.0);
    t[class_index] = 1.0;
    return t;
}

// Weights uniform in [-init_scale, +init_scale] from the seeded generator in
// a fixed draw order; biases zero. Same seed, same network, byte for byte.
inline MlpNetwork init_network(std::size_t inputs, std::size_t hidden, std::size_t outputs,
                               const MlpConfig& cfg) {
    if (inputs == 0 || hidden == 0 || outputs == 0)
        throw ParamError("network dimensions must be positive");
    detail::validate_mlp_config(cfg);
    std::mt19937 gen(cfg.seed);
    MlpNetwork net;
    net.w1 = Matrix(hidden, inputs);
    for (double& w : net.w1.data) w = cfg.init_scale * detail::uniform_symmetric(gen);
    net.b1.assign(hidden, 0.0);
    net.w2 = Matrix(outputs, hidden);
    for (double& w : net.w2.data) w = cfg.init_scale * detail::uniform_symmetric(gen);
    net.b2.assign(outputs, 0.0);
    net.class_ids.resize(outputs);
    std::iota(net.class_ids.begin(), net.class_ids.end(), 0);
    return net;
}

inline ScoreVector forward(const MlpNetwork& net, const FeatureVector& x) {
    if (x.weights.size() != net.inputs())
        throw ShapeError("feature length " + std::to_string(x.weights.size()) +
                         " does not match network input " + std::to_string(net.inputs()));
    std::vector<double> h(net.hidden());
    for (std::size_t j = 0; j < net.hidden(); ++j) {
        double s = net.b1[j];
        for (std::size_t i = 0; i < net.inputs(); ++i) s += net.w1(j, i) * x.weights[i];
        h[j] = std::tanh(s);
    }
    ScoreVector out;
    out.scores.resize(net.outputs());
    for (std::size_t k = 0; k < net.outputs(); ++k) {
        double s = net.b2[k];
        for (std::size_t j = 0; j < net.hidden(); ++j) s += net.w2(k, j) * h[j];
        out.scores[k] = std::tanh(s);
    }
    out.class_ids = net.class_ids;
    return out;
}

// Reverse-mode gradients of the half squared error through both tanh layers.
inline Gradients compute_gradients(const MlpNetwork& net, const FeatureVector& x,
                                   const std::vector<double>& target) {
    if (x.weights.size() != net.inputs())
        throw ShapeError("feature length " + std::to_string(x.weights.size()) +
                         " does not match network input " + std::to_string(net.inputs()));
    if (target.size() != net.outputs())
        throw ShapeError("target length " + std::to_string(target.size()) +
                         " does not match network output " + std::to_string(net.outputs()));

    std::vector<double> h(net.hidden());
    for (std::size_t j = 0; j < net.hidden(); ++j) {
        double s = net.b1[j];
        for (std::size_t i = 0; i < net.inputs(); ++i) s += net.w1(j, i) * x.weights[i];
        h[j] = std::tanh(s);
    }
    std::vector<double> y(net.outputs());
    std::vector<double> delta_out(net.outputs());
    for (std::size_t k = 0; k < net.outputs(); ++k) {
        double s = net.b2[k];
        for (std::size_t j = 0; j < net.hidden(); ++j) s += net.w2(k, j) * h[j];
        y[k] = std::tanh(s);
        delta_out[k] = (y[k] - target[k]) * (1.0 - y[k] * y[k]);
    }

    Gradients g;
    g.dw2 = Matrix(net.outputs(), net.hidden());
    g.db2 = delta_out;
    for (std::size_t k = 0; k < net.outputs(); ++k)
        for (std::size_t j = 0; j < net.hidden(); ++j) g.dw2(k, j) = delta_out[k] * h[j];

    g.dw1 = Matrix(net.hidden(), net.inputs());
    g.db1.resize(net.hidden());
    for (std::size_t j = 0; j < net.hidden(); ++j) {
        double back = 0.0;
        for (std::size_t k = 0; k < net.outputs(); ++k) back += delta_out[k] * net.w2(k, j);
        g.db1[j] = back * (1.0 - h[j] * h[j]);
        for (std::size_t i = 0; i < net.inputs(); ++i) g.dw1(j, i) = g.db1[j] * x.weights[i];
    }
    return g;
}

// Online backprop with momentum: every sample, in fixed order, applies
// step(t) = -learn_rate * gradient + momentum * step(t-1). Stops once the
// epoch MSE (mean over samples of the mean squared per-output error) falls
// below target_mse, or after max_epochs.
inline std::pair<MlpNetwork, TrainReport> train_on_targets(
    MlpNetwork net, const std::vector<FeatureVector>& features,
    const std::vector<std::vector<double>>& targets, const MlpConfig& cfg) {
    detail::validate_mlp_config(cfg);
    if (cfg.max_epochs == 0) throw ParamError("need at least one training epoch");
    if (features.empty()) throw ParamError("cannot train on an empty sample list");
    if (features.size() != targets.size())
        throw ShapeError("feature count " + std::to_string(features.size()) +
                         " does not match target count " + std::to_string(targets.size()));

    Gradients step;
    step.dw1 = Matrix(net.hidden(), net.inputs());
    step.db1.assign(net.hidden(), 0.0);
    step.dw2 = Matrix(net.outputs(), net.hidden());
    step.db2.assign(net.outputs(), 0.0);

    TrainReport report;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t s = 0; s < features.size(); ++s) {
            const Gradients g = compute_gradients(net, features[s], targets[s]);
            for (std::size_t i = 0; i < step.dw1.data.size(); ++i) {
                step.dw1.data[i] = -cfg.learn_rate * g.dw1.data[i] + cfg.momentum * step.dw1.data[i];
                net.w1.data[i] += step.dw1.data[i];
            }
            for (std::size_t i = 0; i < step.db1.size(); ++i) {
                step.db1[i] = -cfg.learn_rate * g.db1[i] + cfg.momentum * step.db1[i];
                net.b1[i] += step.db1[i];
            }
            for (std::size_t i = 0; i < step.dw2.data.size(); ++i) {
                step.dw2.data[i] = -cfg.learn_rate * g.dw2.data[i] + cfg.momentum * step.dw2.data[i];
                net.w2.data[i] += step.dw2.data[i];
            }
            for (std::size_t i = 0; i < step.db2.size(); ++i) {
                step.db2[i] = -cfg.learn_rate * g.db2[i] + cfg.momentum * step.db2[i];
                net.b2[i] += step.db2[i];
            }
        }

        for (double w : net.w1.data)
            if (!std::isfinite(w)) throw DivergenceError("network weights left the finite range");
        for (double w : net.w2.data)
            if (!std::isfinite(w)) throw DivergenceError("network weights left the finite range");

        double mse = 0.0;
        for (std::size_t s = 0; s < features.size(); ++s) {
            const ScoreVector out = forward(net, features[s]);
            double err = 0.0;
            for (std::size_t k = 0; k < out.scores.size(); ++k) {
                const double d = out.scores[k] - targets[s][k];
                err += d * d;
            }
            mse += err / static_cast<double>(out.scores.size());
        }
        mse /= static_cast<double>(features.size());
        if (!std::isfinite(mse) || mse > 1e6)
            throw DivergenceError("training error blew up; reduce the learn rate");
        report.mse_history.push_back(mse);
        if (std::isfinite(cfg.target_mse) && mse < cfg.target_mse) break;
    }
    report.epochs_run = report.mse_history.size();
    report.final_mse = report.mse_history.back();
    return {std::move(net), report};
}

// Label-based wrapper: targets are +1 for the labeled class, -1 elsewhere.
inline std::pair<MlpNetwork, TrainReport> train(MlpNetwork net,
                                                const std::vector<FeatureVector>& features,
                                                const std::vector<std::size_t>& labels,
                                                const MlpConfig& cfg) {
    if (features.size() != labels.size())
        throw ShapeError("feature count " + std::to_string(features.size()) +
                         " does not match label count " + std::to_string(labels.size()));
    std::vector<std::vector<double>> targets;
    targets.reserve(labels.size());
    for (std::size_t label : labels) targets.push_back(encode_targets(label, net.outputs()));
    return train_on_targets(std::move(net), features, targets, cfg);
}

// Winner and its score; the lowest index wins ties.
inline TopScore classify_scores(const ScoreVector& scores) {
    if (scores.scores.empty()) throw ParamError("cannot classify an empty score vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.scores.size(); ++k)
        if (scores.scores[k] > scores.scores[best]) best = k;
    TopScore top;
    top.class_id = scores.class_ids.empty() ? static_cast<int>(best) : scores.class_ids[best];
    top.score = scores.scores[best];
    return top;
}

} // namespace hybridface
