#pragma once

#include "kafnet/bounds.hpp"
#include "kafnet/grad.hpp"
#include "kafnet/net.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kafnet {

enum class Optimizer { sgd_c_over_t, adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::adam;
    double c = 0.001;               // step constant (SGD mu_t = c/t) or Adam base rate
    std::size_t t_steps = 2000;
    std::size_t batch_size = 32;
    std::size_t eval_batch_size = 32;
    std::uint64_t seed = 0;
    std::optional<ParamBounds> project_to; // clamp after every step when set

    // Adam moment constants
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    // mixing init scale ("a normal distribution" with this std)
    double init_mixing_std = 0.3;
};

// Per-step mini-batch risks; gap = test_risk / max(train_risk, 1e-12).
struct GapSeries {
    std::vector<double> train_risk;
    std::vector<double> test_risk;
    std::vector<double> gap;
    std::vector<bool> gap_floored; // train risk hit the 1e-12 floor

    std::size_t size() const { return train_risk.size(); }
};

// step,train_risk,test_risk,gap
void write_gap_csv(const GapSeries& series, const std::string& path);

// trailing mean over a window of `window` entries (shorter at the start)
std::vector<double> moving_average(const std::vector<double>& series, std::size_t window);

// mixing ~ N(0, init_std^2), weights ~ N(0, 1/fan_in), biases 0
Kafnet init_network(std::size_t input_dim, const std::vector<std::size_t>& widths,
                    const Dictionary& dict, std::uint64_t seed, double init_mixing_std = 0.3);

// mean gradient and mean loss over a batch of samples; per-sample terms are
// computed in parallel and reduced in sample order
struct BatchEval {
    Gradient mean_gradient;
    double mean_loss = 0.0;
};

BatchEval batch_gradient(const Kafnet& net, const std::vector<Sample>& dataset,
                         const std::vector<std::size_t>& indices);

// w <- w - (c/t) * g, then the optional box projection
void sgd_step(Kafnet& net, const Gradient& mean_grad, std::size_t t, const TrainConfig& config);

struct AdamState {
    std::vector<double> m1;
    std::vector<double> m2;
    std::size_t t = 0;
};

void adam_step(Kafnet& net, const Gradient& mean_grad, AdamState& state,
               const TrainConfig& config);

// clamp every parameter into its ParamBounds interval
void project_into_box(Kafnet& net, const ParamBounds& pb);

struct TrainResult {
    Kafnet net;
    GapSeries series;
};

// T steps of mini-batch training. Each step samples a train batch (uniform
// with replacement) and an independent test batch, records both risks at the
// pre-update parameters, then updates. Deterministic for fixed inputs.
TrainResult run_training(Kafnet net, const std::vector<Sample>& train_set,
                         const std::vector<Sample>& test_set, const TrainConfig& config);

} // namespace kafnet
