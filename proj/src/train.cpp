#include "kafnet/train.hpp"

#include "kafnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace kafnet {

void write_gap_csv(const GapSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "step,train_risk,test_risk,gap\n";
    for (std::size_t t = 0; t < series.size(); ++t)
        out << (t + 1) << ',' << format_double(series.train_risk[t]) << ','
            << format_double(series.test_risk[t]) << ',' << format_double(series.gap[t]) << '\n';
}

std::vector<double> moving_average(const std::vector<double>& series, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be positive");
    std::vector<double> out(series.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        acc += series[t];
        if (t >= window) acc -= series[t - window];
        out[t] = acc / static_cast<double>(std::min(window, t + 1));
    }
    return out;
}

namespace {

enum : std::uint64_t { kWeightStream = 1, kMixingStream = 2, kBatchStream = 3, kTestStream = 4 };

} // namespace

Kafnet init_network(std::size_t input_dim, const std::vector<std::size_t>& widths,
                    const Dictionary& dict, std::uint64_t seed, double init_mixing_std) {
    Kafnet net = make_kafnet(input_dim, widths, dict);
    Rng weight_rng(seed, kWeightStream);
    Rng mixing_rng(seed, kMixingStream);
    for (HiddenLayer& layer : net.hidden) {
        const double std_w = 1.0 / std::sqrt(static_cast<double>(layer.affine.cols));
        for (double& v : layer.affine.weights) v = weight_rng.normal(0.0, std_w);
        for (double& v : layer.kaf.mixing) v = mixing_rng.normal(0.0, init_mixing_std);
    }
    const double std_out = 1.0 / std::sqrt(static_cast<double>(net.output.cols));
    for (double& v : net.output.weights) v = weight_rng.normal(0.0, std_out);
    return net; // biases stay 0
}

BatchEval batch_gradient(const Kafnet& net, const std::vector<Sample>& dataset,
                         const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("empty batch");
    const std::size_t n_params = param_count(net);

    // fixed-size chunks with a serial in-order merge: the float grouping is a
    // function of the sample order alone, so results do not depend on the
    // thread count (and match the plain sequential sum for batches <= 32)
    constexpr std::size_t kChunk = 32;
    const std::size_t n_chunks = (indices.size() + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partials(n_chunks, std::vector<double>(n_params, 0.0));
    std::vector<double> losses(indices.size());
#pragma omp parallel
    {
        Gradient scratch; // reused across this thread's samples
        std::vector<double> flat(n_params);
#pragma omp for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
            std::vector<double>& acc = partials[c];
            const std::size_t hi = std::min(indices.size(), (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < hi; ++i) {
                const Sample& s = dataset[indices[i]];
                const ForwardTrace trace = forward(net, s.x);
                losses[i] = cross_entropy(trace.probs, s.label);
                backward_into(net, trace, s.label, scratch);
                scratch.flatten_into(flat);
                for (std::size_t j = 0; j < n_params; ++j) acc[j] += flat[j];
            }
        }
    }

    std::vector<double> mean(n_params, 0.0);
    double loss_sum = 0.0;
    for (double v : losses) loss_sum += v;
    for (std::size_t c = 0; c < n_chunks; ++c)
        for (std::size_t j = 0; j < n_params; ++j) mean[j] += partials[c][j];
    const double count = static_cast<double>(indices.size());
    for (double& v : mean) v /= count;

    BatchEval eval;
    eval.mean_loss = loss_sum / count;
    eval.mean_gradient = zero_gradient(net);
    std::size_t pos = 0;
    auto take = [&](std::vector<double>& block) {
        std::copy_n(mean.begin() + static_cast<std::ptrdiff_t>(pos), block.size(), block.begin());
        pos += block.size();
    };
    for (LayerGrad& layer : eval.mean_gradient.hidden) {
        take(layer.weights);
        take(layer.biases);
        take(layer.mixing);
    }
    take(eval.mean_gradient.out_weights);
    take(eval.mean_gradient.out_biases);
    return eval;
}

namespace {

void check_finite(const std::vector<double>& grad) {
    for (double v : grad)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient in training step");
}

void apply_update(Kafnet& net, const std::vector<double>& delta) {
    std::vector<double> flat = collect_params(net);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += delta[i];
    assign_params(net, flat);
}

} // namespace

void sgd_step(Kafnet& net, const Gradient& mean_grad, std::size_t t, const TrainConfig& config) {
    if (t < 1) throw std::invalid_argument("step index starts at 1");
    const std::vector<double> g = mean_grad.flatten();
    check_finite(g);
    const double mu = config.c / static_cast<double>(t);
    std::vector<double> delta(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) delta[i] = -mu * g[i];
    apply_update(net, delta);
    if (config.project_to) project_into_box(net, *config.project_to);
}

void adam_step(Kafnet& net, const Gradient& mean_grad, AdamState& state,
               const TrainConfig& config) {
    const std::vector<double> g = mean_grad.flatten();
    check_finite(g);
    if (state.m1.empty()) {
        state.m1.assign(g.size(), 0.0);
        state.m2.assign(g.size(), 0.0);
    }
    if (state.m1.size() != g.size()) throw std::invalid_argument("Adam state shape mismatch");
    state.t += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    std::vector<double> delta(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.m1[i] = b1 * state.m1[i] + (1.0 - b1) * g[i];
        state.m2[i] = b2 * state.m2[i] + (1.0 - b2) * g[i] * g[i];
        const double m_hat = state.m1[i] / corr1;
        const double v_hat = state.m2[i] / corr2;
        delta[i] = -config.c * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
    apply_update(net, delta);
    if (config.project_to) project_into_box(net, *config.project_to);
}

void project_into_box(Kafnet& net, const ParamBounds& pb) {
    auto clamp_all = [](std::vector<double>& values, double bound) {
        for (double& v : values) v = std::clamp(v, -bound, bound);
    };
    for (HiddenLayer& layer : net.hidden) {
        clamp_all(layer.affine.weights, pb.w_max);
        clamp_all(layer.affine.biases, pb.b_max);
        clamp_all(layer.kaf.mixing, pb.alpha_max);
    }
    clamp_all(net.output.weights, pb.w_max);
    clamp_all(net.output.biases, pb.b_max);
}

TrainResult run_training(Kafnet net, const std::vector<Sample>& train_set,
                         const std::vector<Sample>& test_set, const TrainConfig& config) {
    if (config.t_steps < 1) throw std::invalid_argument("t_steps must be >= 1");
    if (train_set.empty() || test_set.empty())
        throw std::invalid_argument("training needs non-empty train and test sets");
    net.validate();
    if (train_set.front().x.size() != net.input_dim)
        throw std::invalid_argument("dataset dimension does not match network");

    Rng batch_rng(config.seed, kBatchStream);
    Rng test_rng(config.seed, kTestStream);
    AdamState adam;

    TrainResult result;
    result.series.train_risk.reserve(config.t_steps);
    result.series.test_risk.reserve(config.t_steps);
    result.series.gap.reserve(config.t_steps);
    result.series.gap_floored.reserve(config.t_steps);

    std::vector<std::size_t> batch(config.batch_size);
    std::vector<std::size_t> test_batch(config.eval_batch_size);
    std::vector<Sample> eval_samples(config.eval_batch_size);

    for (std::size_t t = 1; t <= config.t_steps; ++t) {
        for (std::size_t& idx : batch) idx = batch_rng.below(train_set.size());
        for (std::size_t& idx : test_batch) idx = test_rng.below(test_set.size());

        const BatchEval eval = batch_gradient(net, train_set, batch);

        for (std::size_t i = 0; i < test_batch.size(); ++i)
            eval_samples[i] = test_set[test_batch[i]];
        const double test_risk = empirical_risk(net, eval_samples);

        const double train_risk = eval.mean_loss;
        const bool floored = train_risk <= 1e-12;
        result.series.train_risk.push_back(train_risk);
        result.series.test_risk.push_back(test_risk);
        result.series.gap.push_back(test_risk / std::max(train_risk, 1e-12));
        result.series.gap_floored.push_back(floored);

        if (config.optimizer == Optimizer::sgd_c_over_t)
            sgd_step(net, eval.mean_gradient, t, config);
        else
            adam_step(net, eval.mean_gradient, adam, config);
    }
    result.net = std::move(net);
    return result;
}

} // namespace kafnet
