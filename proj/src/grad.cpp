#include "kafnet/grad.hpp"

#include "kafnet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kafnet {

std::vector<double> Gradient::flatten() const {
    std::vector<double> flat;
    flatten_into(flat);
    return flat;
}

void Gradient::flatten_into(std::vector<double>& out) const {
    out.clear();
    for (const LayerGrad& layer : hidden) {
        out.insert(out.end(), layer.weights.begin(), layer.weights.end());
        out.insert(out.end(), layer.biases.begin(), layer.biases.end());
        out.insert(out.end(), layer.mixing.begin(), layer.mixing.end());
    }
    out.insert(out.end(), out_weights.begin(), out_weights.end());
    out.insert(out.end(), out_biases.begin(), out_biases.end());
}

Gradient zero_gradient(const Kafnet& net) {
    Gradient grad;
    grad.hidden.resize(net.hidden.size());
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        grad.hidden[i].weights.assign(net.hidden[i].affine.weights.size(), 0.0);
        grad.hidden[i].biases.assign(net.hidden[i].affine.biases.size(), 0.0);
        grad.hidden[i].mixing.assign(net.hidden[i].kaf.mixing.size(), 0.0);
    }
    grad.out_weights.assign(net.output.weights.size(), 0.0);
    grad.out_biases.assign(net.output.biases.size(), 0.0);
    return grad;
}

namespace {

void check_trace_matches(const Kafnet& net, const ForwardTrace& trace) {
    if (trace.hidden.size() != net.hidden.size() || trace.logits.size() != net.output.rows ||
        trace.input.size() != net.input_dim)
        throw std::invalid_argument("trace does not match network shape");
    for (std::size_t i = 0; i < net.hidden.size(); ++i)
        if (trace.hidden[i].pre.size() != net.hidden[i].affine.rows ||
            trace.hidden[i].kernel.size() != net.hidden[i].kaf.mixing.size())
            throw std::invalid_argument("trace does not match network shape");
}

// Reverse sweep from a seed adjoint on the pre-activations of layer `top`
// (1-based; top == Q addresses the logits). Accumulates parameter adjoints
// for layers <= top and, when requested, the activation adjoints dl/dA_ij.
void reverse_from(const Kafnet& net, const ForwardTrace& trace, const std::size_t top,
                  std::vector<double> d_pre, Gradient& grad,
                  std::vector<std::vector<double>>* act_adjoints) {
    const Dictionary& dict = net.dictionary;
    const std::size_t d = dict.size();
    const double gamma = dict.gamma;

    for (std::size_t i = top; i >= 1; --i) {
        const bool is_output = i == net.depth();
        const AffineParams& affine = is_output ? net.output : net.hidden[i - 1].affine;
        std::vector<double>& gw = is_output ? grad.out_weights : grad.hidden[i - 1].weights;
        std::vector<double>& gb = is_output ? grad.out_biases : grad.hidden[i - 1].biases;
        const std::vector<double>& inputs = i == 1 ? trace.input : trace.hidden[i - 2].act;

        for (std::size_t j = 0; j < affine.rows; ++j) {
            gb[j] += d_pre[j];
            for (std::size_t h = 0; h < affine.cols; ++h)
                gw[j * affine.cols + h] += d_pre[j] * inputs[h];
        }
        if (i == 1) break;

        // dA_{i-1} = W^T d_pre
        const std::size_t prev_width = affine.cols;
        std::vector<double> d_act(prev_width, 0.0);
        for (std::size_t j = 0; j < affine.rows; ++j)
            for (std::size_t h = 0; h < prev_width; ++h)
                d_act[h] += affine.weights[j * prev_width + h] * d_pre[j];
        if (act_adjoints) (*act_adjoints)[i - 2] = d_act;

        // through the KAF of layer i-1:
        //   dalpha_jk = dA_j * E_jk
        //   dG_j      = dA_j * sum_k alpha_jk * (-2 gamma (G_j - d_k) E_jk)
        const HiddenLayer& prev_layer = net.hidden[i - 2];
        const LayerTrace& lt = trace.hidden[i - 2];
        std::vector<double>& ga = grad.hidden[i - 2].mixing;
        std::vector<double> d_pre_prev(prev_width, 0.0);
        for (std::size_t j = 0; j < prev_width; ++j) {
            const double da = d_act[j];
            double dg = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double e = lt.kernel[j * d + k];
                ga[j * d + k] += da * e;
                dg += prev_layer.kaf.a(j, k) * (-2.0 * gamma) * (lt.pre[j] - dict.elements[k]) * e;
            }
            d_pre_prev[j] = da * dg;
        }
        d_pre = std::move(d_pre_prev);
    }
}

} // namespace

Gradient backward(const Kafnet& net, const ForwardTrace& trace, std::size_t label,
                  std::vector<std::vector<double>>* act_adjoints) {
    Gradient grad;
    backward_into(net, trace, label, grad, act_adjoints);
    return grad;
}

void backward_into(const Kafnet& net, const ForwardTrace& trace, std::size_t label,
                   Gradient& grad, std::vector<std::vector<double>>* act_adjoints) {
    check_trace_matches(net, trace);
    if (label >= trace.probs.size()) throw std::invalid_argument("label out of range");

    // reshape and zero, reusing capacity on repeated calls
    grad.hidden.resize(net.hidden.size());
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        grad.hidden[i].weights.assign(net.hidden[i].affine.weights.size(), 0.0);
        grad.hidden[i].biases.assign(net.hidden[i].affine.biases.size(), 0.0);
        grad.hidden[i].mixing.assign(net.hidden[i].kaf.mixing.size(), 0.0);
    }
    grad.out_weights.assign(net.output.weights.size(), 0.0);
    grad.out_biases.assign(net.output.biases.size(), 0.0);
    if (act_adjoints) act_adjoints->assign(net.hidden.size(), {});

    // softmax + cross-entropy composite: dl/dG_Qj = p_j - [j == label]
    std::vector<double> d_logits = trace.probs;
    d_logits[label] -= 1.0;

    reverse_from(net, trace, net.depth(), std::move(d_logits), grad, act_adjoints);
}

Gradient pre_activation_gradient(const Kafnet& net, const ForwardTrace& trace,
                                 std::size_t layer, std::size_t neuron) {
    check_trace_matches(net, trace);
    if (layer < 1 || layer > net.depth()) throw std::invalid_argument("layer out of range");
    const std::size_t width = layer == net.depth() ? net.output.rows
                                                   : net.hidden[layer - 1].affine.rows;
    if (neuron >= width) throw std::invalid_argument("neuron out of range");
    Gradient grad = zero_gradient(net);
    std::vector<double> seed(width, 0.0);
    seed[neuron] = 1.0;
    reverse_from(net, trace, layer, std::move(seed), grad, nullptr);
    return grad;
}

Gradient finite_diff_gradient(const Kafnet& net, const std::vector<double>& x,
                              std::size_t label, double step) {
    if (!(step >= 1e-8 && step <= 1e-2))
        throw std::invalid_argument("finite-difference step outside [1e-8, 1e-2]");
    Kafnet work = net;
    std::vector<double> flat = collect_params(work);
    std::vector<double> flat_grad(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + step;
        assign_params(work, flat);
        const double plus = loss(work, x, label);
        flat[i] = saved - step;
        assign_params(work, flat);
        const double minus = loss(work, x, label);
        flat[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus))
            throw std::runtime_error("non-finite loss at perturbed point " + param_name(net, i));
        flat_grad[i] = (plus - minus) / (2.0 * step);
    }
    assign_params(work, flat);

    // repackage the flat vector into gradient blocks
    Gradient grad = zero_gradient(net);
    std::size_t pos = 0;
    auto take = [&](std::vector<double>& block) {
        std::copy_n(flat_grad.begin() + static_cast<std::ptrdiff_t>(pos), block.size(),
                    block.begin());
        pos += block.size();
    };
    for (LayerGrad& layer : grad.hidden) {
        take(layer.weights);
        take(layer.biases);
        take(layer.mixing);
    }
    take(grad.out_weights);
    take(grad.out_biases);
    return grad;
}

GDerivatives grad_step_derivatives(const Kafnet& net, const std::vector<double>& x,
                                   std::size_t layer, std::size_t neuron,
                                   std::size_t z, std::size_t w, double step) {
    const std::size_t n_params = param_count(net);
    if (z >= n_params || w >= n_params)
        throw std::invalid_argument("parameter coordinate out of range");

    GDerivatives result{};
    {
        const ForwardTrace trace = forward(net, x);
        result.first = pre_activation_gradient(net, trace, layer, neuron).flatten()[z];
    }

    Kafnet work = net;
    std::vector<double> flat = collect_params(work);
    const double saved = flat[w];
    auto first_at = [&](double value) {
        flat[w] = value;
        assign_params(work, flat);
        const ForwardTrace trace = forward(work, x);
        return pre_activation_gradient(work, trace, layer, neuron).flatten()[z];
    };
    const double plus = first_at(saved + step);
    const double minus = first_at(saved - step);
    flat[w] = saved;
    result.second = (plus - minus) / (2.0 * step);
    return result;
}

// --- gradient check ---------------------------------------------------------

GradCheckResult compare_gradients(const Kafnet& net, const Gradient& bp, const Gradient& fd,
                                  double rel_tol, double abs_tol) {
    const std::vector<double> a = bp.flatten();
    const std::vector<double> b = fd.flatten();
    if (a.size() != b.size()) throw std::invalid_argument("gradient shapes differ");
    GradCheckResult res;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double err = std::abs(a[i] - b[i]);
        res.max_abs_err = std::max(res.max_abs_err, err);
        if (err <= abs_tol) continue; // near-zero absolute gate
        const double mag = std::max(std::abs(a[i]), std::abs(b[i]));
        const double rel = err / mag;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_coord = i;
        }
        if (mag <= abs_tol || rel > rel_tol) res.passed = false;
    }
    res.worst_coord_name = param_name(net, res.worst_coord);
    return res;
}

namespace {

struct Trial {
    Kafnet net;
    std::vector<double> x;
    std::size_t label;
};

Trial draw_trial(std::uint64_t seed, std::size_t index) {
    Rng rng(seed, index);
    const std::size_t q = 2 + rng.below(2); // {2, 3}
    const std::size_t m = 2 + rng.below(5);
    const std::size_t d = 2 + rng.below(19); // {2..20}
    const double gammas[] = {0.005, 0.1, 1.0};
    const double gamma = gammas[rng.below(3)];
    const double range_r = 1.0 + static_cast<double>(rng.below(3)); // {1, 2, 3}

    std::vector<std::size_t> widths;
    for (std::size_t i = 0; i + 1 < q; ++i) widths.push_back(2 + rng.below(9)); // {2..10}
    widths.push_back(2 + rng.below(3)); // classes {2..4}

    Trial trial{make_kafnet(m, widths, make_dictionary(d, range_r, gamma)), {}, 0};
    for (HiddenLayer& layer : trial.net.hidden) {
        const double std_w = 1.0 / std::sqrt(static_cast<double>(layer.affine.cols));
        for (double& v : layer.affine.weights) v = rng.normal(0.0, std_w);
        for (double& v : layer.affine.biases) v = rng.uniform(-0.5, 0.5);
        for (double& v : layer.kaf.mixing) v = rng.normal(0.0, 0.3);
    }
    const double std_out = 1.0 / std::sqrt(static_cast<double>(trial.net.output.cols));
    for (double& v : trial.net.output.weights) v = rng.normal(0.0, std_out);
    for (double& v : trial.net.output.biases) v = rng.uniform(-0.5, 0.5);

    trial.x.resize(m);
    for (double& v : trial.x) v = rng.uniform(-2.0, 2.0);
    trial.label = rng.below(trial.net.n_classes());
    return trial;
}

} // namespace

GradCheckSummary run_gradient_check(std::size_t trials, std::uint64_t seed,
                                    std::ptrdiff_t flip_sign_coord) {
    std::vector<GradCheckResult> results(trials);
    std::vector<std::string> messages(trials);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const Trial trial = draw_trial(seed, static_cast<std::size_t>(t));
        const ForwardTrace trace = forward(trial.net, trial.x);
        Gradient bp = backward(trial.net, trace, trial.label);
        if (flip_sign_coord >= 0) {
            std::vector<double> flat = bp.flatten();
            const std::size_t c = static_cast<std::size_t>(flip_sign_coord) % flat.size();
            // rebuild through the same block order used by flatten
            std::size_t pos = 0;
            auto patch = [&](std::vector<double>& block) {
                if (c >= pos && c < pos + block.size()) block[c - pos] = -block[c - pos];
                pos += block.size();
            };
            for (LayerGrad& layer : bp.hidden) {
                patch(layer.weights);
                patch(layer.biases);
                patch(layer.mixing);
            }
            patch(bp.out_weights);
            patch(bp.out_biases);
        }
        const Gradient fd = finite_diff_gradient(trial.net, trial.x, trial.label, 1e-5);
        results[t] = compare_gradients(trial.net, bp, fd);
        if (!results[t].passed) {
            std::ostringstream msg;
            msg << "trial " << t << ": mismatch at " << results[t].worst_coord_name
                << " (rel err " << results[t].max_rel_err << ")";
            messages[t] = msg.str();
        }
    }

    GradCheckSummary summary;
    summary.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        if (results[t].passed) ++summary.passed;
        else if (summary.first_failure.empty()) summary.first_failure = messages[t];
        summary.max_rel_err = std::max(summary.max_rel_err, results[t].max_rel_err);
    }
    return summary;
}

// --- empirical Lipschitz / smoothness probes ---------------------------------

namespace {

double norm2_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace

RatioEstimate max_difference_ratios(std::size_t samples, std::uint64_t seed,
                                    bool with_gradients, const DrawPointFn& draw_point,
                                    const EvaluatePairFn& evaluate_pair) {
    std::vector<double> loss_ratios(samples, 0.0);
    std::vector<double> grad_ratios(samples, 0.0);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        Rng rng(seed, static_cast<std::uint64_t>(p));
        const std::vector<double> w1 = draw_point(rng);
        std::vector<double> w2 = draw_point(rng);
        while (w2 == w1) w2 = draw_point(rng);
        const double denom = norm2_diff(w1, w2);

        double l1 = 0.0, l2 = 0.0;
        std::vector<double> g1, g2;
        evaluate_pair(w1, w2, rng, l1, l2, with_gradients ? &g1 : nullptr,
                      with_gradients ? &g2 : nullptr);
        loss_ratios[p] = std::abs(l1 - l2) / denom;
        if (with_gradients) grad_ratios[p] = norm2_diff(g1, g2) / denom;
    }
    RatioEstimate est;
    for (double v : loss_ratios) est.max_loss_ratio = std::max(est.max_loss_ratio, v);
    for (double v : grad_ratios) est.max_grad_ratio = std::max(est.max_grad_ratio, v);
    return est;
}

namespace {

// per-coordinate half-widths of the parameter box
std::vector<double> flat_box(const Kafnet& net, const ParamBounds& pb) {
    std::vector<double> box(param_count(net));
    for (std::size_t i = 0; i < box.size(); ++i) {
        switch (decode_param(net, i).kind) {
        case ParamKind::weight: box[i] = pb.w_max; break;
        case ParamKind::bias: box[i] = pb.b_max; break;
        case ParamKind::mixing: box[i] = pb.alpha_max; break;
        }
    }
    return box;
}

ProbeReport probe_constants(const Kafnet& net_template, const ParamBounds& pb,
                            std::size_t samples, std::uint64_t seed, bool with_gradients) {
    if (samples < 1) throw std::invalid_argument("probe needs at least one sample");
    net_template.validate();
    if (net_template.input_dim != pb.m || net_template.widths() != pb.widths)
        throw std::invalid_argument("network template does not match ParamBounds shape");
    const std::vector<double> box = flat_box(net_template, pb);

    DrawPointFn draw = [&box](Rng& rng) {
        std::vector<double> w(box.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-box[i], box[i]);
        return w;
    };
    EvaluatePairFn eval = [&net_template, &pb, with_gradients](
                              const std::vector<double>& w1, const std::vector<double>& w2,
                              Rng& rng, double& l1, double& l2, std::vector<double>* g1,
                              std::vector<double>* g2) {
        Kafnet net = net_template;
        std::vector<double> x(pb.m);
        for (double& v : x) v = rng.uniform(-pb.a, pb.a);
        const std::size_t label = rng.below(net.n_classes());

        assign_params(net, w1);
        ForwardTrace trace = forward(net, x);
        l1 = cross_entropy(trace.probs, label);
        if (with_gradients && g1) *g1 = backward(net, trace, label).flatten();

        assign_params(net, w2);
        trace = forward(net, x);
        l2 = cross_entropy(trace.probs, label);
        if (with_gradients && g2) *g2 = backward(net, trace, label).flatten();
    };

    const RatioEstimate est = max_difference_ratios(samples, seed, with_gradients, draw, eval);
    ProbeReport report;
    report.lipschitz_lower = est.max_loss_ratio;
    report.smoothness_lower = est.max_grad_ratio;
    report.sample_count = samples;
    report.seed = seed;
    return report;
}

} // namespace

ProbeReport estimate_lipschitz(const Kafnet& net_template, const ParamBounds& bounds,
                               std::size_t samples, std::uint64_t seed) {
    return probe_constants(net_template, bounds, samples, seed, false);
}

ProbeReport estimate_smoothness(const Kafnet& net_template, const ParamBounds& bounds,
                                std::size_t samples, std::uint64_t seed) {
    return probe_constants(net_template, bounds, samples, seed, true);
}

std::string probe_csv_header() { return "seed,samples,lipschitz_lower,smoothness_lower"; }

std::string probe_csv_row(const ProbeReport& report) {
    std::ostringstream row;
    row << report.seed << ',' << report.sample_count << ','
        << format_double(report.lipschitz_lower) << ',' << format_double(report.smoothness_lower);
    return row.str();
}

} // namespace kafnet
