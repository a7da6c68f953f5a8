#include "kafnet/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kafnet {

std::size_t ParamBounds::h_star() const {
    std::size_t h = d;
    for (std::size_t w : widths) h = std::max(h, w);
    return h;
}

std::size_t ParamBounds::h_hidden() const {
    std::size_t h = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) h = std::max(h, widths[i]);
    return h;
}

void ParamBounds::validate() const {
    if (q < 2 || widths.size() != q)
        throw std::invalid_argument("ParamBounds: need Q >= 2 with widths for every layer");
    if (d < 2) throw std::invalid_argument("ParamBounds: dictionary size must be >= 2");
    if (m == 0) throw std::invalid_argument("ParamBounds: input dimension must be positive");
    if (!(r > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("ParamBounds: r and gamma must be positive");
    if (a < 0.0 || w_max < 0.0 || b_max < 0.0 || alpha_max < 0.0)
        throw std::invalid_argument("ParamBounds: bounds must be non-negative");
}

ParamBounds make_param_bounds(double a, double w_max, double b_max, double alpha_max,
                              double r, double gamma, std::size_t m,
                              std::vector<std::size_t> widths, std::size_t d) {
    ParamBounds pb;
    pb.a = a;
    pb.w_max = w_max;
    pb.b_max = b_max;
    pb.alpha_max = alpha_max;
    pb.r = r;
    pb.gamma = gamma;
    pb.m = m;
    pb.widths = std::move(widths);
    pb.d = d;
    pb.q = pb.widths.size();
    pb.validate();
    return pb;
}

Admissibility check_admissibility(const ParamBounds& pb, double c_r) {
    Admissibility adm;
    adm.q_ok = pb.q >= 2;
    adm.r_ok = pb.r <= c_r * static_cast<double>(pb.d);
    const double h_full = static_cast<double>(pb.h_star());
    const double h_hid = static_cast<double>(pb.h_hidden());
    adm.gamma_ok = pb.gamma * h_full * h_full >= 1.0;
    adm.gamma_ok_hidden = pb.gamma * h_hid * h_hid >= 1.0;
    return adm;
}

BoundReport recursion_xyz(const ParamBounds& pb, double c_r) {
    pb.validate();
    BoundReport report;
    report.c_r = c_r;
    report.admissible = check_admissibility(pb, c_r);

    const double w = pb.w_max;
    const double b = pb.b_max;
    const double alpha = pb.alpha_max;
    const double d = static_cast<double>(pb.d);
    const double r = pb.r;
    const double gamma = pb.gamma;

    report.x_per_layer.resize(pb.q);
    report.y_per_layer.resize(pb.q);
    report.z_per_layer.resize(pb.q);

    report.x_per_layer[0] = static_cast<double>(pb.m) * w * pb.a + b;
    report.y_per_layer[0] = std::max(1.0, pb.a);
    report.z_per_layer[0] = 0.0;

    for (std::size_t i = 1; i < pb.q; ++i) {
        const double h_prev = static_cast<double>(pb.widths[i - 1]);
        const double x_prev = report.x_per_layer[i - 1];
        const double y_prev = report.y_per_layer[i - 1];
        const double z_prev = report.z_per_layer[i - 1];
        const double reach = x_prev + r;

        report.x_per_layer[i] = h_prev * w * d * alpha + b;
        report.y_per_layer[i] =
            std::max({d * alpha, 1.0, 2.0 * h_prev * w * d * alpha * gamma * reach * y_prev});
        report.z_per_layer[i] = std::max(
            {1.0, 2.0 * d * alpha * gamma * reach * y_prev,
             2.0 * h_prev * w * gamma * reach * y_prev,
             2.0 * h_prev * w * d * alpha * gamma *
                 ((1.0 + 2.0 * gamma * reach * reach) * y_prev * y_prev + reach * z_prev)});
    }

    const auto orders = theorem_orders(pb);
    report.l_order = orders.first;
    report.beta_order = orders.second;
    return report;
}

std::pair<double, double> theorem_orders(const ParamBounds& pb) {
    pb.validate();
    const double q = static_cast<double>(pb.q);
    const double h = static_cast<double>(pb.h_star());
    // log-space: (gamma H^4)^(Q-1) overflows 64-bit quickly
    const double log_base = std::log(pb.gamma) + 4.0 * std::log(h);
    const double log_l = 0.5 * std::log(q) + (q - 1.0) * log_base;
    const double log_beta = std::log(q) + 2.0 * (q - 1.0) * log_base;
    const double max_log = std::log(std::numeric_limits<double>::max());
    const double l_order = log_l > max_log ? std::numeric_limits<double>::infinity()
                                           : std::exp(log_l);
    const double beta_order = log_beta > max_log ? std::numeric_limits<double>::infinity()
                                                 : std::exp(log_beta);
    return {l_order, beta_order};
}

double stability_epsilon(const StabilityInputs& si) {
    if (!(si.l_const > 0.0) || !(si.beta_const > 0.0) || !(si.c > 0.0) ||
        !(si.t_steps > 0.0) || !(si.n_samples >= 2.0))
        throw std::invalid_argument("stability inputs must be positive with n >= 2");
    const double bc = si.beta_const * si.c;
    const double lead = (1.0 + 1.0 / bc) / (si.n_samples - 1.0);
    const double base = 2.0 * si.c * si.l_const * si.l_const;
    return lead * std::pow(base, 1.0 / (bc + 1.0)) * std::pow(si.t_steps, bc / (bc + 1.0));
}

ParamBounds realized_bounds(const Kafnet& net, const std::vector<Sample>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("realized_bounds of empty dataset");
    net.validate();
    ParamBounds pb;
    for (const Sample& s : dataset)
        for (double v : s.x) pb.a = std::max(pb.a, std::abs(v));
    for (const HiddenLayer& layer : net.hidden) {
        for (double v : layer.affine.weights) pb.w_max = std::max(pb.w_max, std::abs(v));
        for (double v : layer.affine.biases) pb.b_max = std::max(pb.b_max, std::abs(v));
        for (double v : layer.kaf.mixing) pb.alpha_max = std::max(pb.alpha_max, std::abs(v));
    }
    for (double v : net.output.weights) pb.w_max = std::max(pb.w_max, std::abs(v));
    for (double v : net.output.biases) pb.b_max = std::max(pb.b_max, std::abs(v));
    pb.r = net.dictionary.range_r;
    pb.gamma = net.dictionary.gamma;
    pb.m = net.input_dim;
    pb.widths = net.widths();
    pb.d = net.dictionary.size();
    pb.q = pb.widths.size();
    return pb;
}

Kafnet sample_network_in_box(const ParamBounds& pb, Rng& rng) {
    pb.validate();
    Kafnet net = make_kafnet(pb.m, pb.widths, make_dictionary(pb.d, pb.r, pb.gamma));
    for (HiddenLayer& layer : net.hidden) {
        for (double& v : layer.affine.weights) v = rng.uniform(-pb.w_max, pb.w_max);
        for (double& v : layer.affine.biases) v = rng.uniform(-pb.b_max, pb.b_max);
        for (double& v : layer.kaf.mixing) v = rng.uniform(-pb.alpha_max, pb.alpha_max);
    }
    for (double& v : net.output.weights) v = rng.uniform(-pb.w_max, pb.w_max);
    for (double& v : net.output.biases) v = rng.uniform(-pb.b_max, pb.b_max);
    return net;
}

std::vector<double> sample_input_in_box(const ParamBounds& pb, Rng& rng) {
    std::vector<double> x(pb.m);
    for (double& v : x) v = rng.uniform(-pb.a, pb.a);
    return x;
}

} // namespace kafnet
