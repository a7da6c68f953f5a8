#include "kafnet/reference.hpp"

#include <cmath>

namespace kafnet::reference {

ForwardTrace forward(const Kafnet& net, const std::vector<double>& x) {
    ForwardTrace trace;
    trace.input = x;
    trace.hidden.resize(net.hidden.size());
    const std::size_t d = net.dictionary.size();
    const double gamma = net.dictionary.gamma;

    std::vector<double> prev = x;
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        const HiddenLayer& layer = net.hidden[i];
        LayerTrace& lt = trace.hidden[i];
        const std::size_t width = layer.affine.rows;
        lt.pre.assign(width, 0.0);
        lt.kernel.assign(width * d, 0.0);
        lt.act.assign(width, 0.0);
        for (std::size_t j = 0; j < width; ++j) {
            double g = layer.affine.biases[j];
            for (std::size_t h = 0; h < prev.size(); ++h)
                g += layer.affine.weights[j * prev.size() + h] * prev[h];
            lt.pre[j] = g;
            double a = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = g - net.dictionary.elements[k];
                const double e = std::exp(-gamma * diff * diff);
                lt.kernel[j * d + k] = e;
                a += layer.kaf.mixing[j * d + k] * e;
            }
            lt.act[j] = a;
        }
        prev = lt.act;
    }

    trace.logits.assign(net.output.rows, 0.0);
    for (std::size_t j = 0; j < net.output.rows; ++j) {
        double z = net.output.biases[j];
        for (std::size_t h = 0; h < prev.size(); ++h)
            z += net.output.weights[j * prev.size() + h] * prev[h];
        trace.logits[j] = z;
    }

    double zmax = trace.logits[0];
    for (double z : trace.logits) zmax = std::max(zmax, z);
    trace.probs.assign(trace.logits.size(), 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < trace.logits.size(); ++j) {
        trace.probs[j] = std::exp(trace.logits[j] - zmax);
        sum += trace.probs[j];
    }
    for (double& p : trace.probs) p /= sum;
    return trace;
}

double loss(const Kafnet& net, const std::vector<double>& x, std::size_t label) {
    const ForwardTrace trace = reference::forward(net, x);
    return -std::log(std::max(trace.probs[label], 1e-12));
}

double empirical_risk(const Kafnet& net, const std::vector<Sample>& dataset) {
    double sum = 0.0;
    for (const Sample& s : dataset) sum += reference::loss(net, s.x, s.label);
    return sum / static_cast<double>(dataset.size());
}

} // namespace kafnet::reference
