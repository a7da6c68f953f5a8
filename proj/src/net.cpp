#include "kafnet/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kafnet {

Dictionary make_dictionary(std::size_t d, double range_r, double gamma) {
    if (d < 2) throw std::invalid_argument("dictionary needs at least 2 elements");
    if (!(range_r > 0.0)) throw std::invalid_argument("dictionary range must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    Dictionary dict;
    dict.range_r = range_r;
    dict.gamma = gamma;
    dict.elements.resize(d);
    const double step = 2.0 * range_r / static_cast<double>(d - 1);
    for (std::size_t k = 0; k < d; ++k)
        dict.elements[k] = -range_r + step * static_cast<double>(k);
    dict.elements.front() = -range_r;
    dict.elements.back() = range_r;
    return dict;
}

double kernel_eval(double s, double d_k, double gamma) {
    const double diff = s - d_k;
    return std::exp(-gamma * diff * diff);
}

double kaf_eval(double s, const std::vector<double>& mixing_row, const Dictionary& dict) {
    if (mixing_row.size() != dict.size())
        throw std::invalid_argument("mixing row length does not match dictionary size");
    double acc = 0.0;
    for (std::size_t k = 0; k < dict.size(); ++k)
        acc += mixing_row[k] * kernel_eval(s, dict.elements[k], dict.gamma);
    return acc;
}

AffineParams make_affine(std::size_t rows, std::size_t cols) {
    AffineParams p;
    p.rows = rows;
    p.cols = cols;
    p.weights.assign(rows * cols, 0.0);
    p.biases.assign(rows, 0.0);
    return p;
}

std::vector<double> affine_eval(const std::vector<double>& input, const AffineParams& params) {
    if (input.size() != params.cols)
        throw std::invalid_argument("affine input length does not match weight columns");
    std::vector<double> out(params.rows);
    for (std::size_t j = 0; j < params.rows; ++j) {
        double acc = params.biases[j];
        const double* row = params.weights.data() + j * params.cols;
        for (std::size_t h = 0; h < params.cols; ++h)
            acc += row[h] * input[h];
        out[j] = acc;
    }
    return out;
}

std::vector<std::size_t> Kafnet::widths() const {
    std::vector<std::size_t> w;
    w.reserve(hidden.size() + 1);
    for (const auto& layer : hidden) w.push_back(layer.affine.rows);
    w.push_back(output.rows);
    return w;
}

void Kafnet::validate() const {
    if (hidden.empty())
        throw std::invalid_argument("network needs at least one hidden layer (Q >= 2)");
    if (input_dim == 0) throw std::invalid_argument("input dimension must be positive");
    if (dictionary.size() < 2) throw std::invalid_argument("dictionary too small");
    std::size_t prev = input_dim;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const auto& layer = hidden[i];
        if (layer.affine.cols != prev)
            throw std::invalid_argument("layer " + std::to_string(i + 1) + " width mismatch");
        if (layer.kaf.rows != layer.affine.rows || layer.kaf.dict_size != dictionary.size())
            throw std::invalid_argument("layer " + std::to_string(i + 1) + " mixing shape mismatch");
        prev = layer.affine.rows;
    }
    if (output.cols != prev) throw std::invalid_argument("output layer width mismatch");
    if (output.rows == 0) throw std::invalid_argument("output layer needs at least one class");
}

Kafnet make_kafnet(std::size_t input_dim, const std::vector<std::size_t>& widths,
                   const Dictionary& dict) {
    if (widths.size() < 2)
        throw std::invalid_argument("need at least one hidden layer plus the output layer");
    Kafnet net;
    net.input_dim = input_dim;
    net.dictionary = dict;
    std::size_t prev = input_dim;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        HiddenLayer layer;
        layer.affine = make_affine(widths[i], prev);
        layer.kaf.rows = widths[i];
        layer.kaf.dict_size = dict.size();
        layer.kaf.mixing.assign(widths[i] * dict.size(), 0.0);
        net.hidden.push_back(std::move(layer));
        prev = widths[i];
    }
    net.output = make_affine(widths.back(), prev);
    net.validate();
    return net;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
    const double zmax = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        p[j] = std::exp(logits[j] - zmax);
        sum += p[j];
    }
    for (double& v : p) v /= sum;
    return p;
}

ForwardTrace forward(const Kafnet& net, const std::vector<double>& x) {
    if (x.size() != net.input_dim)
        throw std::invalid_argument("input length does not match network input dimension");
    ForwardTrace trace;
    trace.input = x;
    trace.hidden.resize(net.hidden.size());
    const std::vector<double>* activations = &trace.input;
    const auto& dict = net.dictionary;
    const double gamma = dict.gamma;
    const std::size_t d = dict.size();
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        const HiddenLayer& layer = net.hidden[i];
        LayerTrace& lt = trace.hidden[i];
        lt.pre = affine_eval(*activations, layer.affine);
        lt.kernel.resize(layer.kaf.rows * d);
        lt.act.resize(layer.kaf.rows);
        for (std::size_t j = 0; j < layer.kaf.rows; ++j) {
            const double g = lt.pre[j];
            double act = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double e = kernel_eval(g, dict.elements[k], gamma);
                lt.kernel[j * d + k] = e;
                act += layer.kaf.a(j, k) * e;
            }
            lt.act[j] = act;
            if (!std::isfinite(act))
                throw std::runtime_error("non-finite activation in hidden layer " +
                                         std::to_string(i + 1));
        }
        activations = &lt.act;
    }
    trace.logits = affine_eval(*activations, net.output);
    for (double v : trace.logits)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite logit");
    trace.probs = softmax(trace.logits);
    return trace;
}

double cross_entropy(const std::vector<double>& probs, std::size_t label) {
    if (label >= probs.size()) throw std::invalid_argument("label out of range");
    return -std::log(std::max(probs[label], 1e-12));
}

double loss(const Kafnet& net, const std::vector<double>& x, std::size_t label) {
    return cross_entropy(forward(net, x).probs, label);
}

double empirical_risk(const Kafnet& net, const std::vector<Sample>& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empirical risk of empty dataset");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dataset.size());
    std::vector<double> losses(dataset.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        losses[i] = loss(net, dataset[i].x, dataset[i].label);
    double sum = 0.0;
    for (double v : losses) sum += v;
    return sum / static_cast<double>(n);
}

// --- flat parameter view ---------------------------------------------------

namespace {

template <typename Net, typename Fn>
void for_each_param_block(Net& net, Fn&& fn) {
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        auto& layer = net.hidden[i];
        fn(i + 1, ParamKind::weight, layer.affine.weights, layer.affine.cols);
        fn(i + 1, ParamKind::bias, layer.affine.biases, std::size_t{1});
        fn(i + 1, ParamKind::mixing, layer.kaf.mixing, layer.kaf.dict_size);
    }
    fn(net.hidden.size() + 1, ParamKind::weight, net.output.weights, net.output.cols);
    fn(net.hidden.size() + 1, ParamKind::bias, net.output.biases, std::size_t{1});
}

} // namespace

std::size_t param_count(const Kafnet& net) {
    std::size_t n = 0;
    for_each_param_block(net, [&](std::size_t, ParamKind, const std::vector<double>& block,
                                  std::size_t) { n += block.size(); });
    return n;
}

std::vector<double> collect_params(const Kafnet& net) {
    std::vector<double> flat;
    flat.reserve(param_count(net));
    for_each_param_block(net, [&](std::size_t, ParamKind, const std::vector<double>& block,
                                  std::size_t) { flat.insert(flat.end(), block.begin(), block.end()); });
    return flat;
}

void assign_params(Kafnet& net, const std::vector<double>& flat) {
    if (flat.size() != param_count(net))
        throw std::invalid_argument("flat parameter vector has wrong length");
    std::size_t pos = 0;
    for_each_param_block(net, [&](std::size_t, ParamKind, std::vector<double>& block,
                                  std::size_t) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), block.size(), block.begin());
        pos += block.size();
    });
}

ParamCoord decode_param(const Kafnet& net, std::size_t flat_index) {
    ParamCoord coord{};
    bool found = false;
    std::size_t pos = 0;
    for_each_param_block(net, [&](std::size_t layer, ParamKind kind,
                                  const std::vector<double>& block, std::size_t stride) {
        if (!found && flat_index < pos + block.size()) {
            const std::size_t off = flat_index - pos;
            coord.layer = layer;
            coord.kind = kind;
            coord.row = off / stride;
            coord.col = off % stride;
            found = true;
        }
        pos += block.size();
    });
    if (!found) throw std::invalid_argument("flat parameter index out of range");
    return coord;
}

std::string param_name(const Kafnet& net, std::size_t flat_index) {
    const ParamCoord c = decode_param(net, flat_index);
    std::ostringstream out;
    switch (c.kind) {
    case ParamKind::weight: out << "W[" << c.layer << "][" << c.row << "," << c.col << "]"; break;
    case ParamKind::bias: out << "b[" << c.layer << "][" << c.row << "]"; break;
    case ParamKind::mixing: out << "alpha[" << c.layer << "][" << c.row << "," << c.col << "]"; break;
    }
    return out.str();
}

// --- serialization -----------------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void write_values(std::ostream& out, const std::vector<double>& vals, std::size_t per_line) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out << format_double(vals[i]);
        out << (((i + 1) % per_line == 0 || i + 1 == vals.size()) ? '\n' : ' ');
    }
}

std::vector<double> read_values(std::istream& in, std::size_t count, const char* what) {
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i)
        if (!(in >> vals[i]))
            throw std::runtime_error(std::string("truncated network file while reading ") + what);
    return vals;
}

} // namespace

void save_network(const Kafnet& net, std::ostream& out) {
    const auto widths = net.widths();
    out << "kafnet v1 m=" << net.input_dim << " Q=" << net.depth()
        << " D=" << net.dictionary.size() << " R=" << format_double(net.dictionary.range_r)
        << " gamma=" << format_double(net.dictionary.gamma) << " widths=";
    for (std::size_t i = 0; i < widths.size(); ++i)
        out << widths[i] << (i + 1 < widths.size() ? "," : "\n");
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        const auto& layer = net.hidden[i];
        out << "layer " << (i + 1) << "\n";
        write_values(out, layer.affine.weights, layer.affine.cols);
        write_values(out, layer.affine.biases, layer.affine.biases.size());
        write_values(out, layer.kaf.mixing, layer.kaf.dict_size);
    }
    out << "layer " << net.depth() << "\n";
    write_values(out, net.output.weights, net.output.cols);
    write_values(out, net.output.biases, net.output.biases.size());
}

void save_network(const Kafnet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_network(net, out);
}

Kafnet load_network(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty network file");
    std::istringstream header(line);
    std::string magic, version;
    header >> magic >> version;
    if (magic != "kafnet" || version != "v1")
        throw std::runtime_error("bad network header: " + line);
    std::size_t m = 0, q = 0, d = 0;
    double r = 0.0, gamma = 0.0;
    std::vector<std::size_t> widths;
    std::string field;
    while (header >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad header field: " + field);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "m") m = std::stoul(value);
        else if (key == "Q") q = std::stoul(value);
        else if (key == "D") d = std::stoul(value);
        else if (key == "R") r = std::stod(value);
        else if (key == "gamma") gamma = std::stod(value);
        else if (key == "widths") {
            std::istringstream ws(value);
            std::string tok;
            while (std::getline(ws, tok, ',')) widths.push_back(std::stoul(tok));
        } else {
            throw std::runtime_error("unknown header field: " + key);
        }
    }
    if (m == 0 || q < 2 || widths.size() != q)
        throw std::runtime_error("inconsistent network header: " + line);
    Kafnet net = make_kafnet(m, widths, make_dictionary(d, r, gamma));
    for (std::size_t i = 1; i <= q; ++i) {
        std::string word;
        std::size_t index = 0;
        if (!(in >> word >> index) || word != "layer" || index != i)
            throw std::runtime_error("expected 'layer " + std::to_string(i) + "' marker");
        if (i < q) {
            auto& layer = net.hidden[i - 1];
            layer.affine.weights = read_values(in, layer.affine.weights.size(), "weights");
            layer.affine.biases = read_values(in, layer.affine.biases.size(), "biases");
            layer.kaf.mixing = read_values(in, layer.kaf.mixing.size(), "mixing");
        } else {
            net.output.weights = read_values(in, net.output.weights.size(), "weights");
            net.output.biases = read_values(in, net.output.biases.size(), "biases");
        }
    }
    net.validate();
    return net;
}

Kafnet load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_network(in);
}

} // namespace kafnet
