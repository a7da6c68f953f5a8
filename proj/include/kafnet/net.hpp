#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace kafnet {

// Fixed grid of kernel centers shared by every hidden neuron.
struct Dictionary {
    std::vector<double> elements; // strictly increasing, inside [-range_r, range_r]
    double range_r = 0.0;
    double gamma = 0.0;

    std::size_t size() const { return elements.size(); }
};

// Uniform grid of d points from -range_r to +range_r inclusive, step 2R/(d-1).
Dictionary make_dictionary(std::size_t d, double range_r, double gamma);

// exp(-gamma * (s - d_k)^2), always in (0, 1]
double kernel_eval(double s, double d_k, double gamma);

// sum_k mixing[k] * kernel(s, d_k)
double kaf_eval(double s, const std::vector<double>& mixing_row, const Dictionary& dict);

struct AffineParams {
    std::size_t rows = 0; // output width
    std::size_t cols = 0; // input width
    std::vector<double> weights; // row-major rows x cols
    std::vector<double> biases;  // rows

    double& w(std::size_t j, std::size_t h) { return weights[j * cols + h]; }
    double w(std::size_t j, std::size_t h) const { return weights[j * cols + h]; }
};

AffineParams make_affine(std::size_t rows, std::size_t cols);

// y = W x + b
std::vector<double> affine_eval(const std::vector<double>& input, const AffineParams& params);

struct KafParams {
    std::size_t rows = 0;      // neurons in the layer
    std::size_t dict_size = 0; // D
    std::vector<double> mixing; // row-major rows x dict_size

    double& a(std::size_t j, std::size_t k) { return mixing[j * dict_size + k]; }
    double a(std::size_t j, std::size_t k) const { return mixing[j * dict_size + k]; }
};

struct HiddenLayer {
    AffineParams affine;
    KafParams kaf;
};

// Feedforward net: Q-1 hidden layers of affine + KAF, then affine + softmax.
struct Kafnet {
    std::size_t input_dim = 0;
    std::vector<HiddenLayer> hidden;
    AffineParams output;
    Dictionary dictionary;

    std::size_t depth() const { return hidden.size() + 1; } // Q
    std::size_t n_classes() const { return output.rows; }
    // H_1..H_Q
    std::vector<std::size_t> widths() const;
    void validate() const; // throws std::invalid_argument on broken invariants
};

Kafnet make_kafnet(std::size_t input_dim, const std::vector<std::size_t>& widths,
                   const Dictionary& dict);

// Everything the backward pass and the bound checks need from one evaluation.
struct LayerTrace {
    std::vector<double> pre;    // G_ij
    std::vector<double> kernel; // E_ijk, row-major H_i x D
    std::vector<double> act;    // A_ij
};

struct ForwardTrace {
    std::vector<double> input; // A_0h = x_h
    std::vector<LayerTrace> hidden;
    std::vector<double> logits; // G_Qj
    std::vector<double> probs;
};

ForwardTrace forward(const Kafnet& net, const std::vector<double>& x);

// max-subtracted, sums to 1
std::vector<double> softmax(const std::vector<double>& logits);

// -ln(probs[label]); probs[label] clamped to >= 1e-12 before the log
double cross_entropy(const std::vector<double>& probs, std::size_t label);

double loss(const Kafnet& net, const std::vector<double>& x, std::size_t label);

struct Sample {
    std::vector<double> x;
    std::size_t label = 0;
};

// Mean cross-entropy. Per-sample losses are evaluated in parallel; the mean
// is reduced serially in sample order so the result does not depend on the
// thread count.
double empirical_risk(const Kafnet& net, const std::vector<Sample>& dataset);

// --- flat parameter view -------------------------------------------------
//
// Coordinate order: hidden layer 1 weights (row-major), biases, mixing
// (row-major), hidden layer 2 ..., then output weights, biases. Used by the
// finite-difference oracle, the probes and the optimizers.

std::size_t param_count(const Kafnet& net);
std::vector<double> collect_params(const Kafnet& net);
void assign_params(Kafnet& net, const std::vector<double>& flat);

enum class ParamKind { weight, bias, mixing };

struct ParamCoord {
    std::size_t layer;  // 1-based; layer == Q is the output affine
    ParamKind kind;
    std::size_t row;
    std::size_t col;    // 0 for biases
};

ParamCoord decode_param(const Kafnet& net, std::size_t flat_index);
std::string param_name(const Kafnet& net, std::size_t flat_index);

// --- serialization --------------------------------------------------------
//
// Line-oriented text format, 17 significant digits (round-trip exact):
//   kafnet v1 m=<m> Q=<Q> D=<D> R=<R> gamma=<g> widths=<h1,...,hQ>
// followed by one section per layer (weights row-major, biases, mixing
// row-major; the output layer has no mixing).

void save_network(const Kafnet& net, std::ostream& out);
void save_network(const Kafnet& net, const std::string& path);
Kafnet load_network(std::istream& in);
Kafnet load_network(const std::string& path);

// 17-significant-digit decimal, shared by every text format in the project
std::string format_double(double v);

} // namespace kafnet
