#pragma once

#include "kafnet/net.hpp"
#include "kafnet/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kafnet {

struct ParamBounds; // bounds.hpp

// Same shape as the parameter set of the network it was computed for.
struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> biases;
    std::vector<double> mixing;
};

struct Gradient {
    std::vector<LayerGrad> hidden;
    std::vector<double> out_weights;
    std::vector<double> out_biases;

    std::vector<double> flatten() const; // same coordinate order as collect_params
    void flatten_into(std::vector<double>& out) const;
};

Gradient zero_gradient(const Kafnet& net);

// Exact reverse-mode gradient of cross_entropy(softmax(...), label).
// When act_adjoints is non-null it receives dl/dA_ij per hidden layer
// (the mixing gradient is exactly act_adjoint * E_ijk).
Gradient backward(const Kafnet& net, const ForwardTrace& trace, std::size_t label,
                  std::vector<std::vector<double>>* act_adjoints = nullptr);

// allocation-reusing variant for hot loops; grad is reshaped and zeroed
void backward_into(const Kafnet& net, const ForwardTrace& trace, std::size_t label,
                   Gradient& grad, std::vector<std::vector<double>>* act_adjoints = nullptr);

// Exact gradient of the pre-activation G_{layer,neuron} with respect to every
// parameter (zero for parameters of later layers). layer is 1-based; layer ==
// Q addresses a logit.
Gradient pre_activation_gradient(const Kafnet& net, const ForwardTrace& trace,
                                 std::size_t layer, std::size_t neuron);

// Central differences (l(w+h e_i) - l(w-h e_i)) / 2h over every coordinate.
Gradient finite_diff_gradient(const Kafnet& net, const std::vector<double>& x,
                              std::size_t label, double step = 1e-5);

// First derivative of G_{layer,neuron} w.r.t. coordinate z (exact,
// reverse-mode) and second derivative w.r.t. (z, w) via a central difference
// of the exact first derivative, step 1e-4.
struct GDerivatives {
    double first;
    double second;
};

GDerivatives grad_step_derivatives(const Kafnet& net, const std::vector<double>& x,
                                   std::size_t layer, std::size_t neuron,
                                   std::size_t z, std::size_t w, double step = 1e-4);

// --- gradient check ---------------------------------------------------------

struct GradCheckResult {
    bool passed = true;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t worst_coord = 0;
    std::string worst_coord_name;
};

// A coordinate passes when |bp - fd| <= 1e-8 or the relative error against
// max(|bp|, |fd|) is <= 1e-6; coordinates with magnitude <= 1e-8 only face
// the absolute gate.
GradCheckResult compare_gradients(const Kafnet& net, const Gradient& bp, const Gradient& fd,
                                  double rel_tol = 1e-6, double abs_tol = 1e-8);

struct GradCheckSummary {
    std::size_t trials = 0;
    std::size_t passed = 0;
    double max_rel_err = 0.0;
    std::string first_failure; // empty when all trials passed
};

// Seeded random (net, input, label) triples spanning Q in {2,3}, widths in
// 2..10, D in 2..20, gamma in {0.005, 0.1, 1.0}; backward vs central finite
// differences. Trials run in parallel; trial t draws from stream (seed, t).
// flip_sign_coord, when set, negates that backprop coordinate in every trial
// (negative-control hook for the CLI).
GradCheckSummary run_gradient_check(std::size_t trials, std::uint64_t seed,
                                    std::ptrdiff_t flip_sign_coord = -1);

// --- empirical Lipschitz / smoothness probes ---------------------------------

struct ProbeReport {
    double lipschitz_lower = 0.0;
    double smoothness_lower = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
};

std::string probe_csv_header();
std::string probe_csv_row(const ProbeReport& report); // seed,samples,lipschitz_lower,smoothness_lower

// Max observed |l(w') - l(w'')| / ||w' - w''|| over `samples` parameter pairs
// drawn uniformly inside the ParamBounds box, each evaluated at its own input
// with |x_h| <= a and a random label. Pair p draws from stream (seed, p), so
// the parallel sweep is reproducible. A certified lower bound on L.
ProbeReport estimate_lipschitz(const Kafnet& net_template, const ParamBounds& bounds,
                               std::size_t samples, std::uint64_t seed);

// Same sweep with gradient-difference ratios; fills both report fields.
ProbeReport estimate_smoothness(const Kafnet& net_template, const ParamBounds& bounds,
                                std::size_t samples, std::uint64_t seed);

// Generic ratio engine behind the probes, exposed for oracle tests against
// closed-form 1-D losses. Per pair: two points from draw_point (the second
// resampled while identical), then evaluate_pair fills both losses and, when
// requested, both gradients; it may use the pair's rng to draw shared
// evaluation context. Pairs run in parallel into per-pair slots.
struct RatioEstimate {
    double max_loss_ratio = 0.0;
    double max_grad_ratio = 0.0;
};

using DrawPointFn = std::function<std::vector<double>(Rng&)>;
using EvaluatePairFn = std::function<void(const std::vector<double>& w1,
                                          const std::vector<double>& w2, Rng& rng,
                                          double& loss1, double& loss2,
                                          std::vector<double>* grad1,
                                          std::vector<double>* grad2)>;

RatioEstimate max_difference_ratios(std::size_t samples, std::uint64_t seed,
                                    bool with_gradients, const DrawPointFn& draw_point,
                                    const EvaluatePairFn& evaluate_pair);

} // namespace kafnet
