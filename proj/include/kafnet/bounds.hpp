#pragma once

#include "kafnet/net.hpp"
#include "kafnet/rng.hpp"

#include <cstddef>
#include <vector>

namespace kafnet {

// The constants feeding the smoothness theorem and the X/Y/Z recursion:
// |x_h| <= a, |W_ijh| <= w_max, |b_ij| <= b_max, |alpha_ijk| <= alpha_max,
// dictionary in [-r, r] with inverse bandwidth gamma, widths H_1..H_Q.
struct ParamBounds {
    double a = 0.0;
    double w_max = 0.0;
    double b_max = 0.0;
    double alpha_max = 0.0;
    double r = 0.0;
    double gamma = 0.0;
    std::size_t m = 0;
    std::vector<std::size_t> widths; // H_1..H_Q (the last entry is the class count)
    std::size_t d = 0;
    std::size_t q = 0;               // depth, widths.size()

    // max{H_1, ..., H_Q, D}
    std::size_t h_star() const;
    // max over hidden widths only (the stricter reading checked by
    // Admissibility::gamma_ok_hidden)
    std::size_t h_hidden() const;
    // a recursion input of zero collapses the X/Y/Z products
    bool degenerate() const { return !(a > 0.0) || !(w_max > 0.0) || !(b_max > 0.0) || !(alpha_max > 0.0); }
    void validate() const; // shape/positivity requirements, throws
};

ParamBounds make_param_bounds(double a, double w_max, double b_max, double alpha_max,
                              double r, double gamma, std::size_t m,
                              std::vector<std::size_t> widths, std::size_t d);

struct Admissibility {
    bool q_ok = false;           // Q >= 2
    bool r_ok = false;           // R <= c_r * D
    bool gamma_ok = false;       // gamma * H^2 >= 1 with H = max{H_1..H_Q, D}
    bool gamma_ok_hidden = false; // same condition with H = max hidden width

    bool all() const { return q_ok && r_ok && gamma_ok; }
};

// The structural requirements of the smoothness result. The gamma condition
// is reported under both readings of H because they disagree on real
// configurations.
Admissibility check_admissibility(const ParamBounds& pb, double c_r = 1.0);

// Per-layer bounds on |G_ij|, |G'_ij(z)| and |G''_ij(z,w)| plus the L/beta
// order magnitudes and the admissibility verdicts.
struct BoundReport {
    std::vector<double> x_per_layer; // X_1..X_Q
    std::vector<double> y_per_layer; // Y_1..Y_Q
    std::vector<double> z_per_layer; // Z_1..Z_Q
    Admissibility admissible;
    double c_r = 1.0;
    double l_order = 0.0;    // sqrt(Q) * (gamma H^4)^(Q-1)
    double beta_order = 0.0; // Q * (gamma H^4)^(2(Q-1))
};

// Exact recursion:
//   X_1 = m W a + b,           X_i = H_{i-1} W D alpha + b          (i >= 2)
//   Y_1 = max{1, a},           Y_i = max{D alpha, 1,
//                                        2 H_{i-1} W D alpha gamma (X_{i-1}+R) Y_{i-1}}
//   Z_1 = 0,                   Z_i = max{1,
//                                        2 D alpha gamma (X_{i-1}+R) Y_{i-1},
//                                        2 H_{i-1} W gamma (X_{i-1}+R) Y_{i-1},
//                                        2 H_{i-1} W D alpha gamma [(1 + 2 gamma (X_{i-1}+R)^2) Y_{i-1}^2
//                                                                   + (X_{i-1}+R) Z_{i-1}]}
BoundReport recursion_xyz(const ParamBounds& pb, double c_r = 1.0);

// Order magnitudes of the theorem, computed in log space; +inf on overflow.
// These are orders in H and gamma, not constants.
std::pair<double, double> theorem_orders(const ParamBounds& pb);

struct StabilityInputs {
    double l_const = 0.0;  // L
    double beta_const = 0.0;
    double c = 0.0;        // step-size constant, mu_t <= c/t
    double t_steps = 0.0;  // T
    double n_samples = 0.0;
};

// (1 + 1/(beta c)) / (n - 1) * (2 c L^2)^(1/(beta c + 1)) * T^(beta c/(beta c + 1))
double stability_epsilon(const StabilityInputs& si);

// Bounds realized by an actual network and dataset: a = max |x_h| over the
// data, w/b/alpha = max absolute parameter values, the rest copied from the
// network. The result may be degenerate (zero bounds) for zero networks.
ParamBounds realized_bounds(const Kafnet& net, const std::vector<Sample>& dataset);

// Uniform draws inside the box: weights in [-W, W], biases in [-b, b],
// mixing in [-alpha, alpha]; architecture and dictionary from the bounds.
Kafnet sample_network_in_box(const ParamBounds& pb, Rng& rng);
std::vector<double> sample_input_in_box(const ParamBounds& pb, Rng& rng);

} // namespace kafnet
