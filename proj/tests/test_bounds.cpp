#include "doctest.h"

#include "kafnet/bounds.hpp"
#include "kafnet/net.hpp"
#include "kafnet/rng.hpp"

#include <cmath>
#include <limits>

using namespace kafnet;

TEST_CASE("recursion worked example") {
    // m=2, a=1, W=1, b=0, alpha=1, D=2, R=3, gamma=1, Q=2, H_1=2
    const ParamBounds pb = make_param_bounds(1.0, 1.0, 0.0, 1.0, 3.0, 1.0, 2, {2, 2}, 2);
    const BoundReport report = recursion_xyz(pb);
    CHECK(report.x_per_layer[0] == 2.0);
    CHECK(report.y_per_layer[0] == 1.0);
    CHECK(report.z_per_layer[0] == 0.0);
    CHECK(report.y_per_layer[1] == 40.0);
    CHECK(report.z_per_layer[1] == 408.0);
    CHECK(report.x_per_layer[1] == 4.0); // H_1 W D alpha + b
}

TEST_CASE("recursion degenerate input bound") {
    ParamBounds pb = make_param_bounds(1.0, 1.0, 0.0, 1.0, 3.0, 1.0, 2, {2, 2}, 2);
    pb.a = 0.0;
    const BoundReport report = recursion_xyz(pb);
    CHECK(report.x_per_layer[0] == 0.0);
    CHECK(report.y_per_layer[0] == 1.0);
}

TEST_CASE("recursion with gamma one half") {
    const ParamBounds pb = make_param_bounds(1.0, 1.0, 0.0, 1.0, 3.0, 0.5, 2, {2, 2}, 2);
    const BoundReport report = recursion_xyz(pb);
    CHECK(report.y_per_layer[1] == 20.0);
}

TEST_CASE("Z_1 is always zero") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> widths;
        const std::size_t q = 2 + rng.below(3);
        for (std::size_t i = 0; i < q; ++i) widths.push_back(1 + rng.below(10));
        const ParamBounds pb = make_param_bounds(
            rng.uniform(0.01, 3.0), rng.uniform(0.01, 3.0), rng.uniform(0.0, 2.0),
            rng.uniform(0.01, 2.0), rng.uniform(0.5, 4.0), rng.uniform(0.001, 2.0),
            1 + rng.below(6), widths, 2 + rng.below(20));
        CHECK(recursion_xyz(pb).z_per_layer[0] == 0.0);
    }
}

TEST_CASE("Y grows with depth on uniform-width admissible boxes") {
    // family where the growth claim is provable: uniform widths, W = alpha = 1,
    // a <= 2, gamma at least 1/h*^2
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t q = 2 + rng.below(4);
        const std::size_t h = 2 + rng.below(9);
        const std::size_t d = 2 + rng.below(9);
        std::vector<std::size_t> widths(q, h);
        const double h_star = static_cast<double>(std::max(h, d));
        const double gamma = rng.uniform(1.0, 10.0) / (h_star * h_star);
        const ParamBounds pb =
            make_param_bounds(rng.uniform(0.01, 2.0), 1.0, rng.uniform(0.0, 1.5), 1.0,
                              rng.uniform(0.5, 1.0) * static_cast<double>(d), gamma,
                              1 + rng.below(6), widths, d);
        REQUIRE(check_admissibility(pb).gamma_ok);
        const BoundReport report = recursion_xyz(pb);
        for (std::size_t i = 1; i < q; ++i)
            CHECK(report.y_per_layer[i] >= report.y_per_layer[i - 1]);
    }
}

TEST_CASE("Y_Q growth in H is consistent with the order bound") {
    // two checks against the order exponent p = 4(Q-1)+1: every doubling
    // multiplies Y_Q by at most 2^p, and the power law C * H^p anchored at
    // H = 16 majorizes the whole curve
    for (std::size_t q : {2u, 3u}) {
        const double p = 4.0 * (static_cast<double>(q) - 1.0) + 1.0;
        auto y_q = [&](std::size_t h) {
            std::vector<std::size_t> widths(q, h);
            const ParamBounds pb =
                make_param_bounds(1.0, 1.0, 1.0, 1.0, static_cast<double>(h), 0.37, 3, widths, h);
            return recursion_xyz(pb).y_per_layer[q - 1];
        };
        const double c_fit = y_q(16) / std::pow(16.0, p);
        for (std::size_t h : {16u, 32u, 64u, 128u, 256u}) {
            CHECK(y_q(2 * h) <= std::pow(2.0, p) * y_q(h) * (1.0 + 1e-12));
            CHECK(y_q(2 * h) <= c_fit * std::pow(2.0 * static_cast<double>(h), p) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("admissibility of the two-gamma experiment") {
    // widths {10, 2}, D = 20, R = 3: H = max{10,2,20} = 20, hidden H = 10
    const ParamBounds high = make_param_bounds(1, 1, 1, 1, 3.0, 1.0, 4, {10, 2}, 20);
    const Admissibility a = check_admissibility(high, 1.0);
    CHECK(a.q_ok);
    CHECK(a.r_ok);
    CHECK(a.gamma_ok);        // 1.0 * 400 >= 1
    CHECK(a.gamma_ok_hidden); // 1.0 * 100 >= 1

    const ParamBounds low = make_param_bounds(1, 1, 1, 1, 3.0, 0.005, 4, {10, 2}, 20);
    const Admissibility b = check_admissibility(low, 1.0);
    CHECK(b.q_ok);
    CHECK(b.r_ok);
    CHECK(b.gamma_ok);         // 0.005 * 400 = 2 >= 1
    CHECK(!b.gamma_ok_hidden); // 0.005 * 100 = 0.5 < 1
}

TEST_CASE("admissibility flags a missing hidden layer and a wide dictionary range") {
    CHECK_THROWS(make_param_bounds(1, 1, 1, 1, 3.0, 1.0, 4, {2}, 20)); // Q = 1 rejected
    ParamBounds pb = make_param_bounds(1, 1, 1, 1, 3.0, 1.0, 4, {10, 2}, 20);
    pb.widths = {2};
    pb.q = 1;
    CHECK(!check_admissibility(pb, 1.0).q_ok);

    const ParamBounds wide = make_param_bounds(1, 1, 1, 1, 25.0, 1.0, 4, {10, 2}, 20);
    CHECK(!check_admissibility(wide, 1.0).r_ok);
    CHECK(check_admissibility(wide, 2.0).r_ok); // caller-declared c_R
}

TEST_CASE("theorem orders") {
    const ParamBounds q2 = make_param_bounds(1, 1, 1, 1, 3.0, 1.0, 4, {10, 2}, 2);
    const auto [l2, b2] = theorem_orders(q2); // H = 10
    CHECK(l2 == doctest::Approx(std::sqrt(2.0) * 1e4).epsilon(1e-12));
    CHECK(b2 == doctest::Approx(2e8).epsilon(1e-12));

    const ParamBounds unit = make_param_bounds(1, 1, 1, 1, 3.0, 1.0, 4, {1, 1}, 2);
    // H = max{1, 1, 2} = 2 here, so build the H = 1 case directly
    ParamBounds h1 = unit;
    h1.d = 2;
    h1.widths = {1, 1};
    const ParamBounds q3 = make_param_bounds(1, 1, 1, 1, 2.0, 1.0, 4, {2, 2, 2}, 2);
    const auto [l3, b3] = theorem_orders(q3); // H = 2, Q = 3
    CHECK(l3 == doctest::Approx(std::sqrt(3.0) * 256.0).epsilon(1e-12));
    CHECK(b3 == doctest::Approx(196608.0).epsilon(1e-12));
}

TEST_CASE("theorem orders overflow to infinity") {
    const ParamBounds deep = make_param_bounds(1, 1, 1, 1, 3.0, 10.0, 4,
                                               std::vector<std::size_t>(40, 1000), 1000);
    const auto [l, b] = theorem_orders(deep);
    CHECK(std::isinf(l));
    CHECK(std::isinf(b));
}

TEST_CASE("stability epsilon worked value") {
    // direct evaluation of the bound: (101/999) * 0.02^(1/1.01) * 1000^(0.01/1.01)
    const double expected =
        (101.0 / 999.0) * std::pow(0.02, 1.0 / 1.01) * std::pow(1000.0, 0.01 / 1.01);
    const double eps = stability_epsilon({1.0, 1.0, 0.01, 1000.0, 1000.0});
    CHECK(eps == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(eps - 0.0022506623021523947) <= 1e-12);
}

TEST_CASE("stability epsilon monotonicity") {
    const StabilityInputs base{1.0, 1.0, 0.01, 1000.0, 1000.0};
    StabilityInputs more_t = base;
    more_t.t_steps = 2000.0;
    CHECK(stability_epsilon(more_t) > stability_epsilon(base));
    StabilityInputs more_n = base;
    more_n.n_samples = 1001.0;
    CHECK(stability_epsilon(more_n) < stability_epsilon(base));
    StabilityInputs more_l = base;
    more_l.l_const = 1.5;
    CHECK(stability_epsilon(more_l) > stability_epsilon(base));

    CHECK_THROWS(stability_epsilon({1.0, 1.0, 0.01, 1000.0, 1.0})); // n < 2
    CHECK_THROWS(stability_epsilon({0.0, 1.0, 0.01, 1000.0, 1000.0}));
}

TEST_CASE("realized bounds") {
    Kafnet zero = make_kafnet(2, {3, 2}, make_dictionary(4, 2.0, 1.0));
    std::vector<Sample> ds = {{{0.5, -2.0}, 0}, {{1.0, 1.0}, 1}};
    const ParamBounds pb = realized_bounds(zero, ds);
    CHECK(pb.a == 2.0);
    CHECK(pb.w_max == 0.0);
    CHECK(pb.b_max == 0.0);
    CHECK(pb.alpha_max == 0.0);
    CHECK(pb.degenerate());
    CHECK(pb.widths == std::vector<std::size_t>{3, 2});
    CHECK(pb.m == 2);
    CHECK(pb.d == 4);

    Kafnet net = zero;
    net.hidden[0].affine.weights[1] = -1.25;
    net.hidden[0].kaf.mixing[2] = 0.5;
    net.output.biases[1] = 3.0;
    const ParamBounds live = realized_bounds(net, ds);
    CHECK(live.w_max == 1.25);
    CHECK(live.alpha_max == 0.5);
    CHECK(live.b_max == 3.0);

    CHECK_THROWS(realized_bounds(net, {}));
}

TEST_CASE("sampled networks respect the declared box") {
    const ParamBounds pb = make_param_bounds(1.5, 0.9, 0.4, 0.7, 2.0, 0.8, 3, {4, 3, 2}, 5);
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Kafnet net = sample_network_in_box(pb, rng);
        const std::vector<double> x = sample_input_in_box(pb, rng);
        for (double v : x) CHECK(std::abs(v) <= pb.a);
        const ParamBounds seen = realized_bounds(net, {{x, 0}});
        CHECK(seen.w_max <= pb.w_max);
        CHECK(seen.b_max <= pb.b_max);
        CHECK(seen.alpha_max <= pb.alpha_max);
    }
}
