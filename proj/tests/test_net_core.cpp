#include "doctest.h"

#include "kafnet/net.hpp"
#include "kafnet/reference.hpp"
#include "kafnet/rng.hpp"

#include <cmath>
#include <sstream>

using namespace kafnet;

namespace {

// small randomly filled net for round-trip and oracle checks
Kafnet random_net(std::uint64_t seed, std::size_t m, std::vector<std::size_t> widths,
                  std::size_t d, double range_r, double gamma) {
    Kafnet net = make_kafnet(m, widths, make_dictionary(d, range_r, gamma));
    Rng rng(seed);
    for (HiddenLayer& layer : net.hidden) {
        for (double& v : layer.affine.weights) v = rng.normal(0.0, 0.7);
        for (double& v : layer.affine.biases) v = rng.uniform(-0.5, 0.5);
        for (double& v : layer.kaf.mixing) v = rng.normal(0.0, 0.4);
    }
    for (double& v : net.output.weights) v = rng.normal(0.0, 0.7);
    for (double& v : net.output.biases) v = rng.uniform(-0.5, 0.5);
    return net;
}

} // namespace

TEST_CASE("dictionary grid endpoints and spacing") {
    const Dictionary two = make_dictionary(2, 3.0, 1.0);
    CHECK(two.elements == std::vector<double>{-3.0, 3.0});

    const Dictionary three = make_dictionary(3, 1.0, 1.0);
    CHECK(three.elements == std::vector<double>{-1.0, 0.0, 1.0});

    const Dictionary twenty = make_dictionary(20, 3.0, 1.0);
    CHECK(twenty.size() == 20);
    CHECK(twenty.elements.front() == -3.0);
    CHECK(twenty.elements.back() == 3.0);
    for (std::size_t k = 0; k + 1 < 20; ++k)
        CHECK(twenty.elements[k + 1] - twenty.elements[k] ==
              doctest::Approx(6.0 / 19.0).epsilon(1e-12));
    for (std::size_t k = 0; k + 1 < 20; ++k) CHECK(twenty.elements[k] < twenty.elements[k + 1]);
}

TEST_CASE("dictionary rejects bad arguments") {
    CHECK_THROWS(make_dictionary(1, 3.0, 1.0));
    CHECK_THROWS(make_dictionary(5, 0.0, 1.0));
    CHECK_THROWS(make_dictionary(5, -1.0, 1.0));
    CHECK_THROWS(make_dictionary(5, 3.0, 0.0));
}

TEST_CASE("gaussian kernel values") {
    CHECK(kernel_eval(1.7, 1.7, 2.0) == 1.0);
    CHECK(kernel_eval(0.0, 1.0, 1.0) == doctest::Approx(0.3678794411714423).epsilon(1e-12));
    CHECK(kernel_eval(0.0, 2.0, 0.005) == doctest::Approx(0.9801986733067553).epsilon(1e-12));
}

TEST_CASE("kaf_eval mixes kernel values") {
    Dictionary dict = make_dictionary(2, 1.0, 1.0); // {-1, 1}
    CHECK(kaf_eval(0.3, {0.0, 0.0}, dict) == 0.0);
    CHECK(kaf_eval(0.0, {1.0, 1.0}, dict) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));

    Dictionary one;
    one.elements = {0.5};
    one.range_r = 0.5;
    one.gamma = 1.0;
    CHECK(kaf_eval(0.5, {1.0}, one) == 1.0);

    CHECK_THROWS(kaf_eval(0.0, {1.0}, dict)); // length mismatch
}

TEST_CASE("affine_eval") {
    AffineParams identity = make_affine(2, 2);
    identity.w(0, 0) = 1.0;
    identity.w(1, 1) = 1.0;
    CHECK(affine_eval({3.0, -4.0}, identity) == std::vector<double>{3.0, -4.0});

    AffineParams zero = make_affine(2, 2);
    zero.biases = {0.25, -1.5};
    CHECK(affine_eval({9.0, 9.0}, zero) == std::vector<double>{0.25, -1.5});

    AffineParams row = make_affine(1, 2);
    row.weights = {1.0, 1.0};
    row.biases = {0.5};
    CHECK(affine_eval({1.0, 2.0}, row) == std::vector<double>{3.5});

    CHECK_THROWS(affine_eval({1.0}, row));
}

TEST_CASE("softmax basics") {
    CHECK(softmax({0.0, 0.0}) == std::vector<double>{0.5, 0.5});

    const auto thirds = softmax({4.2, 4.2, 4.2});
    for (double p : thirds) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto p = softmax({1.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and shifts are invisible") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> logits(2 + rng.below(6));
        // spreads above ~36 underflow the smaller probabilities' complement,
        // rounding the largest one to exactly 1.0
        for (double& z : logits) z = rng.uniform(-15.0, 15.0);
        const auto p = softmax(logits);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        const double shift = rng.uniform(-50.0, 50.0);
        std::vector<double> shifted = logits;
        for (double& z : shifted) z += shift;
        const auto q = softmax(shifted);
        for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(p[j] - q[j]) <= 1e-12);
    }
}

TEST_CASE("cross entropy") {
    CHECK(cross_entropy({1.0, 0.0}, 0) == 0.0);
    CHECK(cross_entropy({0.5, 0.5}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cross_entropy({0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cross_entropy({0.9, 0.1}, 1) == doctest::Approx(2.302585092994046).epsilon(1e-12));
    // zero probability is clamped, not infinite
    CHECK(cross_entropy({1.0, 0.0}, 1) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS(cross_entropy({0.5, 0.5}, 2));
}

TEST_CASE("zero network produces uniform softmax") {
    Kafnet net = make_kafnet(3, {4, 5}, make_dictionary(6, 2.0, 1.0));
    const ForwardTrace trace = forward(net, {0.3, -0.8, 2.0});
    for (double a : trace.hidden[0].act) CHECK(a == 0.0);
    for (double z : trace.logits) CHECK(z == 0.0);
    for (double p : trace.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("one-hot mixing on a pinned pre-activation gives A = 1") {
    // W = 0 and b = d_1 puts every G exactly on the first dictionary element
    Kafnet net = make_kafnet(2, {3, 2}, make_dictionary(4, 2.0, 0.7));
    for (HiddenLayer& layer : net.hidden) {
        for (double& b : layer.affine.biases) b = net.dictionary.elements[0];
        for (std::size_t j = 0; j < layer.kaf.rows; ++j) layer.kaf.a(j, 0) = 1.0;
    }
    const ForwardTrace trace = forward(net, {1.0, -1.0});
    for (double a : trace.hidden[0].act) CHECK(a == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("kernel values stay in (0, 1] and activations under D alpha") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 2 + rng.below(8);
        Kafnet net = random_net(1000 + trial, 3, {5, 4, 2}, d, 2.5, 0.5);
        std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const ForwardTrace trace = forward(net, x);

        double alpha_star = 0.0;
        for (const HiddenLayer& layer : net.hidden)
            for (double a : layer.kaf.mixing) alpha_star = std::max(alpha_star, std::abs(a));

        for (const LayerTrace& lt : trace.hidden) {
            for (double e : lt.kernel) {
                CHECK(e > 0.0);
                CHECK(e <= 1.0);
            }
            for (double a : lt.act)
                CHECK(std::abs(a) <= static_cast<double>(d) * alpha_star + 1e-15);
        }
    }
}

TEST_CASE("forward is deterministic") {
    Kafnet net = random_net(5, 3, {6, 3}, 7, 3.0, 1.0);
    const std::vector<double> x = {0.1, -2.0, 0.7};
    const ForwardTrace a = forward(net, x);
    const ForwardTrace b = forward(net, x);
    CHECK(a.logits == b.logits);
    CHECK(a.probs == b.probs);
    for (std::size_t i = 0; i < a.hidden.size(); ++i) {
        CHECK(a.hidden[i].pre == b.hidden[i].pre);
        CHECK(a.hidden[i].kernel == b.hidden[i].kernel);
        CHECK(a.hidden[i].act == b.hidden[i].act);
    }
}

TEST_CASE("forward agrees with the scalar reference on random nets") {
    Rng rng(23);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t q = 2 + rng.below(2);
        std::vector<std::size_t> widths;
        for (std::size_t i = 0; i + 1 < q; ++i) widths.push_back(2 + rng.below(7));
        widths.push_back(2 + rng.below(3));
        const std::size_t m = 2 + rng.below(4);
        const std::size_t d = 2 + rng.below(12);
        Kafnet net = random_net(40000 + trial, m, widths, d, 3.0, rng.uniform(0.01, 1.5));

        std::vector<double> x(m);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);

        const ForwardTrace fast = forward(net, x);
        const ForwardTrace ref = reference::forward(net, x);
        for (std::size_t i = 0; i < fast.hidden.size(); ++i) {
            for (std::size_t j = 0; j < fast.hidden[i].pre.size(); ++j)
                CHECK(std::abs(fast.hidden[i].pre[j] - ref.hidden[i].pre[j]) <= 1e-12);
            for (std::size_t j = 0; j < fast.hidden[i].kernel.size(); ++j)
                CHECK(std::abs(fast.hidden[i].kernel[j] - ref.hidden[i].kernel[j]) <= 1e-12);
            for (std::size_t j = 0; j < fast.hidden[i].act.size(); ++j)
                CHECK(std::abs(fast.hidden[i].act[j] - ref.hidden[i].act[j]) <= 1e-12);
        }
        for (std::size_t j = 0; j < fast.logits.size(); ++j) {
            CHECK(std::abs(fast.logits[j] - ref.logits[j]) <= 1e-12);
            CHECK(std::abs(fast.probs[j] - ref.probs[j]) <= 1e-12);
        }
    }
}

TEST_CASE("empirical risk") {
    Kafnet zero = make_kafnet(2, {3, 2}, make_dictionary(4, 2.0, 1.0));
    std::vector<Sample> ds = {{{0.5, 0.5}, 0}, {{-1.0, 2.0}, 1}, {{0.0, 0.0}, 0}};
    CHECK(empirical_risk(zero, ds) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Kafnet net = random_net(77, 2, {3, 2}, 4, 2.0, 1.0);
    const double expected = (reference::loss(net, ds[0].x, ds[0].label) +
                             reference::loss(net, ds[1].x, ds[1].label) +
                             reference::loss(net, ds[2].x, ds[2].label)) /
                            3.0;
    CHECK(empirical_risk(net, ds) == doctest::Approx(expected).epsilon(1e-14));

    CHECK_THROWS(empirical_risk(net, {}));
}

TEST_CASE("near-perfect prediction has near-zero risk") {
    // a huge output bias margin pins the softmax at the label
    Kafnet net = make_kafnet(2, {2, 2}, make_dictionary(3, 1.0, 1.0));
    net.output.biases = {40.0, -40.0};
    std::vector<Sample> ds = {{{0.1, 0.2}, 0}};
    CHECK(empirical_risk(net, ds) <= 1e-12);
}

TEST_CASE("network serialization round-trips bit-exactly") {
    Kafnet net = random_net(31337, 4, {10, 2}, 20, 3.0, 0.005);
    std::stringstream buffer;
    save_network(net, buffer);
    const Kafnet back = load_network(buffer);

    CHECK(back.input_dim == net.input_dim);
    CHECK(back.widths() == net.widths());
    CHECK(back.dictionary.elements == net.dictionary.elements);
    CHECK(back.dictionary.gamma == net.dictionary.gamma);
    CHECK(collect_params(back) == collect_params(net));
}

TEST_CASE("serialization rejects malformed input") {
    std::stringstream empty;
    CHECK_THROWS(load_network(empty));

    std::stringstream bad_magic("resnet v1 m=2 Q=2 D=2 R=1 gamma=1 widths=2,2\n");
    CHECK_THROWS(load_network(bad_magic));

    std::stringstream truncated("kafnet v1 m=2 Q=2 D=2 R=1 gamma=1 widths=2,2\nlayer 1\n1 2\n");
    CHECK_THROWS(load_network(truncated));
}

TEST_CASE("network validation catches broken shapes") {
    CHECK_THROWS(make_kafnet(3, {4}, make_dictionary(3, 1.0, 1.0))); // Q < 2
    Kafnet net = make_kafnet(3, {4, 2}, make_dictionary(3, 1.0, 1.0));
    net.hidden[0].affine.cols = 5;
    CHECK_THROWS(net.validate());
    CHECK_THROWS(forward(net, {1.0, 2.0, 3.0}));
}

TEST_CASE("forward signals non-finite intermediates") {
    Kafnet net = make_kafnet(2, {3, 2}, make_dictionary(3, 1.0, 1.0));
    net.hidden[0].affine.weights[0] = std::numeric_limits<double>::quiet_NaN();
    net.hidden[0].kaf.a(0, 0) = 1.0;
    CHECK_THROWS_AS(forward(net, {1.0, 1.0}), std::runtime_error);
}
