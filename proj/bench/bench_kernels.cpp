// Serial reference vs OpenMP kernels: batch risk and batch gradient.

#include "kafnet/data.hpp"
#include "kafnet/grad.hpp"
#include "kafnet/net.hpp"
#include "kafnet/reference.hpp"
#include "kafnet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace kafnet;
using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ms(Fn&& fn, int reps) {
    // one warm-up, then best of reps
    fn();
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        fn();
        best = std::min(best,
                        std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    return best;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    std::printf("%8s %8s | %12s %12s %8s | %12s %12s %8s\n", "samples", "hidden", "risk ser",
                "risk omp", "speedup", "grad ser", "grad omp", "speedup");

    for (const auto& [n, hidden] : std::vector<std::pair<std::size_t, std::size_t>>{
             {256, 10}, {1024, 10}, {4096, 10}, {1024, 64}, {4096, 64}}) {
        const Dataset ds = generate(n, 42, 2.0, 1.0);
        const Kafnet net = init_network(ds.dim(), {hidden, 2}, make_dictionary(20, 3.0, 1.0), 1);

        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);

        volatile double sink = 0.0;
        const double risk_serial =
            time_ms([&] { sink = reference::empirical_risk(net, ds.samples); }, 5);
        const double risk_omp = time_ms([&] { sink = empirical_risk(net, ds.samples); }, 5);

        // serial gradient: plain loop over backward, same reduction order
        const double grad_serial = time_ms(
            [&] {
                std::vector<double> acc(param_count(net), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const ForwardTrace trace = forward(net, ds.samples[i].x);
                    const std::vector<double> g =
                        backward(net, trace, ds.samples[i].label).flatten();
                    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
                }
                sink = acc[0];
            },
            3);
        const double grad_omp =
            time_ms([&] { sink = batch_gradient(net, ds.samples, all).mean_loss; }, 3);

        // the parallel kernels must agree with the serial reference exactly in
        // value terms (serial risk reduction order is identical)
        const double risk_diff =
            std::abs(reference::empirical_risk(net, ds.samples) - empirical_risk(net, ds.samples));
        if (risk_diff > 1e-12) {
            std::printf("kernel mismatch: |serial - omp| = %g\n", risk_diff);
            return 1;
        }

        std::printf("%8zu %8zu | %10.3fms %10.3fms %7.2fx | %10.3fms %10.3fms %7.2fx\n", n,
                    hidden, risk_serial, risk_omp, risk_serial / risk_omp, grad_serial, grad_omp,
                    grad_serial / grad_omp);
    }
    return 0;
}
