#include "CLI11.hpp"

#include "kafnet/bounds.hpp"
#include "kafnet/data.hpp"
#include "kafnet/experiment.hpp"
#include "kafnet/grad.hpp"
#include "kafnet/net.hpp"
#include "kafnet/train.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace kafnet;

constexpr std::uint64_t kDefaultSeed = 7;

std::vector<std::size_t> parse_widths(const std::string& text) {
    std::vector<std::size_t> widths;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) widths.push_back(std::stoul(tok));
    if (widths.size() < 2)
        throw CLI::ValidationError("--widths needs at least one hidden layer and the output layer");
    return widths;
}

void write_manifest(const std::string& anchor_path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    const std::filesystem::path dir = std::filesystem::path(anchor_path).parent_path();
    const std::filesystem::path path = (dir.empty() ? std::filesystem::path(".") : dir) / "manifest.txt";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "command = " << command << '\n';
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::size_t n = 2000;
    std::uint64_t seed = kDefaultSeed;
    double class_sep = 1.0;
    double cluster_std = 1.0;
    std::size_t n_train = 0; // 0 -> n/2
    std::string out;
    std::string out_train;
    std::string out_test;
};

int run_gen_data(const GenDataArgs& args) {
    const Dataset ds = generate(args.n, args.seed, args.class_sep, args.cluster_std);
    std::string anchor;
    if (!args.out.empty()) {
        write_csv(ds, args.out);
        anchor = args.out;
    }
    if (!args.out_train.empty()) {
        const std::size_t n_train = args.n_train == 0 ? args.n / 2 : args.n_train;
        const auto [train_ds, test_ds] = split(ds, n_train);
        write_csv(train_ds, args.out_train);
        write_csv(test_ds, args.out_test);
        if (anchor.empty()) anchor = args.out_train;
    }
    write_manifest(anchor, "gen-data",
                   {{"n", std::to_string(args.n)},
                    {"seed", std::to_string(args.seed)},
                    {"class_sep", format_double(args.class_sep)},
                    {"cluster_std", format_double(args.cluster_std)},
                    {"n_train", std::to_string(args.n_train == 0 ? args.n / 2 : args.n_train)},
                    {"out", args.out},
                    {"out_train", args.out_train},
                    {"out_test", args.out_test}});
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string train_csv;
    std::string test_csv;
    std::string widths = "10,2";
    std::size_t dict_size = 20;
    double dict_range = 3.0;
    double gamma = 1.0;
    std::string optimizer = "adam";
    double rate = 0.001; // Adam base rate or SGD c
    std::size_t steps = 2000;
    std::size_t batch = 32;
    std::size_t eval_batch = 32;
    std::uint64_t seed = kDefaultSeed;
    double init_mixing_std = 0.3;
    double project_w = 0.0;
    double project_b = 0.0;
    double project_alpha = 0.0;
    std::string out_gap = "gap.csv";
    std::string out_model = "model.txt";
};

int run_train(const TrainArgs& args) {
    const Dataset train_ds = read_csv(args.train_csv);
    const Dataset test_ds = read_csv(args.test_csv);
    const std::vector<std::size_t> widths = parse_widths(args.widths);

    const Dictionary dict = make_dictionary(args.dict_size, args.dict_range, args.gamma);
    Kafnet net = init_network(train_ds.dim(), widths, dict, args.seed, args.init_mixing_std);

    TrainConfig config;
    config.optimizer = args.optimizer == "sgd" ? Optimizer::sgd_c_over_t : Optimizer::adam;
    config.c = args.rate;
    config.t_steps = args.steps;
    config.batch_size = args.batch;
    config.eval_batch_size = args.eval_batch;
    config.seed = args.seed;
    config.init_mixing_std = args.init_mixing_std;
    const bool project = args.project_w > 0.0 || args.project_b > 0.0 || args.project_alpha > 0.0;
    if (project) {
        if (!(args.project_w > 0.0 && args.project_b > 0.0 && args.project_alpha > 0.0))
            throw CLI::ValidationError(
                "projection needs all of --project-w, --project-b, --project-alpha");
        config.project_to = make_param_bounds(1.0, args.project_w, args.project_b,
                                              args.project_alpha, args.dict_range, args.gamma,
                                              train_ds.dim(), widths, args.dict_size);
    }

    const TrainResult result = run_training(std::move(net), train_ds.samples, test_ds.samples,
                                            config);
    write_gap_csv(result.series, args.out_gap);
    save_network(result.net, args.out_model);
    write_manifest(args.out_gap, "train",
                   {{"train_csv", args.train_csv},
                    {"test_csv", args.test_csv},
                    {"widths", args.widths},
                    {"dict_size", std::to_string(args.dict_size)},
                    {"dict_range", format_double(args.dict_range)},
                    {"gamma", format_double(args.gamma)},
                    {"optimizer", args.optimizer},
                    {"rate", format_double(args.rate)},
                    {"steps", std::to_string(args.steps)},
                    {"batch", std::to_string(args.batch)},
                    {"eval_batch", std::to_string(args.eval_batch)},
                    {"seed", std::to_string(args.seed)},
                    {"init_mixing_std", format_double(args.init_mixing_std)},
                    {"project_w", format_double(args.project_w)},
                    {"project_b", format_double(args.project_b)},
                    {"project_alpha", format_double(args.project_alpha)},
                    {"out_gap", args.out_gap},
                    {"out_model", args.out_model}});

    std::printf("trained %zu steps; final train risk %.6f, test risk %.6f, gap %.4f\n",
                result.series.size(), result.series.train_risk.back(),
                result.series.test_risk.back(), result.series.gap.back());
    return 0;
}

// ------------------------------------------------------------------ bounds

struct BoundsArgs {
    double a = 1.0;
    double w = 1.0;
    double b = 1.0;
    double alpha = 1.0;
    double r = 3.0;
    double gamma = 1.0;
    std::size_t m = 4;
    std::string widths = "10,2";
    std::size_t dict_size = 20;
    double c_r = 1.0;
    bool csv = false;
    // optional stability inputs
    double l_const = 0.0;
    double beta_const = 0.0;
    double step_c = 0.0;
    double t_steps = 0.0;
    double n_samples = 0.0;
};

int run_bounds(const BoundsArgs& args) {
    const ParamBounds pb = make_param_bounds(args.a, args.w, args.b, args.alpha, args.r,
                                             args.gamma, args.m, parse_widths(args.widths),
                                             args.dict_size);
    const BoundReport report = recursion_xyz(pb, args.c_r);
    const bool have_stability = args.l_const > 0.0 && args.beta_const > 0.0 &&
                                args.step_c > 0.0 && args.t_steps > 0.0 && args.n_samples > 0.0;
    const double epsilon =
        have_stability ? stability_epsilon({args.l_const, args.beta_const, args.step_c,
                                            args.t_steps, args.n_samples})
                       : std::numeric_limits<double>::quiet_NaN();

    if (args.csv) {
        std::printf("layer,X,Y,Z\n");
        for (std::size_t i = 0; i < pb.q; ++i)
            std::printf("%zu,%s,%s,%s\n", i + 1, format_double(report.x_per_layer[i]).c_str(),
                        format_double(report.y_per_layer[i]).c_str(),
                        format_double(report.z_per_layer[i]).c_str());
        std::printf("admissible_q,admissible_r,admissible_gamma,L_order,beta_order,epsilon\n");
        std::printf("%d,%d,%d,%s,%s,%s\n", report.admissible.q_ok, report.admissible.r_ok,
                    report.admissible.gamma_ok, format_double(report.l_order).c_str(),
                    format_double(report.beta_order).c_str(), format_double(epsilon).c_str());
        return 0;
    }

    std::printf("bound recursion (a=%g W=%g b=%g alpha=%g R=%g gamma=%g m=%zu D=%zu)\n", pb.a,
                pb.w_max, pb.b_max, pb.alpha_max, pb.r, pb.gamma, pb.m, pb.d);
    if (pb.degenerate())
        std::printf("note: a zero bound makes the recursion degenerate\n");
    std::printf("%6s %14s %14s %14s\n", "layer", "X", "Y", "Z");
    for (std::size_t i = 0; i < pb.q; ++i)
        std::printf("%6zu %14g %14g %14g\n", i + 1, report.x_per_layer[i], report.y_per_layer[i],
                    report.z_per_layer[i]);
    std::printf("conditions: Q >= 2: %s | R <= %g*D: %s | gamma*H^2 >= 1: %s (H = max widths+D = %zu)"
                ", %s (H = hidden width = %zu)\n",
                report.admissible.q_ok ? "yes" : "NO", args.c_r,
                report.admissible.r_ok ? "yes" : "NO",
                report.admissible.gamma_ok ? "yes" : "NO", pb.h_star(),
                report.admissible.gamma_ok_hidden ? "yes" : "NO", pb.h_hidden());
    std::printf("order magnitudes (not constants): L ~ %g, beta ~ %g\n", report.l_order,
                report.beta_order);
    if (have_stability)
        std::printf("stability epsilon (caller-supplied L=%g beta=%g c=%g T=%g n=%g): %.8g\n",
                    args.l_const, args.beta_const, args.step_c, args.t_steps, args.n_samples,
                    epsilon);
    return 0;
}

// --------------------------------------------------------------- gradcheck

struct GradCheckArgs {
    std::size_t trials = 50;
    std::uint64_t seed = 424242;
    std::ptrdiff_t inject_fault = -1;
};

int run_gradcheck(const GradCheckArgs& args) {
    const GradCheckSummary summary = run_gradient_check(args.trials, args.seed, args.inject_fault);
    std::printf("%zu/%zu passed, max rel err %.3g\n", summary.passed, summary.trials,
                summary.max_rel_err);
    if (summary.passed != summary.trials) {
        std::printf("FAIL: %s\n", summary.first_failure.c_str());
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------- reproduce-fig1

struct ReproduceArgs {
    std::uint64_t seed = kDefaultSeed;
    std::size_t steps = 2000;
    std::string out_dir = "fig1_out";
    double class_sep = 4.0;
    double cluster_std = 1.0;
    double learning_rate = 0.001;
    std::size_t batch = 32;
};

int run_reproduce(const ReproduceArgs& args) {
    Fig1Config config;
    config.seed = args.seed;
    config.steps = args.steps;
    config.class_sep = args.class_sep;
    config.cluster_std = args.cluster_std;
    config.learning_rate = args.learning_rate;
    config.batch_size = args.batch;

    const Fig1Result result = run_fig1(config);
    write_fig1_outputs(config, result, args.out_dir);
    std::fputs(fig1_summary_text(config, result).c_str(), stdout);
    std::printf("\nwrote gap_gamma_1.0.csv, gap_gamma_0.005.csv, summary.txt, manifest.txt under %s\n",
                args.out_dir.c_str());
    return result.all() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel activation function networks: training, gradients, and stability bounds"};
    app.require_subcommand(1);
    // flags > config file > defaults; file keys live in a [subcommand] section
    app.set_config("--config", "", "read options from a key = value file");

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic two-class dataset");
    gen->add_option("--n", gen_args.n, "total samples (even, >= 4)");
    gen->add_option("--seed", gen_args.seed, "dataset seed")->envname("KAFNET_SEED");
    gen->add_option("--class-sep", gen_args.class_sep, "vertex scale of the informative square");
    gen->add_option("--cluster-std", gen_args.cluster_std, "per-cluster noise scale");
    gen->add_option("--n-train", gen_args.n_train, "train rows for the split (default n/2)");
    auto* out_opt = gen->add_option("--out", gen_args.out, "write the whole set to one CSV");
    auto* out_train_opt =
        gen->add_option("--out-train", gen_args.out_train, "write the train split here");
    auto* out_test_opt =
        gen->add_option("--out-test", gen_args.out_test, "write the test split here");
    out_train_opt->needs(out_test_opt);
    out_test_opt->needs(out_train_opt);
    gen->callback([&] {
        if (gen_args.out.empty() && gen_args.out_train.empty())
            throw CLI::RequiredError("--out or --out-train/--out-test");
    });
    (void)out_opt;

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a network on CSV data");
    train->add_option("--train-csv", train_args.train_csv, "training data")->required();
    train->add_option("--test-csv", train_args.test_csv, "held-out data")->required();
    train->add_option("--widths", train_args.widths, "layer widths h1,...,hQ");
    train->add_option("--dict-size", train_args.dict_size, "dictionary elements D");
    train->add_option("--dict-range", train_args.dict_range, "dictionary range R");
    train->add_option("--gamma", train_args.gamma, "kernel inverse bandwidth");
    train->add_option("--optimizer", train_args.optimizer, "adam or sgd (mu_t = c/t)")
        ->check(CLI::IsMember({"adam", "sgd"}));
    train->add_option("--rate", train_args.rate, "Adam base rate / SGD step constant c");
    train->add_option("--steps", train_args.steps, "optimization steps T");
    train->add_option("--batch", train_args.batch, "train mini-batch size");
    train->add_option("--eval-batch", train_args.eval_batch, "test mini-batch size");
    train->add_option("--seed", train_args.seed, "run seed")->envname("KAFNET_SEED");
    train->add_option("--init-mixing-std", train_args.init_mixing_std, "mixing init std");
    train->add_option("--project-w", train_args.project_w, "weight box half-width");
    train->add_option("--project-b", train_args.project_b, "bias box half-width");
    train->add_option("--project-alpha", train_args.project_alpha, "mixing box half-width");
    train->add_option("--out-gap", train_args.out_gap, "gap series CSV path");
    train->add_option("--out-model", train_args.out_model, "final model path");

    BoundsArgs bounds_args;
    CLI::App* bounds = app.add_subcommand("bounds", "X/Y/Z recursion, admissibility, orders");
    bounds->add_option("--a", bounds_args.a, "input bound");
    bounds->add_option("--w", bounds_args.w, "weight bound");
    bounds->add_option("--b", bounds_args.b, "bias bound");
    bounds->add_option("--alpha", bounds_args.alpha, "mixing bound");
    bounds->add_option("--r", bounds_args.r, "dictionary range R");
    bounds->add_option("--gamma", bounds_args.gamma, "kernel inverse bandwidth");
    bounds->add_option("--m", bounds_args.m, "input dimension");
    bounds->add_option("--widths", bounds_args.widths, "layer widths h1,...,hQ");
    bounds->add_option("--dict-size", bounds_args.dict_size, "dictionary elements D");
    bounds->add_option("--c-r", bounds_args.c_r, "constant for the R <= c_R * D check");
    bounds->add_flag("--csv", bounds_args.csv, "machine-readable output");
    bounds->add_option("--l", bounds_args.l_const, "Lipschitz constant for epsilon");
    bounds->add_option("--beta", bounds_args.beta_const, "smoothness constant for epsilon");
    bounds->add_option("--c", bounds_args.step_c, "step-size constant for epsilon");
    bounds->add_option("--t", bounds_args.t_steps, "SGD steps T for epsilon");
    bounds->add_option("--n", bounds_args.n_samples, "sample count n for epsilon");

    GradCheckArgs grad_args;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "backprop vs finite differences");
    gradcheck->add_option("--trials", grad_args.trials, "random (net, input, label) triples");
    gradcheck->add_option("--seed", grad_args.seed, "trial seed")->envname("KAFNET_SEED");
    gradcheck
        ->add_option("--inject-fault", grad_args.inject_fault,
                     "negative control: flip the sign of this gradient coordinate")
        ->group(""); // test harness hook, hidden from help

    ReproduceArgs rep_args;
    CLI::App* reproduce =
        app.add_subcommand("reproduce-fig1", "two-gamma generalization-gap experiment");
    reproduce->add_option("--seed", rep_args.seed, "master seed")->envname("KAFNET_SEED");
    reproduce->add_option("--steps", rep_args.steps, "steps per arm");
    reproduce->add_option("--out-dir", rep_args.out_dir, "output directory");
    reproduce->add_option("--class-sep", rep_args.class_sep, "vertex scale");
    reproduce->add_option("--cluster-std", rep_args.cluster_std, "cluster noise scale");
    reproduce->add_option("--rate", rep_args.learning_rate, "Adam base rate");
    reproduce->add_option("--batch", rep_args.batch, "mini-batch size");

    for (CLI::App* sub : {gen, train, bounds, gradcheck, reproduce}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage errors exit 2
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_args);
        if (train->parsed()) return run_train(train_args);
        if (bounds->parsed()) return run_bounds(bounds_args);
        if (gradcheck->parsed()) return run_gradcheck(grad_args);
        if (reproduce->parsed()) return run_reproduce(rep_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
