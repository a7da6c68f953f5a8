#include "kafnet/experiment.hpp"

#include "kafnet/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kafnet {

namespace {

ArmResult run_arm(const Fig1Config& config, double gamma, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& test_set, std::uint64_t init_seed,
                  std::uint64_t train_seed) {
    const Dictionary dict = make_dictionary(config.dict_size, config.dict_range, gamma);
    Kafnet net = init_network(train_set.front().x.size(), {config.hidden_width, config.n_classes},
                              dict, init_seed);

    TrainConfig tc;
    tc.optimizer = Optimizer::adam;
    tc.c = config.learning_rate;
    tc.t_steps = config.steps;
    tc.batch_size = config.batch_size;
    tc.eval_batch_size = config.batch_size;
    tc.seed = train_seed;

    ArmResult arm;
    arm.gamma = gamma;
    arm.series = run_training(std::move(net), train_set, test_set, tc).series;
    arm.train_risk_smooth = moving_average(arm.series.train_risk, config.ma_window);
    arm.gap_smooth = moving_average(arm.series.gap, config.ma_window);

    const std::size_t t_total = arm.series.size();
    arm.final_train_risk_smooth = arm.train_risk_smooth.back();
    const std::size_t first = std::min<std::size_t>(500, t_total);
    arm.min_train_risk_smooth_500 =
        *std::min_element(arm.train_risk_smooth.begin(),
                          arm.train_risk_smooth.begin() + static_cast<std::ptrdiff_t>(first));
    const std::size_t tail_start = t_total - std::max<std::size_t>(1, t_total / 10);
    double acc = 0.0;
    for (std::size_t t = tail_start; t < t_total; ++t) acc += arm.gap_smooth[t];
    arm.mean_gap_smooth_last10 = acc / static_cast<double>(t_total - tail_start);
    const std::size_t early = std::min<std::size_t>(200, t_total);
    arm.max_gap_smooth_first200 =
        *std::max_element(arm.gap_smooth.begin(),
                          arm.gap_smooth.begin() + static_cast<std::ptrdiff_t>(early));
    return arm;
}

} // namespace

Fig1Result run_fig1(const Fig1Config& config) {
    // one sub-seed per subsystem; both arms share all of them so that gamma is
    // the only difference between the two runs
    Rng master(config.seed, 0);
    const std::uint64_t data_seed = master.next_u64();
    const std::uint64_t init_seed = master.next_u64();
    const std::uint64_t train_seed = master.next_u64();

    const Dataset full = generate(config.n_samples, data_seed, config.class_sep, config.cluster_std);
    const auto [train_ds, test_ds] = split(full, config.n_samples / 2);

    Fig1Result result;
    result.consistent = run_arm(config, config.gamma_consistent, train_ds.samples,
                                test_ds.samples, init_seed, train_seed);
    result.violating = run_arm(config, config.gamma_violating, train_ds.samples,
                               test_ds.samples, init_seed, train_seed);

    result.both_reach_low_train_risk = result.consistent.min_train_risk_smooth_500 <= 0.15 &&
                                       result.violating.min_train_risk_smooth_500 <= 0.15;
    result.gap_ordering =
        result.violating.mean_gap_smooth_last10 >= 1.3 * result.consistent.mean_gap_smooth_last10;
    result.consistent_flat_early = result.consistent.max_gap_smooth_first200 <= 1.25;
    return result;
}

namespace {

std::string gamma_tag(double gamma) {
    std::ostringstream tag; // 1.0 -> "1.0", 0.005 -> "0.005"
    tag << gamma;
    std::string s = tag.str();
    if (s.find('.') == std::string::npos) s += ".0";
    return s;
}

void write_arm_csv(const ArmResult& arm, std::size_t window, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "step,train_risk,test_risk,gap,gap_ma" << window << "\n";
    for (std::size_t t = 0; t < arm.series.size(); ++t)
        out << (t + 1) << ',' << format_double(arm.series.train_risk[t]) << ','
            << format_double(arm.series.test_risk[t]) << ',' << format_double(arm.series.gap[t])
            << ',' << format_double(arm.gap_smooth[t]) << '\n';
}

} // namespace

std::string fig1_summary_text(const Fig1Config& config, const Fig1Result& result) {
    std::ostringstream out;
    auto arm_block = [&](const char* name, const ArmResult& arm) {
        out << name << " (gamma = " << gamma_tag(arm.gamma) << ")\n"
            << "  smoothed train risk, final            : " << format_double(arm.final_train_risk_smooth) << '\n'
            << "  smoothed train risk, best in 500 steps: " << format_double(arm.min_train_risk_smooth_500) << '\n'
            << "  smoothed gap, mean over final 10%     : " << format_double(arm.mean_gap_smooth_last10) << '\n'
            << "  smoothed gap, max over first 200 steps: " << format_double(arm.max_gap_smooth_first200) << '\n';
    };
    out << "generalization-gap experiment, seed " << config.seed << ", " << config.steps
        << " steps, moving average window " << config.ma_window << "\n\n";
    arm_block("arm A", result.consistent);
    arm_block("arm B", result.violating);
    out << '\n'
        << "checks\n"
        << "  [" << (result.both_reach_low_train_risk ? "pass" : "FAIL")
        << "] both arms reach smoothed train risk <= 0.15 within 500 steps\n"
        << "  [" << (result.gap_ordering ? "pass" : "FAIL")
        << "] final gap of arm B >= 1.3 x arm A ("
        << format_double(result.violating.mean_gap_smooth_last10) << " vs "
        << format_double(result.consistent.mean_gap_smooth_last10) << ")\n"
        << "  [" << (result.consistent_flat_early ? "pass" : "FAIL")
        << "] arm A smoothed gap <= 1.25 over the first 200 steps\n";
    return out.str();
}

void write_fig1_outputs(const Fig1Config& config, const Fig1Result& result,
                        const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_arm_csv(result.consistent, config.ma_window,
                  (dir / ("gap_gamma_" + gamma_tag(config.gamma_consistent) + ".csv")).string());
    write_arm_csv(result.violating, config.ma_window,
                  (dir / ("gap_gamma_" + gamma_tag(config.gamma_violating) + ".csv")).string());

    std::ofstream summary(dir / "summary.txt");
    if (!summary) throw std::runtime_error("cannot write summary.txt");
    summary << fig1_summary_text(config, result);

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest.txt");
    manifest << "command = reproduce-fig1\n"
             << "seed = " << config.seed << '\n'
             << "steps = " << config.steps << '\n'
             << "batch_size = " << config.batch_size << '\n'
             << "learning_rate = " << format_double(config.learning_rate) << '\n'
             << "n_samples = " << config.n_samples << '\n'
             << "class_sep = " << format_double(config.class_sep) << '\n'
             << "cluster_std = " << format_double(config.cluster_std) << '\n'
             << "hidden_width = " << config.hidden_width << '\n'
             << "n_classes = " << config.n_classes << '\n'
             << "dict_size = " << config.dict_size << '\n'
             << "dict_range = " << format_double(config.dict_range) << '\n'
             << "gamma_a = " << format_double(config.gamma_consistent) << '\n'
             << "gamma_b = " << format_double(config.gamma_violating) << '\n'
             << "ma_window = " << config.ma_window << '\n';
}

} // namespace kafnet
