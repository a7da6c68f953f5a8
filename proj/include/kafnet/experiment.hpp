#pragma once

#include "kafnet/data.hpp"
#include "kafnet/train.hpp"

#include <cstdint>
#include <string>

namespace kafnet {

// The two-arm generalization-gap experiment: one 10-wide hidden KAF layer,
// 20 dictionary elements on [-3, 3], identical data / init / batch streams in
// both arms, gamma = 1.0 versus gamma = 0.005.
struct Fig1Config {
    std::uint64_t seed = 7;
    std::size_t steps = 2000;
    std::size_t batch_size = 32;
    double learning_rate = 0.001;
    std::size_t n_samples = 2000; // 1000 train + 1000 test
    // wider class separation than the gen-data defaults so that both arms fit
    // the training set inside the first few hundred steps
    double class_sep = 4.0;
    double cluster_std = 1.0;
    std::size_t hidden_width = 10;
    std::size_t n_classes = 2;
    std::size_t dict_size = 20;
    double dict_range = 3.0;
    double gamma_consistent = 1.0;   // satisfies gamma H^2 >= 1
    double gamma_violating = 0.005;
    std::size_t ma_window = 25;
};

struct ArmResult {
    double gamma = 0.0;
    GapSeries series;
    std::vector<double> train_risk_smooth;
    std::vector<double> gap_smooth;

    double final_train_risk_smooth = 0.0;
    double min_train_risk_smooth_500 = 0.0; // min over the first 500 steps
    double mean_gap_smooth_last10 = 0.0;    // mean over the final 10% of steps
    double max_gap_smooth_first200 = 0.0;
};

struct Fig1Result {
    ArmResult consistent; // gamma = 1.0
    ArmResult violating;  // gamma = 0.005
    bool both_reach_low_train_risk = false; // smoothed train risk <= 0.15 within 500 steps
    bool gap_ordering = false;              // violating mean gap >= 1.3 x consistent
    bool consistent_flat_early = false;     // consistent smoothed gap <= 1.25 for 200 steps
    bool all() const { return both_reach_low_train_risk && gap_ordering && consistent_flat_early; }
};

Fig1Result run_fig1(const Fig1Config& config);

// gap_gamma_1.0.csv, gap_gamma_0.005.csv (step,train_risk,test_risk,gap,
// gap_ma25), summary.txt and manifest.txt under out_dir
void write_fig1_outputs(const Fig1Config& config, const Fig1Result& result,
                        const std::string& out_dir);

std::string fig1_summary_text(const Fig1Config& config, const Fig1Result& result);

} // namespace kafnet
