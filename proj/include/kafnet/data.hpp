#pragma once

#include "kafnet/net.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kafnet {

// Two-class synthetic set: 2 informative dimensions (two clusters per class
// on the vertices of the square {-class_sep, +class_sep}^2) plus 2 standard
// Gaussian noise dimensions with no relation to the label.
struct Dataset {
    std::vector<Sample> samples;
    std::uint64_t seed = 0;
    std::size_t informative_dims = 2;
    std::size_t noise_dims = 2;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return informative_dims + noise_dims; }
};

// n even, >= 4; balanced classes. The 4 square vertices are dealt 2 per class
// at random; within a class, samples split as evenly as possible between its
// two clusters. Bit-identical regeneration for the same arguments.
Dataset generate(std::size_t n, std::uint64_t seed, double class_sep = 1.0,
                 double cluster_std = 1.0);

// Disjoint partition after the generation shuffle: first n_train rows and the
// rest.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train);

// header x1,...,xm,label; 17-significant-digit decimals, round-trip exact
void write_csv(const Dataset& ds, const std::string& path);
Dataset read_csv(const std::string& path);

} // namespace kafnet
