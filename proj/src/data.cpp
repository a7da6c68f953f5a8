#include "kafnet/data.hpp"

#include "kafnet/rng.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kafnet {

namespace {

// stream ids inside a dataset seed
enum : std::uint64_t { kVertexStream = 1, kClusterStream = 2, kNoiseStream = 3, kShuffleStream = 4 };

} // namespace

Dataset generate(std::size_t n, std::uint64_t seed, double class_sep, double cluster_std) {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("dataset size must be even and at least 4");
    if (!(class_sep > 0.0) || !(cluster_std > 0.0))
        throw std::invalid_argument("class_sep and cluster_std must be positive");

    Dataset ds;
    ds.seed = seed;

    // deal the 4 vertices of {-s,+s}^2 randomly, two per class
    std::array<std::array<double, 2>, 4> vertices = {{{-class_sep, -class_sep},
                                                      {+class_sep, -class_sep},
                                                      {-class_sep, +class_sep},
                                                      {+class_sep, +class_sep}}};
    Rng vertex_rng(seed, kVertexStream);
    for (std::size_t i = 3; i > 0; --i)
        std::swap(vertices[i], vertices[vertex_rng.below(i + 1)]);

    Rng cluster_rng(seed, kClusterStream);
    Rng noise_rng(seed, kNoiseStream);
    const std::size_t per_class = n / 2;
    ds.samples.reserve(n);
    for (std::size_t cls = 0; cls < 2; ++cls) {
        // clusters 2*cls and 2*cls+1; even split, the first cluster taking the
        // odd one out
        const std::size_t first = (per_class + 1) / 2;
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto& vertex = vertices[2 * cls + (i < first ? 0 : 1)];
            Sample s;
            s.label = cls;
            s.x = {vertex[0] + cluster_rng.normal(0.0, cluster_std),
                   vertex[1] + cluster_rng.normal(0.0, cluster_std),
                   noise_rng.normal(0.0, 1.0), noise_rng.normal(0.0, 1.0)};
            ds.samples.push_back(std::move(s));
        }
    }

    Rng shuffle_rng(seed, kShuffleStream);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(ds.samples[i], ds.samples[shuffle_rng.below(i + 1)]);
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train) {
    if (n_train == 0 || n_train >= ds.size())
        throw std::invalid_argument("n_train must be in (0, n)");
    Dataset train = ds, test = ds;
    train.samples.assign(ds.samples.begin(), ds.samples.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.samples.assign(ds.samples.begin() + static_cast<std::ptrdiff_t>(n_train), ds.samples.end());
    return {std::move(train), std::move(test)};
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::size_t m = ds.dim();
    for (std::size_t h = 0; h < m; ++h) out << 'x' << (h + 1) << ',';
    out << "label\n";
    for (const Sample& s : ds.samples) {
        if (s.x.size() != m) throw std::runtime_error("inconsistent sample width");
        for (double v : s.x) out << format_double(v) << ',';
        out << s.label << '\n';
    }
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw std::runtime_error(path + ": missing header");

    std::vector<std::string> header;
    {
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    if (header.size() < 2 || header.back() != "label")
        throw std::runtime_error(path + ": header must be x1,...,xm,label");
    const std::size_t m = header.size() - 1;
    for (std::size_t h = 0; h < m; ++h)
        if (header[h] != "x" + std::to_string(h + 1))
            throw std::runtime_error(path + ": unexpected header column " + header[h]);

    Dataset ds;
    ds.informative_dims = std::min<std::size_t>(2, m);
    ds.noise_dims = m - ds.informative_dims;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> tokens;
        {
            std::istringstream ss(line);
            std::string tok;
            while (std::getline(ss, tok, ',')) tokens.push_back(tok);
        }
        if (tokens.size() != m + 1)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(m) + " features and a label, got " +
                                     std::to_string(tokens.size()) + " fields");
        Sample s;
        s.x.reserve(m);
        for (std::size_t h = 0; h < m; ++h) {
            try {
                std::size_t used = 0;
                s.x.push_back(std::stod(tokens[h], &used));
                if (used != tokens[h].size()) throw std::invalid_argument(tokens[h]);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                         ": bad value '" + tokens[h] + "'");
            }
        }
        try {
            s.label = std::stoul(tokens[m]);
            if (tokens[m] != std::to_string(s.label)) throw std::invalid_argument(tokens[m]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad label '" +
                                     tokens[m] + "'");
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw std::runtime_error(path + ": no data rows");
    return ds;
}

} // namespace kafnet
