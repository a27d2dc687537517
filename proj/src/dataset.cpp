#include "morphnet/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "morphnet/errors.hpp"
#include "morphnet/io_util.hpp"

namespace morphnet {

void Dataset::add(std::span<const double> x, std::span<const double> y) {
    if (x.size() != feature_dim || y.size() != target_dim) throw DimensionError("Dataset::add: row shape mismatch");
    features.insert(features.end(), x.begin(), x.end());
    targets.insert(targets.end(), y.begin(), y.end());
}

Dataset gen_two_circles(std::size_t n_per_class, double r_inner, double r_outer, double noise_sd,
                        std::uint64_t seed) {
    if (!(r_inner > 0.0) || !(r_outer > r_inner)) throw InputError("two circles: need 0 < r_inner < r_outer");
    if (!(noise_sd >= 0.0)) throw InputError("two circles: noise_sd must be >= 0");
    if (n_per_class == 0) throw InputError("two circles: n_per_class must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset d;
    d.feature_dim = 2;
    for (int label = 0; label < 2; ++label) {
        const double r = label == 0 ? r_inner : r_outer;
        for (std::size_t k = 0; k < n_per_class; ++k) {
            const double a = angle(rng);
            double x = r * std::cos(a);
            double y = r * std::sin(a);
            if (noise_sd > 0.0) {
                x += noise_sd * noise(rng);
                y += noise_sd * noise(rng);
            }
            const double row[2] = {x, y};
            const double t[1] = {static_cast<double>(label)};
            d.add(row, t);
        }
    }
    return d;
}

Dataset gen_hinge_grid(double lo, double hi, std::size_t resolution) {
    if (resolution < 2) throw InputError("hinge grid: resolution must be >= 2");
    if (!(hi > lo)) throw InputError("hinge grid: need lo < hi");
    Dataset d;
    d.feature_dim = 2;
    const double step = (hi - lo) / static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            const double x = i + 1 == resolution ? hi : lo + step * static_cast<double>(i);
            const double y = j + 1 == resolution ? hi : lo + step * static_cast<double>(j);
            const double row[2] = {x, y};
            const double t[1] = {std::max(x + y, 0.0)};
            d.add(row, t);
        }
    }
    return d;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t k = 0; k < data.feature_dim; ++k) out << 'x' << k + 1 << ',';
    if (data.target_dim == 1) {
        out << "y\n";
    } else {
        for (std::size_t k = 0; k < data.target_dim; ++k) out << 'y' << k + 1 << (k + 1 == data.target_dim ? '\n' : ',');
    }
    out.precision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.feature(i)) out << v << ',';
        const auto t = data.target(i);
        for (std::size_t k = 0; k < t.size(); ++k) out << t[k] << (k + 1 == t.size() ? '\n' : ',');
    }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    write_atomically(path, [&](std::ostream& out) { write_dataset_csv(out, data); });
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("dataset CSV: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    Dataset d;
    for (const auto& h : header) {
        if (!h.empty() && h[0] == 'x') {
            ++d.feature_dim;
        } else if (!h.empty() && h[0] == 'y') {
            break;
        } else {
            throw FormatError("dataset CSV: unexpected header column '" + h + "'");
        }
    }
    d.target_dim = header.size() - d.feature_dim;
    if (d.feature_dim == 0 || d.target_dim == 0) throw FormatError("dataset CSV: header needs x.. and y columns");

    std::size_t lineno = 1;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw FormatError("dataset CSV line " + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " columns");
        }
        row.clear();
        for (const auto& c : cells) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &pos);
            } catch (const std::exception&) {
                pos = std::string::npos;
            }
            if (pos != c.size() || !std::isfinite(v)) {
                throw FormatError("dataset CSV line " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        d.add(std::span<const double>(row).first(d.feature_dim), std::span<const double>(row).subspan(d.feature_dim));
    }
    if (d.size() == 0) throw FormatError("dataset CSV: no rows");
    return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_dataset_csv(in);
}

}  // namespace morphnet
