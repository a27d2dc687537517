#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace morphnet {

/// Row-major features with one or more real targets per row.
struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t target_dim = 1;
    std::vector<double> features;
    std::vector<double> targets;

    std::size_t size() const noexcept { return feature_dim ? features.size() / feature_dim : 0; }
    std::span<const double> feature(std::size_t i) const {
        return std::span<const double>(features).subspan(i * feature_dim, feature_dim);
    }
    std::span<const double> target(std::size_t i) const {
        return std::span<const double>(targets).subspan(i * target_dim, target_dim);
    }
    void add(std::span<const double> x, std::span<const double> y);

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Two noisy concentric circles centred at the origin; label 0 inner, 1 outer.
Dataset gen_two_circles(std::size_t n_per_class, double r_inner, double r_outer, double noise_sd,
                        std::uint64_t seed);

/// Regular resolution x resolution grid over [lo, hi]^2 (endpoints included)
/// with target max(x1 + x2, 0).
Dataset gen_hinge_grid(double lo, double hi, std::size_t resolution);

/// Header "x1,...,xd,y" (or y1..yk for several targets), no quoting.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace morphnet
