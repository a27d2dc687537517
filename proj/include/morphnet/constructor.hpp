#pragma once

// Exact hard-mode networks for sums of hinge functions on a bounded box:
//   dilation(d) -> linear(sum of plane counts, bias) -> dilation(m) -> linear(1)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "morphnet/box.hpp"
#include "morphnet/network.hpp"

namespace morphnet {

struct Plane {
    std::vector<double> w;
    double b = 0.0;

    double eval(std::span<const double> x) const;
};

/// alpha * max over planes of (w·x + b).
struct GeneralHinge {
    int alpha = 1;
    std::vector<Plane> planes;

    std::size_t order() const noexcept { return planes.empty() ? 0 : planes.size() - 1; }
    double eval(std::span<const double> x) const;
    void validate(std::size_t d) const;
};

double eval_hinges(const std::vector<GeneralHinge>& hinges, std::span<const double> x);

/// d dilation neurons; neuron l has 0 at coordinate l and -3C elsewhere, so
/// it returns x_l anywhere in [-C, C]^d.
DilationErosionLayer hyperplane_layer(double c, std::size_t d);

/// Sound upper bound on |w·x + b| over the box, taken over every plane of
/// every hinge (interval arithmetic, so it is at least the supremum).
double plane_magnitude_bound(const std::vector<GeneralHinge>& hinges, const CompactBox& box);

struct Construction {
    NetworkSpec net;
    double c = 0.0;  // selector scale of the first layer
    double b = 0.0;  // selector scale of the second layer
    bool degenerate_box = false;
};

Construction build_two_layer(const std::vector<GeneralHinge>& hinges, const CompactBox& box);

struct CertifyReport {
    double max_abs_err = 0.0;
    std::vector<double> argmax;
    std::size_t samples = 0;
};

/// Worst |net(x) - target(x)| over a seeded, shifted Halton sequence in the box.
CertifyReport certify(const NetworkSpec& net, const std::function<double(std::span<const double>)>& target,
                      const CompactBox& box, std::size_t samples = 10000, std::uint64_t seed = 0);

/// Point i of the d-dimensional Halton sequence in [0,1)^d.
std::vector<double> halton_point(std::size_t i, std::size_t d);

/// JSON array of {"alpha": ±1, "planes": [{"w": [...], "b": r}, ...]}.
std::vector<GeneralHinge> hinges_from_json(const std::string& text);
std::string hinges_to_json(const std::vector<GeneralHinge>& hinges);
std::vector<GeneralHinge> load_hinges(const std::filesystem::path& path);

}  // namespace morphnet
