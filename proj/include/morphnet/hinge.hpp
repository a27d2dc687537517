#pragma once

// A hard block x -> w·(dilations ++ erosions) + b rewritten as a signed sum
// of hinge terms, plus counting and grid enumeration of its linear pieces.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "morphnet/box.hpp"
#include "morphnet/network.hpp"

namespace morphnet {

/// alpha * max_k(direction * theta * x'_k + rho_k), x' = x or (x, 0).
/// direction is +1 for terms coming from dilation neurons and -1 for
/// erosion neurons; theta is always a magnitude.
struct HingeTerm {
    int alpha = 1;
    double theta = 0.0;
    int direction = 1;
    std::vector<double> rho;

    /// The linear-layer weight this term came from: alpha * direction * theta.
    double signed_weight() const noexcept { return alpha * direction * theta; }
    double eval(std::span<const double> x_aug) const;
    std::size_t argmax(std::span<const double> x_aug) const;

    friend bool operator==(const HingeTerm&, const HingeTerm&) = default;
};

struct HingeDecomposition {
    std::size_t input_dim = 0;
    bool with_bias = false;
    std::vector<HingeTerm> terms;  // dilation terms first, then erosion terms
    double offset = 0.0;           // the linear layer's bias, if any
};

/// Hard mode and a single linear output only.
HingeDecomposition decompose(const DilationErosionLayer& layer, const LinearLayer& lin);

double eval_hinge_sum(const HingeDecomposition& dec, std::span<const double> x);
double eval_hinge_sum(const HingeDecomposition& dec, const Vector& x);

struct HyperplaneBounds {
    std::uint64_t total = 0;
    std::uint64_t non_axis_parallel = 0;
};

/// With bias: (d+1)^l - 1 and d! C(l,d) (d+1)^(l-d). Without bias d takes
/// the place of d+1 in both powers. Throws InputError on 64-bit overflow.
HyperplaneBounds hyperplane_bounds(std::size_t d, std::size_t l, bool bias);

/// One affine piece g(x) = slope·x + intercept, d = 2.
struct AffinePiece {
    double slope[2] = {0.0, 0.0};
    double intercept = 0.0;
};

struct RegionReport {
    std::size_t resolution = 0;
    CompactBox box;
    /// Distinct signatures (per-term argmax index), sorted.
    std::vector<std::vector<std::size_t>> signatures;
    std::vector<AffinePiece> pieces;  // pieces[i] belongs to signatures[i]
    /// Row-major cell data; row r is x2, column c is x1.
    std::vector<std::uint32_t> cell_signature;
    std::vector<double> cell_value;
    /// Distinct lines {piece = threshold} whose piece changes sign inside its region.
    std::size_t boundary_lines = 0;

    std::size_t region_count() const noexcept { return signatures.size(); }
    double cell_x1(std::size_t c) const;
    double cell_x2(std::size_t r) const;
};

/// Samples cell centers of a resolution x resolution grid over a 2-D box.
RegionReport enumerate_regions(const DilationErosionLayer& layer, const LinearLayer& lin, const CompactBox& box,
                               std::size_t resolution = 512, double threshold = 0.0);

/// Columns x1,x2,signature_id,value.
void write_region_csv(const std::filesystem::path& path, const RegionReport& report);

}  // namespace morphnet
