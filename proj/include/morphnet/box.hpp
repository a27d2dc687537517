#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace morphnet {

/// Axis-aligned box [lo_i, hi_i] per coordinate.
struct CompactBox {
    std::vector<double> lo;
    std::vector<double> hi;

    CompactBox() = default;
    CompactBox(std::vector<double> lo, std::vector<double> hi);
    /// [lo, hi]^d
    static CompactBox cube(std::size_t d, double lo, double hi);

    std::size_t dim() const noexcept { return lo.size(); }
    /// C = max over axes of max(|lo|, |hi|).
    double bound() const noexcept;
    /// True when some axis has zero width.
    bool degenerate() const noexcept;
    bool contains(std::span<const double> x) const;

    friend bool operator==(const CompactBox&, const CompactBox&) = default;
};

}  // namespace morphnet
