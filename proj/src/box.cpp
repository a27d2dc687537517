#include "morphnet/box.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "morphnet/errors.hpp"

namespace morphnet {

CompactBox::CompactBox(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw DimensionError("CompactBox: lo and hi lengths differ");
    if (lo.empty()) throw DimensionError("CompactBox: dimension must be >= 1");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw InputError("CompactBox: bounds must be finite");
        if (lo[i] > hi[i]) throw InputError("CompactBox: lo > hi on axis " + std::to_string(i));
    }
}

CompactBox CompactBox::cube(std::size_t d, double lo, double hi) {
    return CompactBox(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

double CompactBox::bound() const noexcept {
    double c = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) c = std::max({c, std::abs(lo[i]), std::abs(hi[i])});
    return c;
}

bool CompactBox::degenerate() const noexcept {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] == hi[i]) return true;
    return false;
}

bool CompactBox::contains(std::span<const double> x) const {
    if (x.size() != lo.size()) throw DimensionError("CompactBox: point dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

}  // namespace morphnet
