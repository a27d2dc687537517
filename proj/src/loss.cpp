#include "morphnet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "morphnet/errors.hpp"
#include "morphnet/morph2d.hpp"

namespace morphnet {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DimensionError("loss: prediction/target length mismatch");
    if (pred.empty()) throw DimensionError("loss: empty input");
}

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

}  // namespace

double loss_mse(std::span<const double> pred, std::span<const double> target) {
    check_pair(pred, target);
    double acc = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double e = pred[k] - target[k];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.size());
}

std::vector<double> loss_mse_grad(std::span<const double> pred, std::span<const double> target) {
    check_pair(pred, target);
    std::vector<double> g(pred.size());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) g[k] = scale * (pred[k] - target[k]);
    return g;
}

double loss_bce(std::span<const double> pred, std::span<const double> target) {
    check_pair(pred, target);
    double acc = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (target[k] < 0.0 || target[k] > 1.0) throw InputError("bce: target outside [0,1]");
        const double p = std::clamp(pred[k], kBceEpsilon, 1.0 - kBceEpsilon);
        acc -= target[k] * std::log(p) + (1.0 - target[k]) * std::log1p(-p);
    }
    return acc / static_cast<double>(pred.size());
}

std::vector<double> loss_bce_grad(std::span<const double> pred, std::span<const double> target) {
    check_pair(pred, target);
    std::vector<double> g(pred.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double p = std::clamp(pred[k], kBceEpsilon, 1.0 - kBceEpsilon);
        g[k] = (p - target[k]) / (p * (1.0 - p)) / n;
    }
    return g;
}

double ssim(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double da = a[k] - ma, db = b[k] - mb;
        va += da * da;
        vb += db * db;
        cov += da * db;
    }
    va /= n;
    vb /= n;
    cov /= n;
    return ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
}

double loss_dssim(const ImageGrid& a, const ImageGrid& b, std::size_t patch, std::size_t stride) {
    if (!a.same_shape(b)) throw DimensionError("loss_dssim: image shapes differ");
    if (patch == 0 || stride == 0) throw InputError("loss_dssim: patch and stride must be >= 1");
    if (patch > a.height() || patch > a.width()) throw DimensionError("loss_dssim: patch larger than image");
    std::vector<double> pa(patch * patch), pb(patch * patch);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < a.channels(); ++c) {
        for (std::size_t i = 0; i + patch <= a.height(); i += stride) {
            for (std::size_t j = 0; j + patch <= a.width(); j += stride) {
                for (std::size_t l = 0; l < patch; ++l) {
                    for (std::size_t m = 0; m < patch; ++m) {
                        pa[l * patch + m] = a.at(c, i + l, j + m);
                        pb[l * patch + m] = b.at(c, i + l, j + m);
                    }
                }
                // SSIM <= 1 exactly; rounding can overshoot by an ulp.
                acc += std::max(0.0, (1.0 - ssim(pa, pb)) / 2.0);
                ++count;
            }
        }
    }
    return acc / static_cast<double>(count);
}

double dehaze_loss(const ImageGrid& hazy, const ImageGrid& clear, const ImageGrid& est_transmittance,
                   const ImageGrid& est_airlight, std::size_t patch, std::size_t stride) {
    const ImageGrid rehazed = synthesize_haze(clear, est_transmittance, est_airlight);
    const ImageGrid dehazed = dehaze_reconstruct(hazy, est_transmittance, est_airlight);
    return loss_dssim(hazy, rehazed, patch, stride) + loss_dssim(clear, dehazed, patch, stride);
}

}  // namespace morphnet
