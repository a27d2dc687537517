#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "morphnet/image.hpp"

namespace morphnet {

inline constexpr double kBceEpsilon = 1e-7;

double loss_mse(std::span<const double> pred, std::span<const double> target);
double loss_bce(std::span<const double> pred, std::span<const double> target);
std::vector<double> loss_mse_grad(std::span<const double> pred, std::span<const double> target);
/// Uses the clamped prediction in the denominator so saturated outputs keep a
/// finite, nonzero gradient.
std::vector<double> loss_bce_grad(std::span<const double> pred, std::span<const double> target);

/// SSIM of two equally sized sample sets (population statistics, dynamic range 1).
double ssim(std::span<const double> a, std::span<const double> b);

/// Mean over patch x patch windows (placed every `stride` pixels, per channel)
/// of (1 - SSIM) / 2.
double loss_dssim(const ImageGrid& a, const ImageGrid& b, std::size_t patch, std::size_t stride);

/// L1 + L2 of the dehazing objective: DSSIM(I, J t~ + K~) + DSSIM(J, J~).
double dehaze_loss(const ImageGrid& hazy, const ImageGrid& clear, const ImageGrid& est_transmittance,
                   const ImageGrid& est_airlight, std::size_t patch, std::size_t stride);

}  // namespace morphnet
