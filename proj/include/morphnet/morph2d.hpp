#pragma once

// Sliding-window grayscale morphology, the 2D morphological block and the
// small amount of image plumbing needed for toy segmentation and dehazing.
//
// Window convention: for an a x b structuring element the anchor is the
// centre cell (a/2, b/2) when both sides are odd, otherwise (0, 0). With
// offsets dl = l - anchor_row, dm = m - anchor_col:
//   dilate(i,j) = max_{l,m} X(i - dl, j - dm) + S(l,m)
//   erode(i,j)  = min_{l,m} X(i + dl, j + dm) - S(l,m)

#include <cstddef>
#include <string>
#include <vector>

#include "morphnet/image.hpp"
#include "morphnet/matrix.hpp"
#include "morphnet/network.hpp"
#include "morphnet/tropical.hpp"

namespace morphnet {

/// infinite: out-of-image samples are -inf for dilation and +inf for erosion.
/// replicate: out-of-image samples take the nearest edge value.
enum class Padding { infinite, replicate };

class StructuringElement2D {
public:
    StructuringElement2D(std::size_t rows, std::size_t cols, std::vector<double> values);
    static StructuringElement2D flat(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t anchor_row() const noexcept { return (rows_ % 2 == 1 && cols_ % 2 == 1) ? rows_ / 2 : 0; }
    std::size_t anchor_col() const noexcept { return (rows_ % 2 == 1 && cols_ % 2 == 1) ? cols_ / 2 : 0; }
    double operator()(std::size_t l, std::size_t m) const { return values_[l * cols_ + m]; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// S'(l, m) = S(a-1-l, b-1-m).
    StructuringElement2D reflected() const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

// OpenMP-parallel over output rows; results are bitwise identical to the
// serial versions in namespace reference.
ImageGrid dilate2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding = Padding::infinite);
ImageGrid erode2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding = Padding::infinite);
ImageGrid soft_dilate2d(const ImageGrid& x, const StructuringElement2D& s, Hardness h,
                        Padding padding = Padding::infinite);
ImageGrid soft_erode2d(const ImageGrid& x, const StructuringElement2D& s, Hardness h,
                       Padding padding = Padding::infinite);

namespace reference {

ImageGrid dilate2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding = Padding::infinite);
ImageGrid erode2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding = Padding::infinite);

}  // namespace reference

/// Flattens the window at interior pixel (i, j) and applies the 1D neuron.
double flatten_window_equiv(const ImageGrid& x, const StructuringElement2D& s, std::size_t i, std::size_t j,
                            NeuronKind kind = NeuronKind::dilation);

/// n_dilation + n_erosion filters (one a x b element per input channel, the
/// window flattened across channels) followed by a per-pixel linear map to
/// out_channels feature maps.
struct MorphBlock2D {
    std::size_t in_channels = 1;
    std::size_t n_dilation = 0;
    std::size_t n_erosion = 0;
    std::size_t se_rows = 3;
    std::size_t se_cols = 3;
    LayerMode mode;
    Padding padding = Padding::replicate;
    std::vector<double> se_plus;   // n_dilation x in_channels x se_rows x se_cols
    std::vector<double> se_minus;  // n_erosion  x in_channels x se_rows x se_cols
    Matrix w;                      // out_channels x (n_dilation + n_erosion)
    bool with_bias = false;
    std::vector<double> b;

    static MorphBlock2D zeros(std::size_t in_channels, std::size_t n_dilation, std::size_t n_erosion,
                              std::size_t se_rows, std::size_t se_cols, std::size_t out_channels,
                              LayerMode mode = LayerMode::hard());

    std::size_t filter_size() const noexcept { return in_channels * se_rows * se_cols; }
    std::size_t out_channels() const noexcept { return w.rows; }
    void validate() const;
    /// "DE_6^{3x3}-L_4" when n_dilation == n_erosion, else "D_n E_m^{axb}-L_c".
    std::string tag() const;
};

/// Feature maps of the n + m morphological filters (before combination).
ImageGrid morph_features2d(const MorphBlock2D& block, const ImageGrid& x);
ImageGrid forward_block2d(const MorphBlock2D& block, const ImageGrid& x);

struct Block2DGrad {
    std::vector<double> se_plus;
    std::vector<double> se_minus;
    std::vector<double> w;
    std::vector<double> b;
    std::vector<double> input;  // same layout as the input grid
};

/// Reverse-mode pass; upstream has the shape of forward_block2d's output.
Block2DGrad backward_block2d(const MorphBlock2D& block, const ImageGrid& x, const ImageGrid& upstream);

/// 2x2 stride-2 max pooling; an odd trailing row/column is dropped.
ImageGrid maxpool2(const ImageGrid& x);
ImageGrid upsample_nearest2(const ImageGrid& x);
ImageGrid sigmoid_map(const ImageGrid& x);
/// 1 where value >= level, else 0.
ImageGrid threshold_map(const ImageGrid& x, double level = 0.5);

/// J = clamp((I - K) / t, 0, 1) per pixel; t must lie in (0, 1].
ImageGrid dehaze_reconstruct(const ImageGrid& hazy, const ImageGrid& transmittance, const ImageGrid& airlight);
/// I = t J + K.
ImageGrid synthesize_haze(const ImageGrid& clear, const ImageGrid& transmittance, const ImageGrid& airlight);

}  // namespace morphnet
