#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace morphnet {

/// Planar single- or multi-channel grid: value(c, i, j) at data[(c*H + i)*W + j].
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(std::size_t height, std::size_t width, std::size_t channels = 1, double fill = 0.0);
    ImageGrid(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept { return height_ * width_; }

    double& at(std::size_t c, std::size_t i, std::size_t j) { return data_[(c * height_ + i) * width_ + j]; }
    double at(std::size_t c, std::size_t i, std::size_t j) const { return data_[(c * height_ + i) * width_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return at(0, i, j); }
    double operator()(std::size_t i, std::size_t j) const { return at(0, i, j); }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const ImageGrid& o) const noexcept {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

    /// Single-channel view of channel c (copied).
    ImageGrid channel(std::size_t c) const;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

ImageGrid operator-(const ImageGrid& img);

enum class PgmEncoding { ascii, binary };  // P2, P5

/// Reads P2/P5 with maxval <= 255 into [0,1].
ImageGrid read_pgm(std::istream& in);
ImageGrid read_pgm(const std::filesystem::path& path);
/// Writes channel 0 with maxval 255; values are clamped to [0,1] and rounded.
void write_pgm(std::ostream& out, const ImageGrid& img, PgmEncoding enc = PgmEncoding::binary);
void write_pgm(const std::filesystem::path& path, const ImageGrid& img, PgmEncoding enc = PgmEncoding::binary);

/// "channel,row,col,value" rows for feature-map export.
void write_feature_csv(std::ostream& out, const ImageGrid& img);

}  // namespace morphnet
