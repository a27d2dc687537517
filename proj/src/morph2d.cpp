#include "morphnet/morph2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "morphnet/errors.hpp"

namespace morphnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Index = std::ptrdiff_t;

void check_fits(const ImageGrid& x, const StructuringElement2D& s) {
    if (x.channels() != 1) throw DimensionError("2D morphology expects a single-channel image");
    if (s.rows() > x.height() || s.cols() > x.width()) {
        throw DimensionError("structuring element larger than image");
    }
}

// Source coordinate for window offset; returns false when the sample falls
// outside the image under infinite padding.
inline bool source(Index pos, Index extent, Padding padding, Index& out) {
    if (pos >= 0 && pos < extent) {
        out = pos;
        return true;
    }
    if (padding == Padding::infinite) return false;
    out = std::clamp<Index>(pos, 0, extent - 1);
    return true;
}

// Visits (source plane offset, element index, term) for one output pixel of a
// filter spanning `channels` planes. sign = +1 dilation (X(i-dl) + S),
// sign = -1 erosion (X(i+dl) - S); term is always "value to be maximised"
// for dilation and "value to be minimised" for erosion.
template <typename Visit>
void for_each_window_term(const ImageGrid& x, std::size_t channels, std::size_t rows, std::size_t cols,
                          const double* se, Index i, Index j, int sign, Padding padding, Visit visit) {
    const Index h = static_cast<Index>(x.height());
    const Index w = static_cast<Index>(x.width());
    const bool centred = rows % 2 == 1 && cols % 2 == 1;
    const Index ar = centred ? static_cast<Index>(rows / 2) : 0;
    const Index ac = centred ? static_cast<Index>(cols / 2) : 0;
    const double* data = x.data().data();
    for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t plane = c * x.plane_size();
        for (std::size_t l = 0; l < rows; ++l) {
            Index r;
            const Index dl = static_cast<Index>(l) - ar;
            if (!source(sign > 0 ? i - dl : i + dl, h, padding, r)) continue;
            for (std::size_t m = 0; m < cols; ++m) {
                Index q;
                const Index dm = static_cast<Index>(m) - ac;
                if (!source(sign > 0 ? j - dm : j + dm, w, padding, q)) continue;
                const std::size_t src = plane + static_cast<std::size_t>(r) * x.width() + static_cast<std::size_t>(q);
                const std::size_t el = (c * rows + l) * cols + m;
                const double term = sign > 0 ? data[src] + se[el] : data[src] - se[el];
                visit(src, el, term);
            }
        }
    }
}

double hard_window(const ImageGrid& x, std::size_t channels, std::size_t rows, std::size_t cols, const double* se,
                   Index i, Index j, int sign, Padding padding) {
    double best = sign > 0 ? -kInf : kInf;
    for_each_window_term(x, channels, rows, cols, se, i, j, sign, padding, [&](std::size_t, std::size_t, double t) {
        best = sign > 0 ? std::max(best, t) : std::min(best, t);
    });
    return best;
}

// Soft extremum over the window: a_max + log(sum exp(beta (a - a_max))) / beta
// with a = term for dilation and a = -term for erosion.
double soft_window(const ImageGrid& x, std::size_t channels, std::size_t rows, std::size_t cols, const double* se,
                   Index i, Index j, int sign, Padding padding, double beta) {
    const double a_max = sign * hard_window(x, channels, rows, cols, se, i, j, sign, padding);
    double acc = 0.0;
    for_each_window_term(x, channels, rows, cols, se, i, j, sign, padding, [&](std::size_t, std::size_t, double t) {
        acc += std::exp(beta * (sign * t - a_max));
    });
    return sign * (a_max + std::log(acc) / beta);
}

ImageGrid apply_parallel(const ImageGrid& x, const StructuringElement2D& s, int sign, Padding padding,
                         double beta, bool soft) {
    check_fits(x, s);
    ImageGrid out(x.height(), x.width(), 1);
    const Index h = static_cast<Index>(x.height());
    const Index w = static_cast<Index>(x.width());
    const double* se = s.values().data();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                soft ? soft_window(x, 1, s.rows(), s.cols(), se, i, j, sign, padding, beta)
                     : hard_window(x, 1, s.rows(), s.cols(), se, i, j, sign, padding);
        }
    }
    return out;
}

}  // namespace

StructuringElement2D::StructuringElement2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows == 0 || cols == 0) throw DimensionError("structuring element must be at least 1x1");
    if (values_.size() != rows * cols) throw DimensionError("structuring element value count mismatch");
    for (double v : values_) {
        if (!std::isfinite(v)) throw InputError("structuring element: non-finite entry");
    }
}

StructuringElement2D StructuringElement2D::flat(std::size_t rows, std::size_t cols) {
    return StructuringElement2D(rows, cols, std::vector<double>(rows * cols, 0.0));
}

StructuringElement2D StructuringElement2D::reflected() const {
    std::vector<double> r(values_.size());
    for (std::size_t l = 0; l < rows_; ++l) {
        for (std::size_t m = 0; m < cols_; ++m) r[l * cols_ + m] = (*this)(rows_ - 1 - l, cols_ - 1 - m);
    }
    return StructuringElement2D(rows_, cols_, std::move(r));
}

ImageGrid dilate2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding) {
    return apply_parallel(x, s, +1, padding, 0.0, false);
}

ImageGrid erode2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding) {
    return apply_parallel(x, s, -1, padding, 0.0, false);
}

ImageGrid soft_dilate2d(const ImageGrid& x, const StructuringElement2D& s, Hardness h, Padding padding) {
    return apply_parallel(x, s, +1, padding, h.beta(), true);
}

ImageGrid soft_erode2d(const ImageGrid& x, const StructuringElement2D& s, Hardness h, Padding padding) {
    return apply_parallel(x, s, -1, padding, h.beta(), true);
}

namespace reference {

// Plain textbook loops kept as the oracle for the parallel kernels.
ImageGrid dilate2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding) {
    check_fits(x, s);
    const Index h = static_cast<Index>(x.height()), w = static_cast<Index>(x.width());
    const Index ar = static_cast<Index>(s.anchor_row()), ac = static_cast<Index>(s.anchor_col());
    ImageGrid out(x.height(), x.width(), 1);
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            double best = -kInf;
            for (Index l = 0; l < static_cast<Index>(s.rows()); ++l) {
                for (Index m = 0; m < static_cast<Index>(s.cols()); ++m) {
                    Index r = i - (l - ar), q = j - (m - ac);
                    if (r < 0 || r >= h || q < 0 || q >= w) {
                        if (padding == Padding::infinite) continue;
                        r = std::clamp<Index>(r, 0, h - 1);
                        q = std::clamp<Index>(q, 0, w - 1);
                    }
                    best = std::max(best, x(static_cast<std::size_t>(r), static_cast<std::size_t>(q)) +
                                              s(static_cast<std::size_t>(l), static_cast<std::size_t>(m)));
                }
            }
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = best;
        }
    }
    return out;
}

ImageGrid erode2d(const ImageGrid& x, const StructuringElement2D& s, Padding padding) {
    check_fits(x, s);
    const Index h = static_cast<Index>(x.height()), w = static_cast<Index>(x.width());
    const Index ar = static_cast<Index>(s.anchor_row()), ac = static_cast<Index>(s.anchor_col());
    ImageGrid out(x.height(), x.width(), 1);
    for (Index i = 0; i < h; ++i) {
        for (Index j = 0; j < w; ++j) {
            double best = kInf;
            for (Index l = 0; l < static_cast<Index>(s.rows()); ++l) {
                for (Index m = 0; m < static_cast<Index>(s.cols()); ++m) {
                    Index r = i + (l - ar), q = j + (m - ac);
                    if (r < 0 || r >= h || q < 0 || q >= w) {
                        if (padding == Padding::infinite) continue;
                        r = std::clamp<Index>(r, 0, h - 1);
                        q = std::clamp<Index>(q, 0, w - 1);
                    }
                    best = std::min(best, x(static_cast<std::size_t>(r), static_cast<std::size_t>(q)) -
                                              s(static_cast<std::size_t>(l), static_cast<std::size_t>(m)));
                }
            }
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = best;
        }
    }
    return out;
}

}  // namespace reference

double flatten_window_equiv(const ImageGrid& x, const StructuringElement2D& s, std::size_t i, std::size_t j,
                            NeuronKind kind) {
    check_fits(x, s);
    const Index ar = static_cast<Index>(s.anchor_row()), ac = static_cast<Index>(s.anchor_col());
    const int sign = kind == NeuronKind::dilation ? 1 : -1;
    std::vector<double> window;
    window.reserve(s.values().size());
    for (Index l = 0; l < static_cast<Index>(s.rows()); ++l) {
        for (Index m = 0; m < static_cast<Index>(s.cols()); ++m) {
            const Index r = static_cast<Index>(i) - sign * (l - ar);
            const Index q = static_cast<Index>(j) - sign * (m - ac);
            if (r < 0 || q < 0 || r >= static_cast<Index>(x.height()) || q >= static_cast<Index>(x.width())) {
                throw DimensionError("flatten_window_equiv: window leaves the image");
            }
            window.push_back(x(static_cast<std::size_t>(r), static_cast<std::size_t>(q)));
        }
    }
    const Vector xv(std::move(window));
    const Vector sv(s.values());
    return kind == NeuronKind::dilation ? dilate(xv, sv) : erode(xv, sv);
}

MorphBlock2D MorphBlock2D::zeros(std::size_t in_channels, std::size_t n_dilation, std::size_t n_erosion,
                                 std::size_t se_rows, std::size_t se_cols, std::size_t out_channels,
                                 LayerMode mode) {
    MorphBlock2D b;
    b.in_channels = in_channels;
    b.n_dilation = n_dilation;
    b.n_erosion = n_erosion;
    b.se_rows = se_rows;
    b.se_cols = se_cols;
    b.mode = mode;
    b.se_plus.assign(n_dilation * b.filter_size(), 0.0);
    b.se_minus.assign(n_erosion * b.filter_size(), 0.0);
    b.w = Matrix(out_channels, n_dilation + n_erosion);
    b.validate();
    return b;
}

void MorphBlock2D::validate() const {
    if (in_channels == 0 || se_rows == 0 || se_cols == 0) throw DimensionError("MorphBlock2D: empty shape");
    if (n_dilation + n_erosion == 0) throw DimensionError("MorphBlock2D: no filters");
    if (se_plus.size() != n_dilation * filter_size() || se_minus.size() != n_erosion * filter_size()) {
        throw DimensionError("MorphBlock2D: structuring element storage mismatch");
    }
    if (w.rows == 0 || w.cols != n_dilation + n_erosion || w.data.size() != w.rows * w.cols) {
        throw DimensionError("MorphBlock2D: combination weights shape mismatch");
    }
    if (with_bias ? b.size() != w.rows : !b.empty()) throw DimensionError("MorphBlock2D: bias shape mismatch");
    if (mode.soft) Hardness{mode.beta};
}

std::string MorphBlock2D::tag() const {
    std::ostringstream out;
    if (n_dilation == n_erosion) {
        out << "DE_" << n_dilation;
    } else {
        out << "D_" << n_dilation << "E_" << n_erosion;
    }
    out << "^{" << se_rows << 'x' << se_cols << "}-L_" << out_channels();
    return out.str();
}

ImageGrid morph_features2d(const MorphBlock2D& block, const ImageGrid& x) {
    block.validate();
    if (x.channels() != block.in_channels) throw DimensionError("MorphBlock2D: input channel mismatch");
    if (block.se_rows > x.height() || block.se_cols > x.width()) {
        throw DimensionError("MorphBlock2D: structuring element larger than image");
    }
    const std::size_t filters = block.n_dilation + block.n_erosion;
    ImageGrid feats(x.height(), x.width(), filters);
    const Index h = static_cast<Index>(x.height()), w = static_cast<Index>(x.width());
#pragma omp parallel for collapse(2) schedule(static)
    for (Index f = 0; f < static_cast<Index>(filters); ++f) {
        for (Index i = 0; i < h; ++i) {
            const std::size_t uf = static_cast<std::size_t>(f);
            const bool dil = uf < block.n_dilation;
            const int sign = dil ? 1 : -1;
            const double* se = dil ? block.se_plus.data() + uf * block.filter_size()
                                   : block.se_minus.data() + (uf - block.n_dilation) * block.filter_size();
            for (Index j = 0; j < w; ++j) {
                feats.at(uf, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    block.mode.soft ? soft_window(x, block.in_channels, block.se_rows, block.se_cols, se, i, j, sign,
                                                  block.padding, block.mode.beta)
                                    : hard_window(x, block.in_channels, block.se_rows, block.se_cols, se, i, j, sign,
                                                  block.padding);
            }
        }
    }
    return feats;
}

ImageGrid forward_block2d(const MorphBlock2D& block, const ImageGrid& x) {
    const ImageGrid feats = morph_features2d(block, x);
    const std::size_t filters = feats.channels();
    ImageGrid out(x.height(), x.width(), block.out_channels());
    const std::size_t n = x.plane_size();
    for (std::size_t o = 0; o < block.out_channels(); ++o) {
        double* dst = out.data().data() + o * n;
        for (std::size_t p = 0; p < n; ++p) {
            double acc = 0.0;
            for (std::size_t f = 0; f < filters; ++f) acc += block.w(o, f) * feats.data()[f * n + p];
            if (block.with_bias) acc += block.b[o];
            dst[p] = acc;
        }
    }
    return out;
}

Block2DGrad backward_block2d(const MorphBlock2D& block, const ImageGrid& x, const ImageGrid& upstream) {
    const ImageGrid feats = morph_features2d(block, x);
    if (upstream.height() != x.height() || upstream.width() != x.width() ||
        upstream.channels() != block.out_channels()) {
        throw DimensionError("backward_block2d: upstream shape mismatch");
    }
    const std::size_t filters = feats.channels();
    const std::size_t n = x.plane_size();
    Block2DGrad g;
    g.w.assign(block.w.data.size(), 0.0);
    g.b.assign(block.b.size(), 0.0);
    g.se_plus.assign(block.se_plus.size(), 0.0);
    g.se_minus.assign(block.se_minus.size(), 0.0);
    g.input.assign(x.data().size(), 0.0);

    // Linear combination.
    std::vector<double> dfeat(filters * n, 0.0);
    for (std::size_t o = 0; o < block.out_channels(); ++o) {
        for (std::size_t p = 0; p < n; ++p) {
            const double up = upstream.data()[o * n + p];
            for (std::size_t f = 0; f < filters; ++f) {
                g.w[o * filters + f] += up * feats.data()[f * n + p];
                dfeat[f * n + p] += block.w(o, f) * up;
            }
            if (block.with_bias) g.b[o] += up;
        }
    }

    // Morphological filters.
    const Index h = static_cast<Index>(x.height()), w = static_cast<Index>(x.width());
    const std::size_t fs = block.filter_size();
    std::vector<double> weights;
    std::vector<std::size_t> srcs, els;
    for (std::size_t f = 0; f < filters; ++f) {
        const bool dil = f < block.n_dilation;
        const int sign = dil ? 1 : -1;
        const double* se = dil ? block.se_plus.data() + f * fs : block.se_minus.data() + (f - block.n_dilation) * fs;
        double* gse = dil ? g.se_plus.data() + f * fs : g.se_minus.data() + (f - block.n_dilation) * fs;
        for (Index i = 0; i < h; ++i) {
            for (Index j = 0; j < w; ++j) {
                const double up = dfeat[f * n + static_cast<std::size_t>(i) * x.width() + static_cast<std::size_t>(j)];
                if (up == 0.0) continue;
                weights.clear();
                srcs.clear();
                els.clear();
                for_each_window_term(x, block.in_channels, block.se_rows, block.se_cols, se, i, j, sign,
                                     block.padding, [&](std::size_t src, std::size_t el, double t) {
                                         weights.push_back(sign * t);
                                         srcs.push_back(src);
                                         els.push_back(el);
                                     });
                if (block.mode.soft) {
                    const double a_max = *std::max_element(weights.begin(), weights.end());
                    double acc = 0.0;
                    for (double& v : weights) {
                        v = std::exp(block.mode.beta * (v - a_max));
                        acc += v;
                    }
                    for (double& v : weights) v /= acc;
                } else {
                    // One-hot at the first extremum in visiting order.
                    const auto best = std::max_element(weights.begin(), weights.end()) - weights.begin();
                    std::fill(weights.begin(), weights.end(), 0.0);
                    weights[static_cast<std::size_t>(best)] = 1.0;
                }
                // d term / d X = 1 for both kinds; d term / d S = +1 (dilation) or -1 (erosion).
                for (std::size_t k = 0; k < weights.size(); ++k) {
                    g.input[srcs[k]] += up * weights[k];
                    gse[els[k]] += sign * up * weights[k];
                }
            }
        }
    }
    return g;
}

ImageGrid maxpool2(const ImageGrid& x) {
    const std::size_t h = x.height() / 2, w = x.width() / 2;
    if (h == 0 || w == 0) throw DimensionError("maxpool2: image smaller than 2x2");
    ImageGrid out(h, w, x.channels());
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                out.at(c, i, j) = std::max({x.at(c, 2 * i, 2 * j), x.at(c, 2 * i, 2 * j + 1),
                                            x.at(c, 2 * i + 1, 2 * j), x.at(c, 2 * i + 1, 2 * j + 1)});
            }
        }
    }
    return out;
}

ImageGrid upsample_nearest2(const ImageGrid& x) {
    ImageGrid out(2 * x.height(), 2 * x.width(), x.channels());
    for (std::size_t c = 0; c < x.channels(); ++c) {
        for (std::size_t i = 0; i < out.height(); ++i) {
            for (std::size_t j = 0; j < out.width(); ++j) out.at(c, i, j) = x.at(c, i / 2, j / 2);
        }
    }
    return out;
}

ImageGrid sigmoid_map(const ImageGrid& x) {
    ImageGrid out = x;
    for (double& v : out.data()) v = sigmoid(v);
    return out;
}

ImageGrid threshold_map(const ImageGrid& x, double level) {
    ImageGrid out = x;
    for (double& v : out.data()) v = v >= level ? 1.0 : 0.0;
    return out;
}

ImageGrid dehaze_reconstruct(const ImageGrid& hazy, const ImageGrid& transmittance, const ImageGrid& airlight) {
    if (!hazy.same_shape(transmittance) || !hazy.same_shape(airlight)) {
        throw DimensionError("dehaze_reconstruct: shape mismatch");
    }
    ImageGrid out = hazy;
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        const double t = transmittance.data()[k];
        if (!(t > 0.0) || t > 1.0) throw InputError("dehaze_reconstruct: transmittance must lie in (0, 1]");
        const double j = (hazy.data()[k] - airlight.data()[k]) / t;
        out.data()[k] = std::clamp(j, 0.0, 1.0);
    }
    return out;
}

ImageGrid synthesize_haze(const ImageGrid& clear, const ImageGrid& transmittance, const ImageGrid& airlight) {
    if (!clear.same_shape(transmittance) || !clear.same_shape(airlight)) {
        throw DimensionError("synthesize_haze: shape mismatch");
    }
    ImageGrid out = clear;
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        out.data()[k] = transmittance.data()[k] * clear.data()[k] + airlight.data()[k];
    }
    return out;
}

}  // namespace morphnet
