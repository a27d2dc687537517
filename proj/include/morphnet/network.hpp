#pragma once

// Morphological blocks and stacked networks: a dilation-erosion layer feeds
// a linear combination layer; layers fold left to right.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "morphnet/matrix.hpp"
#include "morphnet/tropical.hpp"

namespace morphnet {

/// Hard max/min, or log-sum-exp relaxation with a fixed hardness.
struct LayerMode {
    bool soft = false;
    double beta = 0.0;

    static LayerMode hard() { return {}; }
    static LayerMode smooth(double beta);

    friend bool operator==(const LayerMode&, const LayerMode&) = default;
};

/// n_dilation dilation neurons followed by n_erosion erosion neurons.
/// With bias the input is augmented by a trailing 0 so each structuring
/// element has input_dim + 1 columns.
struct DilationErosionLayer {
    std::size_t input_dim = 0;
    std::size_t n_dilation = 0;
    std::size_t n_erosion = 0;
    bool with_bias = false;
    LayerMode mode;
    Matrix s_plus;   // n_dilation x se_width()
    Matrix s_minus;  // n_erosion x se_width()

    static DilationErosionLayer zeros(std::size_t input_dim, std::size_t n_dilation,
                                      std::size_t n_erosion, bool with_bias,
                                      LayerMode mode = LayerMode::hard());

    std::size_t se_width() const noexcept { return input_dim + (with_bias ? 1 : 0); }
    std::size_t output_dim() const noexcept { return n_dilation + n_erosion; }
    bool pure_dilation() const noexcept { return n_erosion == 0 && n_dilation > 0; }
    bool pure_erosion() const noexcept { return n_dilation == 0 && n_erosion > 0; }
    void validate() const;

    friend bool operator==(const DilationErosionLayer&, const DilationErosionLayer&) = default;
};

/// y = W z (+ b). W is output_dim x input_dim.
struct LinearLayer {
    Matrix w;
    bool with_bias = false;
    std::vector<double> b;

    static LinearLayer zeros(std::size_t input_dim, std::size_t output_dim, bool with_bias);

    std::size_t input_dim() const noexcept { return w.cols; }
    std::size_t output_dim() const noexcept { return w.rows; }
    void validate() const;

    friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

/// Elementwise logistic.
struct SigmoidLayer {
    friend bool operator==(const SigmoidLayer&, const SigmoidLayer&) = default;
};

using Layer = std::variant<DilationErosionLayer, LinearLayer, SigmoidLayer>;

struct NetworkSpec {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;

    /// Throws DimensionError if widths do not chain or the net is empty.
    void validate() const;
    std::size_t output_dim() const;
    /// Width entering layer i (i == layers.size() gives the output width).
    std::size_t width_before(std::size_t i) const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// z = (dilations ++ erosions) for one input; x has length input_dim.
std::vector<double> forward_layer(const DilationErosionLayer& layer, std::span<const double> x);
std::vector<double> forward_layer(const LinearLayer& layer, std::span<const double> x);
std::vector<double> forward_layer(const SigmoidLayer& layer, std::span<const double> x);

Vector forward_block(const DilationErosionLayer& layer, const LinearLayer& lin, const Vector& x);
Vector forward(const NetworkSpec& net, const Vector& x);
std::vector<double> forward_values(const NetworkSpec& net, std::span<const double> x);

/// Gradient arrays shaped like the parameters of one layer (empty for sigmoid).
struct LayerGrad {
    std::vector<double> s_plus;
    std::vector<double> s_minus;
    std::vector<double> w;
    std::vector<double> b;
};

struct Gradients {
    std::vector<LayerGrad> layers;
    std::vector<double> input;
};

/// Reverse-mode pass for one example: upstream is dL/d(output).
Gradients backward(const NetworkSpec& net, std::span<const double> x, std::span<const double> upstream);

// Flat parameter views, ordered layer by layer: s_plus, s_minus, w, b.
std::size_t parameter_count(const NetworkSpec& net);
std::vector<double> flatten_parameters(const NetworkSpec& net);
void assign_parameters(NetworkSpec& net, std::span<const double> flat);
std::vector<double> flatten_gradients(const Gradients& g);

/// Returns a copy with every dilation-erosion layer switched to the given mode.
NetworkSpec with_mode(NetworkSpec net, LayerMode mode);

/// "D2E1->L1->S" style tag.
std::string describe(const NetworkSpec& net);

double sigmoid(double u);

}  // namespace morphnet
