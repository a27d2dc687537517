#include "morphnet/network.hpp"

#include <cmath>
#include <sstream>

#include "morphnet/errors.hpp"

namespace morphnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_finite(const std::vector<double>& v, const char* what) {
    for (double e : v) {
        if (!std::isfinite(e)) throw InputError(std::string(what) + ": non-finite parameter");
    }
}

std::vector<double> augmented(const DilationErosionLayer& layer, std::span<const double> x) {
    if (x.size() != layer.input_dim) {
        throw DimensionError("dilation-erosion layer expects " + std::to_string(layer.input_dim) +
                             " inputs, got " + std::to_string(x.size()));
    }
    std::vector<double> xa(x.begin(), x.end());
    if (layer.with_bias) xa.push_back(0.0);
    return xa;
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw DimensionError("Matrix: value count != rows*cols");
}

LayerMode LayerMode::smooth(double beta) {
    Hardness h(beta);
    return {true, h.beta()};
}

DilationErosionLayer DilationErosionLayer::zeros(std::size_t input_dim, std::size_t n_dilation,
                                                 std::size_t n_erosion, bool with_bias, LayerMode mode) {
    DilationErosionLayer l;
    l.input_dim = input_dim;
    l.n_dilation = n_dilation;
    l.n_erosion = n_erosion;
    l.with_bias = with_bias;
    l.mode = mode;
    l.s_plus = Matrix(n_dilation, l.se_width());
    l.s_minus = Matrix(n_erosion, l.se_width());
    l.validate();
    return l;
}

void DilationErosionLayer::validate() const {
    if (input_dim == 0) throw DimensionError("dilation-erosion layer: input_dim must be >= 1");
    if (n_dilation + n_erosion == 0) throw DimensionError("dilation-erosion layer: no neurons");
    if (s_plus.rows != n_dilation || s_plus.cols != se_width() || s_plus.data.size() != n_dilation * se_width()) {
        throw DimensionError("dilation-erosion layer: s_plus shape mismatch");
    }
    if (s_minus.rows != n_erosion || s_minus.cols != se_width() || s_minus.data.size() != n_erosion * se_width()) {
        throw DimensionError("dilation-erosion layer: s_minus shape mismatch");
    }
    if (mode.soft) Hardness{mode.beta};
    require_finite(s_plus.data, "s_plus");
    require_finite(s_minus.data, "s_minus");
}

LinearLayer LinearLayer::zeros(std::size_t input_dim, std::size_t output_dim, bool with_bias) {
    LinearLayer l;
    l.w = Matrix(output_dim, input_dim);
    l.with_bias = with_bias;
    if (with_bias) l.b.assign(output_dim, 0.0);
    l.validate();
    return l;
}

void LinearLayer::validate() const {
    if (w.rows == 0 || w.cols == 0) throw DimensionError("linear layer: empty weight matrix");
    if (w.data.size() != w.rows * w.cols) throw DimensionError("linear layer: weight shape mismatch");
    if (with_bias ? b.size() != w.rows : !b.empty()) throw DimensionError("linear layer: bias shape mismatch");
    require_finite(w.data, "w");
    require_finite(b, "b");
}

std::size_t NetworkSpec::width_before(std::size_t i) const {
    std::size_t width = input_dim;
    for (std::size_t k = 0; k < i && k < layers.size(); ++k) {
        width = std::visit(overloaded{
                               [](const DilationErosionLayer& l) { return l.output_dim(); },
                               [](const LinearLayer& l) { return l.output_dim(); },
                               [&](const SigmoidLayer&) { return width; },
                           },
                           layers[k]);
    }
    return width;
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw DimensionError("network has no layers");
    if (input_dim == 0) throw DimensionError("network input_dim must be >= 1");
    std::size_t width = input_dim;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        std::visit(overloaded{
                       [&](const DilationErosionLayer& l) {
                           l.validate();
                           if (l.input_dim != width) {
                               throw DimensionError("layer " + std::to_string(k) + " expects width " +
                                                    std::to_string(l.input_dim) + ", previous emits " +
                                                    std::to_string(width));
                           }
                           width = l.output_dim();
                       },
                       [&](const LinearLayer& l) {
                           l.validate();
                           if (l.input_dim() != width) {
                               throw DimensionError("layer " + std::to_string(k) + " expects width " +
                                                    std::to_string(l.input_dim()) + ", previous emits " +
                                                    std::to_string(width));
                           }
                           width = l.output_dim();
                       },
                       [](const SigmoidLayer&) {},
                   },
                   layers[k]);
    }
}

std::size_t NetworkSpec::output_dim() const { return width_before(layers.size()); }

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

std::vector<double> forward_layer(const DilationErosionLayer& layer, std::span<const double> x) {
    const std::vector<double> xa = augmented(layer, x);
    std::vector<double> z(layer.output_dim());
    for (std::size_t i = 0; i < layer.n_dilation; ++i) {
        z[i] = layer.mode.soft ? kernel::soft_dilate(xa, layer.s_plus.row(i), layer.mode.beta)
                               : kernel::dilate(xa, layer.s_plus.row(i));
    }
    for (std::size_t j = 0; j < layer.n_erosion; ++j) {
        z[layer.n_dilation + j] = layer.mode.soft ? kernel::soft_erode(xa, layer.s_minus.row(j), layer.mode.beta)
                                                  : kernel::erode(xa, layer.s_minus.row(j));
    }
    return z;
}

std::vector<double> forward_layer(const LinearLayer& layer, std::span<const double> x) {
    if (x.size() != layer.input_dim()) {
        throw DimensionError("linear layer expects " + std::to_string(layer.input_dim()) + " inputs, got " +
                             std::to_string(x.size()));
    }
    std::vector<double> y(layer.output_dim());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto row = layer.w.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
        if (layer.with_bias) acc += layer.b[i];
        y[i] = acc;
    }
    return y;
}

std::vector<double> forward_layer(const SigmoidLayer&, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    for (double& v : y) v = sigmoid(v);
    return y;
}

Vector forward_block(const DilationErosionLayer& layer, const LinearLayer& lin, const Vector& x) {
    layer.validate();
    lin.validate();
    if (lin.input_dim() != layer.output_dim()) {
        throw DimensionError("forward_block: linear layer width does not match neuron count");
    }
    return Vector(forward_layer(lin, forward_layer(layer, x.values())));
}

std::vector<double> forward_values(const NetworkSpec& net, std::span<const double> x) {
    if (x.size() != net.input_dim) throw DimensionError("network input width mismatch");
    std::vector<double> a(x.begin(), x.end());
    for (const Layer& layer : net.layers) {
        a = std::visit([&](const auto& l) { return forward_layer(l, a); }, layer);
    }
    return a;
}

Vector forward(const NetworkSpec& net, const Vector& x) {
    net.validate();
    return Vector(forward_values(net, x.values()));
}

namespace {

// Returns dL/dx for one dilation-erosion layer and accumulates into g.
std::vector<double> backward_layer(const DilationErosionLayer& layer, std::span<const double> x,
                                   std::span<const double> dz, LayerGrad& g) {
    const std::vector<double> xa = augmented(layer, x);
    const std::size_t w = xa.size();
    std::vector<double> dxa(w, 0.0);
    g.s_plus.assign(layer.s_plus.data.size(), 0.0);
    g.s_minus.assign(layer.s_minus.data.size(), 0.0);
    std::vector<double> p(w);
    for (std::size_t i = 0; i < layer.n_dilation; ++i) {
        const double up = dz[i];
        if (up == 0.0) continue;
        const auto s = layer.s_plus.row(i);
        double* gs = g.s_plus.data() + i * w;
        if (layer.mode.soft) {
            kernel::soft_dilate_weights(xa, s, layer.mode.beta, p);
            for (std::size_t k = 0; k < w; ++k) {
                gs[k] += up * p[k];
                dxa[k] += up * p[k];
            }
        } else {
            const std::size_t k = kernel::argmax_sum(xa, s);
            gs[k] += up;
            dxa[k] += up;
        }
    }
    for (std::size_t j = 0; j < layer.n_erosion; ++j) {
        const double up = dz[layer.n_dilation + j];
        if (up == 0.0) continue;
        const auto s = layer.s_minus.row(j);
        double* gs = g.s_minus.data() + j * w;
        if (layer.mode.soft) {
            kernel::soft_erode_weights(xa, s, layer.mode.beta, p);
            for (std::size_t k = 0; k < w; ++k) {
                gs[k] -= up * p[k];
                dxa[k] += up * p[k];
            }
        } else {
            const std::size_t k = kernel::argmin_diff(xa, s);
            gs[k] -= up;
            dxa[k] += up;
        }
    }
    dxa.resize(layer.input_dim);
    return dxa;
}

std::vector<double> backward_layer(const LinearLayer& layer, std::span<const double> x,
                                   std::span<const double> dy, LayerGrad& g) {
    g.w.assign(layer.w.data.size(), 0.0);
    g.b.assign(layer.b.size(), 0.0);
    std::vector<double> dx(layer.input_dim(), 0.0);
    for (std::size_t i = 0; i < layer.output_dim(); ++i) {
        const double up = dy[i];
        const auto row = layer.w.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            g.w[i * row.size() + j] = up * x[j];
            dx[j] += row[j] * up;
        }
        if (layer.with_bias) g.b[i] = up;
    }
    return dx;
}

std::vector<double> backward_layer(const SigmoidLayer&, std::span<const double> x, std::span<const double> dy,
                                   LayerGrad&) {
    std::vector<double> dx(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double y = sigmoid(x[k]);
        dx[k] = dy[k] * y * (1.0 - y);
    }
    return dx;
}

}  // namespace

Gradients backward(const NetworkSpec& net, std::span<const double> x, std::span<const double> upstream) {
    if (x.size() != net.input_dim) throw DimensionError("backward: input width mismatch");
    std::vector<std::vector<double>> inputs;
    inputs.reserve(net.layers.size() + 1);
    inputs.emplace_back(x.begin(), x.end());
    for (const Layer& layer : net.layers) {
        inputs.push_back(std::visit([&](const auto& l) { return forward_layer(l, inputs.back()); }, layer));
    }
    if (upstream.size() != inputs.back().size()) throw DimensionError("backward: upstream width mismatch");

    Gradients g;
    g.layers.resize(net.layers.size());
    std::vector<double> delta(upstream.begin(), upstream.end());
    for (std::size_t k = net.layers.size(); k-- > 0;) {
        delta = std::visit([&](const auto& l) { return backward_layer(l, inputs[k], delta, g.layers[k]); },
                           net.layers[k]);
    }
    g.input = std::move(delta);
    return g;
}

std::size_t parameter_count(const NetworkSpec& net) {
    std::size_t n = 0;
    for (const Layer& layer : net.layers) {
        std::visit(overloaded{
                       [&](const DilationErosionLayer& l) { n += l.s_plus.data.size() + l.s_minus.data.size(); },
                       [&](const LinearLayer& l) { n += l.w.data.size() + l.b.size(); },
                       [](const SigmoidLayer&) {},
                   },
                   layer);
    }
    return n;
}

std::vector<double> flatten_parameters(const NetworkSpec& net) {
    std::vector<double> flat;
    flat.reserve(parameter_count(net));
    auto append = [&](const std::vector<double>& v) { flat.insert(flat.end(), v.begin(), v.end()); };
    for (const Layer& layer : net.layers) {
        std::visit(overloaded{
                       [&](const DilationErosionLayer& l) {
                           append(l.s_plus.data);
                           append(l.s_minus.data);
                       },
                       [&](const LinearLayer& l) {
                           append(l.w.data);
                           append(l.b);
                       },
                       [](const SigmoidLayer&) {},
                   },
                   layer);
    }
    return flat;
}

void assign_parameters(NetworkSpec& net, std::span<const double> flat) {
    if (flat.size() != parameter_count(net)) throw DimensionError("assign_parameters: size mismatch");
    std::size_t pos = 0;
    auto take = [&](std::vector<double>& v) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
        pos += v.size();
    };
    for (Layer& layer : net.layers) {
        std::visit(overloaded{
                       [&](DilationErosionLayer& l) {
                           take(l.s_plus.data);
                           take(l.s_minus.data);
                       },
                       [&](LinearLayer& l) {
                           take(l.w.data);
                           take(l.b);
                       },
                       [](SigmoidLayer&) {},
                   },
                   layer);
    }
}

std::vector<double> flatten_gradients(const Gradients& g) {
    std::vector<double> flat;
    for (const LayerGrad& l : g.layers) {
        flat.insert(flat.end(), l.s_plus.begin(), l.s_plus.end());
        flat.insert(flat.end(), l.s_minus.begin(), l.s_minus.end());
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

NetworkSpec with_mode(NetworkSpec net, LayerMode mode) {
    for (Layer& layer : net.layers) {
        if (auto* de = std::get_if<DilationErosionLayer>(&layer)) de->mode = mode;
    }
    return net;
}

std::string describe(const NetworkSpec& net) {
    std::ostringstream out;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        if (k) out << "->";
        std::visit(overloaded{
                       [&](const DilationErosionLayer& l) { out << 'D' << l.n_dilation << 'E' << l.n_erosion; },
                       [&](const LinearLayer& l) { out << 'L' << l.output_dim(); },
                       [&](const SigmoidLayer&) { out << 'S'; },
                   },
                   net.layers[k]);
    }
    return out.str();
}

}  // namespace morphnet
