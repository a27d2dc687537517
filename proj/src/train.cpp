#include "morphnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morphnet/errors.hpp"
#include "morphnet/loss.hpp"

namespace morphnet {

void TrainConfig::validate(std::size_t dataset_size) const {
    const double lr = std::visit([](const auto& o) { return o.lr; }, optimizer);
    if (!(lr > 0.0)) throw InputError("train: learning rate must be > 0");
    if (epochs == 0) throw InputError("train: epochs must be >= 1");
    if (dataset_size == 0) throw InputError("train: empty dataset");
    if (batch_size == 0 || batch_size > dataset_size) throw InputError("train: batch_size must be in [1, dataset size]");
    if (loss == LossKind::dssim) throw InputError("train: dssim loss applies to image pairs, not vector networks");
    if (const auto* a = std::get_if<Adam>(&optimizer)) {
        if (!(a->beta1 >= 0.0 && a->beta1 < 1.0 && a->beta2 >= 0.0 && a->beta2 < 1.0 && a->eps > 0.0)) {
            throw InputError("train: invalid Adam hyperparameters");
        }
    }
    if (init.kind == InitScheme::Kind::uniform && !(init.lo <= init.hi)) throw InputError("train: init lo > hi");
    if (anneal && (!(anneal->factor > 0.0) || anneal->every == 0 || !(anneal->cap > 0.0))) {
        throw InputError("train: invalid beta anneal");
    }
}

void initialize_parameters(NetworkSpec& net, const InitScheme& scheme, std::mt19937_64& rng) {
    auto fill_uniform = [&](std::vector<double>& v, double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        for (double& e : v) e = u(rng);
    };
    for (Layer& layer : net.layers) {
        if (auto* de = std::get_if<DilationErosionLayer>(&layer)) {
            if (scheme.kind == InitScheme::Kind::zeros) {
                std::fill(de->s_plus.data.begin(), de->s_plus.data.end(), 0.0);
                std::fill(de->s_minus.data.begin(), de->s_minus.data.end(), 0.0);
            } else {
                const double lo = scheme.kind == InitScheme::Kind::uniform ? scheme.lo : -0.5;
                const double hi = scheme.kind == InitScheme::Kind::uniform ? scheme.hi : 0.5;
                fill_uniform(de->s_plus.data, lo, hi);
                fill_uniform(de->s_minus.data, lo, hi);
            }
        } else if (auto* lin = std::get_if<LinearLayer>(&layer)) {
            if (scheme.kind == InitScheme::Kind::zeros) {
                std::fill(lin->w.data.begin(), lin->w.data.end(), 0.0);
            } else {
                const double r = 1.0 / std::sqrt(static_cast<double>(lin->input_dim()));
                fill_uniform(lin->w.data, -r, r);
            }
            std::fill(lin->b.begin(), lin->b.end(), 0.0);
        }
    }
}

double example_loss(LossKind loss, std::span<const double> pred, std::span<const double> target) {
    switch (loss) {
        case LossKind::mse: return loss_mse(pred, target);
        case LossKind::bce: return loss_bce(pred, target);
        case LossKind::dssim: break;
    }
    throw InputError("dssim loss is not defined for vector outputs");
}

namespace {

std::vector<double> loss_grad(LossKind loss, std::span<const double> pred, std::span<const double> target) {
    return loss == LossKind::bce ? loss_bce_grad(pred, target) : loss_mse_grad(pred, target);
}

void check_shapes(const NetworkSpec& net, const Dataset& data) {
    net.validate();
    if (data.feature_dim != net.input_dim) throw DimensionError("dataset feature width != network input width");
    if (data.target_dim != net.output_dim()) throw DimensionError("dataset target width != network output width");
}

}  // namespace

double dataset_loss(const NetworkSpec& net, const Dataset& data, LossKind loss) {
    check_shapes(net, data);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        acc += example_loss(loss, forward_values(net, data.feature(i)), data.target(i));
    }
    return acc / static_cast<double>(data.size());
}

std::vector<double> batch_gradient(const NetworkSpec& net, const Dataset& data, std::span<const std::size_t> rows,
                                   LossKind loss) {
    const std::size_t n = rows.size();
    std::vector<std::vector<double>> per_example(n);
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const std::size_t r = rows[static_cast<std::size_t>(k)];
        const auto pred = forward_values(net, data.feature(r));
        const auto up = loss_grad(loss, pred, data.target(r));
        per_example[static_cast<std::size_t>(k)] = flatten_gradients(backward(net, data.feature(r), up));
    }
    std::vector<double> total(parameter_count(net), 0.0);
    for (const auto& g : per_example) {
        for (std::size_t p = 0; p < total.size(); ++p) total[p] += g[p];
    }
    return total;
}

TrainResult train(NetworkSpec net, const Dataset& data, const TrainConfig& cfg) {
    check_shapes(net, data);
    cfg.validate(data.size());
    if (cfg.loss == LossKind::bce) {
        for (double t : data.targets) {
            if (t < 0.0 || t > 1.0) throw InputError("train: bce targets must lie in [0,1]");
        }
    }

    std::mt19937_64 rng(cfg.seed);
    if (cfg.initialize) initialize_parameters(net, cfg.init, rng);

    std::vector<double> params = flatten_parameters(net);
    std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
    std::size_t step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.loss_trace.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.anneal && epoch > 0 && epoch % cfg.anneal->every == 0) {
            for (Layer& layer : net.layers) {
                if (auto* de = std::get_if<DilationErosionLayer>(&layer); de && de->mode.soft) {
                    de->mode.beta = std::min(de->mode.beta * cfg.anneal->factor, cfg.anneal->cap);
                }
            }
        }
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            std::vector<double> g = batch_gradient(net, data, rows, cfg.loss);
            const double inv = 1.0 / static_cast<double>(rows.size());
            for (double& e : g) e *= inv;

            ++step;
            if (const auto* sgd = std::get_if<Sgd>(&cfg.optimizer)) {
                for (std::size_t p = 0; p < params.size(); ++p) params[p] -= sgd->lr * g[p];
            } else {
                const Adam& a = std::get<Adam>(cfg.optimizer);
                const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
                for (std::size_t p = 0; p < params.size(); ++p) {
                    m[p] = a.beta1 * m[p] + (1.0 - a.beta1) * g[p];
                    v[p] = a.beta2 * v[p] + (1.0 - a.beta2) * g[p] * g[p];
                    params[p] -= a.lr * (m[p] / c1) / (std::sqrt(v[p] / c2) + a.eps);
                }
            }
            assign_parameters(net, params);
        }
        result.loss_trace.push_back(dataset_loss(net, data, cfg.loss));
    }
    result.net = std::move(net);
    return result;
}

double classification_accuracy(const NetworkSpec& net, const Dataset& data, double threshold) {
    net.validate();
    if (data.feature_dim != net.input_dim) throw DimensionError("dataset feature width != network input width");
    if (data.size() == 0) throw InputError("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto out = forward_values(net, data.feature(i));
        const auto t = data.target(i);
        if (out.size() == 1) {
            const double label = out[0] >= threshold ? 1.0 : 0.0;
            correct += (label == (t[0] >= 0.5 ? 1.0 : 0.0)) ? 1 : 0;
        } else {
            const auto pi = std::max_element(out.begin(), out.end()) - out.begin();
            const std::size_t ti = t.size() == 1 ? static_cast<std::size_t>(std::lround(t[0]))
                                                 : static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
            correct += static_cast<std::size_t>(pi) == ti ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace morphnet
