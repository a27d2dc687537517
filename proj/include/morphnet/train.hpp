#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "morphnet/dataset.hpp"
#include "morphnet/network.hpp"

namespace morphnet {

enum class LossKind { mse, bce, dssim };

struct Sgd {
    double lr = 1e-2;
};

struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// defaults: structuring elements ~ U(-0.5, 0.5), linear weights
/// ~ U(-1/sqrt(d_in), 1/sqrt(d_in)), linear offsets 0.
/// uniform: every structuring-element entry ~ U(lo, hi), linear as defaults.
/// zeros: every parameter 0.
struct InitScheme {
    enum class Kind { defaults, uniform, zeros } kind = Kind::defaults;
    double lo = -0.5;
    double hi = 0.5;
};

/// Multiplies the hardness of soft layers by `factor` every `every` epochs, up to `cap`.
struct BetaAnneal {
    double factor = 1.5;
    std::size_t every = 50;
    double cap = 200.0;
};

struct TrainConfig {
    LossKind loss = LossKind::mse;
    std::variant<Sgd, Adam> optimizer = Adam{};
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    InitScheme init;
    bool initialize = true;  // false keeps the incoming parameters
    bool shuffle = true;
    std::optional<BetaAnneal> anneal;

    /// Throws InputError on lr <= 0, epochs == 0 or batch_size outside [1, n].
    void validate(std::size_t dataset_size) const;
};

struct TrainResult {
    NetworkSpec net;
    std::vector<double> loss_trace;  // full-dataset loss after each epoch
};

void initialize_parameters(NetworkSpec& net, const InitScheme& scheme, std::mt19937_64& rng);

double example_loss(LossKind loss, std::span<const double> pred, std::span<const double> target);
double dataset_loss(const NetworkSpec& net, const Dataset& data, LossKind loss);
/// Sum over the batch of per-example parameter gradients, reduced in index order.
std::vector<double> batch_gradient(const NetworkSpec& net, const Dataset& data, std::span<const std::size_t> rows,
                                   LossKind loss);

/// Mini-batch training. Deterministic in (net, data, cfg); example gradients
/// may be computed in parallel but are always summed in batch order.
TrainResult train(NetworkSpec net, const Dataset& data, const TrainConfig& cfg);

/// Fraction of rows whose thresholded (single output) or argmax output matches.
double classification_accuracy(const NetworkSpec& net, const Dataset& data, double threshold = 0.5);

}  // namespace morphnet
