#pragma once

#include <filesystem>
#include <string>

#include "morphnet/network.hpp"

namespace morphnet {

/// Model document:
///   {"input_dim": d, "layers": [
///     {"kind": "dilation_erosion", "n_dilation", "n_erosion", "with_bias",
///      "mode": {"hard": true} | {"soft": beta}, "s_plus": [...], "s_minus": [...]},
///     {"kind": "linear", "d_out", "with_bias", "w": [...], "b": [...]},
///     {"kind": "sigmoid"}]}
/// Matrices are row-major flat arrays. Doubles are printed with enough
/// digits to round-trip exactly.
std::string model_to_json(const NetworkSpec& net);
NetworkSpec model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const NetworkSpec& net);
NetworkSpec load_model(const std::filesystem::path& path);

/// Comma-separated layer list for an input width:
///   de:<n>[+bias][@beta]   n neurons, ceil(n/2) dilation + floor(n/2) erosion
///   de:<n>:<m>[+bias][@beta]  n dilation + m erosion
///   d:<n>[+bias][@beta]  e:<n>[+bias][@beta]
///   linear:<k>[+bias]   sigmoid
/// Layers without @beta get default_mode. Parameters start at zero.
NetworkSpec parse_architecture(const std::string& spec, std::size_t input_dim,
                               LayerMode default_mode = LayerMode::hard());

}  // namespace morphnet
