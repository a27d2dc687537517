#pragma once

// Layer-list rewrites that are exact for hard max-plus arithmetic, and a
// sublevel-set search showing when no such rewrite can exist.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morphnet/box.hpp"
#include "morphnet/network.hpp"
#include "morphnet/tropical.hpp"

namespace morphnet {

struct LayerTag {
    enum class Kind { morph, linear, sigmoid } kind = Kind::morph;
    std::size_t n_dilation = 0;
    std::size_t n_erosion = 0;

    friend bool operator==(const LayerTag&, const LayerTag&) = default;
};

/// "D1E1->D1->L". D<n> alone means D<n>E0 and E<m> alone D0E<m>; the
/// unicode arrow is accepted too. Linear widths are not part of the tag.
struct ArchTag {
    std::vector<LayerTag> layers;

    static ArchTag parse(const std::string& text);
    static ArchTag of(const NetworkSpec& net);
    std::string str() const;

    friend bool operator==(const ArchTag&, const ArchTag&) = default;
};

/// Homogeneous max-plus matrix of a pure dilation (or erosion) layer:
/// [[S, bias column], [-inf ..., 0]], or [S] without bias.
TropicalMatrix layer_matrix(const DilationErosionLayer& layer);

/// Fuses every maximal run of >= 2 hard pure-dilation layers. Throws
/// InputError if such a run contains a soft layer.
NetworkSpec collapse_dilation_chain(const NetworkSpec& net);
/// Same for pure-erosion runs, using erode(x) = -dilate(-x).
NetworkSpec collapse_erosion_chain(const NetworkSpec& net);

struct SimplifyResult {
    NetworkSpec net;
    std::vector<std::string> log;  // "FUSE dilation layers [i..j] -> 1", indices into the input net
};

/// Fuses all hard runs; soft runs are left alone and logged as skipped.
SimplifyResult simplify(const NetworkSpec& net);

struct WitnessRequest {
    ArchTag arch_a;
    ArchTag arch_b;
    /// Parameters for arch_a; the pair's reference instance when absent.
    std::optional<NetworkSpec> params;
    double level = 0.0;
    CompactBox box = CompactBox::cube(2, -4.0, 4.0);
    std::size_t grid = 256;
    /// Extra random instances of arch_a tried when the first one yields nothing.
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

/// Grid points p = (x1, y1), q = (x2, y2) with f(p), f(q) on one side of the
/// level and the corner (x1, y2) on the other. No product set allows this.
struct CornerTriple {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

struct Witness {
    NetworkSpec net;  // the instance of arch_a
    double level = 0.0;
    CornerTriple below;                 // triple for {f <= level}
    std::optional<CornerTriple> above;  // triple for {f > level}; needed when arch_b ends in L
};

/// Supported pairs: (D1E1->D1, D1E0), (D1E1->D1->L, D1E0->L), (D2E0->D0E2->D1, D2E0->D1).
std::optional<Witness> inequivalence_witness(const WitnessRequest& req);

/// Re-evaluates the witness points through forward().
bool verify_witness(const Witness& w);

/// D1E1 -> D1: f = max(max(x+a, y+b) + a1, min(x+c, y+d) + b1), optional trailing L(alpha).
NetworkSpec d1e1_d1_instance(double a, double b, double c, double d, double a1, double b1,
                             std::optional<double> alpha = std::nullopt);

}  // namespace morphnet
