#include "morphnet/rewrite.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "morphnet/errors.hpp"

namespace morphnet {

// ---- tags

ArchTag ArchTag::parse(const std::string& text) {
    std::string s;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text.compare(i, 3, "→") == 0) {
            s += '>';
            i += 2;
        } else if (text.compare(i, 2, "->") == 0) {
            s += '>';
            i += 1;
        } else if (text[i] != ' ') {
            s += text[i];
        }
    }
    if (s.empty() || s.back() == '>') throw InputError("arch tag: empty layer in '" + text + "'");
    ArchTag tag;
    std::istringstream in(s);
    std::string part;
    auto number = [&](const std::string& p, std::size_t& pos) {
        const std::size_t start = pos;
        while (pos < p.size() && std::isdigit(static_cast<unsigned char>(p[pos]))) ++pos;
        if (pos == start) throw InputError("arch tag: expected a count in '" + p + "'");
        return static_cast<std::size_t>(std::stoul(p.substr(start, pos - start)));
    };
    while (std::getline(in, part, '>')) {
        LayerTag lt;
        if (part == "L") {
            lt.kind = LayerTag::Kind::linear;
        } else if (part == "S") {
            lt.kind = LayerTag::Kind::sigmoid;
        } else {
            std::size_t pos = 0;
            if (pos < part.size() && part[pos] == 'D') lt.n_dilation = number(part, ++pos);
            if (pos < part.size() && part[pos] == 'E') lt.n_erosion = number(part, ++pos);
            if (pos != part.size() || pos == 0) throw InputError("arch tag: bad layer '" + part + "'");
            if (lt.n_dilation + lt.n_erosion == 0) throw InputError("arch tag: empty layer '" + part + "'");
        }
        tag.layers.push_back(lt);
    }
    if (tag.layers.empty()) throw InputError("arch tag: empty");
    return tag;
}

ArchTag ArchTag::of(const NetworkSpec& net) {
    ArchTag tag;
    for (const Layer& l : net.layers) {
        LayerTag lt;
        if (const auto* de = std::get_if<DilationErosionLayer>(&l)) {
            lt.n_dilation = de->n_dilation;
            lt.n_erosion = de->n_erosion;
        } else if (std::holds_alternative<LinearLayer>(l)) {
            lt.kind = LayerTag::Kind::linear;
        } else {
            lt.kind = LayerTag::Kind::sigmoid;
        }
        tag.layers.push_back(lt);
    }
    return tag;
}

std::string ArchTag::str() const {
    std::string out;
    for (const LayerTag& l : layers) {
        if (!out.empty()) out += "->";
        switch (l.kind) {
            case LayerTag::Kind::linear: out += "L"; break;
            case LayerTag::Kind::sigmoid: out += "S"; break;
            case LayerTag::Kind::morph:
                out += "D" + std::to_string(l.n_dilation) + "E" + std::to_string(l.n_erosion);
                break;
        }
    }
    return out;
}

// ---- collapse

TropicalMatrix layer_matrix(const DilationErosionLayer& layer) {
    const Matrix& s = layer.pure_dilation() ? layer.s_plus : layer.s_minus;
    const std::size_t n = s.rows, in = layer.input_dim;
    if (!layer.with_bias) return TropicalMatrix(n, in, s.data);
    std::vector<double> e((n + 1) * (in + 1), TropicalMatrix::neg_inf);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= in; ++i) e[j * (in + 1) + i] = s(j, i);
    e[n * (in + 1) + in] = 0.0;
    return TropicalMatrix(n + 1, in + 1, std::move(e));
}

namespace {

enum class RunKind { dilation, erosion };

bool in_run(const Layer& l, RunKind kind) {
    const auto* de = std::get_if<DilationErosionLayer>(&l);
    if (!de) return false;
    return kind == RunKind::dilation ? de->pure_dilation() : de->pure_erosion();
}

bool is_soft(const Layer& l) { return std::get<DilationErosionLayer>(l).mode.soft; }

// Promotes a bias-free layer matrix to homogeneous form so products chain.
TropicalMatrix homogeneous(const DilationErosionLayer& layer) {
    if (layer.with_bias) return layer_matrix(layer);
    auto biased = layer;
    biased.with_bias = true;
    Matrix& s = layer.pure_dilation() ? biased.s_plus : biased.s_minus;
    const Matrix& src = layer.pure_dilation() ? layer.s_plus : layer.s_minus;
    s = Matrix(src.rows, src.cols + 1, TropicalMatrix::neg_inf);
    for (std::size_t j = 0; j < src.rows; ++j)
        for (std::size_t i = 0; i < src.cols; ++i) s(j, i) = src(j, i);
    return layer_matrix(biased);
}

// Layers [first, last] of a run; U = A_last ⊗ ... ⊗ A_first acts on column vectors.
DilationErosionLayer fuse(const NetworkSpec& net, std::size_t first, std::size_t last, RunKind kind) {
    bool any_bias = false;
    for (std::size_t i = first; i <= last; ++i) any_bias |= std::get<DilationErosionLayer>(net.layers[i]).with_bias;

    const auto& head = std::get<DilationErosionLayer>(net.layers[first]);
    TropicalMatrix u = any_bias ? homogeneous(head) : layer_matrix(head);
    for (std::size_t i = first + 1; i <= last; ++i) {
        const auto& l = std::get<DilationErosionLayer>(net.layers[i]);
        u = maxplus_matmul(any_bias ? homogeneous(l) : layer_matrix(l), u);
    }
    const auto& tail = std::get<DilationErosionLayer>(net.layers[last]);
    const std::size_t n = tail.output_dim();
    auto out = kind == RunKind::dilation ? DilationErosionLayer::zeros(head.input_dim, n, 0, any_bias)
                                         : DilationErosionLayer::zeros(head.input_dim, 0, n, any_bias);
    Matrix& s = kind == RunKind::dilation ? out.s_plus : out.s_minus;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < s.cols; ++i) s(j, i) = u(j, i);
    return out;
}

struct Run {
    std::size_t first, last;
    RunKind kind;
};

std::vector<Run> maximal_runs(const NetworkSpec& net, RunKind kind) {
    std::vector<Run> runs;
    for (std::size_t i = 0; i < net.layers.size();) {
        if (!in_run(net.layers[i], kind)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < net.layers.size() && in_run(net.layers[j + 1], kind)) ++j;
        if (j > i) runs.push_back({i, j, kind});
        i = j + 1;
    }
    return runs;
}

NetworkSpec apply_runs(const NetworkSpec& net, std::vector<Run> runs) {
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.first < b.first; });
    NetworkSpec out;
    out.input_dim = net.input_dim;
    std::size_t i = 0;
    for (const Run& r : runs) {
        for (; i < r.first; ++i) out.layers.push_back(net.layers[i]);
        out.layers.emplace_back(fuse(net, r.first, r.last, r.kind));
        i = r.last + 1;
    }
    for (; i < net.layers.size(); ++i) out.layers.push_back(net.layers[i]);
    out.validate();
    return out;
}

NetworkSpec collapse(const NetworkSpec& net, RunKind kind) {
    net.validate();
    const auto runs = maximal_runs(net, kind);
    for (const Run& r : runs)
        for (std::size_t i = r.first; i <= r.last; ++i)
            if (is_soft(net.layers[i]))
                throw InputError("collapse: run [" + std::to_string(r.first) + ".." + std::to_string(r.last) +
                                 "] contains a soft layer");
    return apply_runs(net, runs);
}

const char* name(RunKind k) { return k == RunKind::dilation ? "dilation" : "erosion"; }

}  // namespace

NetworkSpec collapse_dilation_chain(const NetworkSpec& net) { return collapse(net, RunKind::dilation); }
NetworkSpec collapse_erosion_chain(const NetworkSpec& net) { return collapse(net, RunKind::erosion); }

SimplifyResult simplify(const NetworkSpec& net) {
    net.validate();
    std::vector<Run> runs;
    for (RunKind kind : {RunKind::dilation, RunKind::erosion})
        for (const Run& r : maximal_runs(net, kind)) runs.push_back(r);
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.first < b.first; });

    SimplifyResult res;
    std::vector<Run> hard;
    for (const Run& r : runs) {
        const std::string range = "[" + std::to_string(r.first) + ".." + std::to_string(r.last) + "]";
        bool soft = false;
        for (std::size_t i = r.first; i <= r.last; ++i) soft |= is_soft(net.layers[i]);
        if (soft) {
            res.log.push_back(std::string("SKIP ") + name(r.kind) + " layers " + range + ": soft mode");
        } else {
            res.log.push_back(std::string("FUSE ") + name(r.kind) + " layers " + range + " -> 1");
            hard.push_back(r);
        }
    }
    res.net = apply_runs(net, hard);
    return res;
}

// ---- inequivalence witness

NetworkSpec d1e1_d1_instance(double a, double b, double c, double d, double a1, double b1,
                             std::optional<double> alpha) {
    auto first = DilationErosionLayer::zeros(2, 1, 1, false);
    first.s_plus = Matrix(1, 2, {a, b});
    first.s_minus = Matrix(1, 2, {-c, -d});
    auto second = DilationErosionLayer::zeros(2, 1, 0, false);
    second.s_plus = Matrix(1, 2, {a1, b1});
    NetworkSpec net{2, {first, second}};
    if (alpha) {
        auto lin = LinearLayer::zeros(1, 1, false);
        lin.w(0, 0) = *alpha;
        net.layers.emplace_back(lin);
    }
    net.validate();
    return net;
}

namespace {

enum class Pair { d1e1_d1, d1e1_d1_l, d2_e2_d1 };

Pair classify(const WitnessRequest& req) {
    const auto a = req.arch_a.str(), b = req.arch_b.str();
    if (a == "D1E1->D1E0" && b == "D1E0") return Pair::d1e1_d1;
    if (a == "D1E1->D1E0->L" && b == "D1E0->L") return Pair::d1e1_d1_l;
    if (a == "D2E0->D0E2->D1E0" && b == "D2E0->D1E0") return Pair::d2_e2_d1;
    throw InputError("inequivalence_witness: unsupported pair " + a + " vs " + b);
}

// Reference instances: an L-shaped sublevel set at level 0.
NetworkSpec reference_instance(Pair p) {
    switch (p) {
        case Pair::d1e1_d1: return d1e1_d1_instance(0, 0, 1, 1, 0, 2);
        case Pair::d1e1_d1_l: return d1e1_d1_instance(0, 0, 1, 1, 0, 2, 1.0);
        case Pair::d2_e2_d1: {
            // Far-off structuring values make the first layer the identity on the
            // default box, so f = min(x, y).
            auto l1 = DilationErosionLayer::zeros(2, 2, 0, false);
            l1.s_plus = Matrix(2, 2, {0, -64, -64, 0});
            auto l2 = DilationErosionLayer::zeros(2, 0, 2, false);
            l2.s_minus = Matrix(2, 2, {0, 0, 64, 64});
            auto l3 = DilationErosionLayer::zeros(2, 1, 0, false);
            return NetworkSpec{2, {l1, l2, l3}};
        }
    }
    return {};
}

NetworkSpec random_instance(const ArchTag& tag, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> q(-8, 8);  // quarter steps in [-2, 2]
    NetworkSpec net;
    net.input_dim = 2;
    std::size_t width = 2;
    for (const LayerTag& lt : tag.layers) {
        if (lt.kind == LayerTag::Kind::morph) {
            auto l = DilationErosionLayer::zeros(width, lt.n_dilation, lt.n_erosion, false);
            for (double& v : l.s_plus.data) v = q(rng) / 4.0;
            for (double& v : l.s_minus.data) v = q(rng) / 4.0;
            width = l.output_dim();
            net.layers.emplace_back(l);
        } else if (lt.kind == LayerTag::Kind::linear) {
            auto l = LinearLayer::zeros(width, 1, false);
            for (double& v : l.w.data) v = q(rng) / 4.0;
            width = 1;
            net.layers.emplace_back(l);
        } else {
            net.layers.emplace_back(SigmoidLayer{});
        }
    }
    net.validate();
    return net;
}

// mask(r, c) is the set membership at x = xs[c], y = ys[r].
std::optional<CornerTriple> find_corner(const std::vector<char>& mask, const std::vector<double>& xs,
                                        const std::vector<double>& ys) {
    const std::size_t g = xs.size();
    std::vector<std::ptrdiff_t> col_hit(g, -1), row_hit(g, -1);
    for (std::size_t r = 0; r < g; ++r)
        for (std::size_t c = 0; c < g; ++c)
            if (mask[r * g + c]) {
                if (col_hit[c] < 0) col_hit[c] = static_cast<std::ptrdiff_t>(r);
                if (row_hit[r] < 0) row_hit[r] = static_cast<std::ptrdiff_t>(c);
            }
    for (std::size_t r = 0; r < g; ++r) {
        if (row_hit[r] < 0) continue;
        for (std::size_t c = 0; c < g; ++c) {
            if (col_hit[c] < 0 || mask[r * g + c]) continue;
            return CornerTriple{xs[c], ys[static_cast<std::size_t>(col_hit[c])], xs[static_cast<std::size_t>(row_hit[r])],
                                ys[r]};
        }
    }
    return std::nullopt;
}

std::optional<Witness> search(const NetworkSpec& net, double level, const CompactBox& box, std::size_t g,
                              bool need_above) {
    std::vector<double> xs(g), ys(g);
    for (std::size_t i = 0; i < g; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(g - 1);
        xs[i] = box.lo[0] + t * (box.hi[0] - box.lo[0]);
        ys[i] = box.lo[1] + t * (box.hi[1] - box.lo[1]);
    }
    std::vector<char> below(g * g), above(g * g);
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < g; ++r)
        for (std::size_t c = 0; c < g; ++c) {
            const double x[2] = {xs[c], ys[r]};
            const bool in = forward_values(net, x)[0] <= level;
            below[r * g + c] = in;
            above[r * g + c] = !in;
        }
    auto lo = find_corner(below, xs, ys);
    if (!lo) return std::nullopt;
    Witness w{net, level, *lo, std::nullopt};
    if (need_above) {
        w.above = find_corner(above, xs, ys);
        if (!w.above) return std::nullopt;
    }
    return w;
}

}  // namespace

std::optional<Witness> inequivalence_witness(const WitnessRequest& req) {
    const Pair pair = classify(req);
    if (req.grid < 2) throw InputError("inequivalence_witness: grid must be at least 2x2");
    if (req.box.dim() != 2) throw DimensionError("inequivalence_witness: box must be 2-D");
    const bool need_above = pair == Pair::d1e1_d1_l;

    NetworkSpec first = req.params ? *req.params : reference_instance(pair);
    first.validate();
    if (first.input_dim != 2 || first.output_dim() != 1) throw DimensionError("inequivalence_witness: need f: R^2 -> R");
    if (!(ArchTag::of(first) == req.arch_a))
        throw InputError("inequivalence_witness: parameters do not match " + req.arch_a.str());

    if (auto w = search(first, req.level, req.box, req.grid, need_above)) return w;
    std::mt19937_64 rng(req.seed);
    for (std::size_t t = 0; t < req.trials; ++t)
        if (auto w = search(random_instance(req.arch_a, rng), req.level, req.box, req.grid, need_above)) return w;
    return std::nullopt;
}

bool verify_witness(const Witness& w) {
    auto f = [&](double x, double y) {
        const double p[2] = {x, y};
        return forward_values(w.net, p)[0];
    };
    const auto& b = w.below;
    bool ok = f(b.x1, b.y1) <= w.level && f(b.x2, b.y2) <= w.level && f(b.x1, b.y2) > w.level;
    if (w.above) {
        const auto& a = *w.above;
        ok = ok && f(a.x1, a.y1) > w.level && f(a.x2, a.y2) > w.level && f(a.x1, a.y2) <= w.level;
    }
    return ok;
}

}  // namespace morphnet
