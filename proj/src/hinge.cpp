#include "morphnet/hinge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "morphnet/errors.hpp"
#include "morphnet/io_util.hpp"

namespace morphnet {

namespace {

HingeTerm make_term(std::span<const double> s, double w, NeuronKind kind) {
    HingeTerm t;
    t.direction = kind == NeuronKind::dilation ? 1 : -1;
    t.rho.assign(s.size(), 0.0);
    if (w == 0.0) return t;
    t.theta = std::abs(w);
    // dilation: w*max(x+s) = sign(w) * max(|w|x + |w|s)
    // erosion:  w*min(x-s) = -sign(w) * max(-|w|x + |w|s)
    const int sign = w > 0.0 ? 1 : -1;
    t.alpha = kind == NeuronKind::dilation ? sign : -sign;
    for (std::size_t k = 0; k < s.size(); ++k) t.rho[k] = t.theta * s[k];
    return t;
}

std::vector<double> augment(const HingeDecomposition& dec, std::span<const double> x) {
    if (x.size() != dec.input_dim) throw DimensionError("eval_hinge_sum: input has wrong length");
    std::vector<double> xa(x.begin(), x.end());
    if (dec.with_bias) xa.push_back(0.0);
    return xa;
}

}  // namespace

double HingeTerm::eval(std::span<const double> x_aug) const {
    double best = -std::numeric_limits<double>::infinity();
    const double slope = direction * theta;
    for (std::size_t k = 0; k < rho.size(); ++k) best = std::max(best, slope * x_aug[k] + rho[k]);
    return alpha * best;
}

std::size_t HingeTerm::argmax(std::span<const double> x_aug) const {
    std::size_t arg = 0;
    const double slope = direction * theta;
    double best = slope * x_aug[0] + rho[0];
    for (std::size_t k = 1; k < rho.size(); ++k) {
        const double v = slope * x_aug[k] + rho[k];
        if (v > best) {
            best = v;
            arg = k;
        }
    }
    return arg;
}

HingeDecomposition decompose(const DilationErosionLayer& layer, const LinearLayer& lin) {
    layer.validate();
    lin.validate();
    if (layer.mode.soft) throw InputError("decompose: block must be in hard mode");
    if (lin.output_dim() != 1) throw DimensionError("decompose: linear layer must have one output");
    if (lin.input_dim() != layer.output_dim()) throw DimensionError("decompose: linear width does not match block");

    HingeDecomposition dec;
    dec.input_dim = layer.input_dim;
    dec.with_bias = layer.with_bias;
    dec.offset = lin.with_bias ? lin.b.at(0) : 0.0;
    dec.terms.reserve(layer.output_dim());
    for (std::size_t i = 0; i < layer.n_dilation; ++i)
        dec.terms.push_back(make_term(layer.s_plus.row(i), lin.w(0, i), NeuronKind::dilation));
    for (std::size_t j = 0; j < layer.n_erosion; ++j)
        dec.terms.push_back(make_term(layer.s_minus.row(j), lin.w(0, layer.n_dilation + j), NeuronKind::erosion));
    return dec;
}

double eval_hinge_sum(const HingeDecomposition& dec, std::span<const double> x) {
    const auto xa = augment(dec, x);
    double sum = 0.0;
    for (const auto& t : dec.terms) sum += t.eval(xa);
    return sum + dec.offset;
}

double eval_hinge_sum(const HingeDecomposition& dec, const Vector& x) { return eval_hinge_sum(dec, x.values()); }

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw InputError("hyperplane_bounds: count exceeds 64 bits");
    return out;
}

std::uint64_t checked_pow(std::uint64_t base, std::size_t exp) {
    std::uint64_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) out = checked_mul(out, base);
    return out;
}

// C(n, k) by the multiplicative formula; every partial product is an integer.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t out = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t g = std::gcd(out, i);
        out = checked_mul(out / g, (n - k + i) / (i / g));
    }
    return out;
}

}  // namespace

HyperplaneBounds hyperplane_bounds(std::size_t d, std::size_t l, bool bias) {
    if (d == 0 || l == 0) throw InputError("hyperplane_bounds: d and l must be >= 1");
    const std::uint64_t base = bias ? d + 1 : d;
    HyperplaneBounds out;
    out.total = checked_pow(base, l) - 1;
    if (l >= d) {
        std::uint64_t fact = 1;
        for (std::size_t i = 2; i <= d; ++i) fact = checked_mul(fact, i);
        out.non_axis_parallel = checked_mul(checked_mul(fact, binomial(l, d)), checked_pow(base, l - d));
    }
    return out;
}

double RegionReport::cell_x1(std::size_t c) const {
    return box.lo[0] + (static_cast<double>(c) + 0.5) * (box.hi[0] - box.lo[0]) / static_cast<double>(resolution);
}

double RegionReport::cell_x2(std::size_t r) const {
    return box.lo[1] + (static_cast<double>(r) + 0.5) * (box.hi[1] - box.lo[1]) / static_cast<double>(resolution);
}

RegionReport enumerate_regions(const DilationErosionLayer& layer, const LinearLayer& lin, const CompactBox& box,
                               std::size_t resolution, double threshold) {
    if (layer.input_dim != 2 || box.dim() != 2) throw DimensionError("enumerate_regions: needs 2-D input");
    if (resolution == 0) throw InputError("enumerate_regions: resolution must be >= 1");
    const HingeDecomposition dec = decompose(layer, lin);
    const std::size_t l = dec.terms.size();
    const std::size_t width = dec.with_bias ? 3 : 2;

    RegionReport rep;
    rep.resolution = resolution;
    rep.box = box;
    const std::size_t cells = resolution * resolution;
    std::vector<std::size_t> raw(cells * l);
    rep.cell_value.assign(cells, 0.0);

#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < resolution; ++r) {
        for (std::size_t c = 0; c < resolution; ++c) {
            const double xa[3] = {rep.cell_x1(c), rep.cell_x2(r), 0.0};
            const std::span<const double> xs(xa, width);
            const std::size_t cell = r * resolution + c;
            double sum = 0.0;
            for (std::size_t t = 0; t < l; ++t) {
                raw[cell * l + t] = dec.terms[t].argmax(xs);
                sum += dec.terms[t].eval(xs);
            }
            rep.cell_value[cell] = sum + dec.offset;
        }
    }

    std::map<std::vector<std::size_t>, std::uint32_t> ids;
    for (std::size_t cell = 0; cell < cells; ++cell)
        ids.emplace(std::vector<std::size_t>(raw.begin() + cell * l, raw.begin() + (cell + 1) * l), 0);
    std::uint32_t next = 0;
    for (auto& [sig, id] : ids) {
        id = next++;
        rep.signatures.push_back(sig);
        AffinePiece p;
        p.intercept = dec.offset;
        for (std::size_t t = 0; t < l; ++t) {
            const HingeTerm& term = dec.terms[t];
            const std::size_t k = sig[t];
            if (k < 2) p.slope[k] += term.alpha * term.direction * term.theta;
            p.intercept += term.alpha * term.rho[k];
        }
        rep.pieces.push_back(p);
    }
    rep.cell_signature.resize(cells);
    std::vector<char> below(ids.size(), 0), above(ids.size(), 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto id = ids.at(std::vector<std::size_t>(raw.begin() + cell * l, raw.begin() + (cell + 1) * l));
        rep.cell_signature[cell] = id;
        (rep.cell_value[cell] <= threshold ? below : above)[id] = 1;
    }

    // Lines a·x + b·y + c = 0 normalized so the first nonzero coefficient is 1.
    std::set<std::array<double, 3>> lines;
    for (std::size_t i = 0; i < rep.pieces.size(); ++i) {
        if (!below[i] || !above[i]) continue;
        std::array<double, 3> line = {rep.pieces[i].slope[0], rep.pieces[i].slope[1],
                                      rep.pieces[i].intercept - threshold};
        const double lead = line[0] != 0.0 ? line[0] : line[1];
        if (lead == 0.0) continue;
        for (double& v : line) v = std::round(v / lead * 1e9) / 1e9;
        lines.insert(line);
    }
    rep.boundary_lines = lines.size();
    return rep;
}

void write_region_csv(const std::filesystem::path& path, const RegionReport& report) {
    write_atomically(path, [&](std::ostream& out) {
        out << std::setprecision(17) << "x1,x2,signature_id,value\n";
        for (std::size_t r = 0; r < report.resolution; ++r)
            for (std::size_t c = 0; c < report.resolution; ++c) {
                const std::size_t cell = r * report.resolution + c;
                out << report.cell_x1(c) << ',' << report.cell_x2(r) << ',' << report.cell_signature[cell] << ','
                    << report.cell_value[cell] << '\n';
            }
    });
}

}  // namespace morphnet
