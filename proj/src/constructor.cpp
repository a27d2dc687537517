#include "morphnet/constructor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <random>
#include <sstream>

#include "morphnet/errors.hpp"

namespace morphnet {

double Plane::eval(std::span<const double> x) const {
    double v = b;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * x[i];
    return v;
}

double GeneralHinge::eval(std::span<const double> x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const Plane& p : planes) best = std::max(best, p.eval(x));
    return alpha * best;
}

void GeneralHinge::validate(std::size_t d) const {
    if (alpha != 1 && alpha != -1) throw InputError("hinge: alpha must be +1 or -1");
    if (planes.empty()) throw InputError("hinge: needs at least one plane");
    for (const Plane& p : planes) {
        if (p.w.size() != d) throw DimensionError("hinge: plane has wrong dimension");
        if (!std::isfinite(p.b) || !std::all_of(p.w.begin(), p.w.end(), [](double v) { return std::isfinite(v); }))
            throw InputError("hinge: coefficients must be finite");
    }
}

double eval_hinges(const std::vector<GeneralHinge>& hinges, std::span<const double> x) {
    double sum = 0.0;
    for (const auto& h : hinges) sum += h.eval(x);
    return sum;
}

DilationErosionLayer hyperplane_layer(double c, std::size_t d) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("hyperplane_layer: C must be positive and finite");
    if (d == 0) throw DimensionError("hyperplane_layer: d must be >= 1");
    auto layer = DilationErosionLayer::zeros(d, d, 0, false);
    for (std::size_t l = 0; l < d; ++l)
        for (std::size_t j = 0; j < d; ++j) layer.s_plus(l, j) = j == l ? 0.0 : -3.0 * c;
    return layer;
}

double plane_magnitude_bound(const std::vector<GeneralHinge>& hinges, const CompactBox& box) {
    double bound = 0.0;
    for (const auto& h : hinges)
        for (const Plane& p : h.planes) {
            double hi = p.b, lo = p.b;
            for (std::size_t i = 0; i < p.w.size(); ++i) {
                const double a = p.w[i] * box.lo[i], c = p.w[i] * box.hi[i];
                hi += std::max(a, c);
                lo += std::min(a, c);
            }
            bound = std::max({bound, std::abs(hi), std::abs(lo)});
        }
    return bound;
}

Construction build_two_layer(const std::vector<GeneralHinge>& hinges, const CompactBox& box) {
    if (hinges.empty()) throw InputError("build_two_layer: hinge list is empty");
    const std::size_t d = box.dim();
    if (d == 0) throw DimensionError("build_two_layer: box has no axes");
    for (const auto& h : hinges) h.validate(d);

    Construction out;
    out.degenerate_box = box.degenerate();
    // The selector inequalities need strictly positive scales; any larger value works.
    out.c = box.bound() > 0.0 ? box.bound() : 1.0;
    const double b = plane_magnitude_bound(hinges, box);
    out.b = b > 0.0 ? b : 1.0;

    std::size_t k = 0;
    for (const auto& h : hinges) k += h.planes.size();
    const std::size_t m = hinges.size();

    auto planes = LinearLayer::zeros(d, k, true);
    auto select = DilationErosionLayer::zeros(k, m, 0, false);
    auto combine = LinearLayer::zeros(m, 1, true);
    std::size_t row = 0;
    for (std::size_t l = 0; l < m; ++l) {
        const std::size_t begin = row;
        for (const Plane& p : hinges[l].planes) {
            std::copy(p.w.begin(), p.w.end(), planes.w.row(row).begin());
            planes.b[row] = p.b;
            ++row;
        }
        for (std::size_t j = 0; j < k; ++j) select.s_plus(l, j) = (j >= begin && j < row) ? 0.0 : -3.0 * out.b;
        combine.w(0, l) = hinges[l].alpha;
    }

    out.net.input_dim = d;
    out.net.layers = {hyperplane_layer(out.c, d), planes, select, combine};
    out.net.validate();
    return out;
}

std::vector<double> halton_point(std::size_t i, std::size_t d) {
    static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                          43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    if (d > std::size(primes)) throw DimensionError("halton_point: dimension above 25 unsupported");
    std::vector<double> out(d);
    for (std::size_t a = 0; a < d; ++a) {
        const double base = primes[a];
        double f = 1.0, r = 0.0;
        for (std::size_t n = i + 1; n > 0; n /= primes[a]) {
            f /= base;
            r += f * static_cast<double>(n % primes[a]);
        }
        out[a] = r;
    }
    return out;
}

CertifyReport certify(const NetworkSpec& net, const std::function<double(std::span<const double>)>& target,
                      const CompactBox& box, std::size_t samples, std::uint64_t seed) {
    net.validate();
    if (samples == 0) throw InputError("certify: sample budget must be >= 1");
    if (net.input_dim != box.dim()) throw DimensionError("certify: box dimension does not match network input");
    if (net.output_dim() != 1) throw DimensionError("certify: network must have one output");
    const std::size_t d = box.dim();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift(d);
    for (double& s : shift) s = unit(rng);

    auto point = [&](std::size_t i) {
        auto u = halton_point(i, d);
        for (std::size_t a = 0; a < d; ++a) {
            double v = u[a] + shift[a];
            v -= std::floor(v);
            u[a] = box.lo[a] + v * (box.hi[a] - box.lo[a]);
        }
        return u;
    };

    std::vector<double> err(samples);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < samples; ++i) {
        const auto x = point(i);
        const double e = std::abs(forward_values(net, x)[0] - target(x));
        err[i] = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
    }
    CertifyReport rep;
    rep.samples = samples;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < samples; ++i)
        if (err[i] > err[worst]) worst = i;
    rep.max_abs_err = err[worst];
    rep.argmax = point(worst);
    return rep;
}

using nlohmann::json;

std::vector<GeneralHinge> hinges_from_json(const std::string& text) {
    std::vector<GeneralHinge> out;
    try {
        const json doc = json::parse(text);
        if (!doc.is_array()) throw FormatError("hinge JSON: top level must be an array");
        for (const json& h : doc) {
            GeneralHinge g;
            g.alpha = h.at("alpha").get<int>();
            for (const json& p : h.at("planes")) g.planes.push_back({p.at("w").get<std::vector<double>>(), p.at("b").get<double>()});
            out.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("hinge JSON: ") + e.what());
    }
    if (out.empty()) throw FormatError("hinge JSON: no hinges");
    const std::size_t d = out.front().planes.empty() ? 0 : out.front().planes.front().w.size();
    try {
        for (const auto& h : out) h.validate(d);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("hinge JSON: ") + e.what());
    }
    return out;
}

std::string hinges_to_json(const std::vector<GeneralHinge>& hinges) {
    json doc = json::array();
    for (const auto& h : hinges) {
        json planes = json::array();
        for (const Plane& p : h.planes) planes.push_back({{"w", p.w}, {"b", p.b}});
        doc.push_back({{"alpha", h.alpha}, {"planes", planes}});
    }
    return doc.dump(2);
}

std::vector<GeneralHinge> load_hinges(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return hinges_from_json(buf.str());
}

}  // namespace morphnet
