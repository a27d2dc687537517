#include "morphnet/tropical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "morphnet/errors.hpp"

namespace morphnet {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InputError(std::string(what) + ": non-finite entry");
    }
}

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) {
        throw DimensionError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
    if (a == 0) throw DimensionError("empty vector");
}

}  // namespace

Vector::Vector(std::initializer_list<double> values) : data_(values) {
    if (data_.empty()) throw DimensionError("Vector: length must be >= 1");
    require_finite(data_, "Vector");
}

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {
    if (data_.empty()) throw DimensionError("Vector: length must be >= 1");
    require_finite(data_, "Vector");
}

Vector::Vector(std::span<const double> values) : Vector(std::vector<double>(values.begin(), values.end())) {}

Vector operator-(const Vector& v) {
    std::vector<double> out(v.begin(), v.end());
    for (double& e : out) e = -e;
    return Vector(std::move(out));
}

Hardness::Hardness(double beta) : beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("Hardness: beta must be finite and > 0");
}

namespace kernel {

double dilate(std::span<const double> x, std::span<const double> s) {
    require_same_length(x.size(), s.size());
    double best = x[0] + s[0];
    for (std::size_t k = 1; k < x.size(); ++k) best = std::max(best, x[k] + s[k]);
    return best;
}

double erode(std::span<const double> x, std::span<const double> s) {
    require_same_length(x.size(), s.size());
    double best = x[0] - s[0];
    for (std::size_t k = 1; k < x.size(); ++k) best = std::min(best, x[k] - s[k]);
    return best;
}

std::size_t argmax_sum(std::span<const double> x, std::span<const double> s) {
    require_same_length(x.size(), s.size());
    std::size_t arg = 0;
    double best = x[0] + s[0];
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double v = x[k] + s[k];
        if (v > best) {
            best = v;
            arg = k;
        }
    }
    return arg;
}

std::size_t argmin_diff(std::span<const double> x, std::span<const double> s) {
    require_same_length(x.size(), s.size());
    std::size_t arg = 0;
    double best = x[0] - s[0];
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double v = x[k] - s[k];
        if (v < best) {
            best = v;
            arg = k;
        }
    }
    return arg;
}

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double e : v) m = std::max(m, e);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double e : v) acc += std::exp(e - m);
    return m + std::log(acc);
}

namespace {

// a_max + log(sum_k exp(beta (a_k - a_max))) / beta over a_k = x_k + sign * s_k.
// Shifting by the hard extremum keeps the result >= the hard value exactly.
template <typename Term>
double smooth_max(std::size_t n, double beta, Term term) {
    double a_max = term(0);
    for (std::size_t k = 1; k < n; ++k) a_max = std::max(a_max, term(k));
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += std::exp(beta * (term(k) - a_max));
    return a_max + std::log(acc) / beta;
}

template <typename Term>
void smooth_max_weights(std::size_t n, double beta, Term term, std::span<double> w) {
    double a_max = term(0);
    for (std::size_t k = 1; k < n; ++k) a_max = std::max(a_max, term(k));
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = std::exp(beta * (term(k) - a_max));
        acc += w[k];
    }
    for (std::size_t k = 0; k < n; ++k) w[k] /= acc;
}

}  // namespace

double soft_dilate(std::span<const double> x, std::span<const double> s, double beta) {
    require_same_length(x.size(), s.size());
    return smooth_max(x.size(), beta, [&](std::size_t k) { return x[k] + s[k]; });
}

double soft_erode(std::span<const double> x, std::span<const double> s, double beta) {
    require_same_length(x.size(), s.size());
    return -smooth_max(x.size(), beta, [&](std::size_t k) { return s[k] - x[k]; });
}

void soft_dilate_weights(std::span<const double> x, std::span<const double> s, double beta,
                         std::span<double> weights) {
    require_same_length(x.size(), s.size());
    require_same_length(x.size(), weights.size());
    smooth_max_weights(x.size(), beta, [&](std::size_t k) { return x[k] + s[k]; }, weights);
}

void soft_erode_weights(std::span<const double> x, std::span<const double> s, double beta,
                        std::span<double> weights) {
    require_same_length(x.size(), s.size());
    require_same_length(x.size(), weights.size());
    smooth_max_weights(x.size(), beta, [&](std::size_t k) { return s[k] - x[k]; }, weights);
}

}  // namespace kernel

double dilate(const Vector& x, const Vector& s) { return kernel::dilate(x.values(), s.values()); }

double erode(const Vector& x, const Vector& s) { return kernel::erode(x.values(), s.values()); }

double soft_dilate(const Vector& x, const Vector& s, Hardness h) {
    return kernel::soft_dilate(x.values(), s.values(), h.beta());
}

double soft_erode(const Vector& x, const Vector& s, Hardness h) {
    return kernel::soft_erode(x.values(), s.values(), h.beta());
}

NeuronGrad soft_dilate_grad(const Vector& x, const Vector& s, Hardness h) {
    NeuronGrad g{std::vector<double>(x.size()), {}};
    kernel::soft_dilate_weights(x.values(), s.values(), h.beta(), g.dx);
    g.ds = g.dx;
    return g;
}

NeuronGrad soft_erode_grad(const Vector& x, const Vector& s, Hardness h) {
    NeuronGrad g{std::vector<double>(x.size()), {}};
    kernel::soft_erode_weights(x.values(), s.values(), h.beta(), g.dx);
    g.ds = g.dx;
    for (double& v : g.ds) v = -v;
    return g;
}

NeuronGrad hard_subgrad(const Vector& x, const Vector& s, NeuronKind kind) {
    NeuronGrad g{std::vector<double>(x.size(), 0.0), std::vector<double>(x.size(), 0.0)};
    if (kind == NeuronKind::dilation) {
        const std::size_t k = kernel::argmax_sum(x.values(), s.values());
        g.dx[k] = 1.0;
        g.ds[k] = 1.0;
    } else {
        const std::size_t k = kernel::argmin_diff(x.values(), s.values());
        g.dx[k] = 1.0;
        g.ds[k] = -1.0;
    }
    return g;
}

TropicalMatrix::TropicalMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw DimensionError("TropicalMatrix: rows and cols must be >= 1");
    if (entries_.size() != rows * cols) throw DimensionError("TropicalMatrix: entry count != rows*cols");
    for (double v : entries_) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw InputError("TropicalMatrix: entries must be finite or -inf");
        }
    }
}

TropicalMatrix::TropicalMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : TropicalMatrix(rows.size(), rows.size() ? rows.begin()->size() : 0, [&] {
          std::vector<double> flat;
          const std::size_t width = rows.size() ? rows.begin()->size() : 0;
          for (const auto& r : rows) {
              if (r.size() != width) throw DimensionError("TropicalMatrix: ragged rows");
              flat.insert(flat.end(), r.begin(), r.end());
          }
          return flat;
      }()) {}

TropicalMatrix TropicalMatrix::identity(std::size_t n) {
    std::vector<double> e(n * n, neg_inf);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 0.0;
    return TropicalMatrix(n, n, std::move(e));
}

TropicalMatrix maxplus_matmul(const TropicalMatrix& a, const TropicalMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("maxplus_matmul: " + std::to_string(a.cols()) + " cols vs " +
                             std::to_string(b.rows()) + " rows");
    }
    std::vector<double> out(a.rows() * b.cols(), TropicalMatrix::neg_inf);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == TropicalMatrix::neg_inf) continue;
            for (std::size_t k = 0; k < b.cols(); ++k) {
                const double bjk = b(j, k);
                if (bjk == TropicalMatrix::neg_inf) continue;
                double& o = out[i * b.cols() + k];
                o = std::max(o, aij + bjk);
            }
        }
    }
    return TropicalMatrix(a.rows(), b.cols(), std::move(out));
}

}  // namespace morphnet
