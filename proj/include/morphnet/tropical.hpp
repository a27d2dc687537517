#pragma once

// Scalar morphological neurons (hard and log-sum-exp soft) and the
// max-plus matrix product that composes pure dilation layers.

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace morphnet {

/// Dense vector of finite reals. Length and values are fixed at construction.
class Vector {
public:
    Vector(std::initializer_list<double> values);
    explicit Vector(std::vector<double> values);
    explicit Vector(std::span<const double> values);

    std::size_t size() const noexcept { return data_.size(); }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& to_std() const noexcept { return data_; }

    auto begin() const noexcept { return data_.cbegin(); }
    auto end() const noexcept { return data_.cend(); }

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

Vector operator-(const Vector& v);

/// Hardness beta of the soft operators; always > 0.
class Hardness {
public:
    explicit Hardness(double beta);
    double beta() const noexcept { return beta_; }

private:
    double beta_;
};

enum class NeuronKind { dilation, erosion };

struct NeuronGrad {
    std::vector<double> dx;
    std::vector<double> ds;
};

double dilate(const Vector& x, const Vector& s);
double erode(const Vector& x, const Vector& s);
double soft_dilate(const Vector& x, const Vector& s, Hardness h);
double soft_erode(const Vector& x, const Vector& s, Hardness h);

/// d/dx and d/ds of soft_dilate: both equal softmax(beta * (x + s)).
NeuronGrad soft_dilate_grad(const Vector& x, const Vector& s, Hardness h);
/// d/dx = softmax(beta * (s - x)), d/ds = -d/dx.
NeuronGrad soft_erode_grad(const Vector& x, const Vector& s, Hardness h);
/// One-hot subgradient at the selected extremum, lowest index on ties.
NeuronGrad hard_subgrad(const Vector& x, const Vector& s, NeuronKind kind);

/// Row-major matrix over the max-plus semiring. Entries are finite or -inf.
class TropicalMatrix {
public:
    static constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    TropicalMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    TropicalMatrix(std::initializer_list<std::initializer_list<double>> rows);

    /// 0 on the diagonal, -inf elsewhere.
    static TropicalMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(entries_).subspan(i * cols_, cols_);
    }
    const std::vector<double>& entries() const noexcept { return entries_; }

    friend bool operator==(const TropicalMatrix&, const TropicalMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> entries_;
};

/// out(i,k) = max_j A(i,j) + B(j,k); -inf annihilates.
TropicalMatrix maxplus_matmul(const TropicalMatrix& a, const TropicalMatrix& b);

// Span-level kernels used on hot paths. Lengths are checked, finiteness is
// the caller's responsibility.
namespace kernel {

double dilate(std::span<const double> x, std::span<const double> s);
double erode(std::span<const double> x, std::span<const double> s);
double soft_dilate(std::span<const double> x, std::span<const double> s, double beta);
double soft_erode(std::span<const double> x, std::span<const double> s, double beta);
std::size_t argmax_sum(std::span<const double> x, std::span<const double> s);
std::size_t argmin_diff(std::span<const double> x, std::span<const double> s);
/// Writes softmax(beta * (x + s)) into weights.
void soft_dilate_weights(std::span<const double> x, std::span<const double> s, double beta,
                         std::span<double> weights);
/// Writes softmax(beta * (s - x)) into weights.
void soft_erode_weights(std::span<const double> x, std::span<const double> s, double beta,
                        std::span<double> weights);
/// m + log(sum exp(v - m)) with m = max v; -inf entries contribute zero.
double log_sum_exp(std::span<const double> v);

}  // namespace kernel

}  // namespace morphnet
