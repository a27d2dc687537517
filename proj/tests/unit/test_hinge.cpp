#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "morphnet/errors.hpp"
#include "morphnet/hinge.hpp"
#include "oracles.hpp"

using namespace morphnet;

namespace {

struct Block {
    DilationErosionLayer de;
    LinearLayer lin;
};

Block random_block(std::mt19937_64& rng, std::size_t d, std::size_t n, std::size_t m, bool bias, bool lin_bias = false) {
    Block b{DilationErosionLayer::zeros(d, n, m, bias), LinearLayer::zeros(n + m, 1, lin_bias)};
    b.de.s_plus.data = oracle::uniform(rng, b.de.s_plus.data.size(), -3, 3);
    b.de.s_minus.data = oracle::uniform(rng, b.de.s_minus.data.size(), -3, 3);
    b.lin.w.data = oracle::uniform(rng, n + m, -2, 2);
    b.lin.b = oracle::uniform(rng, b.lin.b.size(), -1, 1);
    return b;
}

// (d+1)^l - 1 and d! C(l,d) (d+1)^(l-d) by direct enumeration for small cases.
std::uint64_t ipow(std::uint64_t b, std::size_t e) {
    std::uint64_t r = 1;
    while (e--) r *= b;
    return r;
}

std::uint64_t choose(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

}  // namespace

TEST_SUITE("hinge") {

TEST_CASE("single dilation neuron with unit weight") {
    auto de = DilationErosionLayer::zeros(2, 1, 0, false);
    auto lin = LinearLayer::zeros(1, 1, false);
    lin.w(0, 0) = 1;
    const auto dec = decompose(de, lin);
    REQUIRE(dec.terms.size() == 1);
    CHECK(dec.terms[0].alpha == 1);
    CHECK(dec.terms[0].theta == 1.0);
    CHECK(dec.terms[0].direction == 1);
    CHECK(dec.terms[0].rho == std::vector<double>{0, 0});
}

TEST_CASE("erosion neuron with positive weight") {
    auto de = DilationErosionLayer::zeros(2, 0, 1, false);
    de.s_minus.data = {1, -1};
    auto lin = LinearLayer::zeros(1, 1, false);
    lin.w(0, 0) = 2;
    const auto dec = decompose(de, lin);
    REQUIRE(dec.terms.size() == 1);
    CHECK(dec.terms[0].alpha == -1);
    CHECK(dec.terms[0].theta == 2.0);
    CHECK(dec.terms[0].rho == std::vector<double>{2, -2});
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto x = oracle::uniform(rng, 2, -5, 5);
        CHECK(std::abs(eval_hinge_sum(dec, x) - 2 * oracle::brute_min_diff(x, {1, -1})) <= 1e-12);
    }
}

TEST_CASE("all four sign cases reproduce the block") {
    for (double w : {1.5, -1.5})
        for (bool erosion : {false, true}) {
            auto de = DilationErosionLayer::zeros(2, erosion ? 0 : 1, erosion ? 1 : 0, true);
            (erosion ? de.s_minus : de.s_plus).data = {0.5, -1.0, 2.0};
            auto lin = LinearLayer::zeros(1, 1, false);
            lin.w(0, 0) = w;
            const auto dec = decompose(de, lin);
            const auto& t = dec.terms[0];
            CHECK(t.theta == 1.5);
            CHECK(t.signed_weight() == w);
            for (double x : {-3.0, 0.0, 2.5})
                for (double y : {-1.0, 4.0}) {
                    const std::vector<double> xa{x, y, 0.0}, s{0.5, -1.0, 2.0};
                    const double z = erosion ? oracle::brute_min_diff(xa, s) : oracle::brute_max_sum(xa, s);
                    CHECK(std::abs(eval_hinge_sum(dec, std::vector<double>{x, y}) - w * z) <= 1e-12);
                }
        }
}

TEST_CASE("zero weights keep their term") {
    auto de = DilationErosionLayer::zeros(2, 1, 1, false);
    de.s_plus.data = {3, 4};
    de.s_minus.data = {1, 2};
    auto lin = LinearLayer::zeros(2, 1, false);
    const auto dec = decompose(de, lin);
    REQUIRE(dec.terms.size() == 2);
    for (const auto& t : dec.terms) {
        CHECK(t.alpha == 1);
        CHECK(t.theta == 0.0);
        CHECK(t.rho == std::vector<double>{0, 0});
    }
}

TEST_CASE("eval_hinge_sum basics") {
    HingeDecomposition empty;
    empty.input_dim = 3;
    CHECK(eval_hinge_sum(empty, Vector{1, 2, 3}) == 0.0);
    HingeDecomposition one;
    one.input_dim = 3;
    one.terms.push_back(HingeTerm{1, 1.0, 1, {0, 0, 0}});
    CHECK(eval_hinge_sum(one, Vector{1, 7, 3}) == 7.0);
    CHECK_THROWS_AS(eval_hinge_sum(one, Vector{1, 2}), DimensionError);
}

TEST_CASE("decomposition equals forward_block on random blocks") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const bool bias = trial % 2 == 0;
        const Block b = random_block(rng, 3, 2, 2, bias, trial % 3 == 0);
        const auto dec = decompose(b.de, b.lin);
        CHECK(dec.terms.size() == 4);
        for (std::size_t i = 0; i < dec.terms.size(); ++i) {
            CHECK(dec.terms[i].theta >= 0.0);
            CHECK((dec.terms[i].alpha == 1 || dec.terms[i].alpha == -1));
            CHECK(dec.terms[i].signed_weight() == b.lin.w(0, i));
        }
        for (int p = 0; p < 10000 / 20; ++p) {
            const Vector x(oracle::uniform(rng, 3, -10, 10));
            CHECK(std::abs(eval_hinge_sum(dec, x) - forward_block(b.de, b.lin, x)[0]) <= 1e-12);
        }
    }
}

TEST_CASE("decompose preconditions") {
    std::mt19937_64 rng(3);
    Block b = random_block(rng, 2, 1, 1, false);
    auto soft = b.de;
    soft.mode = LayerMode::smooth(5);
    CHECK_THROWS_AS(decompose(soft, b.lin), InputError);
    CHECK_THROWS_AS(decompose(b.de, LinearLayer::zeros(2, 2, false)), DimensionError);
}

TEST_CASE("hyperplane bounds") {
    auto h = hyperplane_bounds(2, 2, true);
    CHECK(h.total == 8);
    CHECK(h.non_axis_parallel == 2);
    CHECK(hyperplane_bounds(2, 2, false).total == 3);
    CHECK(hyperplane_bounds(3, 2, true).non_axis_parallel == 0);
    for (std::size_t d = 1; d <= 4; ++d)
        for (std::size_t l = 1; l <= 7; ++l) {
            std::uint64_t fact = 1;
            for (std::size_t i = 2; i <= d; ++i) fact *= i;
            const auto with = hyperplane_bounds(d, l, true), without = hyperplane_bounds(d, l, false);
            CHECK(with.total == ipow(d + 1, l) - 1);
            CHECK(without.total == ipow(d, l) - 1);
            CHECK(with.non_axis_parallel == (l < d ? 0 : fact * choose(l, d) * ipow(d + 1, l - d)));
            CHECK(without.non_axis_parallel == (l < d ? 0 : fact * choose(l, d) * ipow(d, l - d)));
        }
    CHECK(hyperplane_bounds(1, 63, false).total == 0);
    CHECK(hyperplane_bounds(1, 63, false).non_axis_parallel == 63);
    CHECK(hyperplane_bounds(2, 30, true).total == ipow(3, 30) - 1);
    CHECK(hyperplane_bounds(2, 30, true).non_axis_parallel == 2 * choose(30, 2) * ipow(3, 28));
    CHECK_THROWS_AS(hyperplane_bounds(1, 63, true), InputError);  // 63 * 2^62
    CHECK_THROWS_AS(hyperplane_bounds(1, 64, true), InputError);
    CHECK_THROWS_AS(hyperplane_bounds(40, 40, true), InputError);
    CHECK_THROWS_AS(hyperplane_bounds(0, 2, true), InputError);
}

TEST_CASE("regions: one flat dilation neuron splits along x1 = x2") {
    auto de = DilationErosionLayer::zeros(2, 1, 0, false);
    auto lin = LinearLayer::zeros(1, 1, false);
    lin.w(0, 0) = 1;
    const auto rep = enumerate_regions(de, lin, CompactBox::cube(2, -1, 1), 64);
    CHECK(rep.region_count() == 2);
    CHECK(rep.pieces[0].slope[0] == 1.0);
    CHECK(rep.pieces[1].slope[1] == 1.0);
}

TEST_CASE("regions: all-zero block is a single region") {
    auto de = DilationErosionLayer::zeros(2, 1, 1, true);
    auto lin = LinearLayer::zeros(2, 1, false);
    CHECK(enumerate_regions(de, lin, CompactBox::cube(2, -1, 1), 32).region_count() == 1);
}

TEST_CASE("regions never exceed the hyperplane bound and match neuron-level argmax") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t l = 1 + trial % 3;
        const std::size_t n = rng() % (l + 1);
        const bool bias = trial % 2 == 0;
        Block b = random_block(rng, 2, n, l - n, bias, true);
        for (double& w : b.lin.w.data)
            if (w == 0.0) w = 1.0;
        const auto rep = enumerate_regions(b.de, b.lin, CompactBox::cube(2, -4, 4), 96);
        CHECK(rep.region_count() <= hyperplane_bounds(2, l, bias).total + 1);

        // With nonzero weights each term's argmax is its neuron's selected index.
        std::map<std::vector<std::size_t>, std::uint32_t> seen;
        for (std::size_t r = 0; r < rep.resolution; ++r)
            for (std::size_t c = 0; c < rep.resolution; ++c) {
                std::vector<double> xa{rep.cell_x1(c), rep.cell_x2(r)};
                if (bias) xa.push_back(0.0);
                auto selected = [&](std::span<const double> s, NeuronKind kind) {
                    const auto g = hard_subgrad(Vector(xa), Vector(s), kind);
                    return static_cast<std::size_t>(std::find(g.dx.begin(), g.dx.end(), 1.0) - g.dx.begin());
                };
                std::vector<std::size_t> sig;
                for (std::size_t i = 0; i < n; ++i) sig.push_back(selected(b.de.s_plus.row(i), NeuronKind::dilation));
                for (std::size_t j = 0; j < l - n; ++j) sig.push_back(selected(b.de.s_minus.row(j), NeuronKind::erosion));
                const auto id = rep.cell_signature[r * rep.resolution + c];
                CHECK(rep.signatures[id] == sig);
                const double x[2] = {xa[0], xa[1]};
                const auto& p = rep.pieces[id];
                CHECK(std::abs(p.slope[0] * x[0] + p.slope[1] * x[1] + p.intercept -
                               rep.cell_value[r * rep.resolution + c]) <= 1e-9);
            }
    }
}

TEST_CASE("region enumeration needs 2-D input; CSV export") {
    std::mt19937_64 rng(5);
    const Block b3 = random_block(rng, 3, 1, 1, false);
    CHECK_THROWS_AS(enumerate_regions(b3.de, b3.lin, CompactBox::cube(3, -1, 1), 8), DimensionError);

    const Block b = random_block(rng, 2, 1, 1, true);
    const auto rep = enumerate_regions(b.de, b.lin, CompactBox::cube(2, -1, 1), 4);
    const auto path = std::filesystem::temp_directory_path() / "morphnet_regions_test.csv";
    write_region_csv(path, rep);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x1,x2,signature_id,value");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 16);
    std::filesystem::remove(path);
}

}  // TEST_SUITE
