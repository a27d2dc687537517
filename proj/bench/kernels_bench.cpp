// Serial reference vs OpenMP kernels. Thread-count arguments use
// omp_set_num_threads, so "/1" rows are the single-thread baseline.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <algorithm>
#include <random>

#include "morphnet/constructor.hpp"
#include "morphnet/dataset.hpp"
#include "morphnet/hinge.hpp"
#include "morphnet/model_io.hpp"
#include "morphnet/morph2d.hpp"
#include "morphnet/train.hpp"

using namespace morphnet;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

ImageGrid image(std::size_t n) { return ImageGrid(n, n, 1, uniform(n * n, 0, 1, 1)); }

const StructuringElement2D& element() {
    static const StructuringElement2D s(5, 5, uniform(25, -0.2, 0.2, 2));
    return s;
}

// at least 2 so the comparison row exists on single-core hosts
int max_threads() { return std::max(2, omp_get_num_procs()); }

void BM_dilate2d_reference(benchmark::State& st) {
    const auto x = image(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::dilate2d(x, element()));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_dilate2d_parallel(benchmark::State& st) {
    const auto x = image(static_cast<std::size_t>(st.range(0)));
    omp_set_num_threads(static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(dilate2d(x, element()));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_block2d_forward(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    auto blk = MorphBlock2D::zeros(3, 6, 6, 3, 3, 4);
    blk.se_plus = uniform(blk.se_plus.size(), -0.5, 0.5, 3);
    blk.se_minus = uniform(blk.se_minus.size(), -0.5, 0.5, 4);
    blk.w.data = uniform(blk.w.data.size(), -1, 1, 5);
    const ImageGrid x(128, 128, 3, uniform(128 * 128 * 3, 0, 1, 6));
    for (auto _ : st) benchmark::DoNotOptimize(forward_block2d(blk, x));
}

void BM_enumerate_regions(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    auto de = DilationErosionLayer::zeros(2, 3, 3, true);
    de.s_plus.data = uniform(de.s_plus.data.size(), -3, 3, 7);
    de.s_minus.data = uniform(de.s_minus.data.size(), -3, 3, 8);
    auto lin = LinearLayer::zeros(6, 1, true);
    lin.w.data = uniform(6, -2, 2, 9);
    for (auto _ : st) benchmark::DoNotOptimize(enumerate_regions(de, lin, CompactBox::cube(2, -5, 5), 512));
}

void BM_certify(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    std::vector<GeneralHinge> hs;
    for (unsigned h = 0; h < 4; ++h) {
        GeneralHinge g;
        g.alpha = h % 2 ? -1 : 1;
        for (unsigned p = 0; p < 3; ++p) g.planes.push_back({uniform(3, -2, 2, 10 + 3 * h + p), 0.5 * p});
        hs.push_back(g);
    }
    const auto box = CompactBox::cube(3, -5, 5);
    const auto made = build_two_layer(hs, box);
    for (auto _ : st)
        benchmark::DoNotOptimize(certify(made.net, [&](std::span<const double> x) { return eval_hinges(hs, x); }, box));
}

void BM_batch_gradient(benchmark::State& st) {
    omp_set_num_threads(static_cast<int>(st.range(0)));
    const auto data = gen_hinge_grid(-5, 5, 41);
    auto net = parse_architecture("de:16+bias@5,linear:1", 2);
    std::mt19937_64 rng(11);
    initialize_parameters(net, InitScheme{}, rng);
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    for (auto _ : st) benchmark::DoNotOptimize(batch_gradient(net, data, rows, LossKind::mse));
}

}  // namespace

BENCHMARK(BM_dilate2d_reference)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dilate2d_parallel)
    ->ArgsProduct({{256, 1024}, {1, max_threads()}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_block2d_forward)->Arg(1)->Arg(max_threads())->Unit(benchmark::kMillisecond);
BENCHMARK(BM_enumerate_regions)->Arg(1)->Arg(max_threads())->Unit(benchmark::kMillisecond);
BENCHMARK(BM_certify)->Arg(1)->Arg(max_threads())->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_gradient)->Arg(1)->Arg(max_threads())->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
