// morphnet: dataset generation, training, evaluation and the exact rewrites.
// Exit codes: 0 ok, 1 bad input, 2 a verification step failed.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "morphnet/constructor.hpp"
#include "morphnet/dataset.hpp"
#include "morphnet/errors.hpp"
#include "morphnet/hinge.hpp"
#include "morphnet/image.hpp"
#include "morphnet/io_util.hpp"
#include "morphnet/loss.hpp"
#include "morphnet/model_io.hpp"
#include "morphnet/morph2d.hpp"
#include "morphnet/parallel.hpp"
#include "morphnet/rewrite.hpp"
#include "morphnet/train.hpp"

namespace fs = std::filesystem;
using namespace morphnet;

namespace {

constexpr int kVerifyFailed = 2;

struct VerifyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool binary_targets(const Dataset& data) {
    for (double t : data.targets)
        if (t != 0.0 && t != 1.0) return false;
    return data.target_dim == 1;
}

bool ends_in_sigmoid(const NetworkSpec& net) {
    return !net.layers.empty() && std::holds_alternative<SigmoidLayer>(net.layers.back());
}

CompactBox box_from(const std::vector<double>& bounds, std::size_t d) {
    if (bounds.size() == 2) return CompactBox::cube(d, bounds[0], bounds[1]);
    if (bounds.size() == 2 * d) {
        std::vector<double> lo(d), hi(d);
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = bounds[2 * i];
            hi[i] = bounds[2 * i + 1];
        }
        return CompactBox(lo, hi);
    }
    throw InputError("--box takes 'lo hi' or one 'lo hi' pair per axis");
}

// ---- gen-circles / gen-hinge-grid

struct GenCircles {
    std::size_t n = 500;
    double r_inner = 1.0, r_outer = 2.0, noise = 0.1;
    std::uint64_t seed = 0;
    fs::path out;

    void run() const {
        const auto data = gen_two_circles(n, r_inner, r_outer, noise, seed);
        write_dataset_csv(out, data);
        std::cout << "wrote " << data.size() << " rows to " << out.string() << '\n';
    }
};

struct GenHingeGrid {
    double lo = -5.0, hi = 5.0;
    std::size_t res = 101;
    fs::path out;

    void run() const {
        const auto data = gen_hinge_grid(lo, hi, res);
        write_dataset_csv(out, data);
        std::cout << "wrote " << data.size() << " rows to " << out.string() << '\n';
    }
};

// ---- train

struct Train {
    std::string arch;
    fs::path data_path, out, trace;
    std::string loss = "auto", optimizer = "adam", init = "defaults";
    std::size_t epochs = 2000, batch = 32;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    bool anneal = false, hard = false;
    double beta = 10.0;

    void run() const {
        const Dataset data = read_dataset_csv(data_path);
        NetworkSpec net =
            parse_architecture(arch, data.feature_dim, hard ? LayerMode::hard() : LayerMode::smooth(beta));
        if (net.output_dim() != data.target_dim) throw DimensionError("architecture output width != target width");

        TrainConfig cfg;
        if (loss == "auto") {
            cfg.loss = ends_in_sigmoid(net) ? LossKind::bce : LossKind::mse;
        } else if (loss == "mse") {
            cfg.loss = LossKind::mse;
        } else if (loss == "bce") {
            cfg.loss = LossKind::bce;
        } else {
            throw InputError("--loss must be auto, mse or bce (dssim applies to image models only)");
        }
        if (optimizer == "adam") {
            cfg.optimizer = Adam{lr};
        } else if (optimizer == "sgd") {
            cfg.optimizer = Sgd{lr};
        } else {
            throw InputError("--optimizer must be adam or sgd");
        }
        if (init == "defaults") {
            cfg.init.kind = InitScheme::Kind::defaults;
        } else if (init == "zeros") {
            cfg.init.kind = InitScheme::Kind::zeros;
        } else if (init == "uniform") {
            cfg.init.kind = InitScheme::Kind::uniform;
        } else {
            throw InputError("--init must be defaults, uniform or zeros");
        }
        cfg.epochs = epochs;
        cfg.batch_size = std::min(batch, data.size());
        cfg.seed = seed;
        if (anneal) cfg.anneal = BetaAnneal{};

        const TrainResult res = train(std::move(net), data, cfg);
        save_model(out, res.net);
        if (!trace.empty()) {
            write_atomically(trace, [&](std::ostream& os) {
                os.precision(17);
                os << "epoch,loss\n";
                for (std::size_t e = 0; e < res.loss_trace.size(); ++e) os << e + 1 << ',' << res.loss_trace[e] << '\n';
            });
        }
        std::cout.precision(6);
        std::cout << "arch " << describe(res.net) << "\nfinal_loss " << res.loss_trace.back() << '\n';
        if (binary_targets(data) && res.net.output_dim() == 1)
            std::cout << "accuracy " << classification_accuracy(res.net, data) << '\n';
    }
};

// ---- eval

struct Eval {
    fs::path model, data_path, hinges;
    std::vector<double> box;
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    double tol = -1.0;

    void run() const {
        const NetworkSpec net = load_model(model);
        if (data_path.empty() && hinges.empty()) throw InputError("eval needs --data or --hinges");
        std::cout.precision(10);
        if (!data_path.empty()) {
            const Dataset data = read_dataset_csv(data_path);
            if (data.feature_dim != net.input_dim || data.target_dim != net.output_dim())
                throw DimensionError("dataset shape does not match the model");
            std::cout << "mse " << dataset_loss(net, data, LossKind::mse) << '\n';
            if (binary_targets(data) && net.output_dim() == 1)
                std::cout << "accuracy " << classification_accuracy(net, data) << '\n';
        }
        if (!hinges.empty()) {
            const auto hs = load_hinges(hinges);
            const CompactBox b = box_from(box.empty() ? std::vector<double>{-5.0, 5.0} : box, net.input_dim);
            const auto rep = certify(net, [&](std::span<const double> x) { return eval_hinges(hs, x); }, b, samples, seed);
            std::cout << "max_abs_err " << rep.max_abs_err << '\n';
            if (tol >= 0.0 && !(rep.max_abs_err <= tol))
                throw VerifyFailure("max_abs_err exceeds tolerance " + std::to_string(tol));
        }
    }
};

// ---- decision-grid

struct DecisionGrid {
    fs::path model, out;
    std::vector<double> box{-3.0, 3.0};
    std::size_t res = 512;
    double threshold = 0.0;

    void run() const {
        const NetworkSpec net = load_model(model);
        if (net.layers.size() < 2) throw InputError("decision-grid needs a morphological layer followed by a linear layer");
        const auto* de = std::get_if<DilationErosionLayer>(&net.layers[0]);
        const auto* lin = std::get_if<LinearLayer>(&net.layers[1]);
        if (!de || !lin) throw InputError("decision-grid needs a morphological layer followed by a linear layer");
        // A soft block is enumerated through its hard counterpart.
        auto hard = *de;
        hard.mode = LayerMode::hard();
        const auto rep = enumerate_regions(hard, *lin, box_from(box, 2), res, threshold);
        write_region_csv(out, rep);
        const auto bound = hyperplane_bounds(2, de->output_dim(), de->with_bias);
        std::cout << "regions " << rep.region_count() << "\nboundary_lines " << rep.boundary_lines
                  << "\nhyperplane_bound " << bound.total << "\nnon_axis_parallel_bound " << bound.non_axis_parallel
                  << '\n';
    }
};

// ---- simplify

struct Simplify {
    fs::path model, out;

    void run() const {
        const NetworkSpec net = load_model(model);
        const auto res = simplify(net);
        save_model(out, res.net);
        for (const auto& line : res.log) std::cout << line << '\n';
        std::cout << "layers " << net.layers.size() << " -> " << res.net.layers.size() << '\n';
    }
};

// ---- construct

struct Construct {
    fs::path hinges, out;
    std::vector<double> box{-5.0, 5.0};
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    double tol = 1e-9;

    void run() const {
        const auto hs = load_hinges(hinges);
        const std::size_t d = hs.front().planes.front().w.size();
        const CompactBox b = box_from(box, d);
        const auto made = build_two_layer(hs, b);
        save_model(out, made.net);
        if (made.degenerate_box) std::cerr << "warning: box has a zero-width axis\n";
        const auto rep = certify(made.net, [&](std::span<const double> x) { return eval_hinges(hs, x); }, b, samples, seed);
        std::cout.precision(10);
        std::cout << "arch " << describe(made.net) << "\nC " << made.c << "\nB " << made.b << "\nsamples " << rep.samples
                  << "\nmax_abs_err " << rep.max_abs_err << "\nargmax";
        for (double v : rep.argmax) std::cout << ' ' << v;
        std::cout << '\n';
        if (!(rep.max_abs_err <= tol)) throw VerifyFailure("certification failed: max_abs_err above " + std::to_string(tol));
        std::cout << "certified\n";
    }
};

// ---- filter2d

struct Filter2d {
    fs::path in, out;
    std::string op = "dilate", padding = "infinite";
    std::size_t size = 3;

    void run() const {
        if (size == 0) throw InputError("--size must be >= 1");
        const ImageGrid img = read_pgm(in);
        const auto se = StructuringElement2D::flat(size, size);
        Padding pad;
        if (padding == "infinite") {
            pad = Padding::infinite;
        } else if (padding == "replicate") {
            pad = Padding::replicate;
        } else {
            throw InputError("--padding must be infinite or replicate");
        }
        ImageGrid res;
        if (op == "dilate") {
            res = dilate2d(img, se, pad);
        } else if (op == "erode") {
            res = erode2d(img, se, pad);
        } else if (op == "open") {
            res = dilate2d(erode2d(img, se, pad), se, pad);
        } else if (op == "close") {
            res = erode2d(dilate2d(img, se, pad), se, pad);
        } else if (op == "gradient") {
            const auto d = dilate2d(img, se, pad), e = erode2d(img, se, pad);
            res = d;
            for (std::size_t k = 0; k < res.data().size(); ++k) res.data()[k] = d.data()[k] - e.data()[k];
        } else {
            throw InputError("--op must be dilate, erode, open, close or gradient");
        }
        write_pgm(out, res);
        std::cout << op << ' ' << res.height() << 'x' << res.width() << " -> " << out.string() << '\n';
    }
};

// ---- dehaze-toy

struct DehazeToy {
    std::size_t size = 64;
    std::uint64_t seed = 0;
    double airlight = 0.8;
    fs::path out_dir;

    void run() const {
        if (size < 8) throw InputError("--size must be >= 8");
        if (!(airlight > 0.0 && airlight <= 1.0)) throw InputError("--airlight must lie in (0, 1]");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        ImageGrid clear(size, size), t(size, size), k(size, size);
        const double fx = 1.0 + 4.0 * unit(rng), fy = 1.0 + 4.0 * unit(rng), ph = 6.28 * unit(rng);
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) {
                const double u = static_cast<double>(i) / size, v = static_cast<double>(j) / size;
                clear(i, j) = 0.5 + 0.4 * std::sin(6.28 * fx * u + ph) * std::cos(6.28 * fy * v);
                t(i, j) = 0.3 + 0.7 * (1.0 - u);  // haze thickens towards the bottom rows
                k(i, j) = airlight * (1.0 - t(i, j));
            }
        const ImageGrid hazy = synthesize_haze(clear, t, k);
        const ImageGrid rec = dehaze_reconstruct(hazy, t, k);
        double err = 0.0;
        for (std::size_t p = 0; p < rec.data().size(); ++p) err = std::max(err, std::abs(rec.data()[p] - clear.data()[p]));
        const double dssim = loss_dssim(clear, rec, 8, 4);
        std::cout.precision(6);
        std::cout << "max_abs_err " << err << "\ndssim " << dssim << '\n';
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            write_pgm(out_dir / "clear.pgm", clear);
            write_pgm(out_dir / "hazy.pgm", hazy);
            write_pgm(out_dir / "recovered.pgm", rec);
        }
        if (err > 1e-12) throw VerifyFailure("haze round-trip error above 1e-12");
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Morphological networks: train, evaluate, rewrite and construct"};
    app.require_subcommand(1);

    GenCircles gc;
    auto* c_gc = app.add_subcommand("gen-circles", "two noisy concentric circles, label 0 inner / 1 outer");
    c_gc->add_option("--n", gc.n, "points per class");
    c_gc->add_option("--r-inner", gc.r_inner);
    c_gc->add_option("--r-outer", gc.r_outer);
    c_gc->add_option("--noise", gc.noise, "Gaussian sd per coordinate");
    c_gc->add_option("--seed", gc.seed);
    c_gc->add_option("-o,--out", gc.out)->required();

    GenHingeGrid gh;
    auto* c_gh = app.add_subcommand("gen-hinge-grid", "grid samples of max(x+y, 0)");
    c_gh->add_option("--lo", gh.lo);
    c_gh->add_option("--hi", gh.hi);
    c_gh->add_option("--res", gh.res, "points per axis");
    c_gh->add_option("-o,--out", gh.out)->required();

    Train tr;
    auto* c_tr = app.add_subcommand("train", "train a network on a CSV dataset");
    c_tr->add_option("--arch", tr.arch, "e.g. de:2+bias,linear:1,sigmoid")->required();
    c_tr->add_option("--data", tr.data_path)->required()->check(CLI::ExistingFile);
    c_tr->add_option("-o,--out", tr.out, "model JSON")->required();
    c_tr->add_option("--trace", tr.trace, "loss-trace CSV");
    c_tr->add_option("--loss", tr.loss, "auto, mse or bce");
    c_tr->add_option("--optimizer", tr.optimizer, "adam or sgd");
    c_tr->add_option("--init", tr.init, "defaults, uniform or zeros");
    c_tr->add_option("--epochs", tr.epochs);
    c_tr->add_option("--batch", tr.batch);
    c_tr->add_option("--lr", tr.lr);
    c_tr->add_option("--seed", tr.seed);
    c_tr->add_option("--beta", tr.beta, "hardness for layers written without @beta");
    c_tr->add_flag("--hard", tr.hard, "layers written without @beta use hard max/min");
    c_tr->add_flag("--anneal", tr.anneal, "raise soft-layer hardness during training");

    Eval ev;
    auto* c_ev = app.add_subcommand("eval", "MSE/accuracy on data, or max error against a hinge sum");
    c_ev->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
    c_ev->add_option("--data", ev.data_path)->check(CLI::ExistingFile);
    c_ev->add_option("--hinges", ev.hinges)->check(CLI::ExistingFile);
    c_ev->add_option("--box", ev.box, "lo hi, or lo hi per axis");
    c_ev->add_option("--samples", ev.samples);
    c_ev->add_option("--seed", ev.seed);
    c_ev->add_option("--tol", ev.tol, "exit 2 when max_abs_err is larger");

    DecisionGrid dg;
    auto* c_dg = app.add_subcommand("decision-grid", "linear-region map of a 2-D block as CSV");
    c_dg->add_option("--model", dg.model)->required()->check(CLI::ExistingFile);
    c_dg->add_option("-o,--out", dg.out)->required();
    c_dg->add_option("--box", dg.box, "lo hi, or lo hi per axis");
    c_dg->add_option("--res", dg.res);
    c_dg->add_option("--threshold", dg.threshold, "decision level of the block output");

    Simplify sp;
    auto* c_sp = app.add_subcommand("simplify", "fuse runs of pure dilation or erosion layers");
    c_sp->add_option("--model", sp.model)->required()->check(CLI::ExistingFile);
    c_sp->add_option("-o,--out", sp.out)->required();

    Construct cs;
    auto* c_cs = app.add_subcommand("construct", "exact network for a hinge sum, then certify it");
    c_cs->add_option("--hinges", cs.hinges)->required()->check(CLI::ExistingFile);
    c_cs->add_option("-o,--out", cs.out)->required();
    c_cs->add_option("--box", cs.box, "lo hi, or lo hi per axis");
    c_cs->add_option("--samples", cs.samples);
    c_cs->add_option("--seed", cs.seed);
    c_cs->add_option("--tol", cs.tol);

    Filter2d fl;
    auto* c_fl = app.add_subcommand("filter2d", "flat grayscale morphology on a PGM image");
    c_fl->add_option("--in", fl.in)->required()->check(CLI::ExistingFile);
    c_fl->add_option("-o,--out", fl.out)->required();
    c_fl->add_option("--op", fl.op, "dilate, erode, open, close or gradient");
    c_fl->add_option("--size", fl.size, "square element side");
    c_fl->add_option("--padding", fl.padding, "infinite or replicate");

    DehazeToy dh;
    auto* c_dh = app.add_subcommand("dehaze-toy", "synthetic haze round-trip");
    c_dh->add_option("--size", dh.size);
    c_dh->add_option("--seed", dh.seed);
    c_dh->add_option("--airlight", dh.airlight);
    c_dh->add_option("--out-dir", dh.out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        configure_threads_from_env();
        if (*c_gc) gc.run();
        if (*c_gh) gh.run();
        if (*c_tr) tr.run();
        if (*c_ev) ev.run();
        if (*c_dg) dg.run();
        if (*c_sp) sp.run();
        if (*c_cs) cs.run();
        if (*c_fl) fl.run();
        if (*c_dh) dh.run();
    } catch (const VerifyFailure& e) {
        std::cerr << "verification failed: " << e.what() << '\n';
        return kVerifyFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
