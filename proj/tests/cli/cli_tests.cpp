#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "morphnet/constructor.hpp"
#include "morphnet/dataset.hpp"
#include "morphnet/image.hpp"
#include "morphnet/model_io.hpp"
#include "morphnet/network.hpp"

using namespace morphnet;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(MORPHNET_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// Value following "key " on its own line.
double field(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
    FAIL("missing field " << key << " in:\n" << out);
    return 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_scratch";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("help and bad usage") {
    CHECK(run("--help").code == 0);
    CHECK(run("").code == 1);
    CHECK(run("no-such-verb").code == 1);
    CHECK(run("train --arch de:2 --data /nonexistent.csv -o x.json").code == 1);
}

TEST_CASE("gen-circles is deterministic and trains to high accuracy") {
    const auto a = scratch("circ_a.csv"), b = scratch("circ_b.csv"), c = scratch("circ_c.csv");
    REQUIRE(run("gen-circles --n 200 --seed 3 -o " + a.string()).code == 0);
    REQUIRE(run("gen-circles --n 200 --seed 3 -o " + b.string()).code == 0);
    REQUIRE(run("gen-circles --n 200 --seed 4 -o " + c.string()).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(slurp(a).rfind("x1,x2,y\n", 0) == 0);
    CHECK(read_dataset_csv(a).size() == 400);

    const auto model = scratch("circ_model.json"), trace = scratch("trace.csv");
    const auto r = run("train --arch de:2+bias,linear:1,sigmoid --data " + a.string() + " -o " + model.string() +
                       " --trace " + trace.string() + " --epochs 600 --seed 1");
    REQUIRE(r.code == 0);
    CHECK(field(r.out, "accuracy") >= 0.95);
    CHECK(fs::exists(trace));
    const auto net = load_model(model);
    CHECK(net.input_dim == 2);

    const auto ev = run("eval --model " + model.string() + " --data " + a.string());
    REQUIRE(ev.code == 0);
    CHECK(field(ev.out, "accuracy") == doctest::Approx(field(r.out, "accuracy")).epsilon(1e-6));

    CHECK(run("train --arch bogus:3 --data " + a.string() + " -o " + model.string()).code == 1);
    CHECK(run("train --arch de:2 --data " + a.string() + " -o " + model.string() + " --loss dssim").code == 1);
}

TEST_CASE("training with a fixed seed is reproducible") {
    const auto data = scratch("grid.csv");
    REQUIRE(run("gen-hinge-grid --res 11 -o " + data.string()).code == 0);
    CHECK(read_dataset_csv(data).size() == 121);
    const auto m1 = scratch("g1.json"), m2 = scratch("g2.json");
    const std::string common = "train --arch de:4+bias,linear:1 --epochs 20 --seed 9 --data " + data.string();
    REQUIRE(run(common + " -o " + m1.string()).code == 0);
    REQUIRE(run(common + " -o " + m2.string()).code == 0);
    CHECK(slurp(m1) == slurp(m2));

    const auto m3 = scratch("g3.json");
    REQUIRE(run(common + " -o " + m3.string(), "MORPHNET_THREADS=3").code == 0);
    CHECK(slurp(m1) == slurp(m3));
    CHECK(run(common + " -o " + m3.string(), "MORPHNET_THREADS=0").code == 1);
}

TEST_CASE("simplify halves a pure dilation chain and preserves outputs") {
    auto net = parse_architecture("d:2,d:2,d:2,d:2", 2);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> q(-8, 8);
    auto params = flatten_parameters(net);
    for (double& v : params) v = q(rng) / 4.0;
    assign_parameters(net, params);
    const auto in = scratch("chain.json"), out = scratch("chain_s.json"), data = scratch("chain_data.csv");
    save_model(in, net);
    const auto r = run("simplify --model " + in.string() + " -o " + out.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("FUSE dilation layers [0..3] -> 1") != std::string::npos);
    CHECK(r.out.find("layers 4 -> 1") != std::string::npos);

    const auto fused = load_model(out);
    Dataset d;
    d.feature_dim = 2;
    d.target_dim = 2;
    for (int k = 0; k < 50; ++k) {
        const double x[2] = {q(rng) / 8.0, q(rng) / 8.0};
        const auto y = forward_values(net, x);
        d.add(x, y);
        CHECK(forward_values(fused, x) == y);
    }
    write_dataset_csv(data, d);
    const auto ev = run("eval --model " + out.string() + " --data " + data.string());
    REQUIRE(ev.code == 0);
    CHECK(field(ev.out, "mse") == 0.0);
}

TEST_CASE("construct then eval certifies the hinge sum") {
    const std::vector<GeneralHinge> hs = {
        {1, {{{1.0, -2.0}, 0.5}, {{0.25, 1.0}, -1.0}, {{-1.0, 0.0}, 0.0}}},
        {-1, {{{0.0, 1.0}, 1.0}, {{2.0, 2.0}, 0.0}}},
    };
    const auto hp = scratch("hinges.json"), model = scratch("constructed.json");
    std::ofstream(hp) << hinges_to_json(hs);
    const auto r = run("construct --hinges " + hp.string() + " -o " + model.string() + " --samples 2000");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("certified") != std::string::npos);
    CHECK(field(r.out, "max_abs_err") <= 1e-9);

    const auto ev = run("eval --model " + model.string() + " --hinges " + hp.string() + " --box -5 5 --tol 1e-9");
    CHECK(ev.code == 0);
    CHECK(field(ev.out, "max_abs_err") <= 1e-9);

    auto other = hs;
    other[0].alpha = -1;
    const auto op = scratch("other_hinges.json");
    std::ofstream(op) << hinges_to_json(other);
    CHECK(run("eval --model " + model.string() + " --hinges " + op.string() + " --tol 1e-9").code == 2);
    CHECK(run("construct --hinges " + hp.string() + " -o " + model.string() + " --tol -1").code == 2);
    std::ofstream(scratch("bad_hinges.json")) << "{not json";
    CHECK(run("construct --hinges " + scratch("bad_hinges.json").string() + " -o " + model.string()).code == 1);
}

TEST_CASE("decision-grid writes a region map") {
    auto net = parse_architecture("de:2+bias,linear:1", 2);
    auto params = flatten_parameters(net);
    for (std::size_t k = 0; k < params.size(); ++k) params[k] = 0.5 * static_cast<double>(k % 3) - 0.5;
    assign_parameters(net, params);
    const auto model = scratch("dg.json"), csv = scratch("dg.csv");
    save_model(model, net);
    const auto r = run("decision-grid --model " + model.string() + " -o " + csv.string() + " --res 64");
    REQUIRE(r.code == 0);
    CHECK(field(r.out, "regions") >= 1);
    const double h = field(r.out, "hyperplane_bound");
    CHECK(field(r.out, "regions") <= 1 + h + h * (h - 1) / 2);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) rows += !line.empty();
    CHECK(rows == 64 * 64);
}

TEST_CASE("filter2d and dehaze-toy") {
    ImageGrid img(9, 9);
    img(4, 4) = 1.0;
    const auto in = scratch("dot.pgm"), out = scratch("dot_d.pgm");
    write_pgm(in, img);
    REQUIRE(run("filter2d --in " + in.string() + " -o " + out.string() + " --op dilate --size 3").code == 0);
    const auto d = read_pgm(out);
    CHECK(d(3, 3) == 1.0);
    CHECK(d(5, 5) == 1.0);
    CHECK(d(2, 2) == 0.0);
    CHECK(run("filter2d --in " + in.string() + " -o " + out.string() + " --op sharpen").code == 1);

    const auto dir = scratch("haze");
    const auto r = run("dehaze-toy --size 32 --seed 2 --out-dir " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(field(r.out, "max_abs_err") <= 1e-12);
    CHECK(field(r.out, "dssim") <= 1e-12);
}
