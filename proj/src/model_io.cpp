#include "morphnet/model_io.hpp"

#include <fstream>
#include <optional>
#include <json.hpp>
#include <sstream>

#include "morphnet/errors.hpp"
#include "morphnet/io_util.hpp"

namespace morphnet {

using nlohmann::json;

namespace {

json layer_to_json(const Layer& layer) {
    if (const auto* de = std::get_if<DilationErosionLayer>(&layer)) {
        json mode = de->mode.soft ? json{{"soft", de->mode.beta}} : json{{"hard", true}};
        return {{"kind", "dilation_erosion"}, {"n_dilation", de->n_dilation}, {"n_erosion", de->n_erosion},
                {"with_bias", de->with_bias},  {"mode", mode},                  {"s_plus", de->s_plus.data},
                {"s_minus", de->s_minus.data}};
    }
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
        return {{"kind", "linear"}, {"d_out", lin->output_dim()}, {"with_bias", lin->with_bias},
                {"w", lin->w.data},  {"b", lin->b}};
    }
    return {{"kind", "sigmoid"}};
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("model JSON: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model JSON: bad field '") + key + "': " + e.what());
    }
}

}  // namespace

std::string model_to_json(const NetworkSpec& net) {
    net.validate();
    json doc;
    doc["input_dim"] = net.input_dim;
    doc["layers"] = json::array();
    for (const Layer& layer : net.layers) doc["layers"].push_back(layer_to_json(layer));
    return doc.dump(2);
}

NetworkSpec model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model JSON: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("model JSON: top level must be an object");
    NetworkSpec net;
    net.input_dim = field<std::size_t>(doc, "input_dim");
    if (!doc.contains("layers") || !doc["layers"].is_array()) throw FormatError("model JSON: 'layers' must be an array");
    std::size_t width = net.input_dim;
    for (const json& l : doc["layers"]) {
        const auto kind = field<std::string>(l, "kind");
        if (kind == "dilation_erosion") {
            DilationErosionLayer de;
            de.input_dim = width;
            de.n_dilation = field<std::size_t>(l, "n_dilation");
            de.n_erosion = field<std::size_t>(l, "n_erosion");
            de.with_bias = field<bool>(l, "with_bias");
            const json& mode = l.at("mode");
            if (mode.is_object() && mode.contains("soft")) {
                de.mode = LayerMode::smooth(mode.at("soft").get<double>());
            } else if ((mode.is_object() && mode.contains("hard")) || mode == "hard") {
                de.mode = LayerMode::hard();
            } else {
                throw FormatError("model JSON: mode must be {\"hard\": true} or {\"soft\": beta}");
            }
            auto sp = field<std::vector<double>>(l, "s_plus");
            auto sm = field<std::vector<double>>(l, "s_minus");
            if (sp.size() != de.n_dilation * de.se_width() || sm.size() != de.n_erosion * de.se_width()) {
                throw FormatError("model JSON: structuring element array length mismatch");
            }
            de.s_plus = Matrix(de.n_dilation, de.se_width(), std::move(sp));
            de.s_minus = Matrix(de.n_erosion, de.se_width(), std::move(sm));
            width = de.output_dim();
            net.layers.emplace_back(std::move(de));
        } else if (kind == "linear") {
            LinearLayer lin;
            auto w = field<std::vector<double>>(l, "w");
            std::size_t d_out = l.contains("d_out") ? field<std::size_t>(l, "d_out") : (width ? w.size() / width : 0);
            if (d_out == 0 || w.size() != d_out * width) throw FormatError("model JSON: linear weight length mismatch");
            lin.w = Matrix(d_out, width, std::move(w));
            lin.with_bias = l.contains("with_bias") ? field<bool>(l, "with_bias") : false;
            if (l.contains("b") && !l.at("b").is_null()) lin.b = field<std::vector<double>>(l, "b");
            if (!lin.with_bias && !lin.b.empty()) lin.with_bias = true;
            width = d_out;
            net.layers.emplace_back(std::move(lin));
        } else if (kind == "sigmoid") {
            net.layers.emplace_back(SigmoidLayer{});
        } else {
            throw FormatError("model JSON: unknown layer kind '" + kind + "'");
        }
    }
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("model JSON: ") + e.what());
    }
    return net;
}

void save_model(const std::filesystem::path& path, const NetworkSpec& net) {
    const std::string text = model_to_json(net);
    write_atomically(path, [&](std::ostream& out) { out << text << '\n'; });
}

NetworkSpec load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& token) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(s, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != s.size() || v == 0) throw InputError("architecture: bad count in '" + token + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

NetworkSpec parse_architecture(const std::string& spec, std::size_t input_dim, LayerMode default_mode) {
    if (input_dim == 0) throw InputError("architecture: input_dim must be >= 1");
    if (spec.empty() || spec.back() == ',') throw InputError("architecture: empty layer spec");
    NetworkSpec net;
    net.input_dim = input_dim;
    std::size_t width = input_dim;
    std::istringstream in(spec);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty()) throw InputError("architecture: empty layer spec");
        if (token == "sigmoid") {
            net.layers.emplace_back(SigmoidLayer{});
            continue;
        }
        const auto colon = token.find(':');
        if (colon == std::string::npos) throw InputError("architecture: unknown layer '" + token + "'");
        const std::string kind = token.substr(0, colon);
        std::string rest = token.substr(colon + 1);

        std::optional<double> beta;
        if (const auto at = rest.find('@'); at != std::string::npos) {
            try {
                std::size_t pos = 0;
                beta = std::stod(rest.substr(at + 1), &pos);
                if (pos != rest.size() - at - 1) throw InputError("");
            } catch (const std::exception&) {
                throw InputError("architecture: bad hardness in '" + token + "'");
            }
            rest.erase(at);
        }
        bool bias = false;
        if (const auto plus = rest.find("+bias"); plus != std::string::npos && plus + 5 == rest.size()) {
            bias = true;
            rest.erase(plus);
        }
        const LayerMode mode = beta ? LayerMode::smooth(*beta) : default_mode;

        if (kind == "linear") {
            if (beta) throw InputError("architecture: linear layers take no hardness");
            const std::size_t k = parse_count(rest, token);
            net.layers.emplace_back(LinearLayer::zeros(width, k, bias));
            width = k;
        } else if (kind == "de" || kind == "d" || kind == "e") {
            std::size_t nd = 0, ne = 0;
            if (kind == "de") {
                if (const auto c2 = rest.find(':'); c2 != std::string::npos) {
                    nd = parse_count(rest.substr(0, c2), token);
                    ne = parse_count(rest.substr(c2 + 1), token);
                } else {
                    const std::size_t n = parse_count(rest, token);
                    nd = n - n / 2;
                    ne = n / 2;
                }
            } else if (kind == "d") {
                nd = parse_count(rest, token);
            } else {
                ne = parse_count(rest, token);
            }
            net.layers.emplace_back(DilationErosionLayer::zeros(width, nd, ne, bias, mode));
            width = nd + ne;
        } else {
            throw InputError("architecture: unknown layer kind '" + kind + "'");
        }
    }
    net.validate();
    return net;
}

}  // namespace morphnet
