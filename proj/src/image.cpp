#include "morphnet/image.hpp"

#include <cctype>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "morphnet/errors.hpp"
#include "morphnet/io_util.hpp"

namespace morphnet {

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : ImageGrid(height, width, channels, std::vector<double>(height * width * channels, fill)) {}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height == 0 || width == 0 || channels == 0) throw DimensionError("ImageGrid: empty shape");
    if (data_.size() != height * width * channels) throw DimensionError("ImageGrid: data length mismatch");
    for (double v : data_) {
        if (!std::isfinite(v)) throw InputError("ImageGrid: non-finite value");
    }
}

ImageGrid ImageGrid::channel(std::size_t c) const {
    if (c >= channels_) throw DimensionError("ImageGrid: channel out of range");
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(c * plane_size());
    return ImageGrid(height_, width_, 1, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane_size())));
}

ImageGrid operator-(const ImageGrid& img) {
    ImageGrid out = img;
    for (double& v : out.data()) v = -v;
    return out;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw FormatError("PGM: truncated header");
    return tok;
}

std::size_t pgm_number(std::istream& in, const char* what) {
    const std::string tok = pgm_token(in);
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size() || v < 0) throw FormatError("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError(std::string("PGM: bad ") + what + " '" + tok + "'");
    }
}

}  // namespace

ImageGrid read_pgm(std::istream& in) {
    const std::string magic = pgm_token(in);
    if (magic != "P2" && magic != "P5") throw FormatError("PGM: unsupported magic '" + magic + "'");
    const std::size_t width = pgm_number(in, "width");
    const std::size_t height = pgm_number(in, "height");
    const std::size_t maxval = pgm_number(in, "maxval");
    if (width == 0 || height == 0) throw FormatError("PGM: zero dimension");
    if (maxval == 0 || maxval > 255) throw FormatError("PGM: maxval must be in 1..255");

    std::vector<double> data(width * height);
    if (magic == "P5") {
        // pgm_token consumed the single whitespace byte after maxval.
        std::vector<unsigned char> raw(data.size());
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError("PGM: truncated pixel data");
        for (std::size_t k = 0; k < raw.size(); ++k) {
            if (raw[k] > maxval) throw FormatError("PGM: sample exceeds maxval");
            data[k] = static_cast<double>(raw[k]) / static_cast<double>(maxval);
        }
    } else {
        for (std::size_t k = 0; k < data.size(); ++k) {
            const std::size_t v = pgm_number(in, "sample");
            if (v > maxval) throw FormatError("PGM: sample exceeds maxval");
            data[k] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return ImageGrid(height, width, 1, std::move(data));
}

ImageGrid read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_pgm(in);
}

void write_pgm(std::ostream& out, const ImageGrid& img, PgmEncoding enc) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    auto sample = [&](std::size_t i, std::size_t j) {
        const double v = std::clamp(img.at(0, i, j), 0.0, 1.0);
        return static_cast<unsigned>(std::lround(v * 255.0));
    };
    out << (enc == PgmEncoding::binary ? "P5" : "P2") << '\n' << w << ' ' << h << "\n255\n";
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            if (enc == PgmEncoding::binary) {
                out.put(static_cast<char>(sample(i, j)));
            } else {
                out << sample(i, j) << (j + 1 == w ? '\n' : ' ');
            }
        }
    }
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& img, PgmEncoding enc) {
    write_atomically(path, [&](std::ostream& out) { write_pgm(out, img, enc); });
}

void write_feature_csv(std::ostream& out, const ImageGrid& img) {
    out << "channel,row,col,value\n";
    out.precision(17);
    for (std::size_t c = 0; c < img.channels(); ++c) {
        for (std::size_t i = 0; i < img.height(); ++i) {
            for (std::size_t j = 0; j < img.width(); ++j) {
                out << c << ',' << i << ',' << j << ',' << img.at(c, i, j) << '\n';
            }
        }
    }
}

}  // namespace morphnet
