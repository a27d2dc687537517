#include "morphnet/io_util.hpp"

#include <fstream>

#include "morphnet/errors.hpp"

namespace morphnet {

void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        body(out);
        out.flush();
        if (!out) throw FormatError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

}  // namespace morphnet
