#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace morphnet {

/// Writes through a sibling temp file and renames it over path.
void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

}  // namespace morphnet
