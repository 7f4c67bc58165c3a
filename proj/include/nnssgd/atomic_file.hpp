#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

namespace nnssgd {

/// Runs `writer` against "<path>.tmp" and renames it over `path` only if the
/// writer returns normally and the stream is still good. The temporary file
/// is removed on failure.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

}  // namespace nnssgd
