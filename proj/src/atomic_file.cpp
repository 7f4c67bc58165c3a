#include "nnssgd/atomic_file.hpp"

#include <fstream>
#include <system_error>

#include "nnssgd/errors.hpp"

namespace nnssgd {

void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer) {
  std::filesystem::path temp = path;
  temp += ".tmp";
  try {
    {
      std::ofstream out(temp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot open '" + temp.string() + "' for writing");
      writer(out);
      out.flush();
      if (!out) throw DataError("write to '" + temp.string() + "' failed");
    }
    std::filesystem::rename(temp, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw;
  }
}

}  // namespace nnssgd
