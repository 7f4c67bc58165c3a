#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "nnssgd/completion.hpp"

namespace nnssgd {

// Binary model layout, all integers and floats little-endian:
//
//   magic     8 bytes  "NNSVD1\0\0"
//   m, n, r   3 x u64
//   U         m*r f64, row-major
//   sigma     r   f64
//   V         n*r f64, row-major
//   row_means m   f64
//   col_means n   f64
//   global    1   f64
//   checksum  u64, FNV-1a over every preceding byte
//
// r is the stored rank of the factors.

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t state = 0xcbf29ce484222325ULL);

void save_model(const CompletionModel& model, std::ostream& out);

/// Throws FormatError on bad magic, truncation, trailing bytes or checksum
/// mismatch, and DataError on non-finite values.
CompletionModel load_model(std::istream& in);

/// Writes to a sibling temporary file and renames it into place.
void save_model_file(const CompletionModel& model, const std::filesystem::path& path);
CompletionModel load_model_file(const std::filesystem::path& path);

}  // namespace nnssgd
