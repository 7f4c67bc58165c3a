#include "nnssgd/model_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "nnssgd/atomic_file.hpp"
#include "nnssgd/errors.hpp"

namespace nnssgd {

using Index = Eigen::Index;

namespace {

constexpr std::array<unsigned char, 8> kMagic = {'N', 'N', 'S', 'V', 'D', '1', '\0', '\0'};
constexpr std::size_t kHeaderBytes = kMagic.size() + 3 * 8;

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes_.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::span<const unsigned char> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

std::uint64_t read_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

double read_f64(const unsigned char* p) { return std::bit_cast<double>(read_u64(p)); }

}  // namespace

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state) {
  for (unsigned char byte : bytes) {
    state ^= byte;
    state *= 0x100000001b3ULL;
  }
  return state;
}

void save_model(const CompletionModel& model, std::ostream& out) {
  const auto& f = model.factors;
  const Index m = static_cast<Index>(f.rows());
  const Index n = static_cast<Index>(f.cols());
  const Index r = static_cast<Index>(f.rank());
  if (model.means.row_means.size() != m || model.means.col_means.size() != n) {
    throw InvalidArgument("save_model: means do not match the factor dimensions");
  }
  Writer w;
  w.raw(kMagic);
  w.u64(static_cast<std::uint64_t>(m));
  w.u64(static_cast<std::uint64_t>(n));
  w.u64(static_cast<std::uint64_t>(r));
  for (Index i = 0; i < m; ++i) {
    for (Index c = 0; c < r; ++c) w.f64(f.U(i, c));
  }
  for (Index c = 0; c < r; ++c) w.f64(f.sigma(c));
  for (Index j = 0; j < n; ++j) {
    for (Index c = 0; c < r; ++c) w.f64(f.V(j, c));
  }
  for (Index i = 0; i < m; ++i) w.f64(model.means.row_means(i));
  for (Index j = 0; j < n; ++j) w.f64(model.means.col_means(j));
  w.f64(model.means.global_mean);
  w.u64(fnv1a64(w.bytes()));
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("save_model: write failed");
}

CompletionModel load_model(std::istream& in) {
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) {
    throw FormatError("model truncated in header: expected " + std::to_string(kHeaderBytes) +
                      " bytes, available " + std::to_string(bytes.size()));
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("not a model file (bad magic)");
  }
  const std::uint64_t m = read_u64(bytes.data() + 8);
  const std::uint64_t n = read_u64(bytes.data() + 16);
  const std::uint64_t r = read_u64(bytes.data() + 24);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (m == 0 || n == 0 || m > kLimit || n > kLimit || r > std::min(m, n)) {
    throw FormatError("implausible model dimensions " + std::to_string(m) + "x" +
                      std::to_string(n) + " rank " + std::to_string(r));
  }

  struct Section {
    const char* name;
    std::uint64_t count;
  };
  const std::array<Section, 7> sections = {{{"U", m * r},
                                            {"sigma", r},
                                            {"V", n * r},
                                            {"row_means", m},
                                            {"col_means", n},
                                            {"global_mean", 1},
                                            {"checksum", 1}}};
  std::uint64_t offset = kHeaderBytes;
  for (const auto& section : sections) {
    const std::uint64_t end = offset + 8 * section.count;
    if (end > bytes.size()) {
      throw FormatError(std::string("model truncated in ") + section.name + ": expected " +
                        std::to_string(end) + " bytes, available " + std::to_string(bytes.size()));
    }
    offset = end;
  }
  if (offset != bytes.size()) {
    throw FormatError("model has " + std::to_string(bytes.size() - offset) + " trailing bytes");
  }
  const std::size_t payload = bytes.size() - 8;
  const std::uint64_t stored = read_u64(bytes.data() + payload);
  if (stored != fnv1a64(std::span<const unsigned char>(bytes.data(), payload))) {
    throw FormatError("model checksum mismatch");
  }

  const unsigned char* p = bytes.data() + kHeaderBytes;
  auto next = [&p] {
    const double v = read_f64(p);
    p += 8;
    if (!std::isfinite(v)) throw DataError("model contains a non-finite value");
    return v;
  };
  const Index rows = static_cast<Index>(m), cols = static_cast<Index>(n), rank = static_cast<Index>(r);
  CompletionModel model;
  model.factors.U.resize(rows, rank);
  model.factors.sigma.resize(rank);
  model.factors.V.resize(cols, rank);
  for (Index i = 0; i < rows; ++i) {
    for (Index c = 0; c < rank; ++c) model.factors.U(i, c) = next();
  }
  for (Index c = 0; c < rank; ++c) model.factors.sigma(c) = next();
  for (Index j = 0; j < cols; ++j) {
    for (Index c = 0; c < rank; ++c) model.factors.V(j, c) = next();
  }
  model.means.row_means.resize(rows);
  model.means.col_means.resize(cols);
  for (Index i = 0; i < rows; ++i) model.means.row_means(i) = next();
  for (Index j = 0; j < cols; ++j) model.means.col_means(j) = next();
  model.means.global_mean = next();
  return model;
}

void save_model_file(const CompletionModel& model, const std::filesystem::path& path) {
  write_file_atomically(path, [&](std::ostream& out) { save_model(model, out); });
}

CompletionModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  return load_model(in);
}

}  // namespace nnssgd
