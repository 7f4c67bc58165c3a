#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nnssgd/observations.hpp"

namespace nnssgd {

// Bijection between external row/column IDs (arbitrary tokens) and dense
// internal indices, assigned in order of first appearance.
class IdMap {
 public:
  std::size_t intern_row(std::string_view id) { return intern(rows_, row_ids_, id); }
  std::size_t intern_col(std::string_view id) { return intern(cols_, col_ids_, id); }

  std::optional<std::size_t> find_row(std::string_view id) const { return find(rows_, id); }
  std::optional<std::size_t> find_col(std::string_view id) const { return find(cols_, id); }

  const std::string& row_id(std::size_t index) const { return row_ids_.at(index); }
  const std::string& col_id(std::size_t index) const { return col_ids_.at(index); }

  std::size_t rows() const noexcept { return row_ids_.size(); }
  std::size_t cols() const noexcept { return col_ids_.size(); }

  /// External IDs "1".."rows" and "1".."cols".
  static IdMap sequential(std::size_t rows, std::size_t cols);

  /// Text form: lines "row <id>" and "col <id>" in index order.
  void write(std::ostream& out) const;
  static IdMap read(std::istream& in);

 private:
  using Lookup = std::unordered_map<std::string, std::size_t>;

  static std::size_t intern(Lookup& lookup, std::vector<std::string>& ids, std::string_view id);
  static std::optional<std::size_t> find(const Lookup& lookup, std::string_view id);

  Lookup rows_;
  Lookup cols_;
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
};

enum class Separator { tab, comma, double_colon, whitespace };

struct RatingsFormat {
  /// Detected from the first record when unset.
  std::optional<Separator> separator;
  /// Duplicate (user, item) pairs are an error when strict, last-wins otherwise.
  bool strict = true;
};

Separator detect_separator(std::string_view line);

/// Splits one record into fields. Whitespace around fields is trimmed.
std::vector<std::string_view> split_record(std::string_view line, Separator separator);

/// Parses "user<sep>item<sep>rating[<sep>ignored...]" lines. Blank lines and
/// lines starting with '#' are skipped. New IDs are added to `ids`; the
/// result spans ids.rows() x ids.cols().
SparseObservations load_ratings(std::istream& in, const RatingsFormat& format, IdMap& ids);

/// Same, with a fresh IdMap.
std::pair<SparseObservations, IdMap> load_ratings(std::istream& in, const RatingsFormat& format = {});

/// Canonical form: "user,item,value" per entry in storage order, values in
/// shortest round-trip notation.
void write_ratings(std::ostream& out, const SparseObservations& data, const IdMap& ids,
                   Separator separator = Separator::comma);

}  // namespace nnssgd
