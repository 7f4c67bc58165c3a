#include "nnssgd/ratings_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "nnssgd/errors.hpp"

namespace nnssgd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_skippable(std::string_view line) {
  const auto body = trim(line);
  return body.empty() || body.front() == '#';
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace

IdMap IdMap::sequential(std::size_t rows, std::size_t cols) {
  IdMap ids;
  for (std::size_t i = 1; i <= rows; ++i) ids.intern_row(std::to_string(i));
  for (std::size_t j = 1; j <= cols; ++j) ids.intern_col(std::to_string(j));
  return ids;
}

std::size_t IdMap::intern(Lookup& lookup, std::vector<std::string>& ids, std::string_view id) {
  const auto [it, inserted] = lookup.try_emplace(std::string(id), ids.size());
  if (inserted) ids.emplace_back(id);
  return it->second;
}

std::optional<std::size_t> IdMap::find(const Lookup& lookup, std::string_view id) {
  const auto it = lookup.find(std::string(id));
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

void IdMap::write(std::ostream& out) const {
  for (const auto& id : row_ids_) out << "row " << id << '\n';
  for (const auto& id : col_ids_) out << "col " << id << '\n';
}

IdMap IdMap::read(std::istream& in) {
  IdMap ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto space = body.find(' ');
    if (space == std::string_view::npos) throw ParseError(number, "expected '<row|col> <id>'");
    const auto tag = body.substr(0, space);
    const auto id = trim(body.substr(space + 1));
    if (id.empty()) throw ParseError(number, "missing id");
    if (tag == "row") {
      if (ids.find_row(id)) throw ParseError(number, "duplicate row id '" + std::string(id) + "'");
      ids.intern_row(id);
    } else if (tag == "col") {
      if (ids.find_col(id)) throw ParseError(number, "duplicate col id '" + std::string(id) + "'");
      ids.intern_col(id);
    } else {
      throw ParseError(number, "unknown tag '" + std::string(tag) + "'");
    }
  }
  return ids;
}

Separator detect_separator(std::string_view line) {
  if (line.find("::") != std::string_view::npos) return Separator::double_colon;
  if (line.find('\t') != std::string_view::npos) return Separator::tab;
  if (line.find(',') != std::string_view::npos) return Separator::comma;
  return Separator::whitespace;
}

std::vector<std::string_view> split_record(std::string_view line, Separator separator) {
  std::vector<std::string_view> fields;
  line = trim(line);
  if (separator == Separator::whitespace) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      auto end = line.find_first_of(" \t", start);
      if (end == std::string_view::npos) end = line.size();
      fields.push_back(line.substr(start, end - start));
      pos = end;
    }
    return fields;
  }
  const std::string_view delimiter = separator == Separator::tab     ? "\t"
                                     : separator == Separator::comma ? ","
                                                                     : "::";
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(delimiter, pos);
    fields.push_back(trim(line.substr(pos, end == std::string_view::npos ? end : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + delimiter.size();
  }
  return fields;
}

SparseObservations load_ratings(std::istream& in, const RatingsFormat& format, IdMap& ids) {
  std::optional<Separator> separator = format.separator;
  // Keyed by (row, col) so lenient mode can overwrite.
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::string line;
  std::size_t number = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++number;
    if (is_skippable(line)) continue;
    if (!separator) separator = detect_separator(trim(line));
    const auto fields = split_record(line, *separator);
    if (fields.size() < 3) {
      throw ParseError(number, "expected user, item and rating fields, found " +
                                   std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(number, "empty user or item id");
    double value = 0.0;
    const auto rating = fields[2];
    const auto result = std::from_chars(rating.data(), rating.data() + rating.size(), value);
    if (result.ec != std::errc() || result.ptr != rating.data() + rating.size()) {
      throw ParseError(number, "malformed rating '" + std::string(rating) + "'");
    }
    if (!std::isfinite(value)) throw ParseError(number, "non-finite rating");
    const std::size_t row = ids.intern_row(fields[0]);
    const std::size_t col = ids.intern_col(fields[1]);
    const auto [it, inserted] = cells.try_emplace({row, col}, value);
    if (!inserted) {
      if (format.strict) {
        throw DataError("line " + std::to_string(number) + ": duplicate rating for user '" +
                        std::string(fields[0]) + "' item '" + std::string(fields[1]) + "'");
      }
      it->second = value;
    }
    ++records;
  }
  if (records == 0) throw DataError("no ratings in input");
  std::vector<Observation> entries;
  entries.reserve(cells.size());
  for (const auto& [key, value] : cells) entries.push_back({key.first, key.second, value});
  return SparseObservations(ids.rows(), ids.cols(), std::move(entries));
}

std::pair<SparseObservations, IdMap> load_ratings(std::istream& in, const RatingsFormat& format) {
  IdMap ids;
  auto data = load_ratings(in, format, ids);
  return {std::move(data), std::move(ids)};
}

void write_ratings(std::ostream& out, const SparseObservations& data, const IdMap& ids,
                   Separator separator) {
  const char* delimiter = separator == Separator::tab           ? "\t"
                          : separator == Separator::comma       ? ","
                          : separator == Separator::double_colon ? "::"
                                                                 : " ";
  for (const auto& e : data.entries()) {
    out << ids.row_id(e.row) << delimiter << ids.col_id(e.col) << delimiter
        << format_double(e.value) << '\n';
  }
}

}  // namespace nnssgd
