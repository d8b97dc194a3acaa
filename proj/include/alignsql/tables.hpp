#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace alignsql {

/// Nine basic cell types plus two composite ones. `Text` is the fallback.
enum class DataType {
  Number,
  NumberWithUnit,
  Datetime,
  Score,
  NumberSpan,
  TimeSpan,
  Fraction,
  Address,
  Text,
  BinaryTuple,
  List,
};

inline constexpr std::size_t kDataTypeCount = 11;

std::string_view dtype_name(DataType t);
std::optional<DataType> dtype_from_name(std::string_view name);
/// Column-name suffix for a type ("_number"); empty for text.
std::string_view dtype_suffix(DataType t);
bool is_composite(DataType t);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::strong_ordering operator<=>(const Rational& o) const;
  bool operator==(const Rational&) const = default;
};

/// A typed cell. `number` is the numeric view used for ordering, arithmetic
/// and aggregation; it is absent for values that only compare as text.
struct Value {
  DataType dtype = DataType::Text;
  bool null = true;
  std::string raw;
  std::string folded;
  std::optional<double> number;
  std::optional<Rational> fraction;
  std::string unit;
  std::string normal;

  static Value null_value(DataType dtype = DataType::Text);
  static Value of_number(double v);
  static Value of_text(std::string_view raw);

  bool operator==(const Value&) const = default;
};

bool is_null_marker(std::string_view raw);

/// Does one non-null cell match the pattern for `t`? Composite types are
/// included; `Text` matches anything.
bool cell_matches(std::string_view raw, DataType t);

/// Fixed detection priority. The first type matched by every non-null cell
/// wins; `Text` closes the list.
std::span<const DataType> type_priority();

DataType infer_column_type(std::span<const std::string> cells);

/// Throws Error(ParseMismatch) when `raw` does not fit `dtype`.
Value normalize_cell(std::string_view raw, DataType dtype);

/// "A (B)" -> {"A", "B"}; nullopt when the cell is not a binary tuple.
std::optional<std::pair<std::string, std::string>> split_binary_tuple(std::string_view raw);
std::string join_binary_tuple(std::string_view first, std::string_view second);
std::vector<std::string> split_list(std::string_view raw);
inline constexpr std::string_view kListSeparator = ", ";

struct Column {
  std::string name;
  std::string header;
  DataType dtype = DataType::Text;
  /// Canonical name of the composite column this one was derived from.
  std::optional<std::string> parent;
  /// Index of the raw column this came from; -1 for `id`.
  int source = -1;

  bool operator==(const Column&) const = default;
};

/// Elements of a list-typed column, one row per element, keyed by the
/// parent row's id.
struct ChildTable {
  std::string name;
  std::string parent_column;
  DataType element_dtype = DataType::Text;
  std::vector<std::pair<int, Value>> rows;

  bool operator==(const ChildTable&) const = default;
};

struct RawTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const RawTable&) const = default;
};

class Table {
 public:
  std::string name = "w";
  std::vector<Column> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<std::string> original_headers;
  std::vector<ChildTable> children;

  std::size_t row_count() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  const Value& cell(std::size_t row, std::size_t col) const { return rows[row][col]; }

  /// The raw grid this table canonicalizes: composite sub-columns are joined
  /// back with their separator and headers are the original ones.
  RawTable to_raw() const;

  bool operator==(const Table&) const = default;
};

/// Canonical database for a raw table: name `w`, `id` prepended, columns
/// renamed c1..cm with type suffix, binary tuples split, list columns
/// mirrored into a child table and a trailing aggregation row dropped.
Table build_database(const RawTable& raw);

/// Keywords marking a trailing pre-computed aggregation row.
bool is_aggregation_row(std::span<const std::string> row);

RawTable raw_table_from_json(const nlohmann::json& j);
RawTable raw_table_from_tsv(std::string_view tsv);
nlohmann::json table_to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);
nlohmann::json value_to_json(const Value& v);

}  // namespace alignsql
