#include "alignsql/tables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <regex>
#include <sstream>

#include "alignsql/error.hpp"
#include "alignsql/text.hpp"

namespace alignsql {
namespace {

constexpr std::array<std::string_view, kDataTypeCount> kNames = {
    "number", "number-with-unit", "datetime", "score",        "number-span", "time-span",
    "fraction", "address",        "text",     "binary-tuple", "list"};

constexpr std::array<std::string_view, kDataTypeCount> kSuffixes = {
    "_number", "_unit", "_datetime", "_score", "_numspan", "_timespan",
    "_fraction", "_address", "", "", "_list"};

constexpr std::array<DataType, kDataTypeCount> kPriority = {
    DataType::Score,     DataType::Fraction, DataType::Datetime,       DataType::TimeSpan,
    DataType::Number,    DataType::NumberSpan, DataType::Address,      DataType::NumberWithUnit,
    DataType::BinaryTuple, DataType::List,   DataType::Text};

const std::string kMonth =
    "(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|"
    "sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\\.?";
const std::string kDash = "(?:\xE2\x80\x93|\xE2\x80\x94|-)";  // en dash, em dash, hyphen
const std::string kNum = "[-+]?(?:\\d{1,3}(?:,\\d{3})+|\\d+)(?:\\.\\d+)?";

const auto kIcase = std::regex::ECMAScript | std::regex::icase;

const std::regex& re_month_day_year() {
  static const std::regex r("^" + kMonth + "\\s+(\\d{1,2}),?\\s+(\\d{4})$", kIcase);
  return r;
}
const std::regex& re_day_month_year() {
  static const std::regex r("^(\\d{1,2})\\s+" + kMonth + ",?\\s+(\\d{4})$", kIcase);
  return r;
}
const std::regex& re_month_year() {
  static const std::regex r("^" + kMonth + ",?\\s+(\\d{4})$", kIcase);
  return r;
}
const std::regex& re_month_day() {
  static const std::regex r("^" + kMonth + "\\s+(\\d{1,2})$", kIcase);
  return r;
}
const std::regex& re_iso_date() {
  static const std::regex r("^(\\d{4})-(\\d{1,2})-(\\d{1,2})$");
  return r;
}
const std::regex& re_us_date() {
  static const std::regex r("^(\\d{1,2})/(\\d{1,2})/(\\d{4})$");
  return r;
}
const std::regex& re_clock() {
  static const std::regex r("^(\\d{1,2}):(\\d{2})(?::(\\d{2}))?(?:\\.(\\d+))?$");
  return r;
}
const std::regex& re_score() {
  static const std::regex r("^[wldt]\\.?\\s*\\d+\\s*(?::|" + kDash + ")\\s*\\d+$", kIcase);
  return r;
}
const std::regex& re_number_span() {
  static const std::regex r("^(" + kNum + ")\\s*" + kDash + "\\s*(" + kNum + ")$");
  return r;
}
const std::regex& re_fraction() {
  static const std::regex r("^(\\d+)\\s*/\\s*(\\d+)$");
  return r;
}
const std::regex& re_address() {
  static const std::regex r(
      "^\\d+[a-z]?\\s+(?:[^\\s]+\\s+)*(?:street|st|avenue|ave|road|rd|boulevard|blvd|drive|dr|"
      "lane|ln|way|court|ct|place|pl|parkway|pkwy|highway|hwy)\\.?$",
      kIcase);
  return r;
}
const std::regex& re_number_with_unit() {
  static const std::regex r("^(" + kNum + ")\\s*([a-z%\xC2\xB0$][a-z%./\xC2\xB0\xB2\xB3]{0,11})$",
                            kIcase);
  return r;
}

int month_index(std::string m) {
  m = text::fold(m);
  if (!m.empty() && m.back() == '.') m.pop_back();
  static const std::array<std::string_view, 12> prefixes = {
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  for (int i = 0; i < 12; ++i)
    if (m.compare(0, 3, prefixes[i]) == 0) return i + 1;
  return 0;
}

struct DateKey {
  double key;
  std::string normal;
};

std::string two_digits(int v) {
  if (v <= 0) return "xx";
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

std::optional<DateKey> make_date(int year, int month, int day) {
  if (month < 1 || month > 12 || day < 0 || day > 31) return std::nullopt;
  double key = year + (month - 1) / 12.0 + (day > 0 ? (day - 1) / 372.0 : 0.0);
  std::string normal = (year > 0 ? std::to_string(year) : std::string("xxxx")) + "-" +
                       two_digits(month) + "-" + two_digits(day);
  return DateKey{key, normal};
}

// Accepted date/time formats, in order: "May 29, 1968", "29 May 1968",
// "May 1968", "May 29", "1968-05-29", "5/29/1968", "3:56", "1:02:03",
// "3:56.2" (clock values are m:ss or h:mm:ss, keyed in seconds).
std::optional<DateKey> parse_datetime(std::string_view raw) {
  std::string s = text::trim(raw);
  std::smatch m;
  if (std::regex_match(s, m, re_month_day_year()))
    return make_date(std::stoi(m[3]), month_index(m[1]), std::stoi(m[2]));
  if (std::regex_match(s, m, re_day_month_year()))
    return make_date(std::stoi(m[3]), month_index(m[2]), std::stoi(m[1]));
  if (std::regex_match(s, m, re_month_year()))
    return make_date(std::stoi(m[2]), month_index(m[1]), 0);
  if (std::regex_match(s, m, re_month_day()))
    return make_date(0, month_index(m[1]), std::stoi(m[2]));
  if (std::regex_match(s, m, re_iso_date()))
    return make_date(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]));
  if (std::regex_match(s, m, re_us_date()))
    return make_date(std::stoi(m[3]), std::stoi(m[1]), std::stoi(m[2]));
  if (std::regex_match(s, m, re_clock())) {
    double secs;
    if (m[3].matched)
      secs = std::stoi(m[1]) * 3600.0 + std::stoi(m[2]) * 60.0 + std::stoi(m[3]);
    else
      secs = std::stoi(m[1]) * 60.0 + std::stoi(m[2]);
    if (m[4].matched) secs += std::stod("0." + m[4].str());
    return DateKey{secs, "T" + text::format_number(secs)};
  }
  return std::nullopt;
}

// Splits "X – Y" at every dash position and reports whether some split
// yields two datetimes.
bool is_time_span(std::string_view raw) {
  std::string s = text::trim(raw);
  static const std::array<std::string_view, 3> dashes = {"\xE2\x80\x93", "\xE2\x80\x94", "-"};
  for (auto dash : dashes) {
    for (std::size_t pos = s.find(dash); pos != std::string::npos; pos = s.find(dash, pos + 1)) {
      auto left = s.substr(0, pos);
      auto right = s.substr(pos + dash.size());
      if (parse_datetime(left) && parse_datetime(right)) return true;
    }
  }
  return false;
}

std::optional<Rational> parse_fraction(std::string_view raw) {
  std::string s = text::trim(raw);
  std::smatch m;
  if (!std::regex_match(s, m, re_fraction())) return std::nullopt;
  if (m[1].length() > 15 || m[2].length() > 15) return std::nullopt;
  std::int64_t num = std::stoll(m[1]);
  std::int64_t den = std::stoll(m[2]);
  if (den == 0) return std::nullopt;
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  return Rational{num / g, den / g};
}

Value text_value(std::string_view raw, DataType dtype) {
  Value v;
  v.dtype = dtype;
  v.null = false;
  v.raw = text::trim(raw);
  v.folded = text::fold(v.raw);
  return v;
}

[[noreturn]] void mismatch(std::string_view raw, DataType dtype) {
  throw Error(ErrorCode::ParseMismatch,
              "cell '" + std::string(raw) + "' is not a valid " + std::string(dtype_name(dtype)));
}

}  // namespace

std::string_view dtype_name(DataType t) { return kNames[static_cast<std::size_t>(t)]; }

std::optional<DataType> dtype_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<DataType>(i);
  return std::nullopt;
}

std::string_view dtype_suffix(DataType t) { return kSuffixes[static_cast<std::size_t>(t)]; }

bool is_composite(DataType t) { return t == DataType::BinaryTuple || t == DataType::List; }

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  // Denominators are positive after reduction; compare cross products in 128 bits.
  __int128 lhs = static_cast<__int128>(num) * o.den;
  __int128 rhs = static_cast<__int128>(o.num) * den;
  return lhs <=> rhs;
}

Value Value::null_value(DataType dtype) {
  Value v;
  v.dtype = dtype;
  return v;
}

Value Value::of_number(double x) {
  Value v;
  v.dtype = DataType::Number;
  v.null = false;
  v.raw = text::format_number(x);
  v.folded = v.raw;
  v.number = x;
  return v;
}

Value Value::of_text(std::string_view raw) {
  Value v = text_value(raw, DataType::Text);
  v.number = text::parse_plain_number(v.raw);
  return v;
}

bool is_null_marker(std::string_view raw) {
  std::string f = text::fold(raw);
  return f.empty() || f == "-" || f == "\xE2\x80\x93" || f == "\xE2\x80\x94" || f == "n/a" ||
         f == "null" || f == "?";
}

std::optional<std::pair<std::string, std::string>> split_binary_tuple(std::string_view raw) {
  static const std::regex r("^(.*[^\\s(])\\s*\\(([^()]+)\\)$");
  std::string s = text::trim(raw);
  std::smatch m;
  if (!std::regex_match(s, m, r)) return std::nullopt;
  std::string first = text::trim(m[1].str());
  std::string second = text::trim(m[2].str());
  if (first.empty() || second.empty() || first.find('(') != std::string::npos) return std::nullopt;
  return std::make_pair(first, second);
}

std::string join_binary_tuple(std::string_view first, std::string_view second) {
  return std::string(first) + " (" + std::string(second) + ")";
}

std::vector<std::string> split_list(std::string_view raw) {
  std::vector<std::string> items;
  std::string s(raw);
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(',', start);
    items.push_back(text::trim(s.substr(start, pos == std::string::npos ? pos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return items;
}

bool cell_matches(std::string_view raw, DataType t) {
  std::string s = text::trim(raw);
  switch (t) {
    case DataType::Number:
      return text::parse_plain_number(s).has_value();
    case DataType::NumberWithUnit:
      return std::regex_match(s, re_number_with_unit());
    case DataType::Datetime:
      return parse_datetime(s).has_value();
    case DataType::Score:
      return std::regex_match(s, re_score());
    case DataType::NumberSpan:
      return std::regex_match(s, re_number_span());
    case DataType::TimeSpan:
      return is_time_span(s);
    case DataType::Fraction:
      return parse_fraction(s).has_value();
    case DataType::Address:
      return std::regex_match(s, re_address());
    case DataType::BinaryTuple:
      return split_binary_tuple(s).has_value();
    case DataType::List: {
      auto items = split_list(s);
      return std::all_of(items.begin(), items.end(), [](const auto& i) { return !i.empty(); });
    }
    case DataType::Text:
      return true;
  }
  return false;
}

std::span<const DataType> type_priority() { return kPriority; }

DataType infer_column_type(std::span<const std::string> cells) {
  std::vector<std::string_view> present;
  for (const auto& c : cells)
    if (!is_null_marker(c)) present.push_back(c);
  if (present.empty()) return DataType::Text;
  for (DataType t : kPriority) {
    if (t == DataType::Text) break;
    if (t == DataType::List) {
      // A list column needs at least one cell that actually has two items.
      bool multi = std::any_of(present.begin(), present.end(),
                               [](auto c) { return split_list(c).size() > 1; });
      if (!multi) continue;
    }
    if (std::all_of(present.begin(), present.end(), [t](auto c) { return cell_matches(c, t); }))
      return t;
  }
  return DataType::Text;
}

Value normalize_cell(std::string_view raw, DataType dtype) {
  if (is_null_marker(raw)) return Value::null_value(dtype);
  Value v = text_value(raw, dtype);
  switch (dtype) {
    case DataType::Number: {
      v.number = text::parse_plain_number(v.raw);
      if (!v.number) mismatch(raw, dtype);
      break;
    }
    case DataType::NumberWithUnit: {
      std::smatch m;
      if (!std::regex_match(v.raw, m, re_number_with_unit())) mismatch(raw, dtype);
      v.number = text::parse_plain_number(m[1].str());
      v.unit = m[2].str();
      if (!v.number) mismatch(raw, dtype);
      break;
    }
    case DataType::Datetime: {
      auto d = parse_datetime(v.raw);
      if (!d) mismatch(raw, dtype);
      v.number = d->key;
      v.normal = d->normal;
      break;
    }
    case DataType::Fraction: {
      auto f = parse_fraction(v.raw);
      if (!f) mismatch(raw, dtype);
      v.fraction = f;
      v.number = f->value();
      break;
    }
    case DataType::Text:
      v.number = text::parse_plain_number(v.raw);
      break;
    case DataType::BinaryTuple:
    case DataType::List:
    case DataType::Score:
    case DataType::NumberSpan:
    case DataType::TimeSpan:
    case DataType::Address:
      if (!cell_matches(v.raw, dtype)) mismatch(raw, dtype);
      break;
  }
  return v;
}

std::optional<std::size_t> Table::column_index(std::string_view n) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == n) return i;
  return std::nullopt;
}

bool is_aggregation_row(std::span<const std::string> row) {
  for (const auto& cell : row) {
    if (is_null_marker(cell)) continue;
    std::string f = text::fold(cell);
    while (!f.empty() && f.back() == ':') f.pop_back();
    return f == "total" || f == "overall" || f == "sum";
  }
  return false;
}

namespace {

// Normalizes a column, degrading it to text when a cell does not parse.
std::pair<DataType, std::vector<Value>> typed_column(const std::vector<std::string>& cells,
                                                     DataType dtype) {
  std::vector<Value> values;
  values.reserve(cells.size());
  try {
    for (const auto& c : cells) values.push_back(normalize_cell(c, dtype));
    return {dtype, std::move(values)};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseMismatch) throw;
  }
  values.clear();
  for (const auto& c : cells) values.push_back(normalize_cell(c, DataType::Text));
  return {DataType::Text, std::move(values)};
}

}  // namespace

Table build_database(const RawTable& raw) {
  if (raw.headers.empty()) throw Error(ErrorCode::RaggedGrid, "table has no columns");
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    if (raw.rows[r].size() != raw.headers.size())
      throw Error(ErrorCode::RaggedGrid, "row " + std::to_string(r) + " has " +
                                             std::to_string(raw.rows[r].size()) +
                                             " cells, expected " +
                                             std::to_string(raw.headers.size()));
  }
  std::vector<std::vector<std::string>> grid = raw.rows;
  if (!grid.empty() && is_aggregation_row(grid.back())) grid.pop_back();

  const std::size_t n = grid.size();
  Table t;
  t.original_headers = raw.headers;
  t.columns.push_back(Column{"id", "id", DataType::Number, std::nullopt, -1});
  std::vector<std::vector<Value>> cols;
  {
    std::vector<Value> ids;
    for (std::size_t r = 0; r < n; ++r) ids.push_back(Value::of_number(static_cast<double>(r + 1)));
    cols.push_back(std::move(ids));
  }

  for (std::size_t k = 0; k < raw.headers.size(); ++k) {
    std::vector<std::string> cells(n);
    for (std::size_t r = 0; r < n; ++r) cells[r] = text::trim(grid[r][k]);
    const std::string base = "c" + std::to_string(k + 1);
    const std::string& header = raw.headers[k];
    DataType dtype = infer_column_type(cells);

    if (dtype == DataType::BinaryTuple) {
      std::vector<std::string> first(n), second(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (is_null_marker(cells[r])) continue;
        auto parts = split_binary_tuple(cells[r]);
        first[r] = parts->first;
        second[r] = parts->second;
      }
      const std::pair<const char*, std::vector<std::string>*> subs[] = {{"_first", &first},
                                                                        {"_second", &second}};
      for (const auto& [suffix, sub_cells] : subs) {
        auto [sub_type, values] = typed_column(*sub_cells, infer_column_type(*sub_cells));
        if (is_composite(sub_type)) std::tie(sub_type, values) = typed_column(*sub_cells, DataType::Text);
        t.columns.push_back(Column{base + suffix, header, sub_type, base, static_cast<int>(k)});
        cols.push_back(std::move(values));
      }
      continue;
    }

    if (dtype == DataType::List) {
      std::string name = base + std::string(dtype_suffix(DataType::List));
      auto [list_type, values] = typed_column(cells, DataType::List);
      t.columns.push_back(Column{name, header, list_type, std::nullopt, static_cast<int>(k)});
      cols.push_back(std::move(values));

      ChildTable child;
      child.name = "w_" + name;
      child.parent_column = name;
      std::vector<std::pair<int, std::string>> elements;
      for (std::size_t r = 0; r < n; ++r) {
        if (is_null_marker(cells[r])) continue;
        for (auto& item : split_list(cells[r])) elements.emplace_back(static_cast<int>(r + 1), item);
      }
      std::vector<std::string> element_cells;
      for (const auto& e : elements) element_cells.push_back(e.second);
      DataType et = infer_column_type(element_cells);
      if (is_composite(et)) et = DataType::Text;
      auto [element_type, element_values] = typed_column(element_cells, et);
      child.element_dtype = element_type;
      for (std::size_t i = 0; i < elements.size(); ++i)
        child.rows.emplace_back(elements[i].first, std::move(element_values[i]));
      t.children.push_back(std::move(child));
      continue;
    }

    auto [final_type, values] = typed_column(cells, dtype);
    t.columns.push_back(Column{base + std::string(dtype_suffix(final_type)), header, final_type,
                               std::nullopt, static_cast<int>(k)});
    cols.push_back(std::move(values));
  }

  t.rows.assign(n, {});
  for (std::size_t r = 0; r < n; ++r)
    for (auto& col : cols) t.rows[r].push_back(col[r]);
  return t;
}

RawTable Table::to_raw() const {
  RawTable raw;
  raw.headers = original_headers;
  raw.rows.assign(rows.size(), std::vector<std::string>(original_headers.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const Column& col = columns[c];
      if (col.source < 0) continue;
      std::string& out = raw.rows[r][static_cast<std::size_t>(col.source)];
      const Value& v = rows[r][c];
      if (col.parent) {
        // Binary-tuple halves: the first half seeds the cell, the second closes it.
        bool is_first = col.name.ends_with("_first");
        if (is_first) {
          out = v.null ? "" : v.raw;
        } else if (!v.null) {
          out = join_binary_tuple(out, v.raw);
        }
      } else {
        out = v.null ? "" : v.raw;
      }
    }
  }
  return raw;
}

RawTable raw_table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("headers") || !j.contains("rows"))
    throw Error(ErrorCode::SchemaError, "raw table needs 'headers' and 'rows'");
  RawTable raw;
  for (const auto& h : j.at("headers")) raw.headers.push_back(h.is_string() ? h.get<std::string>() : h.dump());
  for (const auto& row : j.at("rows")) {
    std::vector<std::string> cells;
    for (const auto& c : row) {
      if (c.is_null()) cells.emplace_back();
      else if (c.is_string()) cells.push_back(c.get<std::string>());
      else cells.push_back(c.dump());
    }
    raw.rows.push_back(std::move(cells));
  }
  return raw;
}

RawTable raw_table_from_tsv(std::string_view tsv) {
  RawTable raw;
  std::istringstream in{std::string(tsv)};
  std::string line;
  bool header = true;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t pos = l.find('\t', start);
      cells.push_back(l.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      raw.headers = split(line);
      header = false;
    } else if (!line.empty()) {
      raw.rows.push_back(split(line));
    }
  }
  return raw;
}

nlohmann::json value_to_json(const Value& v) {
  if (v.null) return nullptr;
  if (v.dtype == DataType::Number && v.number) {
    double x = *v.number;
    if (std::floor(x) == x && std::fabs(x) < 9e15) return static_cast<std::int64_t>(x);
    return x;
  }
  return v.raw;
}

nlohmann::json table_to_json(const Table& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["original_headers"] = t.original_headers;
  auto cols = nlohmann::json::array();
  for (const auto& c : t.columns) {
    nlohmann::json cj{{"name", c.name},
                      {"header", c.header},
                      {"dtype", std::string(dtype_name(c.dtype))},
                      {"source", c.source}};
    if (c.parent) cj["parent"] = *c.parent;
    cols.push_back(std::move(cj));
  }
  j["columns"] = std::move(cols);
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    auto rj = nlohmann::json::array();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) rj.push_back(value_to_json(row[c]));
      else rj.push_back(row[c].null ? nlohmann::json(nullptr) : nlohmann::json(row[c].raw));
    }
    rows.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows);
  auto children = nlohmann::json::array();
  for (const auto& ch : t.children) {
    auto crows = nlohmann::json::array();
    for (const auto& [id, v] : ch.rows) crows.push_back({id, v.null ? nlohmann::json(nullptr) : nlohmann::json(v.raw)});
    children.push_back({{"name", ch.name},
                        {"parent_column", ch.parent_column},
                        {"element_dtype", std::string(dtype_name(ch.element_dtype))},
                        {"rows", std::move(crows)}});
  }
  j["children"] = std::move(children);
  return j;
}

Table table_from_json(const nlohmann::json& j) {
  try {
    Table t;
    t.name = j.at("name").get<std::string>();
    t.original_headers = j.at("original_headers").get<std::vector<std::string>>();
    for (const auto& cj : j.at("columns")) {
      Column c;
      c.name = cj.at("name").get<std::string>();
      c.header = cj.at("header").get<std::string>();
      auto dt = dtype_from_name(cj.at("dtype").get<std::string>());
      if (!dt) throw Error(ErrorCode::SchemaError, "unknown dtype in column " + c.name);
      c.dtype = *dt;
      c.source = cj.at("source").get<int>();
      if (cj.contains("parent")) c.parent = cj.at("parent").get<std::string>();
      t.columns.push_back(std::move(c));
    }
    for (const auto& rj : j.at("rows")) {
      if (rj.size() != t.columns.size()) throw Error(ErrorCode::RaggedGrid, "row width mismatch");
      std::vector<Value> row;
      for (std::size_t c = 0; c < rj.size(); ++c) {
        const auto& cell = rj[c];
        if (c == 0) {
          row.push_back(Value::of_number(cell.get<double>()));
        } else {
          std::string raw = cell.is_null() ? "" : cell.is_string() ? cell.get<std::string>() : cell.dump();
          row.push_back(normalize_cell(raw, t.columns[c].dtype));
        }
      }
      t.rows.push_back(std::move(row));
    }
    if (j.contains("children")) {
      for (const auto& chj : j.at("children")) {
        ChildTable ch;
        ch.name = chj.at("name").get<std::string>();
        ch.parent_column = chj.at("parent_column").get<std::string>();
        ch.element_dtype = dtype_from_name(chj.at("element_dtype").get<std::string>()).value_or(DataType::Text);
        for (const auto& e : chj.at("rows")) {
          std::string raw = e[1].is_null() ? "" : e[1].get<std::string>();
          ch.rows.emplace_back(e[0].get<int>(), normalize_cell(raw, ch.element_dtype));
        }
        t.children.push_back(std::move(ch));
      }
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed table json: ") + e.what());
  }
}

}  // namespace alignsql
