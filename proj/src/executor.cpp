#include "alignsql/executor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "alignsql/text.hpp"

namespace alignsql {
namespace {

using sql::AggFn;
using sql::CompOp;
using sql::Expr;
using sql::Select;

bool has_aggregate(const Expr& e) {
  if (std::holds_alternative<sql::Aggregate>(e.node)) return true;
  if (const auto* a = std::get_if<sql::Arithmetic>(&e.node))
    return has_aggregate(*a->lhs) || has_aggregate(*a->rhs);
  return false;
}

bool numeric(const Value& v) { return !v.null && v.number.has_value(); }

int three_way(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

bool values_equal(const Value& a, const Value& b) {
  if (a.null || b.null) return false;
  if (a.fraction && b.fraction) return *a.fraction == *b.fraction;
  if (numeric(a) && numeric(b)) return *a.number == *b.number;
  return a.folded == b.folded;
}

bool compare(const Value& a, CompOp op, const Value& b) {
  if (a.null || b.null) return false;
  if (op == CompOp::Eq) return values_equal(a, b);
  if (op == CompOp::Ne) return !values_equal(a, b);
  int c = 0;
  if (numeric(a) && numeric(b)) {
    c = (a.fraction && b.fraction) ? (*a.fraction < *b.fraction ? -1 : (*b.fraction < *a.fraction ? 1 : 0))
                                   : three_way(*a.number, *b.number);
  } else if (!numeric(a) && !numeric(b)) {
    c = a.folded.compare(b.folded);
  } else {
    throw Error(ErrorCode::TypeMismatch,
                "cannot order '" + a.raw + "' against '" + b.raw + "'");
  }
  switch (op) {
    case CompOp::Lt: return c < 0;
    case CompOp::Le: return c <= 0;
    case CompOp::Gt: return c > 0;
    case CompOp::Ge: return c >= 0;
    default: return false;
  }
}

std::string group_key(const Value& v) {
  if (v.null) return std::string("\x01null");
  if (v.fraction) return "f" + std::to_string(v.fraction->num) + "/" + std::to_string(v.fraction->den);
  if (v.number) return "n" + text::format_number(*v.number);
  return "t" + v.folded;
}

class Interpreter {
 public:
  explicit Interpreter(const Table& t) : t_(t) {}

  std::vector<std::vector<Value>> run(const Select& q) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t_.row_count(); ++r) {
      bool keep = true;
      for (const auto& p : q.where) {
        if (!holds(p, r)) {
          keep = false;
          break;
        }
      }
      if (keep) rows.push_back(r);
    }

    bool aggregate_mode = !q.group_by.empty();
    for (const auto& e : q.projections) aggregate_mode = aggregate_mode || has_aggregate(e);
    for (const auto& o : q.order_by) aggregate_mode = aggregate_mode || has_aggregate(o.expr);

    // Each unit is a group of row indices; plain queries use singleton groups.
    std::vector<std::vector<std::size_t>> units;
    if (!aggregate_mode) {
      for (std::size_t r : rows) units.push_back({r});
    } else if (q.group_by.empty()) {
      for (const auto& e : q.projections) {
        if (!has_aggregate(e))
          throw Error(ErrorCode::TypeMismatch, "bare column mixed with aggregate without GROUP BY");
      }
      units.push_back(rows);
    } else {
      std::vector<std::size_t> group_cols;
      for (const auto& g : q.group_by) group_cols.push_back(bind(g.name));
      std::map<std::vector<std::string>, std::size_t> index;
      for (std::size_t r : rows) {
        std::vector<std::string> key;
        for (std::size_t c : group_cols) key.push_back(group_key(t_.cell(r, c)));
        auto [it, inserted] = index.emplace(std::move(key), units.size());
        if (inserted) units.emplace_back();
        units[it->second].push_back(r);
      }
    }

    if (!q.order_by.empty()) {
      std::vector<std::vector<Value>> keys(units.size());
      for (std::size_t u = 0; u < units.size(); ++u)
        for (const auto& o : q.order_by) keys[u].push_back(eval_unit(o.expr, units[u]));
      std::vector<std::size_t> perm(units.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
        for (std::size_t k = 0; k < q.order_by.size(); ++k) {
          const Value& a = keys[x][k];
          const Value& b = keys[y][k];
          if (a.null != b.null) return b.null;
          if (a.null) continue;
          int c = compare_for_order(a, b);
          if (q.order_by[k].dir == sql::SortDir::Desc) c = -c;
          if (c != 0) return c < 0;
        }
        return false;
      });
      std::vector<std::vector<std::size_t>> sorted;
      for (std::size_t p : perm) sorted.push_back(std::move(units[p]));
      units = std::move(sorted);
    }

    std::vector<std::vector<Value>> out;
    std::vector<std::vector<std::string>> seen;
    for (const auto& unit : units) {
      if (q.limit && out.size() >= static_cast<std::size_t>(std::max<std::int64_t>(*q.limit, 0))) break;
      std::vector<Value> row;
      for (const auto& e : q.projections) row.push_back(eval_unit(e, unit));
      if (q.distinct) {
        std::vector<std::string> key;
        for (const auto& v : row) key.push_back(group_key(v));
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(std::move(key));
      }
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  const Table& t_;
  std::map<const Select*, Value> scalar_cache_;

  std::size_t bind(const std::string& name) const {
    auto c = t_.column_index(name);
    if (!c) throw Error(ErrorCode::UnboundColumn, "no column named " + name);
    return *c;
  }

  Value literal_value(const sql::Literal& lit, std::optional<DataType> context) const {
    if (context && *context != DataType::Text) {
      try {
        return normalize_cell(lit.text, *context);
      } catch (const Error&) {
      }
    }
    return Value::of_text(lit.text);
  }

  std::optional<DataType> dtype_of(const Expr& e) const {
    if (const auto* c = std::get_if<sql::ColumnRef>(&e.node)) return t_.columns[bind(c->name)].dtype;
    return std::nullopt;
  }

  Value scalar(const sql::Subquery& s) {
    const Select* key = &*s.query;
    if (auto it = scalar_cache_.find(key); it != scalar_cache_.end()) return it->second;
    Interpreter inner(t_);
    auto rows = inner.run(*s.query);
    if (rows.size() != 1 || rows[0].size() != 1)
      throw Error(ErrorCode::NonScalarSubquery,
                  "subquery returned " + std::to_string(rows.size()) + " rows");
    scalar_cache_.emplace(key, rows[0][0]);
    return rows[0][0];
  }

  Value arithmetic(char op, const Value& a, const Value& b) const {
    if (a.null || b.null) return Value::null_value(DataType::Number);
    if (!numeric(a) || !numeric(b))
      throw Error(ErrorCode::TypeMismatch, "arithmetic on non-numeric value");
    return Value::of_number(op == '+' ? *a.number + *b.number : *a.number - *b.number);
  }

  // Row-level evaluation; `context` is the dtype used to coerce literals.
  Value eval_row(const Expr& e, std::size_t r, std::optional<DataType> context) {
    return std::visit(
        [&](const auto& n) -> Value {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, sql::ColumnRef>) {
            return t_.cell(r, bind(n.name));
          } else if constexpr (std::is_same_v<T, sql::Literal>) {
            return literal_value(n, context);
          } else if constexpr (std::is_same_v<T, sql::Aggregate>) {
            throw Error(ErrorCode::TypeMismatch, "aggregate used in a row context");
          } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
            return arithmetic(n.op, eval_row(*n.lhs, r, std::nullopt), eval_row(*n.rhs, r, std::nullopt));
          } else {
            return scalar(n);
          }
        },
        e.node);
  }

  // Group-level evaluation; bare columns read the group's first row.
  Value eval_unit(const Expr& e, const std::vector<std::size_t>& unit) {
    return std::visit(
        [&](const auto& n) -> Value {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, sql::Aggregate>) {
            return aggregate(n, unit);
          } else if constexpr (std::is_same_v<T, sql::Arithmetic>) {
            return arithmetic(n.op, eval_unit(*n.lhs, unit), eval_unit(*n.rhs, unit));
          } else if constexpr (std::is_same_v<T, sql::ColumnRef>) {
            if (unit.empty()) return Value::null_value(t_.columns[bind(n.name)].dtype);
            return eval_row(e, unit.front(), std::nullopt);
          } else {
            return eval_row(e, unit.empty() ? 0 : unit.front(), std::nullopt);
          }
        },
        e.node);
  }

  Value aggregate(const sql::Aggregate& a, const std::vector<std::size_t>& unit) {
    if (!a.column) return Value::of_number(static_cast<double>(unit.size()));
    std::size_t c = bind(a.column->name);
    std::vector<Value> vals;
    std::vector<std::string> keys;
    for (std::size_t r : unit) {
      const Value& v = t_.cell(r, c);
      if (v.null) continue;
      if (a.distinct) {
        std::string k = group_key(v);
        if (std::find(keys.begin(), keys.end(), k) != keys.end()) continue;
        keys.push_back(std::move(k));
      }
      vals.push_back(v);
    }
    switch (a.fn) {
      case AggFn::Count:
        return Value::of_number(static_cast<double>(vals.size()));
      case AggFn::Max:
      case AggFn::Min: {
        if (vals.empty()) return Value::null_value(t_.columns[c].dtype);
        std::size_t best = 0;
        for (std::size_t i = 1; i < vals.size(); ++i) {
          int cmp = compare_for_order(vals[i], vals[best]);
          if (a.fn == AggFn::Max ? cmp > 0 : cmp < 0) best = i;
        }
        return vals[best];
      }
      case AggFn::Sum:
      case AggFn::Avg: {
        if (vals.empty()) return Value::null_value(DataType::Number);
        double sum = 0;
        for (const auto& v : vals) {
          if (!numeric(v)) throw Error(ErrorCode::TypeMismatch, "SUM/AVG over non-numeric '" + v.raw + "'");
          sum += *v.number;
        }
        return Value::of_number(a.fn == AggFn::Sum ? sum : sum / static_cast<double>(vals.size()));
      }
    }
    return Value::null_value();
  }

  bool holds(const sql::Predicate& p, std::size_t r) {
    if (const auto* c = std::get_if<sql::Comparison>(&p)) {
      Value lhs = eval_row(c->lhs, r, dtype_of(c->rhs));
      Value rhs = eval_row(c->rhs, r, dtype_of(c->lhs));
      return compare(lhs, c->op, rhs);
    }
    const auto& in = std::get<sql::InList>(p);
    Value lhs = eval_row(in.lhs, r, std::nullopt);
    auto context = dtype_of(in.lhs);
    for (const auto& lit : in.values)
      if (values_equal(lhs, literal_value(lit, context))) return true;
    return false;
  }
};

bool cell_answers_match(const Value& a, const Value& b) {
  if (a.null || b.null) return a.null && b.null;
  if (numeric(a) && numeric(b)) {
    double x = *a.number, y = *b.number;
    return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
  }
  return a.folded == b.folded;
}

}  // namespace

int compare_for_order(const Value& a, const Value& b) {
  bool na = numeric(a), nb = numeric(b);
  if (na != nb) return na ? -1 : 1;
  if (na) {
    if (a.fraction && b.fraction) return *a.fraction < *b.fraction ? -1 : (*b.fraction < *a.fraction ? 1 : 0);
    return three_way(*a.number, *b.number);
  }
  int c = a.folded.compare(b.folded);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

Answer execute(const sql::Query& q, const Table& t) {
  Interpreter interp(t);
  Answer out;
  for (auto& row : interp.run(q))
    for (auto& v : row) out.push_back(std::move(v));
  return out;
}

bool answers_match(const Answer& a, const Answer& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (!used[j] && cell_answers_match(x, b[j])) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

nlohmann::json answer_to_json(const Answer& a) {
  auto arr = nlohmann::json::array();
  for (const auto& v : a) arr.push_back(value_to_json(v));
  return arr;
}

Answer answer_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "answer must be an array");
  Answer out;
  for (const auto& v : j) {
    if (v.is_null()) out.push_back(Value::null_value());
    else if (v.is_number()) out.push_back(Value::of_number(v.get<double>()));
    else if (v.is_string()) out.push_back(Value::of_text(v.get<std::string>()));
    else throw Error(ErrorCode::SchemaError, "answer cells must be numbers, strings or null");
  }
  return out;
}

}  // namespace alignsql
