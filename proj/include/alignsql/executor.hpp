#pragma once

#include <vector>

#include "alignsql/sqlir.hpp"
#include "alignsql/tables.hpp"
#include "json.hpp"

namespace alignsql {

/// Result cells flattened row-major.
using Answer = std::vector<Value>;

/// In-memory interpreter for the SQL subset.
///
/// Pipeline: WHERE filter, then grouping (groups in first-appearance order),
/// stable ORDER BY (ties keep id order, nulls last), projection, DISTINCT
/// (keeps first occurrence) and LIMIT.
///
/// Value order used by ORDER BY, MAX and MIN: values with a numeric view
/// sort before text, numbers compare numerically (fractions exactly), text
/// compares by folded bytes. Comparison predicates are stricter: `<` and
/// friends between a number and text raise TypeMismatch, and anything
/// compared with null is false.
Answer execute(const sql::Query& q, const Table& t);

/// Order-insensitive multiset equality. Numbers match with relative
/// tolerance 1e-9, text after folding; a numeric string matches the number.
bool answers_match(const Answer& a, const Answer& b);

nlohmann::json answer_to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);

/// Three-way value order shared by sorting and MAX/MIN (nulls excluded).
int compare_for_order(const Value& a, const Value& b);

}  // namespace alignsql
