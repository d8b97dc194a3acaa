#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Small string utilities shared by the table builder, the corpus tools and
// the decoder's literal repair.
namespace alignsql::text {

/// ASCII lower-casing with surrounding whitespace trimmed and inner runs of
/// whitespace collapsed to one space. Non-ASCII bytes pass through.
std::string fold(std::string_view s);

std::string trim(std::string_view s);

/// Lower-cased alphanumeric runs. UTF-8 continuation bytes count as word
/// characters so accented names stay in one piece.
std::vector<std::string> word_tokens(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Plain decimal number with optional sign and optional comma grouping
/// ("25,000", "-3.5", "−2"). Returns nullopt for anything else.
std::optional<double> parse_plain_number(std::string_view s);

/// Shortest text that parses back to the same double; integral values are
/// printed without a decimal point.
std::string format_number(double v);

/// Normalized InDel similarity in [0, 1] over case-folded strings:
/// 1 - (insertions + deletions) / (|a| + |b|). Two empty strings score 1.
double fuzzy_ratio(std::string_view a, std::string_view b);

/// Index of the candidate with the highest fuzzy_ratio against `query`
/// (first one wins ties); nullopt when there are no candidates.
std::optional<std::size_t> best_fuzzy_match(std::string_view query,
                                             std::span<const std::string> candidates);

}  // namespace alignsql::text
