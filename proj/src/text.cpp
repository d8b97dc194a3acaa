#include "alignsql/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>

namespace alignsql::text {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (char ca : a) {
    for (std::size_t j = 0; j < b.size(); ++j)
      cur[j + 1] = ca == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(lower(c));
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (is_word_byte(c)) {
      cur.push_back(lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::optional<double> parse_plain_number(std::string_view raw) {
  std::string s = trim(raw);
  std::string clean;
  std::size_t i = 0;
  if (s.compare(0, 3, "\xE2\x88\x92") == 0) {  // U+2212 minus sign
    clean.push_back('-');
    i = 3;
  } else if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') clean.push_back('-');
    i = 1;
  }
  std::size_t int_start = i;
  std::size_t digits_since_comma = 0;
  bool saw_comma = false;
  std::size_t first_group = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      clean.push_back(c);
      ++digits_since_comma;
    } else if (c == ',') {
      if (!saw_comma) {
        first_group = digits_since_comma;
        if (first_group == 0 || first_group > 3) return std::nullopt;
      } else if (digits_since_comma != 3) {
        return std::nullopt;
      }
      saw_comma = true;
      digits_since_comma = 0;
    } else {
      break;
    }
  }
  if (i == int_start) return std::nullopt;
  if (saw_comma && digits_since_comma != 3) return std::nullopt;
  if (i < s.size() && s[i] == '.') {
    clean.push_back('.');
    ++i;
    std::size_t frac_start = i;
    for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) clean.push_back(s[i]);
    if (i == frac_start) return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v);
  if (ec != std::errc() || ptr != clean.data() + clean.size()) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

double fuzzy_ratio(std::string_view a, std::string_view b) {
  std::string fa = fold(a), fb = fold(b);
  std::size_t total = fa.size() + fb.size();
  if (total == 0) return 1.0;
  std::size_t lcs = lcs_length(fa, fb);
  return static_cast<double>(2 * lcs) / static_cast<double>(total);
}

std::optional<std::size_t> best_fuzzy_match(std::string_view query,
                                             std::span<const std::string> candidates) {
  std::optional<std::size_t> best;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double s = fuzzy_ratio(query, candidates[i]);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

}  // namespace alignsql::text
