#include "alignsql/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "alignsql/rng.hpp"
#include "alignsql/text.hpp"

namespace alignsql {

namespace {

enum class Kind { Person, Nation, Venue, Event, Year, Points, Rank, Age, Laps };

struct Concept {
  Kind kind;
  bool numeric;
  std::vector<std::string> headers;
  std::vector<std::string> nouns;
};

const std::vector<Concept>& concepts() {
  static const std::vector<Concept> c = {
      {Kind::Person, false, {"athlete", "player", "competitor", "rider"}, {"person", "individual", "entrant"}},
      {Kind::Nation, false, {"nation", "country", "team"}, {"nationality", "homeland", "flag"}},
      {Kind::Venue, false, {"venue", "location", "city"}, {"site", "host", "town"}},
      {Kind::Event, false, {"event", "discipline", "race"}, {"contest", "category", "heat"}},
      {Kind::Year, true, {"year", "season"}, {"date", "edition", "vintage"}},
      {Kind::Points, true, {"points", "score", "total"}, {"tally", "haul", "mark"}},
      {Kind::Rank, true, {"rank", "position", "standing"}, {"finish", "placing", "spot"}},
      {Kind::Age, true, {"age", "years old"}, {"maturity", "oldness", "lifespan"}},
      {Kind::Laps, true, {"laps", "rounds", "circuits"}, {"loops", "turns", "passes"}},
  };
  return c;
}

const std::vector<std::string> kFirst = {"Anna", "Boris", "Carla", "Dmitri", "Elena", "Felix", "Greta",
                                         "Hugo", "Ines",  "Jonas", "Kira",   "Lucas", "Mona",  "Nils"};
const std::vector<std::string> kLast = {"Berg", "Costa", "Dahl", "Ekman", "Ferro", "Gallo", "Holm",
                                        "Ivers", "Jansen", "Kovac", "Lund", "Moreau"};
const std::vector<std::string> kNations = {"Norway", "Kenya", "Brazil", "Japan",   "Canada", "Peru",
                                           "Italy",  "Chile", "Ghana",  "Austria", "Mexico", "Poland"};
const std::vector<std::string> kVenues = {"Oslo",  "Lima", "Rome",    "Tokyo", "Nairobi", "Quito",
                                          "Turin", "Kyiv", "Bergen", "Cusco", "Osaka",   "Star One"};
const std::string kVagueNumeric = "figure";
const std::string kVagueText = "entry";
const std::vector<std::string> kEvents = {"Sprint", "Relay", "Marathon", "Hurdles", "Slalom", "Downhill",
                                          "Pursuit", "Keirin", "Omnium", "Biathlon", "Decathlon", "Steeplechase"};
constexpr std::size_t kTextConcepts = 4;
constexpr std::size_t kNumericConcepts = 5;

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform_index(rng, v.size())];
}

std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  auto perm = seeded_permutation(n, rng());
  perm.resize(k);
  return perm;
}

struct GenColumn {
  const Concept* kind_of;
  std::string header;
  std::vector<std::string> cells;
  std::string name;  // canonical column name after build_database
};

struct GenTable {
  std::string id;
  std::vector<GenColumn> columns;
  std::size_t rows = 0;
};

RawTable to_raw(const GenTable& t) {
  RawTable raw = {{}, std::vector<std::vector<std::string>>(t.rows)};
  for (const auto& c : t.columns) {
    raw.headers.push_back(c.header);
    for (std::size_t r = 0; r < t.rows; ++r) raw.rows[r].push_back(c.cells[r]);
  }
  return raw;
}

GenTable make_table(Rng& rng, const std::string& id) {
  GenTable t;
  t.id = id;
  t.rows = 5 + uniform_index(rng, 3);
  const auto& all = concepts();
  std::vector<const Concept*> chosen;
  for (std::size_t i : sample_distinct(rng, kTextConcepts, 3)) chosen.push_back(&all[i]);
  for (std::size_t i : sample_distinct(rng, kNumericConcepts, 3)) chosen.push_back(&all[kTextConcepts + i]);
  auto order = seeded_permutation(chosen.size(), rng());
  for (std::size_t o : order) {
    const Concept* c = chosen[o];
    GenColumn col{c, pick(rng, c->headers), {}, {}};
    switch (c->kind) {
      case Kind::Person: {
        auto idx = sample_distinct(rng, kFirst.size() * kLast.size(), t.rows);
        for (std::size_t k : idx) col.cells.push_back(kFirst[k / kLast.size()] + " " + kLast[k % kLast.size()]);
        break;
      }
      case Kind::Nation:
      case Kind::Venue:
      case Kind::Event: {
        const auto& pool = c->kind == Kind::Nation ? kNations : c->kind == Kind::Venue ? kVenues : kEvents;
        auto subset = sample_distinct(rng, pool.size(), 3);
        for (std::size_t r = 0; r < t.rows; ++r) col.cells.push_back(pool[subset[uniform_index(rng, 3)]]);
        break;
      }
      case Kind::Year: {
        auto idx = sample_distinct(rng, 31, t.rows);
        for (std::size_t k : idx) col.cells.push_back(std::to_string(1985 + k));
        break;
      }
      case Kind::Age:
        for (std::size_t r = 0; r < t.rows; ++r) col.cells.push_back(std::to_string(17 + uniform_index(rng, 24)));
        break;
      case Kind::Laps:
        for (std::size_t r = 0; r < t.rows; ++r) col.cells.push_back(std::to_string(1 + uniform_index(rng, 12)));
        break;
      case Kind::Points:
        for (std::size_t r = 0; r < t.rows; ++r) col.cells.push_back(std::to_string(uniform_index(rng, 61)));
        break;
      case Kind::Rank: {
        auto perm = seeded_permutation(t.rows, rng());
        for (std::size_t k : perm) col.cells.push_back(std::to_string(k + 1));
        break;
      }
    }
    t.columns.push_back(std::move(col));
  }
  Table db = build_database(to_raw(t));
  for (std::size_t j = 0; j < t.columns.size(); ++j) t.columns[j].name = db.columns[j + 1].name;
  return t;
}

// Question and query built side by side so link indices are known.
struct Builder {
  std::vector<std::string> question;
  std::vector<sql::SqlToken> tokens;
  std::vector<AlignmentLink> links;

  std::vector<int> say(const std::string& words) {
    std::vector<int> idx;
    std::size_t pos = 0;
    while (pos < words.size()) {
      std::size_t end = words.find(' ', pos);
      if (end == std::string::npos) end = words.size();
      if (end > pos) {
        idx.push_back(static_cast<int>(question.size()));
        question.push_back(words.substr(pos, end - pos));
      }
      pos = end + 1;
    }
    return idx;
  }

  std::vector<int> emit(const std::string& sql_text) {
    std::vector<int> idx;
    for (auto& tok : sql::tokenize_sql(sql_text)) {
      idx.push_back(static_cast<int>(tokens.size()));
      tokens.push_back(std::move(tok));
    }
    return idx;
  }

  /// Mentions a cell value in the question and emits it as a literal.
  std::pair<std::vector<int>, std::vector<int>> value(const std::string& raw, bool numeric) {
    auto words = text::word_tokens(raw);
    std::vector<int> q;
    for (auto& w : words) {
      q.push_back(static_cast<int>(question.size()));
      question.push_back(w);
    }
    sql::SqlToken tok{numeric ? sql::TokenKind::Num : sql::TokenKind::Str, raw, sql::Span{q.front(), q.back()}};
    std::vector<int> s = {static_cast<int>(tokens.size())};
    tokens.push_back(std::move(tok));
    return {q, s};
  }

  void link(std::vector<int> q, std::vector<int> s) {
    if (!q.empty() && !s.empty()) links.push_back({std::move(q), std::move(s)});
  }
};

std::vector<int> cat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Generator {
  Rng& rng;
  const SynthOptions& opt;
  const GenTable& table;

  std::vector<std::size_t> columns_where(bool numeric) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < table.columns.size(); ++j)
      if (table.columns[j].kind_of->numeric == numeric) out.push_back(j);
    return out;
  }

  std::string noun(std::size_t j) {
    const Concept& c = *table.columns[j].kind_of;
    if (uniform01(rng) < opt.vague_noun_rate) return c.numeric ? kVagueNumeric : kVagueText;
    return pick(rng, c.nouns);
  }

  std::size_t other_than(const std::vector<std::size_t>& cols, std::size_t j) {
    std::vector<std::size_t> rest;
    for (std::size_t c : cols)
      if (c != j) rest.push_back(c);
    return pick(rng, rest);
  }

  const std::string& name(std::size_t j) const { return table.columns[j].name; }
  const std::string& cell(std::size_t j) { return pick(rng, table.columns[j].cells); }

  std::vector<std::string> unique_cells(std::size_t j) const {
    std::map<std::string, int> counts;
    for (const auto& c : table.columns[j].cells) ++counts[c];
    std::vector<std::string> out;
    for (const auto& c : table.columns[j].cells)
      if (counts[c] == 1) out.push_back(c);
    return out;
  }

  std::vector<std::string> distinct_cells(std::size_t j) const {
    std::vector<std::string> out;
    for (const auto& c : table.columns[j].cells)
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    return out;
  }

  /// One question for template `k`; false when this table cannot host it.
  bool generate(int k, Builder& b) {
    auto text_cols = columns_where(false);
    auto num_cols = columns_where(true);
    const std::size_t a = pick(rng, text_cols);
    const std::size_t bn = pick(rng, num_cols);
    switch (k) {
      case 0: {  // superlative
        const bool desc = uniform_index(rng, 2) == 0;
        b.say("which");
        auto qa = b.say(noun(a));
        b.say("had the");
        auto qs = b.say(desc ? pick(rng, std::vector<std::string>{"highest", "largest"})
                             : pick(rng, std::vector<std::string>{"lowest", "smallest"}));
        auto qb = b.say(noun(bn));
        auto s0 = b.emit("SELECT");
        auto sa = b.emit(name(a));
        b.emit("FROM w");
        auto so = b.emit("ORDER BY");
        auto sb = b.emit(name(bn));
        auto sl = b.emit(desc ? "DESC LIMIT 1" : "LIMIT 1");
        b.link(qa, sa);
        b.link(qb, sb);
        b.link(qs, cat(so, sl));
        return true;
      }
      case 1:
      case 2: {  // text filter, optionally counted
        const std::size_t other = other_than(text_cols, a);
        const bool count = k == 2;
        auto qh = b.say(count ? "how many" : "which");
        auto qa = b.say(noun(a));
        b.say("had");
        const std::string v = cell(other);
        std::vector<int> sh, sa;
        if (count) {
          sh = b.emit("SELECT COUNT (");
          sa = b.emit(name(a));
          sh = cat(sh, b.emit(")"));
        } else {
          b.emit("SELECT");
          sa = b.emit(name(a));
        }
        b.emit("FROM w WHERE");
        auto so = b.emit(name(other));
        b.emit("=");
        auto [qv, sv] = b.value(v, false);
        b.say("as");
        auto qo = b.say(noun(other));
        b.link(qa, sa);
        b.link(qv, sv);
        b.link(qo, so);
        if (count) b.link(qh, sh);
        return true;
      }
      case 3: {  // counted numeric comparison
        const bool above = uniform_index(rng, 2) == 0;
        auto qh = b.say("how many");
        auto qa = b.say(noun(a));
        b.say("had");
        auto qb = b.say(noun(bn));
        auto qc = b.say(above ? "above" : "below");
        auto sh = b.emit("SELECT COUNT (");
        auto sa = b.emit(name(a));
        sh = cat(sh, b.emit(")"));
        b.emit("FROM w WHERE");
        auto sb = b.emit(name(bn));
        auto sc = b.emit(above ? ">" : "<");
        auto [qv, sv] = b.value(cell(bn), true);
        b.link(qh, sh);
        b.link(qa, sa);
        b.link(qb, sb);
        b.link(qc, sc);
        b.link(qv, sv);
        return true;
      }
      case 4:
      case 7: {  // numeric equality, optionally counted
        const bool count = k == 7;
        auto qh = b.say(count ? "how many" : "which");
        auto qa = b.say(noun(a));
        b.say("had");
        std::vector<int> sh, sa;
        if (count) {
          sh = b.emit("SELECT COUNT (");
          sa = b.emit(name(a));
          sh = cat(sh, b.emit(")"));
        } else {
          b.emit("SELECT");
          sa = b.emit(name(a));
        }
        b.emit("FROM w WHERE");
        auto sb = b.emit(name(bn));
        b.emit("=");
        auto [qv, sv] = b.value(cell(bn), true);
        b.say("as");
        auto qb = b.say(noun(bn));
        if (count) b.link(qh, sh);
        b.link(qa, sa);
        b.link(qb, sb);
        b.link(qv, sv);
        return true;
      }
      case 5: {  // plain count
        const std::size_t any = uniform_index(rng, 2) == 0 ? a : bn;
        auto qh = b.say("how many");
        auto qa = b.say(noun(any));
        b.say("are listed");
        auto sh = b.emit("SELECT COUNT (");
        auto sa = b.emit(name(any));
        sh = cat(sh, b.emit(")"));
        b.emit("FROM w");
        b.link(qh, sh);
        b.link(qa, sa);
        return true;
      }
      case 6: {  // most frequent value
        std::size_t rep = a;
        while (table.columns[rep].kind_of->kind == Kind::Person) rep = other_than(text_cols, a);
        b.say("which");
        auto qa = b.say(noun(rep));
        auto qf = b.say("appears most often");
        b.emit("SELECT");
        auto sa = b.emit(name(rep));
        b.emit("FROM w GROUP BY");
        auto sa2 = b.emit(name(rep));
        auto so = b.emit("ORDER BY COUNT (");
        auto sa3 = b.emit(name(rep));
        auto sl = b.emit(") DESC LIMIT 1");
        b.link(qa, cat(cat(sa, sa2), sa3));
        b.link(qf, cat(so, sl));
        return true;
      }
      case 8: {  // successor through a scalar subquery
        auto uniq = unique_cells(a);
        if (uniq.empty()) return false;
        b.say("which");
        auto qa = b.say(noun(a));
        b.say("had a");
        auto qb = b.say(noun(bn));
        auto qp = b.say("one more than");
        b.emit("SELECT");
        auto sa = b.emit(name(a));
        b.emit("FROM w WHERE");
        auto sb = b.emit(name(bn));
        b.emit("= ( SELECT");
        auto sb2 = b.emit(name(bn));
        b.emit("FROM w WHERE");
        auto sa2 = b.emit(name(a));
        b.emit("=");
        auto [qv, sv] = b.value(pick(rng, uniq), false);
        auto sp = b.emit(") + 1");
        b.link(qa, cat(sa, sa2));
        b.link(qb, cat(sb, sb2));
        b.link(qp, sp);
        b.link(qv, sv);
        return true;
      }
      case 9: {  // comparison between two named values
        auto distinct = distinct_cells(a);
        if (distinct.size() < 2) return false;
        auto two = sample_distinct(rng, distinct.size(), 2);
        const bool desc = uniform_index(rng, 2) == 0;
        auto qw = b.say("which of");
        b.emit("SELECT");
        auto sa = b.emit(name(a));
        b.emit("FROM w WHERE");
        auto sa2 = b.emit(name(a));
        b.emit("IN (");
        auto [qv1, sv1] = b.value(distinct[two[0]], false);
        b.emit(",");
        b.say("or");
        auto [qv2, sv2] = b.value(distinct[two[1]], false);
        b.emit(")");
        b.say("had the");
        auto qs = b.say(desc ? "higher" : "lower");
        auto qb = b.say(noun(bn));
        auto so = b.emit("ORDER BY");
        auto sb = b.emit(name(bn));
        auto sl = b.emit(desc ? "DESC LIMIT 1" : "LIMIT 1");
        b.link(qw, cat(sa, sa2));
        b.link(qv1, sv1);
        b.link(qv2, sv2);
        b.link(qs, cat(so, sl));
        b.link(qb, sb);
        return true;
      }
    }
    return false;
  }
};

}  // namespace

Corpus synthesize(const SynthOptions& options) {
  if (options.examples_per_table == 0) throw Error(ErrorCode::BadConfig, "examples_per_table must be positive");
  Rng rng(options.seed);
  nlohmann::json tables = nlohmann::json::object();
  nlohmann::json examples = nlohmann::json::array();
  std::size_t made = 0;
  for (std::size_t ti = 0; made < options.size; ++ti) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-t%03zu", ti);
    GenTable table = make_table(rng, id);
    RawTable raw = to_raw(table);
    tables[id] = {{"headers", raw.headers}, {"rows", raw.rows}};
    Generator gen{rng, options, table};
    for (std::size_t e = 0; e < options.examples_per_table && made < options.size; ++e) {
      Builder b;
      while (true) {
        b = Builder{};
        if (gen.generate(static_cast<int>(uniform_index(rng, 10)), b)) break;
      }
      char eid[32];
      std::snprintf(eid, sizeof eid, "synth-%05zu", made);
      nlohmann::json links = nlohmann::json::array();
      for (const auto& l : b.links) links.push_back({{"question", l.question}, {"sql", l.sql}});
      examples.push_back({{"id", eid},
                          {"table_id", id},
                          {"question", b.question},
                          {"sql", sql::tokens_to_json(b.tokens)},
                          {"alignments", links}});
      ++made;
    }
  }
  return corpus_from_json({{"tables", tables}}, {{"version", 1}, {"examples", examples}});
}

}  // namespace alignsql
