#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "evbet/betting.hpp"
#include "evbet/confseq.hpp"
#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/evariables.hpp"
#include "evbet/game.hpp"
#include "evbet/iid_case.hpp"
#include "evbet/multiround.hpp"

namespace evbet::io {

using Json = nlohmann::ordered_json;

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return v;
}

// JSON has no infinities; non-finite values are written as strings.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

inline std::vector<double> parse_double_list(std::string_view s, char sep = ',') {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.push_back(parse_double(s.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

inline std::string join_doubles(const std::vector<double>& xs, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += sep;
    out += format_double(xs[i]);
  }
  return out;
}

// Minimal CSV: header row, comma separated, double-quoted fields may contain
// commas. Blank lines are skipped.
class CsvTable {
 public:
  static CsvTable read(std::istream& in) {
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      auto fields = split(line);
      if (header) {
        t.header_ = std::move(fields);
        header = false;
      } else {
        if (fields.size() != t.header_.size())
          throw ParseError("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(t.header_.size()));
        t.rows_.push_back(std::move(fields));
      }
    }
    if (header) throw ParseError("CSV input is empty");
    return t;
  }

  static CsvTable read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read(in);
  }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw ParseError("CSV is missing column '" + std::string(name) + "'");
  }

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          out.back() += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          out.back() += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        out.emplace_back();
      } else {
        out.back() += c;
      }
    }
    if (quoted) throw ParseError("unterminated quote in CSV row");
    for (auto& f : out) {
      const auto b = f.find_first_not_of(" \t");
      const auto e = f.find_last_not_of(" \t");
      f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// ---- distributions ---------------------------------------------------------

inline DiscreteDistribution read_distribution_csv(std::istream& in) {
  const auto t = CsvTable::read(in);
  const auto p = t.column("point");
  const auto m = t.column("mass");
  std::vector<Atom> atoms;
  for (const auto& r : t.rows()) atoms.push_back({parse_double(r[p]), parse_double(r[m])});
  return DiscreteDistribution(std::move(atoms));
}

// `bernoulli:p`, `point:v`, `uniform-grid:k`, `table:path.csv`.
inline DiscreteDistribution parse_distribution(std::string_view literal) {
  const auto colon = literal.find(':');
  if (colon == std::string_view::npos) throw ParseError("distribution literal needs 'kind:arg': " + std::string(literal));
  const auto kind = literal.substr(0, colon);
  const auto arg = literal.substr(colon + 1);
  try {
    if (kind == "bernoulli") return DiscreteDistribution::bernoulli(parse_double(arg));
    if (kind == "point") return DiscreteDistribution::point(parse_double(arg));
    if (kind == "uniform-grid") {
      const double k = parse_double(arg);
      if (k != std::floor(k) || k < 2) throw ParseError("uniform-grid needs an integer k >= 2");
      return DiscreteDistribution::uniform_grid(static_cast<std::size_t>(k));
    }
    if (kind == "table") {
      std::ifstream in{std::string(arg)};
      if (!in) throw ParseError("cannot open distribution table '" + std::string(arg) + "'");
      return read_distribution_csv(in);
    }
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("bad distribution '") + std::string(literal) + "': " + e.what());
  }
  throw ParseError("unknown distribution kind '" + std::string(kind) + "'");
}

// `constant:<lambda>`, `up`, `up:K`.
inline StrategySpec parse_strategy(std::string_view literal, bool raw = false) {
  StrategySpec spec;
  spec.raw = raw;
  if (literal.rfind("constant:", 0) == 0) {
    spec.kind = StrategySpec::Kind::kConstant;
    spec.lambda = parse_double(literal.substr(9));
    return spec;
  }
  if (literal == "up") return spec;
  if (literal.rfind("up:", 0) == 0) {
    const double k = parse_double(literal.substr(3));
    if (k != std::floor(k) || k < 3 || static_cast<std::size_t>(k) % 2 == 0)
      throw ParseError("up:K needs an odd integer K >= 3");
    spec.nodes = static_cast<std::size_t>(k);
    return spec;
  }
  throw ParseError("unknown strategy '" + std::string(literal) + "'");
}

// ---- single-round tables ---------------------------------------------------

inline void write_tabulated_csv(std::ostream& out, const TabulatedEVariable& e) {
  out << "point,value\n";
  for (std::size_t i = 0; i < e.size(); ++i)
    out << format_double(e.space()[i]) << ',' << format_double(e[i]) << '\n';
}

// Rows may come in any order; the grid is the set of points listed.
inline TabulatedEVariable read_tabulated_csv(std::istream& in, double mu) {
  const auto t = CsvTable::read(in);
  const auto pc = t.column("point");
  const auto vc = t.column("value");
  std::vector<std::pair<double, double>> rows;
  for (const auto& r : t.rows()) rows.emplace_back(parse_double(r[pc]), parse_double(r[vc]));
  std::sort(rows.begin(), rows.end());
  std::vector<double> pts;
  std::vector<double> vals;
  for (auto [p, v] : rows) {
    pts.push_back(p);
    vals.push_back(v);
  }
  try {
    return TabulatedEVariable(SampleSpace(std::move(pts), mu), std::move(vals));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("bad e-variable table: ") + e.what());
  }
}

inline Json to_json(const TwoPointMeasure& m) { return Json{{"a", m.a}, {"b", m.b}, {"w", m.w}}; }

inline Json to_json(const DominationCertificate& c) {
  // + 0.0 folds -0 into 0.
  return Json{{"beta0", c.beta0 + 0.0}, {"beta1", c.beta1 + 0.0}, {"lambda_hat", c.lambda_hat + 0.0}};
}

inline DominationCertificate certificate_from_json(const Json& j) {
  return {j.at("beta0").get<double>(), j.at("beta1").get<double>(), j.at("lambda_hat").get<double>()};
}

inline Json to_json(const ValidityReport& r) {
  Json j{{"valid", r.valid}, {"max_expectation", r.max_expectation}};
  if (r.witness) {
    j["witness"] = to_json(*r.witness);
    j["expectation"] = r.witness_expectation;
  }
  return j;
}

// ---- ledgers and confidence sequences --------------------------------------

inline void write_ledger_csv(std::ostream& out, const WealthLedger& ledger) {
  out << "t,x,lambda,e_value,log_wealth,rejected\n";
  const auto rej = ledger.rejected_at();
  for (const auto& r : ledger.rows()) {
    out << r.t << ',' << format_double(r.x) << ',' << format_double(r.lambda) << ',' << format_double(r.e_value)
        << ',' << format_double(r.log_wealth) << ',' << ((rej && r.t >= *rej) ? 1 : 0) << '\n';
  }
}

inline Json ledger_rows_json(const WealthLedger& ledger) {
  Json rows = Json::array();
  const auto rej = ledger.rejected_at();
  for (const auto& r : ledger.rows())
    rows.push_back(Json{{"t", r.t},
                        {"x", r.x},
                        {"lambda", r.lambda},
                        {"e_value", r.e_value},
                        {"log_wealth", json_number(r.log_wealth)},
                        {"rejected", (rej && r.t >= *rej) ? 1 : 0}});
  return rows;
}

inline Json ledger_summary(const WealthLedger& ledger) {
  Json j;
  j["rejected_at"] = ledger.rejected_at() ? Json(*ledger.rejected_at()) : Json(nullptr);
  j["final_log_wealth"] = json_number(ledger.log_wealth());
  j["threshold"] = ledger.threshold();
  return j;
}

inline void write_cs_csv(std::ostream& out, const ConfidenceState& cs) {
  out << "t,lower,upper,alive\n";
  for (std::size_t t = 1; t <= cs.rounds(); ++t) {
    const auto ci = cs.interval(t);
    out << t << ',' << format_double(ci.lower) << ',' << format_double(ci.upper) << ',' << ci.alive << '\n';
  }
}

inline void write_membership_csv(std::ostream& out, const ConfidenceState& cs) {
  out << "t,mu,log_wealth,in_set\n";
  for (std::size_t t = 1; t <= cs.rounds(); ++t)
    for (std::size_t i = 0; i < cs.grid().size(); ++i)
      out << t << ',' << format_double(cs.grid()[i]) << ',' << format_double(cs.log_wealth(t, i)) << ','
          << (cs.in_set(t, i) ? 1 : 0) << '\n';
}

// ---- two-round and e-process tables ----------------------------------------

inline void write_pair_table_csv(std::ostream& out, const PairTable& e) {
  out << "x1,x2,value\n";
  const auto& s = e.space();
  for (std::size_t i = 0; i < e.side(); ++i)
    for (std::size_t j = 0; j < e.side(); ++j)
      out << format_double(s[i]) << ',' << format_double(s[j]) << ',' << format_double(e(i, j)) << '\n';
}

// The grid is the set of x1 values; every (x1, x2) cell must appear once.
inline PairTable read_pair_table_csv(std::istream& in, double mu) {
  const auto t = CsvTable::read(in);
  const auto c1 = t.column("x1");
  const auto c2 = t.column("x2");
  const auto cv = t.column("value");
  std::map<std::pair<double, double>, double> cells;
  std::set<double> pts;
  for (const auto& r : t.rows()) {
    const double x = parse_double(r[c1]);
    const double y = parse_double(r[c2]);
    if (!cells.emplace(std::make_pair(x, y), parse_double(r[cv])).second) throw ParseError("duplicate pair table cell");
    pts.insert(x);
    pts.insert(y);
  }
  if (cells.size() != pts.size() * pts.size()) throw ParseError("pair table must list every (x1, x2) cell of the grid");
  std::vector<double> values;
  values.reserve(cells.size());
  for (const auto& [k, v] : cells) values.push_back(v);
  try {
    return PairTable(SampleSpace(std::vector<double>(pts.begin(), pts.end()), mu), std::move(values));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("bad pair table: ") + e.what());
  }
}

struct EProcessTable {
  std::map<Path, double> entries;

  // Grid implied by the table: every value used in a path.
  std::vector<double> grid() const {
    std::set<double> pts{0.0, 1.0};
    for (const auto& [p, v] : entries) pts.insert(p.begin(), p.end());
    return {pts.begin(), pts.end()};
  }
};

inline void write_eprocess_csv(std::ostream& out, const EProcessTable& table) {
  out << "depth,path,value\n";
  for (const auto& [path, v] : table.entries)
    out << path.size() << ',' << csv_quote(join_doubles(path)) << ',' << format_double(v) << '\n';
}

inline EProcessTable read_eprocess_csv(std::istream& in) {
  const auto t = CsvTable::read(in);
  const auto cd = t.column("depth");
  const auto cp = t.column("path");
  const auto cv = t.column("value");
  EProcessTable table;
  for (const auto& r : t.rows()) {
    Path path = parse_double_list(r[cp]);
    if (parse_double(r[cd]) != static_cast<double>(path.size())) throw ParseError("path length does not match depth");
    if (!table.entries.emplace(std::move(path), parse_double(r[cv])).second)
      throw ParseError("duplicate e-process entry");
  }
  return table;
}

// Tabulates E_t on every grid path up to `depth`.
inline EProcessTable tabulate_eprocess(const EProcess& e, const SampleSpace& space, std::size_t depth) {
  EProcessTable table;
  std::vector<Path> layer{Path{}};
  for (std::size_t t = 0; t <= depth; ++t) {
    std::vector<Path> next;
    for (auto& p : layer) {
      table.entries.emplace(p, e(p));
      if (t == depth) continue;
      for (double x : space.points()) {
        Path q = p;
        q.push_back(x);
        next.push_back(std::move(q));
      }
    }
    layer = std::move(next);
  }
  return table;
}

inline Json to_json(const TreeHypothesis& d) {
  Json nodes = Json::array();
  for (auto [a, b] : d.nodes()) nodes.push_back(Json::array({a, b}));
  return nodes;
}

inline Json to_json(const AuditReport& r) {
  Json j;
  j["max"] = r.max_expectation;
  j["d"] = r.d ? to_json(*r.d) : Json(nullptr);
  j["mask"] = r.mask ? Json(r.mask->to_string()) : Json(nullptr);
  j["pass"] = r.pass;
  j["trees_examined"] = r.trees_examined;
  return j;
}

inline Json to_json(const T2Outcome& outcome) {
  if (const auto* dom = std::get_if<T2Dominator>(&outcome)) {
    Json lambda2 = Json::array();
    const auto& s = dom->bets.space();
    for (std::size_t i = 0; i < s.size(); ++i)
      lambda2.push_back(Json{{"x", s[i]}, {"lambda", dom->bets.lambdas()[1][i]}});
    return Json{{"valid", true},
                {"lambda1", dom->bets.lambdas()[0][0]},
                {"lambda2", lambda2},
                {"max_shortfall", dom->max_shortfall}};
  }
  const auto& ref = std::get<T2Refutation>(outcome);
  return Json{{"valid", false}, {"witness", to_json(ref.witness)}, {"expectation", ref.expectation}};
}

inline Json to_json(const XiStats& s) { return Json::array({s.xi0, s.xi1, s.xi2}); }

}  // namespace evbet::io
