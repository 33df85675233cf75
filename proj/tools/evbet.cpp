// evbet: command-line front end for the coin-betting e-variable library.
//
// Exit codes: 0 ok, 2 config/parse error, 3 refutation under --strict.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evbet/evbet.hpp"
#include "evbet/io.hpp"

namespace {

using evbet::io::Json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRefuted = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  bool strict = false;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw evbet::ParseError("cannot open '" + path + "'");
  return in;
}

// Main output goes to --out when given, else stdout.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw evbet::ParseError("cannot write '" + g.out + "'");
  f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Side summaries: --summary file, else stdout when the table went to a file,
// else stderr so the table on stdout stays parseable.
void emit_summary(const Globals& g, const std::string& path, const Json& j) {
  if (!path.empty()) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw evbet::ParseError("cannot write '" + path + "'");
    f << dump(j);
  } else if (!g.out.empty()) {
    std::cout << dump(j);
  } else {
    std::cerr << dump(j);
  }
}

int verdict(const Globals& g, bool refuted) { return g.strict && refuted ? kExitRefuted : kExitOk; }

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  double mu = 0.5;
  std::string dist;
  std::string strategy = "up";
  bool up_raw = false;
  std::size_t n = 0;
  double delta = 0.05;
  std::string summary;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  const auto dist = evbet::io::parse_distribution(a.dist);
  const auto spec = evbet::io::parse_strategy(a.strategy, a.up_raw);
  const auto xs = evbet::sample_stream(dist, a.n, g.seed);
  const auto ledger = evbet::run_game(a.mu, a.delta, spec.make(a.mu), xs);
  const Json summary = evbet::io::ledger_summary(ledger);
  if (g.format == "json") {
    emit(g, dump(Json{{"summary", summary}, {"rows", evbet::io::ledger_rows_json(ledger)}}));
    if (!a.summary.empty()) emit_summary(g, a.summary, summary);
  } else {
    std::ostringstream out;
    evbet::io::write_ledger_csv(out, ledger);
    emit(g, out.str());
    emit_summary(g, a.summary, summary);
  }
  return kExitOk;
}

// ---- cs --------------------------------------------------------------------

struct CsArgs {
  std::string dist;
  std::string strategy = "up";
  bool up_raw = false;
  std::size_t n = 0;
  double delta = 0.05;
  std::size_t grid = evbet::kDefaultMuGridSize;
  bool running = false;
  std::string membership;
};

int cmd_cs(const Globals& g, const CsArgs& a) {
  const auto dist = evbet::io::parse_distribution(a.dist);
  const auto spec = evbet::io::parse_strategy(a.strategy, a.up_raw);
  const auto xs = evbet::sample_stream(dist, a.n, g.seed);
  evbet::ConfidenceState cs(evbet::mu_grid(a.grid), a.delta, spec, a.running);
  cs.run(xs, evbet::thread_budget());
  if (g.format == "json") {
    Json rows = Json::array();
    for (std::size_t t = 1; t <= cs.rounds(); ++t) {
      const auto ci = cs.interval(t);
      rows.push_back(Json{{"t", t},
                          {"lower", evbet::io::json_number(ci.lower)},
                          {"upper", evbet::io::json_number(ci.upper)},
                          {"alive", ci.alive}});
    }
    emit(g, dump(rows));
  } else {
    std::ostringstream out;
    evbet::io::write_cs_csv(out, cs);
    emit(g, out.str());
  }
  if (!a.membership.empty()) {
    std::ofstream f(a.membership, std::ios::binary);
    if (!f) throw evbet::ParseError("cannot write '" + a.membership + "'");
    evbet::io::write_membership_csv(f, cs);
  }
  return kExitOk;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  double mu = 0.5;
  std::string dist;
  std::size_t n = 0;
  double delta = 0.05;
  std::optional<double> alpha;
  std::string alpha_file;
  std::string summary;
};

// Numbers separated by commas, whitespace or newlines; '#' starts a comment.
std::vector<double> read_alpha_file(const std::string& path) {
  auto in = open_input(path);
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    for (char& c : line)
      if (c == ',' || c == '\t' || c == '\r') c = ' ';
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      if (w == "alpha") continue;  // optional header
      out.push_back(evbet::io::parse_double(w));
    }
  }
  if (out.empty()) throw evbet::ParseError("alpha file '" + path + "' holds no values");
  return out;
}

int cmd_compare(const Globals& g, const CompareArgs& a) {
  if (a.alpha.has_value() == !a.alpha_file.empty())
    throw evbet::ParseError("give exactly one of --alpha and --alpha-file");
  const std::vector<double> alphas = a.alpha ? std::vector<double>{*a.alpha} : read_alpha_file(a.alpha_file);
  const auto dist = evbet::io::parse_distribution(a.dist);
  const auto xs = evbet::sample_stream(dist, a.n, g.seed);
  const auto h = evbet::run_hoeffding_game(a.mu, a.delta, alphas, xs);
  const auto c = evbet::run_game(a.mu, a.delta, evbet::dominating_schedule(a.mu, alphas), xs);

  double min_gap = std::numeric_limits<double>::infinity();
  std::ostringstream csv;
  Json rows = Json::array();
  csv << "t,logW_hoeffding,logW_coinbet,gap\n";
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const double lh = h.rows()[t].log_wealth;
    const double lc = c.rows()[t].log_wealth;
    // Both bankrupt: equal wealth, no gap.
    const double gap = lh == lc ? 0.0 : lc - lh;
    min_gap = std::min(min_gap, gap);
    csv << t + 1 << ',' << evbet::io::format_double(lh) << ',' << evbet::io::format_double(lc) << ','
        << evbet::io::format_double(gap) << '\n';
    rows.push_back(Json{{"t", t + 1},
                        {"logW_hoeffding", evbet::io::json_number(lh)},
                        {"logW_coinbet", evbet::io::json_number(lc)},
                        {"gap", evbet::io::json_number(gap)}});
  }
  Json summary{{"min_gap", evbet::io::json_number(xs.empty() ? 0.0 : min_gap)},
               {"hoeffding", evbet::io::ledger_summary(h)},
               {"coinbet", evbet::io::ledger_summary(c)}};
  if (g.format == "json") {
    emit(g, dump(Json{{"summary", summary}, {"rows", rows}}));
    if (!a.summary.empty()) emit_summary(g, a.summary, summary);
  } else {
    emit(g, csv.str());
    emit_summary(g, a.summary, summary);
  }
  return kExitOk;
}

// ---- check / dominate --------------------------------------------------------

struct TableArgs {
  std::string table;
  double mu = 0.5;
  bool t2 = false;
};

int cmd_check(const Globals& g, const TableArgs& a) {
  auto in = open_input(a.table);
  const auto e = evbet::io::read_tabulated_csv(in, a.mu);
  const auto report = evbet::check_evariable(e);
  emit(g, dump(evbet::io::to_json(report)));
  return verdict(g, !report.valid);
}

int cmd_dominate(const Globals& g, const TableArgs& a) {
  auto in = open_input(a.table);
  if (a.t2) {
    const auto e = evbet::io::read_pair_table_csv(in, a.mu);
    const auto outcome = evbet::dominate_t2(e);
    emit(g, dump(evbet::io::to_json(outcome)));
    return verdict(g, std::holds_alternative<evbet::T2Refutation>(outcome));
  }
  const auto e = evbet::io::read_tabulated_csv(in, a.mu);
  try {
    const auto cert = evbet::beta_interval(e);
    Json j{{"valid", true}};
    j.update(evbet::io::to_json(cert));
    emit(g, dump(j));
    return kExitOk;
  } catch (const evbet::NotAnEVariable& err) {
    emit(g, dump(evbet::io::to_json(err.report())));
    return verdict(g, true);
  }
}

// ---- audit -----------------------------------------------------------------

struct AuditArgs {
  std::string table;
  double mu = 0.5;
  std::optional<std::size_t> depth;
  std::string coarse;
  std::size_t random = 1000;
};

int cmd_audit(const Globals& g, const AuditArgs& a) {
  auto in = open_input(a.table);
  const auto table = evbet::io::read_eprocess_csv(in);
  if (table.entries.empty()) throw evbet::ParseError("e-process table is empty");
  const evbet::SampleSpace space(table.grid(), a.mu);
  const auto e = evbet::EProcess::from_table(a.mu, table.entries);
  const std::size_t depth = a.depth.value_or(e.max_depth());
  std::vector<double> coarse;
  if (a.coarse.empty()) {
    coarse.push_back(0.0);
    if (space.contains_mu()) coarse.push_back(a.mu);
    coarse.push_back(1.0);
  } else if (a.coarse != "none") {
    coarse = evbet::io::parse_double_list(a.coarse);
  }
  const auto report = evbet::audit_eprocess(e, space, depth, coarse, a.random, g.seed, evbet::thread_budget());
  emit(g, dump(evbet::io::to_json(report)));
  return verdict(g, !report.pass);
}

// ---- iid-check -------------------------------------------------------------

struct IidArgs {
  std::string table;
  std::string xi;
  std::size_t q_steps = evbet::kDefaultQSteps;
};

int cmd_iid(const Globals& g, const IidArgs& a) {
  if (a.table.empty() == a.xi.empty()) throw evbet::ParseError("give exactly one of --table and --xi");
  evbet::XiStats s;
  std::optional<evbet::PairTable> table;
  if (!a.table.empty()) {
    auto in = open_input(a.table);
    table.emplace(evbet::io::read_pair_table_csv(in, 0.5));
    s = evbet::xi_stats(*table);
  } else {
    const auto v = evbet::io::parse_double_list(a.xi);
    if (v.size() != 3) throw evbet::ParseError("--xi needs three comma-separated values");
    s = {v[0], v[1], v[2]};
  }
  const bool closed = evbet::check_iid_closed_form(s);
  const auto brute = evbet::check_iid_bruteforce(s, a.q_steps);
  Json j{{"xi", evbet::io::to_json(s)},
         {"iid_valid", closed},
         {"closed_form", closed},
         {"bruteforce", Json{{"max", brute.max_expectation}, {"argmax_q", brute.argmax_q}, {"valid", brute.valid()}}}};
  if (table) {
    const auto outcome = evbet::dominate_t2(*table);
    j["conditional_valid"] = std::holds_alternative<evbet::T2Dominator>(outcome);
    j["conditional"] = evbet::io::to_json(outcome);
  }
  emit(g, dump(j));
  return verdict(g, !closed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coin-betting e-variables: games, confidence sequences and validity checks"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed (64-bit)");
  app.add_option("--out", g.out, "Write the main output here instead of stdout");
  app.add_option("--format", g.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--strict", g.strict, "Exit with status 3 when a check refutes its input");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Play one testing-by-betting game and write its ledger");
  simulate->add_option("--mu", sim.mu, "Null mean")->required();
  simulate->add_option("--dist", sim.dist, "Data law: bernoulli:p | point:v | uniform-grid:k | table:path")->required();
  simulate->add_option("--strategy", sim.strategy, "constant:<lambda> | up | up:K");
  simulate->add_flag("--up-raw", sim.up_raw, "Universal portfolio with the uncentred factor (no validity claim)");
  simulate->add_option("--n", sim.n, "Horizon")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--delta", sim.delta, "Level");
  simulate->add_option("--summary", sim.summary, "Write the JSON summary to this file");

  CsArgs csa;
  auto* cs = app.add_subcommand("cs", "Confidence sequence for the mean over a grid of candidate means");
  cs->add_option("--dist", csa.dist, "Data law")->required();
  cs->add_option("--strategy", csa.strategy, "constant:<lambda> | up | up:K");
  cs->add_flag("--up-raw", csa.up_raw, "Universal portfolio with the uncentred factor");
  cs->add_option("--n", csa.n, "Horizon")->required()->check(CLI::PositiveNumber);
  cs->add_option("--delta", csa.delta, "Level");
  cs->add_option("--mu-grid", csa.grid, "Number of candidate means i/(M+1)")->check(CLI::PositiveNumber);
  cs->add_flag("--running-intersect", csa.running, "Drop a mean for good once rejected");
  cs->add_option("--membership", csa.membership, "Also write t,mu,log_wealth,in_set to this file");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Hoeffding schedule versus its dominating coin-bets on one stream");
  compare->add_option("--mu", cmp.mu, "Null mean")->required();
  compare->add_option("--dist", cmp.dist, "Data law")->required();
  compare->add_option("--n", cmp.n, "Horizon")->required()->check(CLI::PositiveNumber);
  compare->add_option("--delta", cmp.delta, "Level");
  compare->add_option("--alpha", cmp.alpha, "Constant Hoeffding parameter");
  compare->add_option("--alpha-file", cmp.alpha_file, "Per-round alphas; the last one repeats");
  compare->add_option("--summary", cmp.summary, "Write the JSON summary to this file");

  TableArgs chk;
  auto* check = app.add_subcommand("check", "Is a tabulated function an e-variable for the mean-mu hypothesis?");
  check->add_option("--table", chk.table, "CSV with columns point,value")->required();
  check->add_option("--mu", chk.mu, "Null mean")->required();

  TableArgs dom;
  auto* dominate = app.add_subcommand("dominate", "Find a coin-bet majorising a tabulated e-variable");
  dominate->add_option("--table", dom.table, "point,value CSV (or x1,x2,value with --t2)")->required();
  dominate->add_option("--mu", dom.mu, "Null mean")->required();
  dominate->add_flag("--t2", dom.t2, "Two-round table");

  AuditArgs aud;
  auto* audit = app.add_subcommand("audit", "Search tree nulls and bounded stopping times for E[E_tau] > 1");
  audit->add_option("--table", aud.table, "CSV with columns depth,path,value")->required();
  audit->add_option("--mu", aud.mu, "Null mean")->required();
  audit->add_option("--depth", aud.depth, "Audit depth (default: table depth)");
  audit->add_option("--coarse", aud.coarse, "Comma-separated grid points searched exhaustively, or 'none'");
  audit->add_option("--random", aud.random, "Number of random trees");

  IidArgs iid;
  auto* iid_check = app.add_subcommand("iid-check", "Two-round i.i.d. check on {0, 1/2, 1} with mean 1/2");
  iid_check->add_option("--table", iid.table, "CSV with columns x1,x2,value");
  iid_check->add_option("--xi", iid.xi, "xi0,xi1,xi2");
  iid_check->add_option("--q-steps", iid.q_steps, "Points of the q grid");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {  // --help
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(g, sim);
    if (*cs) return cmd_cs(g, csa);
    if (*compare) return cmd_compare(g, cmp);
    if (*check) return cmd_check(g, chk);
    if (*dominate) return cmd_dominate(g, dom);
    if (*audit) return cmd_audit(g, aud);
    if (*iid_check) return cmd_iid(g, iid);
  } catch (const evbet::Error& e) {
    std::cerr << "evbet: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "evbet: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
