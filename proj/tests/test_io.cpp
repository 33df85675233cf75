#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "evbet/io.hpp"

namespace evbet::test {

using namespace evbet::io;

TEST(Numbers, FormatParseRoundTrip) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 10000; ++i) {
    double v;
    do {
      const std::uint64_t bits = gen();
      std::memcpy(&v, &bits, sizeof v);
    } while (!std::isfinite(v));
    ASSERT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(parse_double(format_double(-std::numeric_limits<double>::infinity())),
            -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(parse_double(" +2.5\r"), 2.5);
  EXPECT_THROW(parse_double("2.5x"), ParseError);
  EXPECT_THROW(parse_double(""), ParseError);
}

TEST(Numbers, Lists) {
  EXPECT_EQ(parse_double_list("0,0.5,1"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_TRUE(parse_double_list("").empty());
  EXPECT_EQ(join_doubles({0.25, 1.0}), "0.25,1");
  EXPECT_THROW(parse_double_list("1,,2"), ParseError);
}

TEST(Csv, QuotedFieldsAndMissingColumns) {
  std::istringstream in("depth,path,value\n2,\"0,1\",3\n0,,1\n");
  const auto t = CsvTable::read(in);
  ASSERT_EQ(t.rows().size(), 2u);
  EXPECT_EQ(t.rows()[0][t.column("path")], "0,1");
  EXPECT_EQ(t.rows()[1][t.column("path")], "");
  EXPECT_THROW(t.column("nope"), ParseError);
  EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_quote("ab"), "ab");
}

TEST(Literals, Distributions) {
  EXPECT_DOUBLE_EQ(parse_distribution("bernoulli:0.3").mean(), 0.3);
  EXPECT_DOUBLE_EQ(parse_distribution("point:1").mean(), 1.0);
  EXPECT_DOUBLE_EQ(parse_distribution("uniform-grid:5").mean(), 0.5);
  EXPECT_THROW(parse_distribution("bernoulli:1.5"), ParseError);
  EXPECT_THROW(parse_distribution("gauss:0"), ParseError);
  EXPECT_THROW(parse_distribution("point"), ParseError);
  EXPECT_THROW(parse_distribution("uniform-grid:2.5"), ParseError);
  EXPECT_THROW(parse_distribution("table:/nonexistent/file.csv"), ParseError);

  std::istringstream in("point,mass\n0,0.25\n1,0.75\n");
  EXPECT_DOUBLE_EQ(read_distribution_csv(in).mean(), 0.75);
}

TEST(Literals, Strategies) {
  const auto c = parse_strategy("constant:1.5");
  EXPECT_EQ(c.kind, StrategySpec::Kind::kConstant);
  EXPECT_DOUBLE_EQ(c.lambda, 1.5);
  EXPECT_EQ(parse_strategy("up").nodes, kDefaultPortfolioNodes);
  EXPECT_EQ(parse_strategy("up:101").nodes, 101u);
  EXPECT_TRUE(parse_strategy("up", true).raw);
  EXPECT_THROW(parse_strategy("up:100"), ParseError);
  EXPECT_THROW(parse_strategy("kelly"), ParseError);
  EXPECT_THROW(parse_strategy("constant:abc"), ParseError);
}

TEST(RoundTrip, TabulatedEVariable) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 50; ++rep) {
    const double mu = 0.05 + 0.9 * unit_uniform(gen);
    const auto s = SampleSpace::equispaced(17, mu);
    std::vector<double> v(s.size());
    for (double& x : v) x = 3.0 * unit_uniform(gen);
    const TabulatedEVariable e(s, v);
    std::ostringstream out;
    write_tabulated_csv(out, e);
    std::istringstream in(out.str());
    const auto back = read_tabulated_csv(in, mu);
    ASSERT_EQ(back.space(), e.space());
    ASSERT_EQ(back.values(), e.values());
  }
}

TEST(RoundTrip, TabulatedRowsInAnyOrder) {
  std::istringstream in("point,value\n1,2\n0,0\n0.5,1\n");
  const auto e = read_tabulated_csv(in, 0.5);
  EXPECT_EQ(e.values(), (std::vector<double>{0.0, 1.0, 2.0}));
  std::istringstream bad("point,value\n0.2,1\n1,1\n");
  EXPECT_THROW(read_tabulated_csv(bad, 0.5), ParseError);
}

TEST(RoundTrip, PairTable) {
  std::mt19937_64 gen(3);
  const auto s = SampleSpace::equispaced(5, 0.5);
  std::vector<double> v(25);
  for (double& x : v) x = 2.0 * unit_uniform(gen);
  const PairTable e(s, v);
  std::ostringstream out;
  write_pair_table_csv(out, e);
  std::istringstream in(out.str());
  const auto back = read_pair_table_csv(in, 0.5);
  EXPECT_EQ(back.space(), e.space());
  EXPECT_EQ(back.values(), e.values());

  std::istringstream missing("x1,x2,value\n0,0,1\n0,1,1\n1,0,1\n");
  EXPECT_THROW(read_pair_table_csv(missing, 0.5), ParseError);
}

TEST(RoundTrip, EProcessTable) {
  std::mt19937_64 gen(4);
  const auto s = SampleSpace::equispaced(4, 0.4);
  const auto e = EProcess::coin_bet(MultiRoundCoinBet::random(s, 3, gen));
  const auto table = tabulate_eprocess(e, s, 3);
  EXPECT_EQ(table.entries.size(), 1u + 4u + 16u + 64u);
  std::ostringstream out;
  write_eprocess_csv(out, table);
  std::istringstream in(out.str());
  const auto back = read_eprocess_csv(in);
  EXPECT_EQ(back.entries, table.entries);
  EXPECT_EQ(back.grid(), s.points());

  std::istringstream bad("depth,path,value\n2,0,1\n");
  EXPECT_THROW(read_eprocess_csv(bad), ParseError);
}

TEST(RoundTrip, LedgerCsv) {
  const auto xs = sample_stream(DiscreteDistribution::bernoulli(0.8), 40, 6);
  const auto ledger = run_game(0.3, 0.05, UniversalPortfolio(0.3, 101), xs);
  std::ostringstream out;
  write_ledger_csv(out, ledger);
  std::istringstream in(out.str());
  const auto t = CsvTable::read(in);
  ASSERT_EQ(t.rows().size(), ledger.rounds());
  bool seen = false;
  for (std::size_t i = 0; i < ledger.rounds(); ++i) {
    const auto& r = t.rows()[i];
    const auto& row = ledger.rows()[i];
    ASSERT_EQ(parse_double(r[t.column("x")]), row.x);
    ASSERT_EQ(parse_double(r[t.column("lambda")]), row.lambda);
    ASSERT_EQ(parse_double(r[t.column("e_value")]), row.e_value);
    ASSERT_EQ(parse_double(r[t.column("log_wealth")]), row.log_wealth);
    const bool rejected = r[t.column("rejected")] == "1";
    ASSERT_TRUE(!seen || rejected);  // sticky
    seen = rejected;
  }
  EXPECT_TRUE(ledger.rejected());
  const auto summary = ledger_summary(ledger);
  EXPECT_EQ(summary["rejected_at"].get<std::size_t>(), *ledger.rejected_at());
}

TEST(Json, NonFiniteWealthIsAString) {
  WealthLedger l(0.5, 0.05);
  l.record(0.0, 2.0, 0.0);
  const auto j = ledger_summary(l);
  EXPECT_EQ(j["final_log_wealth"], "-inf");
  EXPECT_TRUE(j["rejected_at"].is_null());
}

TEST(Json, CertificateRoundTrip) {
  const DominationCertificate c{0.75, -0.125, 0.3125};
  const auto back = certificate_from_json(Json::parse(to_json(c).dump()));
  EXPECT_EQ(back.beta0, c.beta0);
  EXPECT_EQ(back.beta1, c.beta1);
  EXPECT_EQ(back.lambda_hat, c.lambda_hat);
}

}  // namespace evbet::test
