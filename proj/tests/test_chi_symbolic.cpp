#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "klsv/chi_count.hpp"
#include "klsv/chi_symbolic.hpp"

using namespace klsv;

namespace {

ChiExpr derive(const std::string& id, int d) {
  DerivationParams prm;
  prm.d = d;
  return run_derivation(id, prm);
}

ChiExpr derive_sp(const std::string& id, int n, int d) {
  DerivationParams prm;
  prm.n = n;
  prm.d = d;
  return run_derivation(id, prm);
}

ChiExpr derive_orth(const std::string& id, Family fam, int d,
                    bool degenerate) {
  DerivationParams prm;
  prm.family = fam;
  prm.d = d;
  prm.degenerate = degenerate;
  return run_derivation(id, prm);
}

}  // namespace

TEST_CASE("base classes evaluate by kind and parity") {
  CHECK(chi_class(ChiKind::Affine, 0).value == 1);
  CHECK(chi_class(ChiKind::Affine, 5).value == 1);
  CHECK(chi_class(ChiKind::Projective, 3).value == 4);
  CHECK(chi_class(ChiKind::Torus).value == 0);
  CHECK(chi_class(ChiKind::SmoothQuadric, 2).value == 4);
  CHECK(chi_class(ChiKind::SmoothQuadric, 3).value == 4);
  CHECK(chi_class(ChiKind::SmoothQuadric, 0).value == 2);
  CHECK(chi_class(ChiKind::SmoothQuadric, -1).value == 0);
  CHECK(chi_class(ChiKind::AffineCone).value == 1);
  CHECK_THROWS_AS(chi_class(ChiKind::Affine, -1), UnknownKind);
  CHECK_THROWS_AS(chi_class(ChiKind::SmoothQuadric, -2), UnknownKind);
}

TEST_CASE("combination rules") {
  ChiExpr ambient = chi_class(ChiKind::Affine, 2, "ambient");
  ChiExpr closed = chi_class(ChiKind::Torus, 0, "closed piece");
  ChiExpr open_part = chi_combine(ChiRule::Additivity,
                                  {{1, ambient}, {-1, closed}}, "open part");
  CHECK(open_part.value == 1);
  CHECK(open_part.trace.size() == 3);
  CHECK(replay(open_part));

  ChiExpr fib = chi_combine(ChiRule::Fibration,
                            {{1, closed}, {1, chi_class(ChiKind::Projective, 7)}});
  CHECK(fib.value == 0);

  ChiExpr prod = chi_combine(
      ChiRule::Product,
      {{1, chi_class(ChiKind::SmoothQuadric, 0)},
       {1, chi_class(ChiKind::Projective, 2)}});
  CHECK(prod.value == 6);

  CHECK_THROWS_AS(chi_combine(ChiRule::Additivity, {{1, ambient}}),
                  ArityMismatch);
  CHECK_THROWS_AS(chi_combine(ChiRule::Fibration,
                              {{1, ambient}, {1, closed}, {1, prod}}),
                  ArityMismatch);
  CHECK_THROWS_AS(chi_combine(ChiRule::Product, {{1, ambient}, {-1, closed}}),
                  ArityMismatch);
}

TEST_CASE("replay detects tampering") {
  ChiExpr e = derive("lemma-two-quadrics", 2);
  REQUIRE(replay(e));

  ChiExpr wrong_step = e;
  wrong_step.trace[3].output += 1;
  CHECK_FALSE(replay(wrong_step));

  ChiExpr wrong_value = e;
  wrong_value.value += 1;
  CHECK_FALSE(replay(wrong_value));

  ChiExpr bad_ref = e;
  bad_ref.trace.back().args[0].second = 999;
  CHECK_THROWS_AS(replay(bad_ref), NoSuchStep);
}

TEST_CASE("cone lemma scripts for d up to 4") {
  for (int d = 1; d <= 4; ++d) {
    INFO("d=" << d);
    ChiExpr ss = derive("lemma-sym-square", d);
    ChiExpr g1 = derive("lemma-gamma1", d);
    ChiExpr gp = derive("lemma-gamma1prime", d);
    ChiExpr tq = derive("lemma-two-quadrics", d);
    CHECK(ss.value == 1);
    CHECK(g1.value == 0);
    CHECK(gp.value == 1);
    CHECK(tq.value == -d);
    for (const ChiExpr* e : {&ss, &g1, &gp, &tq}) CHECK(replay(*e));
  }
  CHECK_THROWS_AS(derive("lemma-sym-square", 0), OutOfDomain);
}

TEST_CASE("combination scripts for all admissible shapes") {
  for (auto [n, d] : {std::pair{2, 1}, {3, 1}, {4, 2}, {6, 3}, {8, 4}}) {
    ChiExpr e = derive_sp("prop-m-ge-3", n, d);
    INFO("n=" << n << " d=" << d);
    CHECK(e.value == d);
    CHECK(replay(e));
  }
  for (int d = 1; d <= 4; ++d) {
    ChiExpr e = derive_sp("prop-m-eq-2", d, d);
    CHECK(e.value == d);
    CHECK(replay(e));
  }
  for (auto [n, d] :
       {std::pair{1, 1}, {2, 1}, {2, 2}, {3, 3}, {4, 4}, {4, 2}, {4, 1}}) {
    ChiExpr e = derive_sp("thm-sp", n, d);
    INFO("n=" << n << " d=" << d);
    CHECK(e.value == d);
    CHECK(replay(e));
  }

  CHECK_THROWS_AS(derive_sp("prop-m-ge-3", 1, 1), OutOfDomain);
  CHECK_THROWS_AS(derive_sp("prop-m-eq-2", 2, 1), OutOfDomain);
  CHECK_THROWS_AS(derive_sp("thm-sp", 3, 2), OutOfDomain);
  CHECK_THROWS_AS(run_derivation("no-such-script", {}), UnknownDerivation);
}

TEST_CASE("end quadric scripts") {
  for (int d = 1; d <= 4; ++d) {
    CHECK(derive_orth("lemma-orth-Q1", Family::B, d, false).value == 2 * d);
    CHECK(derive_orth("lemma-orth-W11", Family::B, d, false).value == 2 * d);
  }
  CHECK(replay(derive_orth("lemma-orth-Q1", Family::B, 3, false)));
  CHECK_THROWS_AS(derive_orth("lemma-orth-Q1", Family::D, 2, false),
                  OutOfDomain);
  CHECK_THROWS_AS(derive_orth("lemma-orth-W11", Family::B, 2, true),
                  OutOfDomain);
}

TEST_CASE("row scripts cover every configuration with d up to 4") {
  struct Config {
    Family fam;
    bool deg;
    std::vector<int> ds;
    std::vector<Table1Row> rows;
  };
  std::vector<Config> configs = {
      {Family::B, false, {1, 2, 3, 4},
       {{4, 2, 2}, {8, 4, 4}, {12, 6, 6}, {16, 8, 8}}},
      {Family::D, false, {2, 4}, {{0, 4, 4}, {0, 8, 8}}},
      {Family::D, true, {1, 3}, {{0, 4, 4}, {0, 8, 8}}},
      {Family::D2, false, {1, 3}, {{0, 0, 2}, {0, 4, 6}}},
      {Family::D2, true, {2, 4}, {{0, 4, 6}, {0, 8, 10}}},
  };
  for (const Config& c : configs) {
    for (std::size_t i = 0; i < c.ds.size(); ++i) {
      int d = c.ds[i];
      INFO(to_string(c.fam) << (c.deg ? " degenerate" : "") << " d=" << d);
      Table1Row want = c.rows[i];
      Table1Row vals = table1_row_values(c.fam, d, c.deg);
      CHECK(vals.w1 == want.w1);
      CHECK(vals.w11 == want.w11);
      CHECK(vals.comb == want.comb);

      ChiExpr row = derive_orth("table1-row", c.fam, d, c.deg);
      CHECK(row.value == want.comb);
      CHECK(trace_column(row, "column chi(W_1)") == want.w1);
      CHECK(trace_column(row, "column chi(W_11)") == want.w11);
      CHECK(replay(row));

      ChiExpr thm = derive_orth("thm-orth", c.fam, d, c.deg);
      CHECK(thm.value == want.comb);
      CHECK(thm.value == (c.deg ? 2 * (d + 1) : 2 * d));
    }
  }

  CHECK_THROWS_AS(derive_orth("table1-row", Family::D, 1, false),
                  OutOfDomain);
  CHECK_THROWS_AS(derive_orth("table1-row", Family::D, 2, true), OutOfDomain);
  CHECK_THROWS_AS(derive_orth("table1-row", Family::D2, 2, false),
                  OutOfDomain);
  CHECK_THROWS_AS(derive_orth("table1-row", Family::D2, 1, true),
                  OutOfDomain);
  CHECK_THROWS_AS(derive_orth("table1-row", Family::B, 1, true), OutOfDomain);
  CHECK_THROWS_AS(derive_orth("table1-row", Family::C, 1, false),
                  OutOfDomain);
}

TEST_CASE("targets agree with full runs everywhere") {
  std::vector<DerivationParams> sym;
  for (int d = 1; d <= 4; ++d) {
    DerivationParams p;
    p.d = d;
    sym.push_back(p);
  }
  for (const char* id : {"lemma-sym-square", "lemma-gamma1",
                         "lemma-gamma1prime", "lemma-two-quadrics"})
    for (const DerivationParams& p : sym)
      CHECK(run_derivation(id, p).value == derivation_target(id, p));

  for (auto [n, d] : {std::pair{1, 1}, {2, 1}, {2, 2}, {4, 2}, {6, 3}}) {
    DerivationParams p;
    p.n = n;
    p.d = d;
    CHECK(run_derivation("thm-sp", p).value == derivation_target("thm-sp", p));
  }

  for (auto [fam, d, deg] :
       {std::tuple{Family::B, 1, false}, {Family::B, 4, false},
        {Family::D, 2, false}, {Family::D, 3, true},
        {Family::D2, 3, false}, {Family::D2, 4, true}}) {
    DerivationParams p;
    p.family = fam;
    p.d = d;
    p.degenerate = deg;
    for (const char* id : {"table1-row", "thm-orth"})
      CHECK(run_derivation(id, p).value == derivation_target(id, p));
  }

  CHECK(derivation_names().size() == 11);
  for (const std::string& id : derivation_names())
    CHECK_NOTHROW(derivation_target(
        id, DerivationParams{Family::B, 4, 2, false}));
}

TEST_CASE("scripts agree with the counting oracle on uncontested cones") {
  for (int d : {1, 2}) {
    GradedSpace sp = build_symplectic_space(d, d);
    StableFunctional fn = build_functional(sp, 0);
    for (auto [name, id] : {std::pair{"SymSq", "lemma-sym-square"},
                            {"Gamma1", "lemma-gamma1"},
                            {"Gamma1Prime", "lemma-gamma1prime"}}) {
      ChiResult r = chi_by_counting(make_variety(sp, fn, name), 0, 4);
      REQUIRE(r.has_chi);
      INFO("d=" << d << " " << name);
      CHECK(r.chi == derive(id, d).value);
    }
  }
}

TEST_CASE("trace exports") {
  ChiExpr e = derive("lemma-two-quadrics", 2);

  std::string js = trace_to_json(e);
  auto parsed = nlohmann::json::parse(js);
  CHECK(parsed["value"] == -2);
  REQUIRE(parsed["steps"].size() == e.trace.size());
  CHECK(parsed["steps"].back()["output"] == -2);
  CHECK(parsed["steps"][0]["rule"] == "PROJECTIVE(1)");
  for (std::size_t i = 0; i < e.trace.size(); ++i)
    CHECK(parsed["steps"][i]["index"] == i);

  std::string md = trace_to_markdown(e, "contested intersection at d=2");
  CHECK(md.find("### contested intersection at d=2") != std::string::npos);
  CHECK(md.find("result: **-2**") != std::string::npos);
  CHECK(md.find("ADDITIVITY") != std::string::npos);
  CHECK(md.find("Lemma 4.8") != std::string::npos);
}
