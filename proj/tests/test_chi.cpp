#include <catch2/catch_amalgamated.hpp>

#include "klsv/chi_count.hpp"

using namespace klsv;

namespace {

struct SymCtx {
  GradedSpace sp;
  StableFunctional fn;
  SymCtx(int n, int d)
      : sp(build_symplectic_space(n, d)), fn(build_functional(sp, 0)) {}
};

struct OrthCtx {
  GradedSpace sp;
  StableFunctional fn;
  OrthCtx(Family fam, int n, int d)
      : sp(build_orthogonal_space(fam, n, d)), fn(build_functional(sp, 0)) {}
};

i64 chi_of(const GradedSpace& sp, const StableFunctional& fn,
           const std::string& name, Interpretation it = {}) {
  VarietySpec vs = make_variety(sp, fn, name);
  vs.interp = it;
  ChiResult r = chi_by_counting(vs, 0, 4);
  REQUIRE(r.has_chi);
  return r.chi;
}

}  // namespace

TEST_CASE("degree bounds follow the ambient") {
  SymCtx c21(2, 1);
  VarietySpec cone = make_variety(c21.sp, c21.fn, "SymSq");
  CHECK(degree_bound_for(cone) == 2);
  cone.interp.tensor = TensorModel::Decomposable;
  CHECK(degree_bound_for(cone) == 3);
  CHECK(degree_bound_for(make_variety(c21.sp, c21.fn, "U_sym(1)")) == 3);

  OrthCtx b11(Family::B, 1, 1);
  CHECK(degree_bound_for(make_variety(b11.sp, b11.fn, "Q")) == 2);
}

TEST_CASE("prime plans pick the first admissible primes") {
  SymCtx c11(1, 1);
  PrimePlan plan = make_prime_plan(make_variety(c11.sp, c11.fn, "SymSq"));
  CHECK(plan.degree_bound == 2);
  CHECK(plan.primes == std::vector<i64>{5, 7, 11, 13});

  // Root reductions 1 and 4 collide mod 3, and the gate already rejects 3,
  // so the plan starts at 5.
  OrthCtx d21(Family::D, 2, 1);
  PrimePlan dp = make_prime_plan(make_variety(d21.sp, d21.fn, "Q"));
  CHECK(dp.primes == std::vector<i64>{5, 7, 11, 13, 17});

  // d=3 pencil roots {1,4,9}: 9 = 4 mod 5, so 5 is skipped.
  SymCtx c33(3, 3);
  PrimePlan tp = make_prime_plan(make_variety(c33.sp, c33.fn, "Gamma1"));
  CHECK(tp.degree_bound == 6);
  CHECK(tp.primes ==
        std::vector<i64>{7, 11, 13, 17, 19, 23, 29, 31});

  PrimePlan extra = make_prime_plan(make_variety(c11.sp, c11.fn, "SymSq"), 1);
  CHECK(extra.primes.size() == 5);
}

TEST_CASE("cone lemma loci have the expected chi for d up to 3") {
  for (int d : {1, 2, 3}) {
    SymCtx c(d, d);
    INFO("d=" << d);
    CHECK(chi_of(c.sp, c.fn, "SymSq") == 1);
    CHECK(chi_of(c.sp, c.fn, "Gamma1") == 0);
    CHECK(chi_of(c.sp, c.fn, "Gamma1Prime") == 1);
  }
}

TEST_CASE("intersection locus per interpretation") {
  Interpretation draw{TensorModel::Decomposable, GammaModel::Raw};
  Interpretation dsym{TensorModel::Decomposable, GammaModel::Symmetrized};

  SymCtx c1(1, 1);
  CHECK(chi_of(c1.sp, c1.fn, "Gamma1CapGamma1Prime") == 0);
  CHECK(chi_of(c1.sp, c1.fn, "Gamma1CapGamma1Prime", draw) == 0);
  CHECK(chi_of(c1.sp, c1.fn, "Gamma1CapGamma1Prime", dsym) == 1);

  SymCtx c2(2, 2);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1CapGamma1Prime") == 0);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1CapGamma1Prime", draw) == 0);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1CapGamma1Prime", dsym) == 2);

  // The one-sided pairing loci differ between models only through gamma.
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1", draw) == 0);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1", dsym) == 2);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1Prime", draw) == 1);
  CHECK(chi_of(c2.sp, c2.fn, "Gamma1Prime", dsym) == 1);
}

TEST_CASE("two-block projective loci reproduce the parity table") {
  SymCtx c1(1, 1);  // d odd
  CHECK(chi_of(c1.sp, c1.fn, "PU0") == 2);
  CHECK(chi_of(c1.sp, c1.fn, "PU0p") == 1);
  CHECK(chi_of(c1.sp, c1.fn, "PW0") == 1);
  CHECK(chi_of(c1.sp, c1.fn, "PW0cap") == 0);
  CHECK(chi_of(c1.sp, c1.fn, "PU") == 1);
  CHECK(chi_of(c1.sp, c1.fn, "PW") == 1);

  SymCtx c2(2, 2);  // d even
  CHECK(chi_of(c2.sp, c2.fn, "PU0") == 4);
  CHECK(chi_of(c2.sp, c2.fn, "PU0p") == 4);
  CHECK(chi_of(c2.sp, c2.fn, "PW0") == 4);
  CHECK(chi_of(c2.sp, c2.fn, "PW0cap") == 4);
  CHECK(chi_of(c2.sp, c2.fn, "PU") == 0);
  CHECK(chi_of(c2.sp, c2.fn, "PW") == 0);
}

TEST_CASE("chain complement cones all have chi one") {
  SymCtx c21(2, 1);
  for (const char* nm : {"U_sym(0)", "W_sym(0)", "U_sym(1)", "W_sym(1)"})
    CHECK(chi_of(c21.sp, c21.fn, nm) == 1);
  SymCtx c31(3, 1);
  for (const char* nm : {"U_sym(1)", "W_sym(1)", "U_sym(2)", "W_sym(2)"})
    CHECK(chi_of(c31.sp, c31.fn, nm) == 1);
}

TEST_CASE("orthogonal window concordance, odd-middle rows match") {
  OrthCtx b22(Family::B, 2, 2);
  std::vector<ChiTarget> targets;
  targets.emplace_back("Q", make_variety(b22.sp, b22.fn, "Q"), 4);
  targets.emplace_back("Q1", make_variety(b22.sp, b22.fn, "Q1"), 4);
  targets.emplace_back("W1", make_variety(b22.sp, b22.fn, "W1"), 8);
  targets.emplace_back("W11", make_variety(b22.sp, b22.fn, "W11"), 4);
  auto rows = concordance(targets, 0, 4);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    INFO(r.label << ": " << r.detail);
    CHECK(r.status == "MATCH");
  }
  CHECK(rows[2].computed == 8);
}

TEST_CASE("split-plane window pairing locus is honestly non-polynomial") {
  // {q=0, (Cv0,vl)=0} on a (2,2) window is a smooth genus-one curve; its
  // counts carry a Frobenius trace term, so the fit must refuse it.
  OrthCtx d21(Family::D, 2, 1);
  ChiResult r = chi_by_counting(make_variety(d21.sp, d21.fn, "W1"), 0, 4);
  CHECK_FALSE(r.has_chi);
  CHECK(r.fit.status == FitStatus::NonPolynomial);
  CHECK_FALSE(r.fit.detail.empty());

  std::vector<ChiTarget> targets;
  targets.emplace_back("W1", make_variety(d21.sp, d21.fn, "W1"), 0);
  targets.emplace_back("W11", make_variety(d21.sp, d21.fn, "W11"), 4);
  auto rows = concordance(targets);
  CHECK(rows[0].status == "NON_POLYNOMIAL");
  CHECK(rows[1].status == "MATCH");
}

TEST_CASE("concordance rows never raise") {
  SymCtx c21(2, 1);
  std::vector<ChiTarget> targets;
  targets.emplace_back("good",
                       make_variety(c21.sp, c21.fn, "Gamma1CapGamma1Prime"),
                       -1);
  // A window missing the partner block of its pairing cannot be counted.
  VarietySpec bad;
  bad.space = &c21.sp;
  bad.fn = &c21.fn;
  bad.kind = AmbientKind::TensorCone;
  bad.pieces = {1, 2};
  bad.conds = {{FormRef::gamma(1), Rel::Eq1}};
  bad.name = "bad";
  targets.emplace_back("bad", bad);

  auto rows = concordance(targets);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "MISMATCH");
  CHECK(rows[0].computed == 0);
  CHECK(rows[0].target == -1);
  CHECK(rows[1].status == "SKIPPED");
  CHECK_FALSE(rows[1].detail.empty());

  CHECK(concordance({}).empty());
}

TEST_CASE("counts are additive over the pairing split") {
  SymCtx c21(2, 1);
  VarietySpec whole = make_variety(c21.sp, c21.fn, "SymSq");
  VarietySpec locus = make_variety(c21.sp, c21.fn, "Gamma1");
  VarietySpec rest = make_variety(c21.sp, c21.fn, "U_sym(0)");
  for (i64 p : {5, 7, 11}) {
    CHECK(count_points(whole, p).count ==
          count_points(locus, p).count + count_points(rest, p).count);
  }
  CHECK(chi_of(c21.sp, c21.fn, "SymSq") ==
        chi_of(c21.sp, c21.fn, "Gamma1") + chi_of(c21.sp, c21.fn, "U_sym(0)"));

  VarietySpec qwhole = make_variety(c21.sp, c21.fn, "Gamma1Prime");
  VarietySpec qcap = make_variety(c21.sp, c21.fn, "Gamma1CapGamma1Prime");
  VarietySpec qrest = make_variety(c21.sp, c21.fn, "W_sym(0)");
  for (i64 p : {5, 7, 11})
    CHECK(count_points(qwhole, p).count ==
          count_points(qcap, p).count + count_points(qrest, p).count);
}

TEST_CASE("a cone minus its vertex has chi zero") {
  SymCtx c22(2, 2);
  for (const char* nm : {"SymSq", "Gamma1Prime"}) {
    VarietySpec vs = make_variety(c22.sp, c22.fn, nm);
    PrimePlan plan = make_prime_plan(vs);
    auto samples = sample_counts(vs, plan, 0, 2);
    for (auto& s : samples) s.second -= 1;  // delete the origin class
    CountPolynomial fit = try_fit(samples, plan.degree_bound);
    REQUIRE(fit.status == FitStatus::Polynomial);
    CHECK(fit.poly.eval(BigRat(1)) == BigRat(0));
  }
}

TEST_CASE("threaded sampling equals sequential sampling") {
  SymCtx c21(2, 1);
  VarietySpec vs = make_variety(c21.sp, c21.fn, "U_sym(1)");
  PrimePlan plan = make_prime_plan(vs);
  CHECK(sample_counts(vs, plan, 0, 1) == sample_counts(vs, plan, 0, 4));
}
