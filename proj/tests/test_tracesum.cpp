#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>
#include <random>

#include "klsv/tracesum.hpp"
#include "klsv/varieties.hpp"

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

i64 census(const GradedSpace& sp, const StableFunctional& fn, i64 p, int k) {
  // Count locus points by running the window walker with a sink that ignores
  // the trace data entirely.
  PrimeField f = make_field(p);
  std::vector<CycInt> out = detail::walk_window(
      sp, fn, f, k, false, 1, 1,
      [](std::vector<CycInt>& acc, i64, i64) { acc[0].accumulate(0); });
  i64 n = 0;
  REQUIRE(out[0].as_integer(n));
  return n;
}

}  // namespace

TEST_CASE("single piece support reduces the trace function to the end form") {
  SymCtx c(2, 1);  // m = 4, pieces of dimension 1
  const i64 p = 5;
  for (i64 s = 1; s < p; ++s)
    for (i64 x = 1; x < p; ++x) {
      // Supported on the last piece: every divisor form and every term
      // numerator vanishes, leaving s * fm(w) * x with fm(e_m) = 1.
      TensorPoint top{s, {0, 0, 0, 1}};
      CHECK(f_phi_sym(c.sp, c.fn, p, x, top) == (s * x) % p);
      // Supported on the first piece: everything vanishes.
      TensorPoint bottom{s, {1, 0, 0, 0}};
      CHECK(f_phi_sym(c.sp, c.fn, p, x, bottom) == 0);
    }
  // The zero tensor is on the locus and the function vanishes there.
  CHECK(f_phi_sym(c.sp, c.fn, p, 3, TensorPoint{0, {1, 2, 3, 4}}) == 0);
  CHECK(f_phi_sym(c.sp, c.fn, p, 3, TensorPoint{p, {1, 2, 3, 4}}) == 0);
}

TEST_CASE("trace functions reject bad arguments") {
  SymCtx c(2, 1);
  OrthCtx o(Family::B, 2, 1);
  CHECK_THROWS_AS(f_phi_sym(c.sp, c.fn, 5, 0, TensorPoint{1, {0, 0, 0, 1}}),
                  OutOfDomain);
  CHECK_THROWS_AS(f_phi_sym(c.sp, c.fn, 5, 5, TensorPoint{1, {0, 0, 0, 1}}),
                  OutOfDomain);
  CHECK_THROWS_AS(f_phi_sym(c.sp, c.fn, 5, 1, TensorPoint{1, {1, 2}}),
                  ShapeMismatch);
  CHECK_THROWS_AS(f_phi_sym(o.sp, o.fn, 5, 1, TensorPoint{1, {1, 0, 0, 0, 0}}),
                  ShapeMismatch);
  CHECK_THROWS_AS(f_phi_orth(c.sp, c.fn, 5, 1, {1, 0, 0, 0}), ShapeMismatch);
  CHECK_THROWS_AS(f_phi_orth(o.sp, o.fn, 5, 0, {0, 0, 1, 0, 0}), OutOfDomain);
  CHECK_THROWS_AS(f_phi_orth(o.sp, o.fn, 5, 1, {1, 2, 3}), ShapeMismatch);
  CHECK_THROWS_AS(trace_sum(c.sp, c.fn, 0, 5), OutOfDomain);
  CHECK_THROWS_AS(trace_sum(c.sp, c.fn, 1, 5, 1, 0), OutOfDomain);
  CHECK_THROWS_AS(trace_sum(c.sp, c.fn, 1, 5, 1, 5), OutOfDomain);
  CHECK_THROWS_AS(trace_sum(c.sp, c.fn, 1, 2), EvenCharacteristic);
}

TEST_CASE("points on an excluded divisor or subquadric are refused") {
  SymCtx c(1, 1);  // m = 2: gamma_1(w) = -w_1 w_2, so gamma'_1 = -s w_1 w_2
  const i64 p = 5;
  CHECK_THROWS_AS(f_phi_sym(c.sp, c.fn, p, 1, TensorPoint{p - 1, {1, 1}}),
                  OnExcludedDivisor);
  CHECK_THROWS_WITH(f_phi_sym(c.sp, c.fn, p, 1, TensorPoint{p - 1, {1, 1}}),
                    Catch::Matchers::ContainsSubstring("depth 1"));
  CHECK_NOTHROW(f_phi_sym(c.sp, c.fn, p, 1, TensorPoint{1, {1, 1}}));

  OrthCtx o(Family::B, 2, 1);  // pieces 2,1,1,1; v on M_0 kills every q_[i,m-i]
  CHECK_THROWS_AS(f_phi_orth(o.sp, o.fn, p, 1, {1, 0, 0, 0, 0}),
                  OnExcludedQuadric);
  CHECK_THROWS_WITH(f_phi_orth(o.sp, o.fn, p, 1, {1, 0, 0, 0, 0}),
                    Catch::Matchers::ContainsSubstring("depth 1"));
}

TEST_CASE("representative changes leave the trace values alone") {
  const i64 p = 7;
  std::mt19937_64 rng(20240817);
  auto pick = [&](i64 lo, i64 hi) {
    return lo + static_cast<i64>(rng() % static_cast<u64>(hi - lo + 1));
  };
  PrimeField f = make_field(p);

  SymCtx c(2, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    TensorPoint t;
    t.s = pick(1, p - 1);
    for (int i = 0; i < c.sp.total_dim(); ++i) t.w.push_back(pick(0, p - 1));
    i64 cc = pick(1, p - 1);
    TensorPoint u;
    u.s = f.mul(t.s, f.inv(f.mul(cc, cc)));
    for (i64 wi : t.w) u.w.push_back(f.mul(cc, wi));
    i64 x = pick(1, p - 1);
    i64 a = -1, b = -1;
    bool ta = false, tb = false;
    try {
      a = f_phi_sym(c.sp, c.fn, p, x, t);
    } catch (const OnExcludedDivisor&) {
      ta = true;
    }
    try {
      b = f_phi_sym(c.sp, c.fn, p, x, u);
    } catch (const OnExcludedDivisor&) {
      tb = true;
    }
    REQUIRE(ta == tb);
    if (!ta) REQUIRE(a == b);
  }

  OrthCtx o(Family::B, 2, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<i64> v, u;
    bool nonzero = false;
    for (int i = 0; i < o.sp.total_dim(); ++i) {
      v.push_back(pick(0, p - 1));
      nonzero = nonzero || v.back() != 0;
    }
    if (!nonzero) v[0] = 1;
    i64 cc = pick(1, p - 1);
    for (i64 vi : v) u.push_back(f.mul(cc, vi));
    i64 x = pick(1, p - 1);
    i64 a = -1, b = -1;
    bool ta = false, tb = false;
    try {
      a = f_phi_orth(o.sp, o.fn, p, x, v);
    } catch (const OnExcludedQuadric&) {
      ta = true;
    }
    try {
      b = f_phi_orth(o.sp, o.fn, p, x, u);
    } catch (const OnExcludedQuadric&) {
      tb = true;
    }
    REQUIRE(ta == tb);
    if (!ta) REQUIRE(a == b);
  }
}

TEST_CASE("the double loop oracle agrees with the trace sum") {
  // Enumerating raw pairs (s, w) with w != 0 hits every nonzero tensor class
  // exactly p-1 times, since (s, w) ~ (s c^-2, c w).  The class sum is the
  // full trace sum minus the zero tensor's contribution of 1.
  SymCtx c(1, 1);
  for (i64 p : {3, 5}) {
    PrimeField f = make_field(p);
    for (i64 x = 1; x < p; ++x) {
      CycInt brute(p);
      for (i64 s = 1; s < p; ++s)
        for (i64 w0 = 0; w0 < p; ++w0)
          for (i64 w1 = 0; w1 < p; ++w1) {
            if (w0 == 0 && w1 == 0) continue;
            try {
              brute.accumulate(f_phi_sym(c.sp, c.fn, p, x, {s, {w0, w1}}));
            } catch (const OnExcludedDivisor&) {
            }
          }
      CycInt expected = trace_sum(c.sp, c.fn, x, p);
      expected.accumulate(0, -1);
      expected.scale(p - 1);
      REQUIRE(brute.equals(expected));
    }
  }
}

TEST_CASE("nontrivial characters are galois conjugates of the base sum") {
  SymCtx c(2, 1);
  OrthCtx o(Family::B, 2, 1);
  const i64 p = 7;
  CycInt base_c = trace_sum(c.sp, c.fn, 1, p);
  CycInt base_o = trace_sum(o.sp, o.fn, 1, p);
  for (i64 a = 2; a < p; ++a) {
    CHECK(trace_sum(c.sp, c.fn, 1, p, 1, a).equals(base_c.galois(a)));
    CHECK(trace_sum(o.sp, o.fn, 1, p, 1, a).equals(base_o.galois(a)));
  }
}

TEST_CASE("trace sums are deterministic across thread counts") {
  SymCtx c(2, 2);
  CycInt one = trace_sum(c.sp, c.fn, 2, 5, 1);
  CycInt four = trace_sum(c.sp, c.fn, 2, 5, 4);
  CHECK(one.equals(four));
}

TEST_CASE("window walkers census-match the point counter") {
  // The walker enumerates exactly the points of the window's own variety
  // spec, so a plain census through the sink must reproduce count_points.
  SymCtx c(2, 1);
  OrthCtx o(Family::B, 2, 1);
  const i64 p = 5;
  PrimeField f = make_field(p);
  for (int k = 1; k <= c.sp.ell(); ++k) {
    detail::SymWindow win = detail::sym_window(c.sp, c.fn, f, k, false);
    CHECK(census(c.sp, c.fn, p, k) == count_points(win.vs, p).count);
  }
  for (int k = 1; k <= o.sp.ell(); ++k) {
    detail::OrthWindow win = detail::orth_window(o.sp, o.fn, f, k, false);
    CHECK(census(o.sp, o.fn, p, k) == count_points(win.vs, p).count);
  }
}

TEST_CASE("a contradictory membership list sums to zero") {
  OrthCtx o(Family::B, 2, 1);
  const i64 p = 3;
  PrimeField f = make_field(p);
  detail::OrthWindow win = detail::orth_window(o.sp, o.fn, f, o.sp.ell(), false);
  detail::SparseForm flipped = win.member[0];
  flipped.rel = Rel::Ne0;  // q = 0 and q != 0 together empty the locus
  win.member.push_back(flipped);
  std::vector<CycInt> out = detail::walk_orth(
      win, f, 1, 1,
      [](std::vector<CycInt>& acc, i64, i64 b) { acc[0].accumulate(b); });
  CHECK(out[0].is_zero());
}

TEST_CASE("projection identity holds at the contract configurations") {
  for (i64 p : {3, 5, 7}) {
    DYNAMIC_SECTION("p=" << p) {
      SymCtx c11(1, 1), c21(2, 1), c22(2, 2);
      OrthCtx b21(Family::B, 2, 1);
      for (const auto* ctx : {&c11, &c21}) {
        IdentityRow row =
            projection_identity_check(ctx->sp, ctx->fn, p, 2);
        INFO(ctx->sp.describe() << " p=" << p);
        CHECK(row.name == "projection");
        CHECK(row.pass);
        CHECK(row.expected_e == IdentityRow::kNoExponent);
        CHECK(row.measured_e == IdentityRow::kNoExponent);
      }
      IdentityRow heavy = projection_identity_check(c22.sp, c22.fn, p, 4);
      CHECK(heavy.pass);
      IdentityRow orth = projection_identity_check(b21.sp, b21.fn, p, 2);
      CHECK(orth.pass);
      CHECK(orth.lhs.equals(orth.rhs));
    }
  }
}

TEST_CASE("projection identity survives a broken end map") {
  // The identity is character orthogonality over the locus, not stability:
  // zeroing the map that feeds the x-coefficient must not break it.
  SymCtx c(2, 1);
  StableFunctional broken = c.fn;
  QMat& top = broken.phi.at(c.sp.m());
  top = QMat(top.rows(), top.cols());
  CHECK(projection_identity_check(c.sp, broken, 5, 2).pass);

  OrthCtx o(Family::B, 2, 1);
  StableFunctional broken_o = o.fn;
  QMat& bottom = broken_o.phi.at(0);
  bottom = QMat(bottom.rows(), bottom.cols());
  CHECK(projection_identity_check(o.sp, broken_o, 5, 2).pass);
}

TEST_CASE("descent rows measure the window ladder exponent") {
  SECTION("boundary step of the two-window symplectic ladder") {
    SymCtx c(2, 1);
    for (i64 p : {3, 5}) {
      IdentityRow row = descent_identity_check(c.sp, c.fn, 1, p);
      INFO("p=" << p << " detail: " << row.detail);
      CHECK(row.name == "descent i=1");
      CHECK(row.pass);
      CHECK(row.expected_e == 1);
      // Both windows span the full cone here and the shallow sum carries the
      // extra volume: p^3 * lhs equals the base sum.
      CHECK(row.measured_e == -3);
      CHECK(row.lhs.equals_integer(1));
      CHECK(row.rhs.equals_integer(p * p * p));
    }
  }
  SECTION("interior step measures the forgotten block dimension") {
    SymCtx c(3, 1);
    IdentityRow inner = descent_identity_check(c.sp, c.fn, 1, 3);
    INFO(inner.detail);
    CHECK(inner.pass);
    CHECK(inner.expected_e == 1);
    CHECK(inner.measured_e == 1);
    IdentityRow edge = descent_identity_check(c.sp, c.fn, 2, 3);
    INFO(edge.detail);
    CHECK(edge.pass);
    CHECK(edge.measured_e == -4);
  }
  SECTION("orthogonal steps descend with no twist at all") {
    OrthCtx b21(Family::B, 2, 1);
    for (i64 p : {3, 5}) {
      IdentityRow row = descent_identity_check(b21.sp, b21.fn, 1, p);
      INFO("p=" << p << " detail: " << row.detail);
      CHECK(row.pass);
      CHECK(row.measured_e == 0);
      CHECK(row.lhs.equals(row.rhs));
    }
    OrthCtx b31(Family::B, 3, 1);
    for (int i = 1; i <= 2; ++i) {
      IdentityRow row = descent_identity_check(b31.sp, b31.fn, i, 3);
      INFO(row.detail);
      CHECK(row.pass);
      CHECK(row.measured_e == 0);
    }
  }
  SECTION("a step that is not a power relation fails honestly") {
    SymCtx c(4, 2);  // m = 4: the single step is a boundary step with d = 2
    IdentityRow row = descent_identity_check(c.sp, c.fn, 1, 3);
    INFO(row.detail);
    CHECK_FALSE(row.pass);
    CHECK(row.measured_e == IdentityRow::kNoExponent);
    CHECK(row.lhs.equals_integer(225));
    CHECK(row.rhs.equals_integer(729));
  }
}

TEST_CASE("descent steps outside the ladder are rejected") {
  SymCtx c21(2, 1), c11(1, 1);
  OrthCtx b21(Family::B, 2, 1);
  CHECK_THROWS_AS(descent_identity_check(c21.sp, c21.fn, 0, 3), NoSuchStep);
  CHECK_THROWS_AS(descent_identity_check(c21.sp, c21.fn, 2, 3), NoSuchStep);
  CHECK_THROWS_AS(descent_identity_check(c11.sp, c11.fn, 1, 3), NoSuchStep);
  CHECK_THROWS_AS(descent_identity_check(b21.sp, b21.fn, 2, 3), NoSuchStep);
}

TEST_CASE("trace report carries sums, checks, and size notes") {
  OrthCtx o(Family::B, 2, 1);
  const i64 p = 3;
  TraceSumReport rep = make_trace_report(o.sp, o.fn, p);
  REQUIRE(rep.xs == std::vector<i64>{1, 2});
  REQUIRE(rep.sums.size() == 2);
  CHECK(rep.sums.at(1).equals(trace_sum(o.sp, o.fn, 1, p)));
  CHECK(rep.sums.at(1).equals_integer(5));
  CHECK(rep.sums.at(2).equals_integer(5));
  REQUIRE(rep.checks.size() == 2);
  CHECK(rep.checks[0].name == "projection");
  CHECK(rep.checks[0].pass);
  CHECK(rep.checks[1].name == "descent i=1");
  REQUIRE(rep.weil.size() == 2);
  CHECK(rep.weil[0].magnitude == Catch::Approx(5.0).margin(1e-9));
  CHECK(rep.weil[0].reference == Catch::Approx(std::pow(3.0, 1.5)).margin(1e-9));

  std::string text = to_json(rep);
  CHECK(text == to_json(rep));  // byte-deterministic
  nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["version"] == 1);
  CHECK(j["family"] == "B");
  CHECK(j["n"] == 2);
  CHECK(j["d"] == 1);
  CHECK(j["m"] == 4);
  CHECK(j["p"] == 3);
  REQUIRE(j["sums"].size() == 2);
  CHECK(j["sums"][0]["x"] == 1);
  CHECK(j["sums"][0]["coeffs"].is_array());
  REQUIRE(j["checks"].size() == 2);
  CHECK(j["checks"][0]["pass"] == true);
  CHECK(j["checks"][0]["name"] == "projection");
  CHECK(j["checks"][1]["expected_e"] == 1);
  REQUIRE(j["weil"].size() == 2);
  CHECK(j["weil"][0]["magnitude"].is_number());
  CHECK(j["weil"][0]["reference"].is_number());
}

TEST_CASE("sparse lists render the canonical nonzero coefficients") {
  CycInt c(3);
  CHECK(sparse_list(c) == "[]");
  c.accumulate(0, 5);
  // 5 * zeta^0 normalizes to -5 zeta - 5 zeta^2.
  CHECK(sparse_list(c) == "[[1,-5],[2,-5]]");
}
