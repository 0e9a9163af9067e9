#pragma once

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "klsv/errors.hpp"
#include "klsv/ffield.hpp"
#include "klsv/spaces.hpp"

namespace klsv {

// Scissor calculus for compactly supported Euler characteristics.  A ChiExpr
// carries an integer value together with the full list of rule applications
// that produced it, so a derivation can be replayed step by step and printed
// as a human-readable argument.  The registered derivations reproduce the
// recorded claims exactly as stated, including the contested intersection
// step; disagreements with the counting oracle are surfaced elsewhere.

enum class ChiKind { Affine, Projective, Torus, SmoothQuadric, AffineCone };
enum class ChiRule { BaseClass, Additivity, Fibration, Product };

inline i64 chi_class_value(ChiKind k, int param) {
  switch (k) {
    case ChiKind::Affine:
      if (param < 0) throw UnknownKind("AFFINE needs dimension >= 0");
      return 1;
    case ChiKind::Projective:
      if (param < 0) throw UnknownKind("PROJECTIVE needs dimension >= 0");
      return param + 1;
    case ChiKind::Torus:
      return 0;
    case ChiKind::SmoothQuadric:
      // Dimension parity rule for a split smooth projective quadric; the
      // empty quadric (dimension -1) comes out 0 under the same formula.
      if (param < -1)
        throw UnknownKind("SMOOTH_QUADRIC needs dimension >= -1");
      return param % 2 == 0 ? param + 2 : param + 1;
    case ChiKind::AffineCone:
      return 1;
  }
  throw UnknownKind("unrecognized base class");
}

inline std::string rule_string(ChiRule r, ChiKind k, int param) {
  switch (r) {
    case ChiRule::BaseClass:
      switch (k) {
        case ChiKind::Affine: return "AFFINE(" + std::to_string(param) + ")";
        case ChiKind::Projective:
          return "PROJECTIVE(" + std::to_string(param) + ")";
        case ChiKind::Torus: return "TORUS";
        case ChiKind::SmoothQuadric:
          return "SMOOTH_QUADRIC(" + std::to_string(param) + ")";
        case ChiKind::AffineCone: return "AFFINE_CONE";
      }
      return "?";
    case ChiRule::Additivity: return "ADDITIVITY";
    case ChiRule::Fibration: return "FIBRATION";
    case ChiRule::Product: return "PRODUCT";
  }
  return "?";
}

// One rule application.  Base classes carry (kind, param); combination steps
// carry signed references to earlier steps in the same trace.
struct ChiStep {
  ChiRule rule = ChiRule::BaseClass;
  ChiKind kind = ChiKind::Affine;
  int param = 0;
  std::vector<std::pair<int, int>> args;  // (coefficient, earlier step index)
  i64 output = 0;
  std::string what;      // the piece this step evaluates
  std::string citation;  // where the step comes from, recorded as data
};

struct ChiExpr {
  i64 value = 0;
  std::vector<ChiStep> trace;
};

// Recomputes a single step from its recorded inputs.
inline i64 replay_step(const ChiStep& s, const std::vector<i64>& outputs) {
  if (s.rule == ChiRule::BaseClass) return chi_class_value(s.kind, s.param);
  i64 acc = s.rule == ChiRule::Additivity ? 0 : 1;
  for (auto [coeff, ref] : s.args) {
    if (ref < 0 || ref >= static_cast<int>(outputs.size()))
      throw NoSuchStep("step references index " + std::to_string(ref) +
                       " outside the replayed prefix");
    i64 v = outputs[static_cast<std::size_t>(ref)];
    if (s.rule == ChiRule::Additivity)
      acc += coeff * v;
    else
      acc *= v;  // Fibration and Product both multiply, coefficients are 1
  }
  return acc;
}

// Re-executes every recorded step; true iff each output matches and the
// final step reproduces the expression value.
inline bool replay(const ChiExpr& e) {
  std::vector<i64> outputs;
  outputs.reserve(e.trace.size());
  for (const ChiStep& s : e.trace) {
    i64 got = replay_step(s, outputs);
    if (got != s.output) return false;
    outputs.push_back(got);
  }
  return !e.trace.empty() && outputs.back() == e.value;
}

namespace detail {

// Accumulates steps for one derivation; combination arguments refer to step
// indices returned by the emitting calls.
class ChiBuilder {
 public:
  int base(ChiKind k, int param, std::string what, std::string citation) {
    ChiStep s;
    s.rule = ChiRule::BaseClass;
    s.kind = k;
    s.param = param;
    s.output = chi_class_value(k, param);
    s.what = std::move(what);
    s.citation = std::move(citation);
    steps_.push_back(std::move(s));
    return last();
  }

  int combine(ChiRule r, std::vector<std::pair<int, int>> args,
              std::string what, std::string citation) {
    if (r == ChiRule::BaseClass)
      throw ArityMismatch("combine needs a combination rule");
    if (args.size() < 2)
      throw ArityMismatch(rule_string(r, {}, 0) + " needs at least two parts");
    if (r == ChiRule::Fibration && args.size() != 2)
      throw ArityMismatch("FIBRATION takes exactly fiber and base");
    if (r != ChiRule::Additivity)
      for (auto [coeff, ref] : args)
        if (coeff != 1)
          throw ArityMismatch("multiplicative rules take unsigned parts");
    ChiStep s;
    s.rule = r;
    s.args = std::move(args);
    s.what = std::move(what);
    s.citation = std::move(citation);
    std::vector<i64> outputs;
    outputs.reserve(steps_.size());
    for (const ChiStep& prev : steps_) outputs.push_back(prev.output);
    s.output = replay_step(s, outputs);
    steps_.push_back(std::move(s));
    return last();
  }

  // Appends another expression's trace, shifting its internal references;
  // returns the index its final step landed on.
  int splice(const ChiExpr& sub) {
    int offset = static_cast<int>(steps_.size());
    for (ChiStep s : sub.trace) {
      for (auto& [coeff, ref] : s.args) ref += offset;
      steps_.push_back(std::move(s));
    }
    return last();
  }

  i64 value_at(int idx) const {
    return steps_.at(static_cast<std::size_t>(idx)).output;
  }

  ChiExpr finish() const {
    if (steps_.empty()) throw ArityMismatch("empty derivation");
    return ChiExpr{steps_.back().output, steps_};
  }

 private:
  int last() const { return static_cast<int>(steps_.size()) - 1; }
  std::vector<ChiStep> steps_;
};

}  // namespace detail

inline ChiExpr chi_class(ChiKind k, int param = 0, std::string what = "",
                         std::string citation = "") {
  detail::ChiBuilder b;
  b.base(k, param, std::move(what), std::move(citation));
  return b.finish();
}

// Combines finished expressions under one rule.  Parts are (coefficient,
// expression); additivity takes signed parts, the multiplicative rules take
// coefficient 1 only.
inline ChiExpr chi_combine(ChiRule r,
                           const std::vector<std::pair<int, ChiExpr>>& parts,
                           std::string what = "", std::string citation = "") {
  detail::ChiBuilder b;
  std::vector<std::pair<int, int>> args;
  args.reserve(parts.size());
  for (const auto& [coeff, expr] : parts) args.emplace_back(coeff, b.splice(expr));
  b.combine(r, std::move(args), std::move(what), std::move(citation));
  return b.finish();
}

// Parameters a derivation may consume.  Symplectic scripts use n and d;
// orthogonal scripts use family, d and the end-pairing degeneracy flag.
struct DerivationParams {
  Family family = Family::C;
  int n = 0;
  int d = 1;
  bool degenerate = false;
};

// The three columns a configuration contributes: the two intersection loci
// and the signed combination.
struct Table1Row {
  i64 w1 = 0;
  i64 w11 = 0;
  i64 comb = 0;
};

namespace detail {

inline void require(bool ok, const std::string& why) {
  if (!ok) throw OutOfDomain(why);
}

// End-block dimensions (dim M_0, dim M_l) for a family and d, checking that
// the degeneracy flag is consistent with the forced parities.
inline std::pair<int, int> end_dims(Family fam, int d, bool degenerate) {
  require(d >= 1, "d must be positive");
  switch (fam) {
    case Family::B:
      require(!degenerate, "type B has no degenerate end pairing");
      // dim M_0 must be even; parity of d picks which end gets d+1.
      return d % 2 == 0 ? std::pair{d, d + 1} : std::pair{d + 1, d};
    case Family::D:
      // Both end blocks even-dimensional.
      if (degenerate) {
        require(d % 2 == 1, "degenerate type D needs odd d");
        return {d + 1, d + 1};
      }
      require(d % 2 == 0, "non-degenerate type D needs even d");
      return {d, d};
    case Family::D2:
      // Both end blocks odd-dimensional.
      if (degenerate) {
        require(d % 2 == 0, "degenerate quasi-split type needs even d");
        return {d + 1, d + 1};
      }
      require(d % 2 == 1, "non-degenerate quasi-split type needs odd d");
      return {d, d};
    case Family::C:
      break;
  }
  throw OutOfDomain("end-block dimensions are an orthogonal notion");
}

inline ChiExpr derive_sym_square(const DerivationParams& prm) {
  require(prm.d >= 1, "d must be positive");
  int d = prm.d;
  const std::string cite = "Lemma 4.5 (symplectic pure-tensor cone)";
  ChiBuilder b;
  int t = b.base(ChiKind::Torus, 0, "scaling direction of the punctured cone",
                 cite);
  int p = b.base(ChiKind::Projective, 2 * d - 1,
                 "class space P(M_1 + M_m) under the cone", cite);
  int off = b.combine(ChiRule::Fibration, {{1, t}, {1, p}},
                      "cone minus its vertex", cite);
  int v = b.base(ChiKind::Affine, 0, "the vertex", cite);
  b.combine(ChiRule::Additivity, {{1, off}, {1, v}},
            "Sym^2_{<=1}(M_1 + M_m)", cite);
  return b.finish();
}

inline ChiExpr derive_gamma1(const DerivationParams& prm) {
  require(prm.d >= 1, "d must be positive");
  int d = prm.d;
  const std::string cite = "Lemma 4.6 (first pairing locus)";
  ChiBuilder b;
  int m1 = b.base(ChiKind::Affine, d, "M_1", cite);
  int o = b.base(ChiKind::Affine, 0, "origin of M_1", cite);
  int punct = b.combine(ChiRule::Additivity, {{1, m1}, {-1, o}},
                        "M_1 minus the origin", cite);
  int t = b.base(ChiKind::Torus, 0,
                 "k^* factor of the fiber {v_m : omega(u_1, v_m) = 1}", cite);
  b.combine(ChiRule::Fibration, {{1, t}, {1, punct}}, "Gamma_1", cite);
  return b.finish();
}

inline ChiExpr derive_gamma1prime(const DerivationParams& prm) {
  require(prm.d >= 1, "d must be positive");
  int d = prm.d;
  const std::string cite = "Lemma 4.7 (end-block quadric)";
  ChiBuilder b;
  int vx = b.base(ChiKind::Projective, d - 1,
                  "vertex P(M_1) of the projective quadric", cite);
  int qb = b.base(ChiKind::SmoothQuadric, d - 2,
                  "smooth quadric {omega(phi_m v_m, v_m) = 0} in P(M_m)",
                  cite);
  int af = b.base(ChiKind::Affine, d, "affine fibers through the vertex",
                  cite);
  int cone = b.combine(ChiRule::Fibration, {{1, qb}, {1, af}},
                       "P(Gamma_1') away from its vertex", cite);
  int pq = b.combine(ChiRule::Additivity, {{1, vx}, {1, cone}},
                     "P(Gamma_1')", cite);
  int t = b.base(ChiKind::Torus, 0, "scaling k^*", cite);
  int pk = b.combine(ChiRule::Fibration, {{1, t}, {1, pq}},
                     "Gamma_1' minus the origin", cite);
  int o = b.base(ChiKind::Affine, 0, "the origin", cite);
  b.combine(ChiRule::Additivity, {{1, pk}, {1, o}}, "Gamma_1'", cite);
  return b.finish();
}

inline ChiExpr derive_two_quadrics(const DerivationParams& prm) {
  require(prm.d >= 1, "d must be positive");
  int d = prm.d;
  const std::string cite = "Lemma 4.8 (contested intersection)";
  ChiBuilder b;
  int gp = b.splice(derive_gamma1prime(prm));
  int pb = b.base(ChiKind::Projective, d - 1,
                  "P(M_1) base of Gamma_0 away from {v_1 = 0}", cite);
  int cf = b.base(ChiKind::AffineCone, 0,
                  "affine quadric fiber (end-block quadric cut by a "
                  "hyperplane)",
                  cite);
  int away = b.combine(ChiRule::Fibration, {{1, cf}, {1, pb}},
                       "Gamma_0 minus {v_1 = 0}", cite);
  int slice = b.base(ChiKind::AffineCone, 0,
                     "slice {v_1 = 0}: end-block quadric inside "
                     "Sym^2_{<=1}(M_m)",
                     cite);
  int g0 = b.combine(ChiRule::Additivity, {{1, away}, {1, slice}}, "Gamma_0",
                     cite);
  // The recorded argument trades the affine slice {gamma_1 = 1} for the
  // complement of {gamma-swapped = 0}; this is the step the counting oracle
  // contests, and it is reproduced here exactly as stated.
  b.combine(ChiRule::Additivity, {{1, gp}, {-1, g0}},
            "Gamma_1 cap Gamma_1' by the slice-for-complement exchange",
            cite);
  return b.finish();
}

inline ChiExpr derive_prop_m_ge_3(const DerivationParams& prm) {
  require(prm.n >= 1, "n must be positive");
  require(prm.d >= 1 && prm.n % prm.d == 0, "d must divide n");
  int m = 2 * prm.n / prm.d;
  require(m >= 3, "descent form of the combination needs m >= 3");
  ChiBuilder b;
  int ss = b.splice(derive_sym_square(prm));
  int g1 = b.splice(derive_gamma1(prm));
  int gp = b.splice(derive_gamma1prime(prm));
  int tq = b.splice(derive_two_quadrics(prm));
  b.combine(ChiRule::Additivity, {{-1, ss}, {1, g1}, {1, gp}, {-1, tq}},
            "-chi(U_0) + chi(W_0) after descent to the end window",
            "Proposition 4.3 (symplectic descent)");
  return b.finish();
}

inline ChiExpr derive_prop_m_eq_2(const DerivationParams& prm) {
  require(prm.n >= 1, "n must be positive");
  require(prm.d == prm.n, "the two-block case needs d = n");
  int d = prm.d;
  const std::string cite = "Proposition 4.4 (two-block case)";
  ChiBuilder b;

  // chi P(U_0): ambient minus the open image of the gamma_1 = 1 slice.
  int amb = b.base(ChiKind::Projective, 2 * d - 1, "P(M_1 + M_2)", cite);
  int q1bar = b.base(ChiKind::SmoothQuadric, 2 * d - 2,
                     "quadric {gamma_1 = 0} in P(M_1 + M_2)", cite);
  int pg1 = b.combine(ChiRule::Additivity, {{1, amb}, {-1, q1bar}},
                      "P(Gamma_1), the complement of the gamma_1 quadric",
                      cite);
  int pu0 = b.combine(ChiRule::Additivity, {{1, amb}, {-1, pg1}}, "P(U_0)",
                      cite);

  // chi of the projectivized rank-d block quadric: vertex plus cone part.
  auto block_quadric = [&](const std::string& which, const std::string& vtx,
                           const std::string& base_space) {
    int vx = b.base(ChiKind::Projective, d - 1, "vertex " + vtx + " of " + which,
                    cite);
    int qb = b.base(ChiKind::SmoothQuadric, d - 2,
                    "base quadric of " + which + " in " + base_space, cite);
    int af = b.base(ChiKind::Affine, d, "affine fibers of " + which, cite);
    int cone = b.combine(ChiRule::Fibration, {{1, qb}, {1, af}},
                         which + " away from its vertex", cite);
    return b.combine(ChiRule::Additivity, {{1, vx}, {1, cone}}, which, cite);
  };

  int pq1 = block_quadric("P(Q_1)", "P(M_2)", "P(M_1)");
  int m2 = b.base(ChiKind::Affine, d, "M_2", cite);
  int hp = b.base(ChiKind::Affine, d - 1, "a hyperplane in M_2", cite);
  int fib1 = b.combine(ChiRule::Additivity, {{1, m2}, {-1, hp}},
                       "fiber: M_2 minus a hyperplane", cite);
  int qsm1 = b.base(ChiKind::SmoothQuadric, d - 2,
                    "base quadric {omega(phi_1 v_1, v_1) = 0} in P(M_1)",
                    cite);
  int pcap1 = b.combine(ChiRule::Fibration, {{1, fib1}, {1, qsm1}},
                        "P(Q_1 cap Gamma_1)", cite);
  int pu0p = b.combine(ChiRule::Additivity, {{1, pq1}, {-1, pcap1}},
                       "P(U_0')", cite);

  int pq2 = block_quadric("P(Q_2)", "P(M_1)", "P(M_2)");
  int m1 = b.base(ChiKind::Affine, d, "M_1", cite);
  int hp2 = b.base(ChiKind::Affine, d - 1, "a hyperplane in M_1", cite);
  int fib2 = b.combine(ChiRule::Additivity, {{1, m1}, {-1, hp2}},
                       "fiber: M_1 minus a hyperplane", cite);
  int qsm2 = b.base(ChiKind::SmoothQuadric, d - 2,
                    "base quadric {omega(phi_2 v_2, v_2) = 0} in P(M_2)",
                    cite);
  int pcap2 = b.combine(ChiRule::Fibration, {{1, fib2}, {1, qsm2}},
                        "P(Q_2 cap Gamma_1)", cite);
  int pw0 = b.combine(ChiRule::Additivity, {{1, pq2}, {-1, pcap2}}, "P(W_0)",
                      cite);

  // chi P(W_0 cap U_0'): the surviving triple intersection, split along
  // v_1 = 0 exactly like the end-block lemmas.
  int wz = b.base(ChiKind::SmoothQuadric, d - 2,
                  "slice {v_1 = 0}: second-block quadric in P(M_2)", cite);
  int wb = b.base(ChiKind::SmoothQuadric, d - 2,
                  "first-block quadric in P(M_1)", cite);
  int wc = b.base(ChiKind::AffineCone, 0,
                  "cone fiber cut by the pairing hyperplane", cite);
  int wnz = b.combine(ChiRule::Fibration, {{1, wc}, {1, wb}},
                      "part with v_1 != 0", cite);
  int pwcap = b.combine(ChiRule::Additivity, {{1, wz}, {1, wnz}},
                        "P(W_0 cap U_0')", cite);

  int proj = b.combine(
      ChiRule::Additivity, {{1, pu0}, {-1, pu0p}, {-1, pw0}, {1, pwcap}},
      "chi P(U~) - chi P(W~)", cite);

  // Affine part: the four end-window values with the second-block quadric
  // playing the divisor role.
  int ss = b.splice(derive_sym_square(prm));
  int g1 = b.splice(derive_gamma1(prm));
  int gp = b.splice(derive_gamma1prime(prm));
  int tq = b.splice(derive_two_quadrics(prm));
  int aff = b.combine(ChiRule::Additivity,
                      {{-1, ss}, {1, g1}, {1, gp}, {-1, tq}},
                      "-chi(U~_0) + chi(W~_0)", cite);

  b.combine(ChiRule::Additivity, {{1, proj}, {1, aff}},
            "two-block combination (assembly reconstructed from the stated "
            "pieces)",
            cite);
  return b.finish();
}

inline ChiExpr derive_thm_sp(const DerivationParams& prm) {
  require(prm.n >= 1, "n must be positive");
  require(prm.d >= 1 && prm.n % prm.d == 0, "d must divide n");
  int m = 2 * prm.n / prm.d;
  return m == 2 ? derive_prop_m_eq_2(prm) : derive_prop_m_ge_3(prm);
}

// The two-part end-window split shared by the Q_1 and W_11 evaluations:
// the v_0 = 0 slice is a quadric in P(M_l), the rest fibers in cones over
// the quadric in P(M_0).
inline ChiExpr derive_end_split(const std::string& locus, int a, int b_dim,
                                const std::string& cite) {
  ChiBuilder b;
  int z = b.base(ChiKind::SmoothQuadric, b_dim - 2,
                 "{v_0 = 0} part of " + locus + ": quadric {q_l = 0} in P(M_l)",
                 cite);
  int qb = b.base(ChiKind::SmoothQuadric, a - 2,
                  "quadric {q_0 = 0} in P(M_0)", cite);
  int cf = b.base(ChiKind::AffineCone, 0, "cone fiber over the base quadric",
                  cite);
  int nz = b.combine(ChiRule::Fibration, {{1, cf}, {1, qb}},
                     "{v_0 != 0} part of " + locus, cite);
  b.combine(ChiRule::Additivity, {{1, z}, {1, nz}}, locus, cite);
  return b.finish();
}

inline ChiExpr derive_orth_q1(const DerivationParams& prm) {
  require(prm.family == Family::B, "stated for the odd-dimensional family");
  auto [a, b_dim] = end_dims(Family::B, prm.d, prm.degenerate);
  return derive_end_split("Q_1", a, b_dim, "Lemma 5.4 (end quadric pair)");
}

inline ChiExpr derive_orth_w11(const DerivationParams& prm) {
  require(prm.family == Family::B, "stated for the odd-dimensional family");
  auto [a, b_dim] = end_dims(Family::B, prm.d, prm.degenerate);
  return derive_end_split("W_11", a, b_dim,
                          "Lemma 5.5 (three-quadric intersection)");
}

inline ChiExpr derive_table1_row(const DerivationParams& prm) {
  auto [a, b_dim] = end_dims(prm.family, prm.d, prm.degenerate);
  int N = a + b_dim;
  const std::string cite = "Table 1 (end-window characteristics)";
  ChiBuilder b;

  int q = b.base(ChiKind::SmoothQuadric, N - 2,
                 "column chi(Q): quadric {q_0 + q_l = 0} in P(M_0 + M_l)",
                 cite);
  int q1 = b.splice(derive_end_split("column chi(Q_1)", a, b_dim,
                                     "Lemma 5.4 (end quadric pair)"));

  // W_1 is an intersection of two quadrics in P(M_0 + M_l); the cited parity
  // table gives 2(N-1) for even intersection dimension and 0 for odd, which
  // this step records as a pair of quadric contributions with matching or
  // canceling signs.
  int w1;
  if (N % 2 == 1) {
    int c1 = b.base(ChiKind::SmoothQuadric, N - 3,
                    "first parity contribution of the pairing intersection",
                    cite);
    int c2 = b.base(ChiKind::SmoothQuadric, N - 3,
                    "second parity contribution of the pairing intersection",
                    cite);
    w1 = b.combine(ChiRule::Additivity, {{1, c1}, {1, c2}},
                   "column chi(W_1): even-dimensional intersection of two "
                   "quadrics (k^* pieces contribute 0)",
                   cite);
  } else {
    int c1 = b.base(ChiKind::SmoothQuadric, N - 3,
                    "canceling parity contribution", cite);
    int c2 = b.base(ChiKind::SmoothQuadric, N - 3,
                    "canceling parity contribution", cite);
    w1 = b.combine(ChiRule::Additivity, {{1, c1}, {-1, c2}},
                   "column chi(W_1): odd-dimensional intersection of two "
                   "quadrics",
                   cite);
  }

  int w11 = b.splice(derive_end_split("column chi(W_11)", a, b_dim,
                                      "Lemma 5.5 (three-quadric "
                                      "intersection)"));

  // Sign pattern depends on the parity of dim M through the shift in the
  // local-system combination.
  if (N % 2 == 1)
    b.combine(ChiRule::Additivity, {{-1, q}, {1, q1}, {1, w1}, {-1, w11}},
              "column -chi (odd-dimensional M)",
              "Theorem 1.2 (orthogonal combination)");
  else
    b.combine(ChiRule::Additivity, {{1, q}, {-1, q1}, {-1, w1}, {1, w11}},
              "column -chi (even-dimensional M)",
              "Theorem 1.2 (orthogonal combination)");
  return b.finish();
}

inline ChiExpr derive_thm_orth(const DerivationParams& prm) {
  ChiExpr e = derive_table1_row(prm);
  i64 want = prm.degenerate ? 2 * (prm.d + 1) : 2 * prm.d;
  if (e.value != want)
    throw Error("table row combination disagrees with the case formula");
  return e;
}

}  // namespace detail

// Stated values of the three row columns, by configuration.
inline Table1Row table1_row_values(Family fam, int d, bool degenerate) {
  detail::end_dims(fam, d, degenerate);  // validates the configuration
  i64 dd = d;
  switch (fam) {
    case Family::B: return {4 * dd, 2 * dd, 2 * dd};
    case Family::D:
      return degenerate ? Table1Row{0, 2 * (dd + 1), 2 * (dd + 1)}
                        : Table1Row{0, 2 * dd, 2 * dd};
    case Family::D2:
      return degenerate ? Table1Row{0, 2 * dd, 2 * (dd + 1)}
                        : Table1Row{0, 2 * dd - 2, 2 * dd};
    case Family::C: break;
  }
  throw OutOfDomain("row values are an orthogonal notion");
}

// Pulls a labeled column value out of a table-row trace.
inline i64 trace_column(const ChiExpr& e, const std::string& label) {
  for (const ChiStep& s : e.trace)
    if (s.what.rfind(label, 0) == 0) return s.output;
  throw NoSuchStep("no trace step labeled " + label);
}

inline const std::vector<std::string>& derivation_names() {
  static const std::vector<std::string> names = {
      "lemma-sym-square", "lemma-gamma1",   "lemma-gamma1prime",
      "lemma-two-quadrics", "prop-m-ge-3",  "prop-m-eq-2",
      "thm-sp",           "lemma-orth-Q1",  "lemma-orth-W11",
      "table1-row",       "thm-orth"};
  return names;
}

inline ChiExpr run_derivation(const std::string& id,
                              const DerivationParams& prm) {
  using Fn = std::function<ChiExpr(const DerivationParams&)>;
  static const std::map<std::string, Fn> registry = {
      {"lemma-sym-square", detail::derive_sym_square},
      {"lemma-gamma1", detail::derive_gamma1},
      {"lemma-gamma1prime", detail::derive_gamma1prime},
      {"lemma-two-quadrics", detail::derive_two_quadrics},
      {"prop-m-ge-3", detail::derive_prop_m_ge_3},
      {"prop-m-eq-2", detail::derive_prop_m_eq_2},
      {"thm-sp", detail::derive_thm_sp},
      {"lemma-orth-Q1", detail::derive_orth_q1},
      {"lemma-orth-W11", detail::derive_orth_w11},
      {"table1-row", detail::derive_table1_row},
      {"thm-orth", detail::derive_thm_orth}};
  auto it = registry.find(id);
  if (it == registry.end()) throw UnknownDerivation(id);
  return it->second(prm);
}

// The stated value each derivation must reproduce, computed directly from
// the parameters; used to cross-check full runs.
inline i64 derivation_target(const std::string& id,
                             const DerivationParams& prm) {
  i64 d = prm.d;
  if (id == "lemma-sym-square" || id == "lemma-gamma1prime") return 1;
  if (id == "lemma-gamma1") return 0;
  if (id == "lemma-two-quadrics") return -d;
  if (id == "prop-m-ge-3" || id == "prop-m-eq-2" || id == "thm-sp") return d;
  if (id == "lemma-orth-Q1" || id == "lemma-orth-W11") return 2 * d;
  if (id == "table1-row" || id == "thm-orth")
    return table1_row_values(prm.family, prm.d, prm.degenerate).comb;
  throw UnknownDerivation(id);
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string signed_ref(int coeff, int ref) {
  std::string s = coeff < 0 ? "-" : "+";
  return s + " [" + std::to_string(ref) + "]";
}

}  // namespace detail

// Serializes a trace as a JSON object with the steps in execution order.
inline std::string trace_to_json(const ChiExpr& e) {
  std::ostringstream out;
  out << "{\"value\":" << e.value << ",\"steps\":[";
  for (std::size_t i = 0; i < e.trace.size(); ++i) {
    const ChiStep& s = e.trace[i];
    if (i > 0) out << ",";
    out << "{\"index\":" << i << ",\"rule\":\""
        << rule_string(s.rule, s.kind, s.param) << "\",\"inputs\":[";
    for (std::size_t j = 0; j < s.args.size(); ++j) {
      if (j > 0) out << ",";
      out << "{\"coeff\":" << s.args[j].first
          << ",\"ref\":" << s.args[j].second << "}";
    }
    out << "],\"output\":" << s.output << ",\"what\":\""
        << detail::json_escape(s.what) << "\",\"citation\":\""
        << detail::json_escape(s.citation) << "\"}";
  }
  out << "]}";
  return out.str();
}

// Renders a trace as a numbered argument, one line per rule application.
inline std::string trace_to_markdown(const ChiExpr& e,
                                     const std::string& title) {
  std::ostringstream out;
  out << "### " << title << "\n\n";
  for (std::size_t i = 0; i < e.trace.size(); ++i) {
    const ChiStep& s = e.trace[i];
    out << i << ". `" << rule_string(s.rule, s.kind, s.param) << "`";
    if (!s.args.empty()) {
      out << " of";
      for (std::size_t j = 0; j < s.args.size(); ++j)
        out << (j > 0 ? ", " : " ")
            << detail::signed_ref(s.args[j].first, s.args[j].second);
    }
    out << " = **" << s.output << "** (" << s.what;
    if (!s.citation.empty()) out << "; " << s.citation;
    out << ")\n";
  }
  out << "\nresult: **" << e.value << "**\n";
  return out.str();
}

}  // namespace klsv
