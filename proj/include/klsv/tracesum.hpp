#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "klsv/errors.hpp"
#include "klsv/ffield.hpp"
#include "klsv/rat.hpp"
#include "klsv/spaces.hpp"
#include "klsv/varieties.hpp"

// Exact Frobenius-trace sums of the stable trace functions, plus the two
// identity checks that shadow the pushforward steps of the cohomological
// argument: the projection identity (character orthogonality along the torus
// direction) and the window-descent identity (consecutive window sums agree
// up to a power of p, with the exponent measured rather than assumed).
//
// Everything here works pointwise over F_p and stays exact: sums live in
// Z[zeta_p] via CycInt, equality is canonical-form equality, and no stability
// gate is applied (the identities are arithmetic facts about the formulas, so
// they are checked even at primes the counting planner would refuse).

namespace klsv {

// A point of the pure-tensor cone over F_p: the tensor s * (w . w) given by a
// scale s and a spanning vector w in full ambient coordinates.  s = 0 encodes
// the zero tensor regardless of w.  Two encodings describe the same tensor
// exactly when they differ by (s, w) -> (s c^-2, c w) for a unit c.
struct TensorPoint {
  i64 s = 0;
  std::vector<i64> w;
};

namespace detail {

inline std::vector<i64> inverse_table(const PrimeField& f) {
  std::vector<i64> inv(static_cast<std::size_t>(f.p()), 0);
  for (i64 a = 1; a < f.p(); ++a) inv[static_cast<std::size_t>(a)] = f.inv(a);
  return inv;
}

inline SparseForm sparse_of(const QMat& A, const PrimeField& f) {
  ModMat M = reduce_mod(A, f);
  SparseForm sf;
  for (int r = 0; r < M.rows; ++r)
    for (int c = 0; c < M.cols; ++c)
      if (M.at(r, c) != 0) {
        sf.pos.push_back({r, c});
        sf.coef.push_back(M.at(r, c));
      }
  return sf;
}

// Adds blk into A at the local window offsets of pieces (pi, pj).
inline void add_local_block(const VarietySpec& vs, QMat& A, int pi, int pj,
                            const QMat& blk) {
  int oi = local_offset(vs, pi);
  int oj = local_offset(vs, pj);
  for (int r = 0; r < blk.rows(); ++r)
    for (int c = 0; c < blk.cols(); ++c)
      A.at(oi + r, oj + c) = A.at(oi + r, oj + c) + blk.at(r, c);
}

// Compiled data for the k-th symplectic window U_k: the tensor cone on pieces
// {1..k} u {m-k-1..m} (the full space once k = ell) minus the divisors
// Gamma_1..Gamma_k, carrying the first k trace terms.  On the class (t, w-hat)
// every form value is t times its value at w-hat.
struct SymWindow {
  VarietySpec vs;
  std::vector<SparseForm> gamma;  // single gamma_j, j = 1..k
  std::vector<SparseForm> numer;  // numerator of the j-th term
  SparseForm fm;                  // x-coefficient numerator (end-block form)
  bool include_fm = false;
  int dim = 0;
};

inline SymWindow sym_window(const GradedSpace& sp, const StableFunctional& fn,
                            const PrimeField& f, int k, bool include_fm) {
  SymWindow win;
  win.include_fm = include_fm;
  win.vs.space = &sp;
  win.vs.fn = &fn;
  win.vs.kind = AmbientKind::TensorCone;
  win.vs.name = "trace window " + std::to_string(k);
  int m = sp.m();
  if (k >= sp.ell()) {
    for (int i = 1; i <= m; ++i) win.vs.pieces.push_back(i);
    k = sp.ell();
  } else {
    for (int i = 1; i <= k; ++i) win.vs.pieces.push_back(i);
    for (int i = m - k - 1; i <= m; ++i) win.vs.pieces.push_back(i);
  }
  for (int j = 1; j <= k; ++j)
    win.vs.conds.push_back({FormRef::gamma(j), Rel::Ne1});
  win.dim = win.vs.ambient_dim();
  for (int j = 1; j <= k; ++j) {
    win.gamma.push_back(sparse_of(compile_form(win.vs, FormRef::gamma(j)), f));
    // j-th term numerator omega(phi_j v_j, u_{m-j}): rows piece j, columns
    // piece m-j, against the pairing of M_{j+1} with M_{m-j}.
    QMat A(win.dim, win.dim);
    add_local_block(win.vs, A, j, m - j,
                    fn.phi.at(j).transpose().mul(sp.sub_gram(j + 1, m - j)));
    win.numer.push_back(sparse_of(A, f));
  }
  if (include_fm)
    win.fm = sparse_of(compile_form(win.vs, FormRef::qa()), f);
  return win;
}

// Compiled data for the k-th orthogonal window U_k: the projective quadric
// Q(q) on pieces {0} u {ell-k+1..m-ell+k-1} minus the k excluded subquadrics,
// carrying the last k-1 trace terms (the suffix that is regular there).
struct OrthWindow {
  VarietySpec vs;
  std::vector<SparseForm> member;  // q = 0 plus the Ne0 exclusions, in order
  std::vector<SparseForm> numer;   // suffix term numerators
  std::vector<SparseForm> denom;   // matching denominators, never 0 on the locus
  SparseForm num_x, den_x;         // x-term pieces (full window only)
  bool include_fm = false;
  int dim = 0;
};

inline OrthWindow orth_window(const GradedSpace& sp, const StableFunctional& fn,
                              const PrimeField& f, int k, bool include_fm) {
  OrthWindow win;
  win.include_fm = include_fm;
  win.vs.space = &sp;
  win.vs.fn = &fn;
  win.vs.kind = AmbientKind::Projective;
  win.vs.name = "trace window " + std::to_string(k);
  int m = sp.m();
  int ell = sp.ell();
  if (k >= ell) {
    for (int i = 0; i < m; ++i) win.vs.pieces.push_back(i);
    k = ell;
  } else {
    win.vs.pieces.push_back(0);
    for (int i = ell - k + 1; i <= m - ell + k - 1; ++i)
      win.vs.pieces.push_back(i);
  }
  if (include_fm && k < ell)
    throw ShapeMismatch("the x-term of the trace function needs the full window");
  win.vs.conds.push_back({FormRef::q_total(), Rel::Eq0});
  for (int j = 1; j <= k; ++j)
    win.vs.conds.push_back(
        {FormRef::q_range(ell - j + 1, m - ell + j - 1), Rel::Ne0});
  win.member = compile_mod(win.vs, f);
  win.dim = win.vs.ambient_dim();
  for (int j = ell - k + 1; j <= ell - 1; ++j) {
    // j-th term: (phi_j v_j, v_{m-j-1}) over q restricted to pieces
    // j+1..m-j-1, with the pairing (x, y) = 2 x^T S y.
    QMat A(win.dim, win.dim);
    add_local_block(
        win.vs, A, j, m - j - 1,
        fn.phi.at(j).transpose().mul(sp.sub_gram(j + 1, m - j - 1).scaled(2)));
    win.numer.push_back(sparse_of(A, f));
    win.denom.push_back(
        sparse_of(compile_form(win.vs, FormRef::q_range(j + 1, m - j - 1)), f));
  }
  if (include_fm) {
    QMat A(win.dim, win.dim);
    add_local_block(
        win.vs, A, 0, m - 1,
        fn.phi.at(0).transpose().mul(sp.sub_gram(1, m - 1).scaled(2)));
    win.num_x = sparse_of(A, f);
    win.den_x = sparse_of(compile_form(win.vs, FormRef::q_range(1, m - 1)), f);
  }
  return win;
}

// Per-point callback: receives the worker's accumulators, the x-coefficient a
// and the x-free part b of the trace value at the point (f = a*x + b).
using TraceSink = std::function<void(std::vector<CycInt>&, i64, i64)>;

inline std::vector<CycInt> make_slots(i64 p, int slots) {
  std::vector<CycInt> acc;
  acc.reserve(static_cast<std::size_t>(slots));
  for (int i = 0; i < slots; ++i) acc.emplace_back(p);
  return acc;
}

inline std::vector<CycInt> walk_sym(const SymWindow& win, const PrimeField& f,
                                    int slots, int threads,
                                    const TraceSink& sink) {
  i64 p = f.p();
  std::vector<i64> inv = inverse_table(f);
  int k = static_cast<int>(win.gamma.size());
  auto visit = [&](const std::vector<i64>& w, std::vector<CycInt>& acc) {
    std::vector<i64> gp(static_cast<std::size_t>(k), 0);
    std::vector<i64> nb(static_cast<std::size_t>(k), 0);
    i64 run = 0;
    for (int j = 0; j < k; ++j) {
      run = f.add(run, win.gamma[static_cast<std::size_t>(j)].quad(f, w));
      gp[static_cast<std::size_t>(j)] = run;
      nb[static_cast<std::size_t>(j)] =
          win.numer[static_cast<std::size_t>(j)].quad(f, w);
    }
    i64 fmb = win.include_fm ? win.fm.quad(f, w) : 0;
    for (i64 t = 1; t < p; ++t) {
      i64 b = 0;
      bool excluded = false;
      for (int j = 0; j < k; ++j) {
        i64 den = f.sub(1, f.mul(t, gp[static_cast<std::size_t>(j)]));
        if (den == 0) {
          excluded = true;
          break;
        }
        b = f.add(b, f.mul(f.mul(t, nb[static_cast<std::size_t>(j)]),
                           inv[static_cast<std::size_t>(den)]));
      }
      if (excluded) continue;
      sink(acc, win.include_fm ? f.mul(t, fmb) : 0, b);
    }
  };
  std::vector<CycInt> total = for_each_projective_rep<std::vector<CycInt>>(
      p, win.dim, threads, visit, [&] { return make_slots(p, slots); },
      [](std::vector<CycInt>& a, const std::vector<CycInt>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i].add(b[i]);
      });
  // The zero tensor lies in every window and off every divisor; the trace
  // function vanishes there.
  sink(total, 0, 0);
  return total;
}

inline std::vector<CycInt> walk_orth(const OrthWindow& win, const PrimeField& f,
                                     int slots, int threads,
                                     const TraceSink& sink) {
  i64 p = f.p();
  std::vector<i64> inv = inverse_table(f);
  auto visit = [&](const std::vector<i64>& v, std::vector<CycInt>& acc) {
    for (const auto& sf : win.member) {
      i64 val = sf.quad(f, v);
      if (sf.rel == Rel::Eq0 && val != 0) return;
      if (sf.rel == Rel::Ne0 && val == 0) return;
    }
    i64 b = 0;
    for (std::size_t j = 0; j < win.numer.size(); ++j) {
      i64 den = win.denom[j].quad(f, v);  // nonzero: its quadric is excluded
      b = f.sub(b, f.mul(win.numer[j].quad(f, v),
                         inv[static_cast<std::size_t>(den)]));
    }
    i64 a = 0;
    if (win.include_fm) {
      i64 den = win.den_x.quad(f, v);
      a = f.neg(f.mul(win.num_x.quad(f, v), inv[static_cast<std::size_t>(den)]));
    }
    sink(acc, a, b);
  };
  return for_each_projective_rep<std::vector<CycInt>>(
      p, win.dim, threads, visit, [&] { return make_slots(p, slots); },
      [](std::vector<CycInt>& a, const std::vector<CycInt>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i].add(b[i]);
      });
}

// Walks the k-th window of either family and feeds every locus point to the
// sink.  The sum carries the window's own trace terms (the first k terms on
// the symplectic side, the regular suffix on the orthogonal side) and, when
// include_fm is set, the x-linear coefficient alongside.
inline std::vector<CycInt> walk_window(const GradedSpace& sp,
                                       const StableFunctional& fn,
                                       const PrimeField& f, int k,
                                       bool include_fm, int slots, int threads,
                                       const TraceSink& sink) {
  if (sp.symplectic())
    return walk_sym(sym_window(sp, fn, f, k, include_fm), f, slots, threads,
                    sink);
  return walk_orth(orth_window(sp, fn, f, k, include_fm), f, slots, threads,
                   sink);
}

}  // namespace detail

// Value of the symplectic trace function at x on the tensor class t, all in
// F_p.  The point must avoid every divisor Gamma_i; the zero tensor evaluates
// to 0.  No stability gate: any odd prime that keeps the maps integral works.
inline i64 f_phi_sym(const GradedSpace& sp, const StableFunctional& fn, i64 p,
                     i64 x, const TensorPoint& t) {
  if (!sp.symplectic())
    throw ShapeMismatch("the tensor-cone trace function is symplectic-only");
  PrimeField f = make_field(p);
  x = f.reduce(x);
  if (x == 0) throw OutOfDomain("the trace function needs a nonzero x");
  if (static_cast<int>(t.w.size()) != sp.total_dim())
    throw ShapeMismatch("tensor point has " + std::to_string(t.w.size()) +
                        " coordinates, ambient needs " +
                        std::to_string(sp.total_dim()));
  i64 s = f.reduce(t.s);
  if (s == 0) return 0;
  detail::SymWindow win = detail::sym_window(sp, fn, f, sp.ell(), true);
  i64 run = 0, b = 0;
  for (std::size_t j = 0; j < win.gamma.size(); ++j) {
    run = f.add(run, win.gamma[j].quad(f, t.w));
    i64 den = f.sub(1, f.mul(s, run));
    if (den == 0) throw OnExcludedDivisor(static_cast<int>(j) + 1);
    b = f.add(b, f.mul(f.mul(s, win.numer[j].quad(f, t.w)), f.inv(den)));
  }
  return f.add(f.mul(f.mul(s, win.fm.quad(f, t.w)), x), b);
}

// Value of the orthogonal trace function at x on the projective class [v].
// Degree-0 homogeneous, so the representative does not matter.  The point
// must avoid every excluded subquadric; membership in Q(q) itself is not
// required (the formula is regular on the whole complement).
inline i64 f_phi_orth(const GradedSpace& sp, const StableFunctional& fn, i64 p,
                      i64 x, const std::vector<i64>& v) {
  if (sp.symplectic())
    throw ShapeMismatch("the projective trace function is orthogonal-only");
  PrimeField f = make_field(p);
  x = f.reduce(x);
  if (x == 0) throw OutOfDomain("the trace function needs a nonzero x");
  if (static_cast<int>(v.size()) != sp.total_dim())
    throw ShapeMismatch("projective point has " + std::to_string(v.size()) +
                        " coordinates, ambient needs " +
                        std::to_string(sp.total_dim()));
  detail::OrthWindow win = detail::orth_window(sp, fn, f, sp.ell(), true);
  // member[0] is q = 0; member[j] excludes the subquadric on pieces
  // ell-j+1 .. m-ell+j-1, so depth i (pieces i..m-i) sits at index ell-i+1.
  int ell = sp.ell();
  for (int i = 1; i <= ell; ++i)
    if (win.member[static_cast<std::size_t>(ell - i + 1)].quad(f, v) == 0)
      throw OnExcludedQuadric(i);
  i64 b = 0;
  for (std::size_t j = 0; j < win.numer.size(); ++j)
    b = f.sub(b, f.mul(win.numer[j].quad(f, v),
                       f.inv(win.denom[j].quad(f, v))));
  i64 a = f.neg(f.mul(win.num_x.quad(f, v), f.inv(win.den_x.quad(f, v))));
  return f.add(f.mul(a, x), b);
}

// S(x) = sum of zeta_p^{f(x, point)} over every F_p point of the trace locus:
// tensor classes clear of all divisors on the symplectic side, projective
// quadric points clear of all subquadrics on the orthogonal side.  The
// optional character index evaluates against psi_a(t) = zeta^{a t}, which is
// the Galois conjugate sigma_a of the default sum.
inline CycInt trace_sum(const GradedSpace& sp, const StableFunctional& fn,
                        i64 x, i64 p, int threads = 1, i64 character = 1) {
  PrimeField f = make_field(p);
  x = f.reduce(x);
  if (x == 0) throw OutOfDomain("the trace sum needs a nonzero x");
  i64 a_idx = f.reduce(character);
  if (a_idx == 0) throw OutOfDomain("character index must be nonzero mod p");
  std::vector<CycInt> out = detail::walk_window(
      sp, fn, f, sp.ell(), true, 1, threads,
      [&](std::vector<CycInt>& acc, i64 a, i64 b) {
        acc[0].accumulate(f.mul(a_idx, f.add(f.mul(a, x), b)));
      });
  return out[0].normalized();
}

// One verified identity with both sides as exact cyclotomic integers.  For
// descent rows `rhs` already carries the measured power of p (lhs is compared
// against p^e * base); the exponent fields hold kNoExponent on rows where no
// exponent applies (projection rows) or none in the scan range matches, in
// which case the raw base sum is reported instead.
struct IdentityRow {
  static constexpr int kNoExponent = -99;

  std::string name;
  CycInt lhs, rhs;
  bool pass = false;
  int expected_e = kNoExponent;
  int measured_e = kNoExponent;
  std::string detail;

  IdentityRow(std::string nm, i64 p) : name(std::move(nm)), lhs(p), rhs(p) {}
};

// Checks the torus-direction orthogonality: summing the full trace sums over
// all nonzero x must equal p times the sum of zeta^{f_rest} over the locus
// where the x-coefficient vanishes, minus the same sum over the whole locus.
// Both sides are computed by independent walks.  This is an arithmetic fact
// about any coefficient split, so it holds even for a perturbed, rank
// deficient end map.
inline IdentityRow projection_identity_check(const GradedSpace& sp,
                                             const StableFunctional& fn, i64 p,
                                             int threads = 1) {
  PrimeField f = make_field(p);
  IdentityRow row("projection", p);
  for (i64 x = 1; x < p; ++x) row.lhs.add(trace_sum(sp, fn, x, p, threads));
  std::vector<CycInt> split = detail::walk_window(
      sp, fn, f, sp.ell(), true, 2, threads,
      [](std::vector<CycInt>& acc, i64 a, i64 b) {
        acc[0].accumulate(b);
        if (a == 0) acc[1].accumulate(b);
      });
  CycInt rhs = split[1];
  rhs.scale(p);
  rhs.sub(split[0]);
  row.rhs = rhs;
  row.lhs = row.lhs.normalized();
  row.rhs = row.rhs.normalized();
  row.pass = row.lhs.equals(row.rhs);
  row.detail = sp.describe() + " p=" + std::to_string(p) +
               ": sum over nonzero x against the coefficient split";
  return row;
}

// Checks the descent between consecutive windows: the sum over U_{step+1}
// with its own trace terms must agree with the sum over U_step up to a power
// of p.  The exponent is measured, not assumed: e is scanned symmetrically
// over |e| <= 2d+4, where positive e means lhs = p^e * base and negative e
// means the power sits on the other side (p^|e| * lhs = base).  The expected
// value d is the dimension of the block the deeper window forgets; when the
// base sum vanishes the row passes exactly when the deeper sum vanishes too.
inline IdentityRow descent_identity_check(const GradedSpace& sp,
                                          const StableFunctional& fn, int step,
                                          i64 p, int threads = 1) {
  PrimeField f = make_field(p);
  int ell = sp.ell();
  if (step < 1 || step > ell - 1)
    throw NoSuchStep("descent step " + std::to_string(step) + " outside 1.." +
                     std::to_string(ell - 1) + " for " + sp.describe());
  IdentityRow row("descent i=" + std::to_string(step), p);
  const int d = sp.middle_dim();
  row.expected_e = d;
  auto window_sum = [&](int k) {
    std::vector<CycInt> out = detail::walk_window(
        sp, fn, f, k, false, 1, threads,
        [](std::vector<CycInt>& acc, i64 /*a*/, i64 b) {
          acc[0].accumulate(b);
        });
    return out[0].normalized();
  };
  row.lhs = window_sum(step + 1);
  CycInt base = window_sum(step);
  if (base.is_zero()) {
    row.rhs = base;
    row.pass = row.lhs.is_zero();
    // 0 = p^0 * 0 is a valid measurement; a nonzero deeper sum over a zero
    // base admits no exponent at all.
    if (row.pass) row.measured_e = 0;
    row.detail = "base window sum vanishes; pass means the deeper sum does too";
    return row;
  }
  row.rhs = base;
  const int bound = 2 * d + 4;
  for (int e = 0; !row.pass && e <= bound; ++e) {
    i64 pe = 1;
    for (int j = 0; j < e; ++j) pe *= p;
    CycInt up = base;
    up.scale(pe);
    if (up.equals(row.lhs)) {
      row.measured_e = e;
      row.rhs = up.normalized();
      row.pass = true;
      break;
    }
    if (e == 0) continue;
    CycInt down = row.lhs;
    down.scale(pe);
    if (down.equals(base)) {
      row.measured_e = -e;
      row.pass = true;
      break;
    }
  }
  row.detail = "window " + std::to_string(step + 1) + " against window " +
               std::to_string(step) + "; expected e=" +
               std::to_string(row.expected_e) + ", measured e=" +
               std::to_string(row.measured_e);
  return row;
}

// Informational magnitude note for one sum: |S(x)| against p^{dim/2}.  Never
// a pass/fail signal, only a size reference for the reader.
struct WeilNote {
  i64 x = 0;
  double magnitude = 0.0;
  double reference = 0.0;
};

struct TraceSumReport {
  Family family = Family::C;
  i64 n = 0, d = 0;
  int m = 0;
  i64 p = 0;
  std::vector<i64> xs;
  std::map<i64, CycInt> sums;
  std::vector<IdentityRow> checks;
  std::vector<WeilNote> weil;
};

// Full report for one space at one prime: every sum S(x), the projection
// identity, and every admissible descent row.
inline TraceSumReport make_trace_report(const GradedSpace& sp,
                                        const StableFunctional& fn, i64 p,
                                        int threads = 1) {
  make_field(p);
  TraceSumReport rep;
  rep.family = sp.family();
  rep.n = sp.n();
  rep.d = sp.d();
  rep.m = sp.m();
  rep.p = p;
  int locus_dim = sp.symplectic() ? sp.total_dim() : sp.total_dim() - 2;
  for (i64 x = 1; x < p; ++x) {
    rep.xs.push_back(x);
    CycInt s = trace_sum(sp, fn, x, p, threads);
    WeilNote note;
    note.x = x;
    note.magnitude = std::abs(s.to_complex());
    note.reference = std::pow(static_cast<double>(p), locus_dim / 2.0);
    rep.weil.push_back(note);
    rep.sums.emplace(x, std::move(s));
  }
  rep.checks.push_back(projection_identity_check(sp, fn, p, threads));
  for (int i = 1; i <= sp.ell() - 1; ++i)
    rep.checks.push_back(descent_identity_check(sp, fn, i, p, threads));
  return rep;
}

// Canonical sparse rendering of a cyclotomic integer: the nonzero [exponent,
// coefficient] pairs of the normalized form, e.g. "[[1,-3],[2,5]]".
inline std::string sparse_list(const CycInt& c) {
  CycInt n = c.normalized();
  std::string out = "[";
  bool first = true;
  for (std::size_t e = 0; e < n.coeffs().size(); ++e) {
    if (n.coeffs()[e] == 0) continue;
    if (!first) out += ",";
    first = false;
    out += "[" + std::to_string(e) + "," + std::to_string(n.coeffs()[e]) + "]";
  }
  return out + "]";
}

namespace detail {

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string to_json(const IdentityRow& row) {
  std::ostringstream out;
  out << "{\"name\":" << detail::quoted(row.name)
      << ",\"pass\":" << (row.pass ? "true" : "false")
      << ",\"lhs\":" << sparse_list(row.lhs)
      << ",\"rhs\":" << sparse_list(row.rhs)
      << ",\"expected_e\":" << row.expected_e
      << ",\"measured_e\":" << row.measured_e
      << ",\"detail\":" << detail::quoted(row.detail) << "}";
  return out.str();
}

inline std::string to_json(const TraceSumReport& rep) {
  std::ostringstream out;
  out << "{\"version\":1,\"family\":" << detail::quoted(to_string(rep.family))
      << ",\"n\":" << rep.n << ",\"d\":" << rep.d << ",\"m\":" << rep.m
      << ",\"p\":" << rep.p << ",\"sums\":[";
  bool first = true;
  for (const auto& [x, s] : rep.sums) {
    if (!first) out << ",";
    first = false;
    out << "{\"x\":" << x << ",\"coeffs\":" << sparse_list(s) << "}";
  }
  out << "],\"weil\":[";
  first = true;
  for (const auto& note : rep.weil) {
    if (!first) out << ",";
    first = false;
    out << "{\"x\":" << note.x << ",\"magnitude\":"
        << detail::fixed6(note.magnitude)
        << ",\"reference\":" << detail::fixed6(note.reference) << "}";
  }
  out << "],\"checks\":[";
  first = true;
  for (const auto& row : rep.checks) {
    if (!first) out << ",";
    first = false;
    out << to_json(row);
  }
  out << "]}";
  return out.str();
}

}  // namespace klsv
