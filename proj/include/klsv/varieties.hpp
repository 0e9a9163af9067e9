#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "klsv/ffield.hpp"
#include "klsv/rat.hpp"
#include "klsv/spaces.hpp"

namespace klsv {

// Ambients: either the cone of rank-one symmetric tensors over the chosen
// pieces (symplectic side), or projective space over them (orthogonal side
// and the block-count-two symplectic varieties).
enum class AmbientKind { TensorCone, Projective };

// How a rank-one symmetric tensor is presented.  Parallel uses a scalar
// multiple of w (X) w with the class relation (s, w) ~ (s c^-2, c w); the
// decomposable model uses u (X) v classes modulo (c u, c^-1 v) and the swap
// (v, u).  The two models agree on parallel tensors but the decomposable one
// has genuinely more classes.
enum class TensorModel { Parallel, Decomposable };

// On decomposable classes a gamma-style pairing takes different values on
// (u, v) and (v, u).  Raw keeps both one-sided values and calls a class a
// member only when every representative satisfies the condition; Symmetrized
// replaces the pairing by its symmetrization, which is class-intrinsic.
enum class GammaModel { Raw, Symmetrized };

struct Interpretation {
  TensorModel tensor = TensorModel::Parallel;
  GammaModel gamma = GammaModel::Raw;
};

inline std::string to_string(const Interpretation& it) {
  std::string a = it.tensor == TensorModel::Parallel ? "parallel" : "decomposable";
  std::string b = it.gamma == GammaModel::Raw ? "raw" : "symmetrized";
  return a + "+" + b;
}

// References to the bilinear/quadratic forms cutting out the varieties.  All
// of them compile to an ambient matrix A with value(w) = w^T A w on the
// parallel/projective side and value(u, v) = u^T A v on decomposable pairs.
struct FormRef {
  enum class Kind {
    Gamma,          // gamma_j(u, v) = omega(u_{m+1-j}, v_j)           [C]
    GammaPrimeSum,  // gamma'_i = sum of gamma_j, j <= i               [C]
    QA,             // omega(phi_m u_m, v_m): native end-block form    [C]
    QB,             // transported form omega(phi_ell T u, T v) on M_m [C]
    GammaTilde,     // omega(u_2, v_1), block count 2 only             [C]
    QATilde,        // omega(phi_2 u_2, v_2), block count 2 only       [C]
    QBTilde,        // omega(phi_1 u_1, v_1), block count 2 only       [C]
    QTotal,         // q restricted to the whole ambient window        [B/D/2D]
    QRange,         // q restricted to pieces a..b                     [B/D/2D]
    OmegaChain,     // (Phi_k u_0, v_{m-k}) with Phi_k = phi_{k-1}..phi_0
  };
  Kind kind;
  int a = 0, b = 0;

  static FormRef gamma(int j) { return {Kind::Gamma, j, 0}; }
  static FormRef gamma_prime(int i) { return {Kind::GammaPrimeSum, i, 0}; }
  static FormRef qa() { return {Kind::QA, 0, 0}; }
  static FormRef qb() { return {Kind::QB, 0, 0}; }
  static FormRef gamma_tilde() { return {Kind::GammaTilde, 0, 0}; }
  static FormRef qa_tilde() { return {Kind::QATilde, 0, 0}; }
  static FormRef qb_tilde() { return {Kind::QBTilde, 0, 0}; }
  static FormRef q_total() { return {Kind::QTotal, 0, 0}; }
  static FormRef q_range(int a, int b) { return {Kind::QRange, a, b}; }
  static FormRef omega_chain(int k) { return {Kind::OmegaChain, k, 0}; }

  std::string str() const {
    switch (kind) {
      case Kind::Gamma: return "gamma(" + std::to_string(a) + ")";
      case Kind::GammaPrimeSum: return "gamma_prime(" + std::to_string(a) + ")";
      case Kind::QA: return "q_A";
      case Kind::QB: return "q_B";
      case Kind::GammaTilde: return "gamma~";
      case Kind::QATilde: return "q_A~";
      case Kind::QBTilde: return "q_B~";
      case Kind::QTotal: return "q";
      case Kind::QRange:
        return "q[" + std::to_string(a) + ".." + std::to_string(b) + "]";
      case Kind::OmegaChain: return "chain(" + std::to_string(a) + ")";
    }
    return "?";
  }
};

enum class Rel { Eq0, Ne0, Eq1, Ne1 };

inline std::string to_string(Rel r) {
  switch (r) {
    case Rel::Eq0: return "=0";
    case Rel::Ne0: return "!=0";
    case Rel::Eq1: return "=1";
    case Rel::Ne1: return "!=1";
  }
  return "?";
}

struct Condition {
  FormRef form;
  Rel rel;
};

struct VarietySpec {
  const GradedSpace* space = nullptr;
  const StableFunctional* fn = nullptr;
  AmbientKind kind = AmbientKind::TensorCone;
  std::vector<int> pieces;  // ascending piece ids forming the ambient window
  std::vector<Condition> conds;
  Interpretation interp;
  std::string name;

  int ambient_dim() const {
    int d = 0;
    for (int pc : pieces) d += space->piece_dim(pc);
    return d;
  }
};

// Result of a point count.  For cone ambients `count` is the number of tensor
// classes including the zero class when it satisfies the conditions; for
// projective ambients it is the plain number of rational points.
struct PointCount {
  i64 count = 0;
  bool zero_included = false;
  // Decomposable bookkeeping: classes whose two one-sided evaluations
  // disagree (excluded under Raw membership, reported because they measure
  // how far the raw conditions are from being well defined), and the number
  // of (u, v) pairs behind the class count.
  i64 ambiguous_classes = 0;
  i64 pair_total = 0;
};

namespace detail {

inline int local_offset(const VarietySpec& vs, int piece) {
  int off = 0;
  for (int pc : vs.pieces) {
    if (pc == piece) return off;
    off += vs.space->piece_dim(pc);
  }
  throw MissingPiece("form needs piece " + std::to_string(piece) +
                     " which is outside the ambient window of " + vs.name);
}

inline bool has_piece(const VarietySpec& vs, int piece) {
  return std::find(vs.pieces.begin(), vs.pieces.end(), piece) != vs.pieces.end();
}

}  // namespace detail

// Compiles a form to its ambient matrix over Q.
inline QMat compile_form(const VarietySpec& vs, const FormRef& fr) {
  const GradedSpace& sp = *vs.space;
  const StableFunctional& fn = *vs.fn;
  int D = vs.ambient_dim();
  QMat A(D, D);
  auto add_block = [&](int pi, int pj, const QMat& blk) {
    int oi = detail::local_offset(vs, pi);
    int oj = detail::local_offset(vs, pj);
    for (int r = 0; r < blk.rows(); ++r)
      for (int c = 0; c < blk.cols(); ++c)
        A.at(oi + r, oj + c) = A.at(oi + r, oj + c) + blk.at(r, c);
  };
  auto need_symplectic = [&] {
    if (!sp.symplectic())
      throw ShapeMismatch(fr.str() + " lives on the symplectic side");
  };
  auto need_orthogonal = [&] {
    if (sp.symplectic())
      throw ShapeMismatch(fr.str() + " lives on the orthogonal side");
  };
  switch (fr.kind) {
    case FormRef::Kind::Gamma: {
      need_symplectic();
      int j = fr.a;
      if (j < 1 || j > sp.ell())
        throw MissingPiece("gamma index " + std::to_string(j) + " outside 1.." +
                           std::to_string(sp.ell()));
      add_block(sp.m() + 1 - j, j, sp.sub_gram(sp.m() + 1 - j, j));
      break;
    }
    case FormRef::Kind::GammaPrimeSum: {
      need_symplectic();
      for (int j = 1; j <= fr.a; ++j) {
        QMat g = compile_form(vs, FormRef::gamma(j));
        A = A.add(g);
      }
      break;
    }
    case FormRef::Kind::QA: {
      need_symplectic();
      // omega(phi_m u_m, v_m) = (phi_m u)^T Omega_{1,m} v.
      add_block(sp.m(), sp.m(),
                fn.phi.at(sp.m()).transpose().mul(sp.sub_gram(1, sp.m())));
      break;
    }
    case FormRef::Kind::QB: {
      need_symplectic();
      // omega(phi_ell T u, T v) with T : M_m -> M_ell.
      QMat inner = fn.phi.at(sp.ell()).transpose().mul(
          sp.sub_gram(sp.ell() + 1, sp.ell()));
      add_block(sp.m(), sp.m(),
                fn.chain.transpose().mul(inner).mul(fn.chain));
      break;
    }
    case FormRef::Kind::GammaTilde: {
      need_symplectic();
      if (sp.m() != 2) throw ShapeMismatch("gamma~ needs block count 2");
      add_block(2, 1, sp.sub_gram(2, 1));
      break;
    }
    case FormRef::Kind::QATilde: {
      need_symplectic();
      if (sp.m() != 2) throw ShapeMismatch("q_A~ needs block count 2");
      add_block(2, 2, fn.phi.at(2).transpose().mul(sp.sub_gram(1, 2)));
      break;
    }
    case FormRef::Kind::QBTilde: {
      need_symplectic();
      if (sp.m() != 2) throw ShapeMismatch("q_B~ needs block count 2");
      add_block(1, 1, fn.phi.at(1).transpose().mul(sp.sub_gram(2, 1)));
      break;
    }
    case FormRef::Kind::QTotal: {
      need_orthogonal();
      for (int pi : vs.pieces)
        for (int pj : vs.pieces) add_block(pi, pj, sp.sub_gram(pi, pj));
      break;
    }
    case FormRef::Kind::QRange: {
      need_orthogonal();
      for (int pi : vs.pieces) {
        if (pi < fr.a || pi > fr.b) continue;
        for (int pj : vs.pieces) {
          if (pj < fr.a || pj > fr.b) continue;
          add_block(pi, pj, sp.sub_gram(pi, pj));
        }
      }
      break;
    }
    case FormRef::Kind::OmegaChain: {
      need_orthogonal();
      int k = fr.a;
      if (k < 1 || k > sp.ell())
        throw MissingPiece("chain depth " + std::to_string(k) + " outside 1.." +
                           std::to_string(sp.ell()));
      // Phi_k = phi_{k-1} ... phi_0 : M_0 -> M_k, paired with v_{m-k} by the
      // ambient bilinear form (x, y) = 2 x^T S y.
      QMat Phi = fn.phi.at(0);
      for (int i = 1; i < k; ++i) Phi = fn.phi.at(i).mul(Phi);
      int target = (sp.m() - k) % sp.m();
      add_block(0, target,
                Phi.transpose().mul(sp.sub_gram(k, target).scaled(2)));
      break;
    }
  }
  return A;
}

inline void validate_spec(const VarietySpec& vs) {
  if (vs.pieces.empty()) throw MissingPiece("ambient window of " + vs.name + " is empty");
  std::vector<int> sorted = vs.pieces;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw MissingPiece("ambient window of " + vs.name + " repeats a piece");
  for (int pc : vs.pieces) vs.space->piece_dim(pc);  // throws on bad ids
  if (vs.kind == AmbientKind::TensorCone && !vs.space->symplectic())
    throw ShapeMismatch("tensor-cone ambients are symplectic-only");
  if (vs.interp.tensor == TensorModel::Decomposable &&
      vs.kind != AmbientKind::TensorCone)
    throw ShapeMismatch("the decomposable model needs a tensor-cone ambient");
  for (const auto& c : vs.conds) {
    compile_form(vs, c.form);  // throws MissingPiece / ShapeMismatch
    if (vs.kind == AmbientKind::Projective &&
        (c.rel == Rel::Eq1 || c.rel == Rel::Ne1))
      throw InhomogeneousOnProjective(c.form.str());
  }
}

namespace detail {

// Sparse mod-p form: list of (row, col, coeff) triples.
struct SparseForm {
  std::vector<std::array<int, 2>> pos;
  std::vector<i64> coef;
  Rel rel = Rel::Eq0;

  i64 quad(const PrimeField& f, const std::vector<i64>& w) const {
    i64 s = 0;
    for (std::size_t k = 0; k < coef.size(); ++k)
      s += f.mul(coef[k], f.mul(w[static_cast<std::size_t>(pos[k][0])],
                                w[static_cast<std::size_t>(pos[k][1])]));
    return f.reduce(s);
  }
};

inline std::vector<SparseForm> compile_mod(const VarietySpec& vs,
                                           const PrimeField& f) {
  std::vector<SparseForm> out;
  for (const auto& c : vs.conds) {
    QMat A = compile_form(vs, c.form);
    ModMat M = reduce_mod(A, f);
    SparseForm sf;
    sf.rel = c.rel;
    for (int r = 0; r < M.rows; ++r)
      for (int cc = 0; cc < M.cols; ++cc)
        if (M.at(r, cc) != 0) {
          sf.pos.push_back({r, cc});
          sf.coef.push_back(M.at(r, cc));
        }
    out.push_back(std::move(sf));
  }
  return out;
}

// Does the zero point satisfy the conditions?  All form values vanish there.
inline bool zero_satisfies(const VarietySpec& vs) {
  for (const auto& c : vs.conds)
    if (c.rel == Rel::Ne0 || c.rel == Rel::Eq1) return false;
  return true;
}

// Iterates over representatives of P(F_p^D): leading coordinate 1, earlier
// coordinates 0.  Calls visit(w) for each; splits work over threads by
// chunking on the first free coordinate.  visit must be thread-safe in the
// sense that each thread gets its own accumulator (managed by the caller via
// make_acc / merge).
template <typename Acc>
Acc for_each_projective_rep(i64 p, int D, int threads,
                            const std::function<void(const std::vector<i64>&, Acc&)>& visit,
                            const std::function<Acc()>& make_acc,
                            const std::function<void(Acc&, const Acc&)>& merge) {
  struct Chunk {
    int lead;
    i64 first_free;  // -1 when the rep has no free coordinates
  };
  std::vector<Chunk> chunks;
  for (int lead = 0; lead < D; ++lead) {
    if (lead == D - 1) {
      chunks.push_back({lead, -1});
    } else {
      for (i64 v = 0; v < p; ++v) chunks.push_back({lead, v});
    }
  }
  int nthreads = std::max(1, threads);
  nthreads = std::min<int>(nthreads, static_cast<int>(chunks.size()));

  auto run_chunk = [&](const Chunk& ch, Acc& acc) {
    std::vector<i64> w(static_cast<std::size_t>(D), 0);
    w[static_cast<std::size_t>(ch.lead)] = 1;
    if (ch.first_free < 0) {
      visit(w, acc);
      return;
    }
    w[static_cast<std::size_t>(ch.lead) + 1] = ch.first_free;
    int free_lo = ch.lead + 2;  // odometer over coordinates free_lo..D-1
    while (true) {
      visit(w, acc);
      int i = D - 1;
      for (; i >= free_lo; --i) {
        if (++w[static_cast<std::size_t>(i)] < p) break;
        w[static_cast<std::size_t>(i)] = 0;
      }
      if (i < free_lo) break;
    }
  };

  std::vector<Acc> accs;
  accs.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) accs.push_back(make_acc());
  if (nthreads == 1) {
    for (const auto& ch : chunks) run_chunk(ch, accs[0]);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < chunks.size();
             i += static_cast<std::size_t>(nthreads))
          run_chunk(chunks[i], accs[static_cast<std::size_t>(t)]);
      });
    for (auto& th : pool) th.join();
  }
  Acc total = make_acc();
  for (const auto& a : accs) merge(total, a);
  return total;
}

inline u64 projective_size(i64 p, int D) {
  u64 s = 0, cur = 1;
  for (int k = 0; k < D; ++k) {
    s += cur;
    cur *= static_cast<u64>(p);
  }
  return s;  // 1 + p + ... + p^{D-1}
}

inline void check_budget(u64 need, u64 budget) {
  if (budget && need > budget) throw BudgetExceeded(budget);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Counting.

namespace detail {

// Parallel tensor-cone count: classes (s, w), s in F_p^*, w != 0 modulo
// (s, w) ~ (s c^-2, c w), plus the zero class.  Every condition value scales
// as t * F(w-hat) with t = s c^2 running over F_p^* with uniform multiplicity,
// so per projective representative the number of admissible t is computed
// exactly from the form values.
inline PointCount count_parallel(const VarietySpec& vs, const PrimeField& f,
                                 u64 budget, int threads) {
  int D = vs.ambient_dim();
  check_budget(projective_size(f.p(), D), budget);
  std::vector<SparseForm> forms = compile_mod(vs, f);
  i64 p = f.p();

  auto visit = [&](const std::vector<i64>& w, i64& acc) {
    bool impossible = false;
    i64 pinned = -1;             // required t, or -1
    std::vector<i64> avoid;      // forbidden t values
    for (const auto& sf : forms) {
      i64 v = sf.quad(f, w);
      switch (sf.rel) {
        case Rel::Eq0:
          impossible = impossible || v != 0;
          break;
        case Rel::Ne0:
          impossible = impossible || v == 0;
          break;
        case Rel::Eq1: {
          if (v == 0) {
            impossible = true;
          } else {
            i64 t = f.inv(v);
            if (pinned >= 0 && pinned != t) impossible = true;
            pinned = t;
          }
          break;
        }
        case Rel::Ne1:
          if (v != 0) avoid.push_back(f.inv(v));
          break;
      }
      if (impossible) return;
    }
    if (pinned >= 0) {
      for (i64 t : avoid)
        if (t == pinned) return;
      acc += 1;
    } else {
      std::sort(avoid.begin(), avoid.end());
      avoid.erase(std::unique(avoid.begin(), avoid.end()), avoid.end());
      acc += (p - 1) - static_cast<i64>(avoid.size());
    }
  };

  i64 nonzero = for_each_projective_rep<i64>(
      p, D, threads, visit, [] { return i64{0}; },
      [](i64& a, const i64& b) { a += b; });

  PointCount pc;
  pc.zero_included = zero_satisfies(vs);
  pc.count = nonzero + (pc.zero_included ? 1 : 0);
  return pc;
}

// Projective count: plain rational points of the locus cut by Eq0/Ne0
// conditions.
inline PointCount count_projective(const VarietySpec& vs, const PrimeField& f,
                                   u64 budget, int threads) {
  int D = vs.ambient_dim();
  check_budget(projective_size(f.p(), D), budget);
  std::vector<SparseForm> forms = compile_mod(vs, f);

  auto visit = [&](const std::vector<i64>& w, i64& acc) {
    for (const auto& sf : forms) {
      i64 v = sf.quad(f, w);
      if (sf.rel == Rel::Eq0 && v != 0) return;
      if (sf.rel == Rel::Ne0 && v == 0) return;
    }
    acc += 1;
  };

  i64 n = for_each_projective_rep<i64>(
      f.p(), D, threads, visit, [] { return i64{0}; },
      [](i64& a, const i64& b) { a += b; });
  PointCount pc;
  pc.count = n;
  pc.zero_included = false;
  return pc;
}

// Linear-system counter over F_p: number of solutions v of eq-rows, with
// ne-rows excluded by inclusion-exclusion.  Rows are (coeffs, rhs).
struct LinearSystem {
  std::vector<std::vector<i64>> eq;
  std::vector<i64> eq_rhs;
  std::vector<std::vector<i64>> ne;
  std::vector<i64> ne_rhs;
};

inline i64 solutions_of(const PrimeField& f, int D,
                        std::vector<std::vector<i64>> rows,
                        std::vector<i64> rhs) {
  int nrows = static_cast<int>(rows.size());
  int rank = 0;
  for (int c = 0; c < D && rank < nrows; ++c) {
    int piv = -1;
    for (int r = rank; r < nrows; ++r)
      if (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(rows[static_cast<std::size_t>(piv)], rows[static_cast<std::size_t>(rank)]);
    std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(rank)]);
    i64 inv = f.inv(rows[static_cast<std::size_t>(rank)][static_cast<std::size_t>(c)]);
    for (int r = rank + 1; r < nrows; ++r) {
      i64 v = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (v == 0) continue;
      i64 fac = f.mul(v, inv);
      for (int cc = c; cc < D; ++cc)
        rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)] =
            f.sub(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)],
                  f.mul(fac, rows[static_cast<std::size_t>(rank)][static_cast<std::size_t>(cc)]));
      rhs[static_cast<std::size_t>(r)] =
          f.sub(rhs[static_cast<std::size_t>(r)], f.mul(fac, rhs[static_cast<std::size_t>(rank)]));
    }
    ++rank;
  }
  // Inconsistent when a zero row has nonzero rhs.
  for (int r = rank; r < nrows; ++r) {
    bool zero = true;
    for (int c = 0; c < D; ++c)
      zero = zero && rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == 0;
    if (zero && rhs[static_cast<std::size_t>(r)] != 0) return 0;
    if (!zero)
      throw ShapeMismatch("forward elimination left a nonzero trailing row");
  }
  i64 cnt = 1;
  for (int k = 0; k < D - rank; ++k) cnt *= f.p();
  return cnt;
}

inline i64 count_linear(const PrimeField& f, int D, const LinearSystem& ls) {
  std::size_t nne = ls.ne.size();
  if (nne > 20) throw BudgetExceeded(1u << 20);
  i64 total = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << nne); ++mask) {
    auto rows = ls.eq;
    auto rhs = ls.eq_rhs;
    int bits = 0;
    for (std::size_t k = 0; k < nne; ++k)
      if (mask & (std::size_t{1} << k)) {
        rows.push_back(ls.ne[k]);
        rhs.push_back(ls.ne_rhs[k]);
        ++bits;
      }
    i64 n = solutions_of(f, D, std::move(rows), std::move(rhs));
    total += (bits % 2 == 0 ? n : -n);
  }
  return total;
}

inline bool zero_vector_satisfies(const PrimeField&, const LinearSystem& ls) {
  for (i64 r : ls.eq_rhs)
    if (r != 0) return false;
  for (i64 r : ls.ne_rhs)
    if (r == 0) return false;
  return true;
}

// Decomposable tensor-cone count.  Classes {u (X) v} with u, v != 0 modulo
// (c u, c^-1 v) and the swap, plus the zero class.  Parallel classes are
// counted by the parallel enumerator; non-parallel pairs are counted per
// projective representative u-hat, where every condition is linear in v.
inline PointCount count_decomposable(const VarietySpec& vs, const PrimeField& f,
                                     u64 budget, int threads) {
  int D = vs.ambient_dim();
  i64 p = f.p();
  check_budget(projective_size(p, D), budget);

  // Parallel sector, reusing the closed-fiber enumerator.
  VarietySpec par = vs;
  par.interp.tensor = TensorModel::Parallel;
  PointCount par_pc = count_parallel(par, f, budget, threads);
  i64 n_par_nz = par_pc.count - (par_pc.zero_included ? 1 : 0);

  // Dense mod-p matrices for the one-sided values.
  std::vector<ModMat> mats;
  std::vector<Rel> rels;
  for (const auto& c : vs.conds) {
    mats.push_back(reduce_mod(compile_form(vs, c.form), f));
    rels.push_back(c.rel);
  }
  bool raw = vs.interp.gamma == GammaModel::Raw;
  i64 inv2 = f.inv(2);

  struct Acc {
    i64 member = 0;    // pairs (u-hat, v), v != 0, class-member
    i64 disagree = 0;  // pairs whose two sides disagree (raw only)
  };

  auto visit = [&](const std::vector<i64>& u, Acc& acc) {
    // Build per-side linear rows: side1 row = u^T A (value on (u, v)),
    // side2 row = A u (value on (v, u)).
    LinearSystem both, s1, s2;
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const ModMat& A = mats[k];
      std::vector<i64> r1(static_cast<std::size_t>(D), 0);
      std::vector<i64> r2(static_cast<std::size_t>(D), 0);
      for (int i = 0; i < D; ++i) {
        i64 a1 = 0, a2 = 0;
        for (int j = 0; j < D; ++j) {
          a1 += f.mul(u[static_cast<std::size_t>(j)], A.at(j, i));
          a2 += f.mul(A.at(i, j), u[static_cast<std::size_t>(j)]);
        }
        r1[static_cast<std::size_t>(i)] = f.reduce(a1);
        r2[static_cast<std::size_t>(i)] = f.reduce(a2);
      }
      auto push = [&](LinearSystem& ls, std::vector<i64> row, Rel rel) {
        switch (rel) {
          case Rel::Eq0: ls.eq.push_back(std::move(row)); ls.eq_rhs.push_back(0); break;
          case Rel::Eq1: ls.eq.push_back(std::move(row)); ls.eq_rhs.push_back(1); break;
          case Rel::Ne0: ls.ne.push_back(std::move(row)); ls.ne_rhs.push_back(0); break;
          case Rel::Ne1: ls.ne.push_back(std::move(row)); ls.ne_rhs.push_back(1); break;
        }
      };
      if (raw) {
        push(both, r1, rels[k]);
        push(both, r2, rels[k]);
        push(s1, r1, rels[k]);
        push(s2, std::move(r2), rels[k]);
      } else {
        std::vector<i64> avg(static_cast<std::size_t>(D));
        for (int i = 0; i < D; ++i)
          avg[static_cast<std::size_t>(i)] =
              f.mul(f.add(r1[static_cast<std::size_t>(i)], r2[static_cast<std::size_t>(i)]), inv2);
        push(both, std::move(avg), rels[k]);
      }
    }
    i64 m = count_linear(f, D, both);
    if (zero_vector_satisfies(f, both)) m -= 1;
    acc.member += m;
    if (raw) {
      i64 m1 = count_linear(f, D, s1);
      if (zero_vector_satisfies(f, s1)) m1 -= 1;
      i64 m2 = count_linear(f, D, s2);
      if (zero_vector_satisfies(f, s2)) m2 -= 1;
      acc.disagree += m1 + m2 - 2 * m;
    }
  };

  Acc tot = for_each_projective_rep<Acc>(
      p, D, threads, visit, [] { return Acc{}; },
      [](Acc& a, const Acc& b) {
        a.member += b.member;
        a.disagree += b.disagree;
      });

  // tot.member counts (u-hat, v) pairs; scaling by (p-1) gives all (u, v)
  // member pairs.  Parallel orbits have size p-1, non-parallel ones 2(p-1).
  i64 nonpar_pairs_over = tot.member - n_par_nz;  // = (T_total - T_par)/(p-1)
  if (nonpar_pairs_over % 2 != 0)
    throw ShapeMismatch("non-parallel member pairs failed to pair up under swap");
  if (tot.disagree % 2 != 0)
    throw ShapeMismatch("one-sided disagreements failed to pair up under swap");

  PointCount pc;
  pc.zero_included = zero_satisfies(vs);
  pc.count = n_par_nz + nonpar_pairs_over / 2 + (pc.zero_included ? 1 : 0);
  pc.ambiguous_classes = tot.disagree / 2;
  pc.pair_total = (n_par_nz + nonpar_pairs_over) * (p - 1);
  return pc;
}

}  // namespace detail

inline PointCount count_points(const VarietySpec& vs, i64 p, u64 budget = 0,
                               int threads = 1) {
  validate_spec(vs);
  PrimeField f = make_field(p);
  if (vs.kind == AmbientKind::Projective)
    return detail::count_projective(vs, f, budget, threads);
  if (vs.interp.tensor == TensorModel::Parallel)
    return detail::count_parallel(vs, f, budget, threads);
  return detail::count_decomposable(vs, f, budget, threads);
}

// Projectivization of a cone count: classes minus the zero class, divided by
// the scaling group.
inline i64 projectivize(const PointCount& pc, i64 p) {
  i64 nz = pc.count - (pc.zero_included ? 1 : 0);
  if (nz % (p - 1) != 0)
    throw ShapeMismatch("cone count " + std::to_string(nz) +
                        " is not divisible by p-1 = " + std::to_string(p - 1));
  return nz / (p - 1);
}

// ---------------------------------------------------------------------------
// Streaming enumeration of canonical representatives, used for brute-force
// cross-checks.  Representatives:
//   parallel cone:   [s | w] with the leading nonzero coordinate of w equal 1;
//                    the zero class is the all-zero row.
//   projective:      [v] with leading coordinate 1.
//   decomposable:    [u | v], the lexicographically smallest point of the
//                    class orbit; the zero class is the all-zero row.
inline std::vector<std::vector<i64>> enum_variety(const VarietySpec& vs, i64 p,
                                                  u64 budget) {
  validate_spec(vs);
  PrimeField f = make_field(p);
  int D = vs.ambient_dim();
  std::vector<std::vector<i64>> out;
  auto guard = [&] {
    if (budget && out.size() > budget) throw BudgetExceeded(budget);
  };

  if (vs.kind == AmbientKind::Projective) {
    detail::check_budget(detail::projective_size(p, D), budget);
    std::vector<detail::SparseForm> forms = detail::compile_mod(vs, f);
    detail::for_each_projective_rep<int>(
        p, D, 1,
        [&](const std::vector<i64>& w, int&) {
          for (const auto& sf : forms) {
            i64 v = sf.quad(f, w);
            if (sf.rel == Rel::Eq0 && v != 0) return;
            if (sf.rel == Rel::Ne0 && v == 0) return;
          }
          out.push_back(w);
          guard();
        },
        [] { return 0; }, [](int&, const int&) {});
    return out;
  }

  if (vs.interp.tensor == TensorModel::Parallel) {
    detail::check_budget(detail::projective_size(p, D) * static_cast<u64>(p),
                         budget);
    std::vector<detail::SparseForm> forms = detail::compile_mod(vs, f);
    if (detail::zero_satisfies(vs))
      out.push_back(std::vector<i64>(static_cast<std::size_t>(D) + 1, 0));
    detail::for_each_projective_rep<int>(
        p, D, 1,
        [&](const std::vector<i64>& w, int&) {
          for (i64 s = 1; s < p; ++s) {
            bool ok = true;
            for (const auto& sf : forms) {
              i64 v = f.mul(s, sf.quad(f, w));
              if ((sf.rel == Rel::Eq0 && v != 0) ||
                  (sf.rel == Rel::Ne0 && v == 0) ||
                  (sf.rel == Rel::Eq1 && v != 1) ||
                  (sf.rel == Rel::Ne1 && v == 1)) {
                ok = false;
                break;
              }
            }
            if (ok) {
              std::vector<i64> row;
              row.reserve(static_cast<std::size_t>(D) + 1);
              row.push_back(s);
              row.insert(row.end(), w.begin(), w.end());
              out.push_back(std::move(row));
              guard();
            }
          }
        },
        [] { return 0; }, [](int&, const int&) {});
    return out;
  }

  // Decomposable, brute force over all pairs with class dedup.  The budget
  // bounds the number of pairs visited.
  u64 pairs = 1;
  for (int i = 0; i < 2 * D; ++i) {
    pairs *= static_cast<u64>(p);
    detail::check_budget(pairs, budget);
  }
  std::vector<ModMat> mats;
  std::vector<Rel> rels;
  for (const auto& c : vs.conds) {
    mats.push_back(reduce_mod(compile_form(vs, c.form), f));
    rels.push_back(c.rel);
  }
  auto value = [&](const ModMat& A, const std::vector<i64>& u,
                   const std::vector<i64>& v) {
    i64 s = 0;
    for (int i = 0; i < D; ++i) {
      if (u[static_cast<std::size_t>(i)] == 0) continue;
      i64 row = 0;
      for (int j = 0; j < D; ++j)
        row += f.mul(A.at(i, j), v[static_cast<std::size_t>(j)]);
      s += f.mul(u[static_cast<std::size_t>(i)], f.reduce(row));
    }
    return f.reduce(s);
  };
  auto side_ok = [&](const std::vector<i64>& u, const std::vector<i64>& v) {
    for (std::size_t k = 0; k < mats.size(); ++k) {
      i64 val = value(mats[k], u, v);
      i64 val2 = vs.interp.gamma == GammaModel::Symmetrized
                     ? f.mul(f.add(val, value(mats[k], v, u)), f.inv(2))
                     : val;
      switch (rels[k]) {
        case Rel::Eq0: if (val2 != 0) return false; break;
        case Rel::Ne0: if (val2 == 0) return false; break;
        case Rel::Eq1: if (val2 != 1) return false; break;
        case Rel::Ne1: if (val2 == 1) return false; break;
      }
    }
    return true;
  };
  auto member = [&](const std::vector<i64>& u, const std::vector<i64>& v) {
    if (vs.interp.gamma == GammaModel::Symmetrized) return side_ok(u, v);
    return side_ok(u, v) && side_ok(v, u);
  };
  auto canonical = [&](const std::vector<i64>& u, const std::vector<i64>& v) {
    std::vector<i64> best;
    for (int sw = 0; sw < 2; ++sw) {
      const std::vector<i64>& a = sw ? v : u;
      const std::vector<i64>& b = sw ? u : v;
      for (i64 c = 1; c < p; ++c) {
        std::vector<i64> key;
        key.reserve(2 * static_cast<std::size_t>(D));
        i64 ci = f.inv(c);
        for (i64 x : a) key.push_back(f.mul(c, x));
        for (i64 x : b) key.push_back(f.mul(ci, x));
        if (best.empty() || key < best) best = key;
      }
    }
    return best;
  };
  std::set<std::vector<i64>> classes;
  if (detail::zero_satisfies(vs))
    classes.insert(std::vector<i64>(2 * static_cast<std::size_t>(D), 0));
  VectorStream us(f, D);
  std::vector<i64> u;
  while (us.next(u)) {
    if (std::all_of(u.begin(), u.end(), [](i64 x) { return x == 0; })) continue;
    VectorStream vstream(f, D);
    std::vector<i64> v;
    while (vstream.next(v)) {
      if (std::all_of(v.begin(), v.end(), [](i64 x) { return x == 0; })) continue;
      if (!member(u, v)) continue;
      classes.insert(canonical(u, v));
      if (budget && classes.size() > budget) throw BudgetExceeded(budget);
    }
  }
  out.assign(classes.begin(), classes.end());
  return out;
}

// ---------------------------------------------------------------------------
// Registry of the named varieties the verification targets use.

inline VarietySpec make_variety(const GradedSpace& sp, const StableFunctional& fn,
                                const std::string& name) {
  VarietySpec vs;
  vs.space = &sp;
  vs.fn = &fn;
  vs.name = name;

  auto parse_indexed = [&](const std::string& prefix, int& idx) {
    if (name.size() > prefix.size() + 1 && name.compare(0, prefix.size() + 1, prefix + "(") == 0 &&
        name.back() == ')') {
      idx = std::stoi(name.substr(prefix.size() + 1,
                                  name.size() - prefix.size() - 2));
      return true;
    }
    return false;
  };

  int m = sp.m(), ell = sp.ell();
  int idx = 0;

  if (sp.symplectic()) {
    vs.kind = AmbientKind::TensorCone;
    if (name == "SymSq") {
      vs.pieces = {1, m};
      return vs;
    }
    if (name == "Gamma1") {
      vs.pieces = {1, m};
      vs.conds = {{FormRef::gamma(1), Rel::Eq1}};
      return vs;
    }
    if (name == "Gamma1Prime") {
      vs.pieces = {1, m};
      vs.conds = {{FormRef::qa(), Rel::Eq0}};
      return vs;
    }
    if (name == "Gamma1CapGamma1Prime") {
      vs.pieces = {1, m};
      vs.conds = {{FormRef::gamma(1), Rel::Eq1}, {FormRef::qa(), Rel::Eq0}};
      return vs;
    }
    if (parse_indexed("U_sym", idx) || parse_indexed("W_sym", idx)) {
      bool with_qa = name[0] == 'W';
      if (idx < 0 || idx >= ell)
        throw NoSuchStep("chain index " + std::to_string(idx) +
                         " outside 0.." + std::to_string(ell - 1));
      if (idx == 0) {
        vs.pieces = {1, m};
        vs.conds = {{FormRef::gamma_prime(1), Rel::Ne1}};
      } else {
        for (int j = 1; j <= idx; ++j) vs.pieces.push_back(j);
        for (int j = m - idx; j <= m; ++j) vs.pieces.push_back(j);
        for (int j = 1; j <= idx; ++j)
          vs.conds.push_back({FormRef::gamma_prime(j), Rel::Ne1});
      }
      if (with_qa) vs.conds.push_back({FormRef::qa(), Rel::Eq0});
      return vs;
    }
    if (m == 2) {
      vs.kind = AmbientKind::Projective;
      vs.pieces = {1, 2};
      if (name == "PU0") {
        vs.conds = {{FormRef::gamma_tilde(), Rel::Eq0}};
        return vs;
      }
      if (name == "PU0p") {
        vs.conds = {{FormRef::qb_tilde(), Rel::Eq0},
                    {FormRef::gamma_tilde(), Rel::Eq0}};
        return vs;
      }
      if (name == "PW0") {
        vs.conds = {{FormRef::qa_tilde(), Rel::Eq0},
                    {FormRef::gamma_tilde(), Rel::Eq0}};
        return vs;
      }
      if (name == "PW0cap") {
        vs.conds = {{FormRef::qa_tilde(), Rel::Eq0},
                    {FormRef::qb_tilde(), Rel::Eq0},
                    {FormRef::gamma_tilde(), Rel::Eq0}};
        return vs;
      }
      if (name == "PU") {
        vs.conds = {{FormRef::gamma_tilde(), Rel::Eq0},
                    {FormRef::qb_tilde(), Rel::Ne0}};
        return vs;
      }
      if (name == "PW") {
        vs.conds = {{FormRef::qa_tilde(), Rel::Eq0},
                    {FormRef::gamma_tilde(), Rel::Eq0},
                    {FormRef::qb_tilde(), Rel::Ne0}};
        return vs;
      }
    }
    throw UnknownDerivation("no symplectic variety named " + name);
  }

  // Orthogonal registry.
  vs.kind = AmbientKind::Projective;
  if (name == "Q" || name == "Q1" || name == "W1" || name == "W11") {
    vs.pieces = {0, ell};
    vs.conds = {{FormRef::q_total(), Rel::Eq0}};
    if (name == "Q1" || name == "W11")
      vs.conds.push_back({FormRef::q_range(ell, ell), Rel::Eq0});
    if (name == "W1" || name == "W11")
      vs.conds.push_back({FormRef::omega_chain(ell), Rel::Eq0});
    return vs;
  }
  if (parse_indexed("U_orth", idx) || parse_indexed("W_orth", idx)) {
    bool with_chain = name[0] == 'W';
    if (idx < 1 || idx > ell)
      throw NoSuchStep("chain index " + std::to_string(idx) + " outside 1.." +
                       std::to_string(ell));
    vs.pieces = {0};
    for (int j = ell - idx + 1; j <= m - ell + idx - 1; ++j)
      vs.pieces.push_back(j);
    vs.conds = {{FormRef::q_total(), Rel::Eq0}};
    for (int j = 1; j <= idx; ++j)
      vs.conds.push_back(
          {FormRef::q_range(ell - j + 1, m - ell + j - 1), Rel::Ne0});
    if (with_chain)
      vs.conds.push_back({FormRef::omega_chain(ell), Rel::Eq0});
    return vs;
  }
  throw UnknownDerivation("no orthogonal variety named " + name);
}

inline std::vector<std::string> registry_names(const GradedSpace& sp) {
  std::vector<std::string> out;
  if (sp.symplectic()) {
    out = {"SymSq", "Gamma1", "Gamma1Prime", "Gamma1CapGamma1Prime"};
    for (int i = 0; i < sp.ell(); ++i) {
      out.push_back("U_sym(" + std::to_string(i) + ")");
      out.push_back("W_sym(" + std::to_string(i) + ")");
    }
    if (sp.m() == 2)
      for (const char* n : {"PU0", "PU0p", "PW0", "PW0cap", "PU", "PW"})
        out.push_back(n);
  } else {
    out = {"Q", "Q1", "W1", "W11"};
    for (int i = 1; i <= sp.ell(); ++i) {
      out.push_back("U_orth(" + std::to_string(i) + ")");
      out.push_back("W_orth(" + std::to_string(i) + ")");
    }
  }
  return out;
}

}  // namespace klsv
