#pragma once

#include <map>
#include <string>
#include <vector>

#include "klsv/errors.hpp"
#include "klsv/rat.hpp"

namespace klsv {

// The four families of graded spaces the toolkit handles.  C is symplectic;
// B, D and D2 are orthogonal (odd, split even, quasi-split even).  D2 is the
// form whose middle block carries a non-square discriminant twist.
enum class Family { C, B, D, D2 };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::C: return "C";
    case Family::B: return "B";
    case Family::D: return "D";
    case Family::D2: return "2D";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "C") return Family::C;
  if (s == "B") return Family::B;
  if (s == "D") return Family::D;
  if (s == "2D" || s == "D2") return Family::D2;
  throw InvalidDivisor("unknown family '" + s + "' (want C, B, D or 2D)");
}

// Whether the end blocks of an orthogonal grading carry the extra coordinate
// (dimension d+1 instead of d).  The parity of d decides which profile is
// realizable for D and 2D; Auto picks the realizable one, an explicit request
// that contradicts parity raises ParityViolation.
enum class EndProfile { Auto, Nondegenerate, Degenerate };

// Gram matrix of the standard split quadratic form on a space of dimension
// dim: sum of x_a * x_{dim+1-a} over antidiagonal pairs, plus u * x_mid^2
// when dim is odd.  The form itself is x^T S x.
inline QMat split_gram(int dim, const BigRat& mid_unit) {
  QMat s(dim, dim);
  for (int a = 1; a <= dim; ++a) {
    int b = dim + 1 - a;
    if (a < b) {
      s.at(a - 1, b - 1) = BigRat(1, 2);
      s.at(b - 1, a - 1) = BigRat(1, 2);
    } else if (a == b) {
      s.at(a - 1, a - 1) = mid_unit;
    }
  }
  return s;
}

// A graded symplectic or orthogonal space.  Pieces are indexed 1..m for the
// symplectic family and 0..m-1 for the orthogonal ones; piece 0 and piece
// ell = m/2 are the self-paired end blocks in the orthogonal case, while the
// symplectic pairing matches piece i with piece m+1-i.
class GradedSpace {
 public:
  Family family() const { return fam_; }
  bool symplectic() const { return fam_ == Family::C; }
  i64 n() const { return n_; }
  i64 d() const { return d_; }
  int m() const { return m_; }
  int ell() const { return ell_; }
  int total_dim() const { return total_; }
  bool degenerate_profile() const { return degenerate_; }

  int first_piece() const { return symplectic() ? 1 : 0; }
  int last_piece() const { return symplectic() ? m_ : m_ - 1; }

  int piece_dim(int i) const {
    check_piece(i);
    return dims_[static_cast<std::size_t>(i)];
  }
  int piece_offset(int i) const {
    check_piece(i);
    return offs_[static_cast<std::size_t>(i)];
  }

  // The piece paired with piece i under the global form.
  int partner(int i) const {
    check_piece(i);
    return symplectic() ? m_ + 1 - i : (m_ - i) % m_;
  }

  // Global Gram matrix: antisymmetric (omega) for C, symmetric (S with
  // q = x^T S x) for the orthogonal families.
  const QMat& gram() const { return gram_; }

  // Block of the global Gram pairing piece i against piece j.
  QMat sub_gram(int i, int j) const {
    int di = piece_dim(i), dj = piece_dim(j);
    int oi = piece_offset(i), oj = piece_offset(j);
    QMat b(di, dj);
    for (int r = 0; r < di; ++r)
      for (int c = 0; c < dj; ++c) b.at(r, c) = gram_.at(oi + r, oj + c);
    return b;
  }

  // Dimension of the middle-sized blocks (every non-end piece).
  int middle_dim() const { return static_cast<int>(d_); }

  friend GradedSpace build_symplectic_space(i64 n, i64 d);
  friend GradedSpace build_orthogonal_space(Family fam, i64 n, i64 d,
                                            EndProfile profile);

  std::string describe() const {
    std::string s = to_string(fam_) + " n=" + std::to_string(n_) +
                    " d=" + std::to_string(d_) + " m=" + std::to_string(m_) +
                    " dims(";
    for (int i = first_piece(); i <= last_piece(); ++i) {
      if (i != first_piece()) s += ",";
      s += std::to_string(piece_dim(i));
    }
    return s + ")";
  }

 private:
  void check_piece(int i) const {
    if (i < first_piece() || i > last_piece())
      throw MissingPiece("piece " + std::to_string(i) + " outside " +
                         std::to_string(first_piece()) + ".." +
                         std::to_string(last_piece()));
  }

  Family fam_ = Family::C;
  i64 n_ = 0, d_ = 0;
  int m_ = 0, ell_ = 0, total_ = 0;
  bool degenerate_ = false;
  std::vector<int> dims_, offs_;  // indexed by piece id (slot 0 unused for C)
  QMat gram_;
};

inline GradedSpace build_symplectic_space(i64 n, i64 d) {
  if (n < 1 || d < 1)
    throw InvalidDivisor("need n >= 1 and d >= 1, got n=" + std::to_string(n) +
                         " d=" + std::to_string(d));
  if (n % d != 0) throw NotADivisor(d, n);
  GradedSpace sp;
  sp.fam_ = Family::C;
  sp.n_ = n;
  sp.d_ = d;
  sp.m_ = static_cast<int>(2 * n / d);
  sp.ell_ = sp.m_ / 2;
  sp.dims_.assign(static_cast<std::size_t>(sp.m_) + 1, 0);
  sp.offs_.assign(static_cast<std::size_t>(sp.m_) + 1, 0);
  int off = 0;
  for (int i = 1; i <= sp.m_; ++i) {
    sp.dims_[static_cast<std::size_t>(i)] = static_cast<int>(d);
    sp.offs_[static_cast<std::size_t>(i)] = off;
    off += static_cast<int>(d);
  }
  sp.total_ = off;
  sp.gram_ = QMat(off, off);
  // omega(e^(i)_a, e^(m+1-i)_a) = 1 for i <= ell, antisymmetric otherwise.
  for (int i = 1; i <= sp.ell_; ++i) {
    int j = sp.m_ + 1 - i;
    for (int a = 0; a < d; ++a) {
      sp.gram_.at(sp.offs_[static_cast<std::size_t>(i)] + a,
                  sp.offs_[static_cast<std::size_t>(j)] + a) = 1;
      sp.gram_.at(sp.offs_[static_cast<std::size_t>(j)] + a,
                  sp.offs_[static_cast<std::size_t>(i)] + a) = -1;
    }
  }
  return sp;
}

inline GradedSpace build_orthogonal_space(Family fam, i64 n, i64 d,
                                          EndProfile profile = EndProfile::Auto) {
  if (fam == Family::C)
    throw ShapeMismatch("family C is symplectic; use build_symplectic_space");
  if (n < 1 || d < 1)
    throw InvalidDivisor("need n >= 1 and d >= 1, got n=" + std::to_string(n) +
                         " d=" + std::to_string(d));

  bool degenerate = false;
  if (fam == Family::B) {
    // The odd family has one end block of each parity; there is no profile
    // choice to make.
    if (profile != EndProfile::Auto)
      throw ParityViolation("the odd family fixes its end blocks; profile "
                            "must be Auto");
    if (n % d != 0) throw NotADivisor(d, n);
  } else {
    // Even families: the parity of d decides whether the end blocks match the
    // middles (nondegenerate) or carry the extra coordinate (degenerate).
    bool want_deg_D = (d % 2 == 1);
    bool want_deg = (fam == Family::D) ? want_deg_D : !want_deg_D;
    if (profile == EndProfile::Nondegenerate && want_deg)
      throw ParityViolation("family " + to_string(fam) + " with d=" +
                            std::to_string(d) +
                            " only realizes the degenerate profile");
    if (profile == EndProfile::Degenerate && !want_deg)
      throw ParityViolation("family " + to_string(fam) + " with d=" +
                            std::to_string(d) +
                            " only realizes the nondegenerate profile");
    degenerate = want_deg;
    if (!degenerate) {
      if (n % d != 0) throw NotADivisor(d, n);
    } else {
      if ((n - 1) % d != 0) throw NotADivisor(d, n - 1);
    }
  }

  GradedSpace sp;
  sp.fam_ = fam;
  sp.n_ = n;
  sp.d_ = d;
  sp.degenerate_ = degenerate;
  i64 m = degenerate ? 2 * (n - 1) / d : 2 * n / d;
  if (m < 2)
    throw InvalidDivisor("block count m=" + std::to_string(m) +
                         " is too small for " + to_string(fam) + " n=" +
                         std::to_string(n) + " d=" + std::to_string(d));
  sp.m_ = static_cast<int>(m);
  sp.ell_ = sp.m_ / 2;

  int d0, dl;
  if (fam == Family::B) {
    // dim M_0 even, dim M_ell odd, both in {d, d+1}.
    d0 = static_cast<int>(d % 2 == 0 ? d : d + 1);
    dl = static_cast<int>(d % 2 == 0 ? d + 1 : d);
  } else {
    d0 = dl = static_cast<int>(degenerate ? d + 1 : d);
  }

  sp.dims_.assign(static_cast<std::size_t>(sp.m_), static_cast<int>(d));
  sp.dims_[0] = d0;
  sp.dims_[static_cast<std::size_t>(sp.ell_)] = dl;
  sp.offs_.assign(static_cast<std::size_t>(sp.m_), 0);
  int off = 0;
  for (int i = 0; i < sp.m_; ++i) {
    sp.offs_[static_cast<std::size_t>(i)] = off;
    off += sp.dims_[static_cast<std::size_t>(i)];
  }
  sp.total_ = off;
  int expect = static_cast<int>(fam == Family::B ? 2 * n + 1 : 2 * n);
  if (off != expect)
    throw ShapeMismatch("dimension bookkeeping failed: got " +
                        std::to_string(off) + " expected " +
                        std::to_string(expect));

  // Quadratic form q(x) = x^T S x: split on each self-paired end block, and
  // x^(i) . x^(m-i) across complementary middle pairs.  The quasi-split
  // family puts -1 on the middle coordinate of M_ell, which is exactly the
  // discriminant twist separating it from the split family.
  BigRat u_l = (fam == Family::D2) ? BigRat(-1) : BigRat(1);
  sp.gram_ = QMat(off, off);
  auto put_block = [&](int piece, const QMat& b) {
    int o = sp.offs_[static_cast<std::size_t>(piece)];
    for (int r = 0; r < b.rows(); ++r)
      for (int c = 0; c < b.cols(); ++c) sp.gram_.at(o + r, o + c) = b.at(r, c);
  };
  put_block(0, split_gram(d0, 1));
  put_block(sp.ell_, split_gram(dl, u_l));
  for (int i = 1; i < sp.ell_; ++i) {
    int j = sp.m_ - i;
    for (int a = 0; a < d; ++a) {
      sp.gram_.at(sp.offs_[static_cast<std::size_t>(i)] + a,
                  sp.offs_[static_cast<std::size_t>(j)] + a) = BigRat(1, 2);
      sp.gram_.at(sp.offs_[static_cast<std::size_t>(j)] + a,
                  sp.offs_[static_cast<std::size_t>(i)] + a) = BigRat(1, 2);
    }
  }
  return sp;
}

// Predicted wild slope numerator count divided by the block count: the number
// of roots of the ambient group divided by m.  Validity of m means m even and
// the matching divisibility for some legal block size d; the resulting value
// is always an integer (n*d or (n-1)*d depending on which case applies).
inline i64 swan_prediction(Family fam, i64 n, i64 m) {
  if (n < 1 || m < 2 || m % 2 != 0) throw InvalidEllipticNumber(m, to_string(fam));
  i64 phi = (fam == Family::B || fam == Family::C) ? 2 * n * n : 2 * n * (n - 1);
  auto divides = [](i64 a, i64 b) { return a != 0 && b % a == 0; };
  bool ok = false;
  switch (fam) {
    case Family::C:
    case Family::B:
      // d = 2n/m; d | n is automatic once m is even and divides 2n.
      ok = divides(m, 2 * n);
      break;
    case Family::D: {
      bool nondeg = divides(m, 2 * n) && (2 * n / m) % 2 == 0;
      bool deg = divides(m, 2 * (n - 1)) && (2 * (n - 1) / m) % 2 == 1;
      ok = nondeg || deg;
      break;
    }
    case Family::D2: {
      bool nondeg = divides(m, 2 * n) && (2 * n / m) % 2 == 1;
      bool deg = divides(m, 2 * (n - 1)) && (2 * (n - 1) / m) % 2 == 0;
      ok = nondeg || deg;
      break;
    }
  }
  if (!ok) throw InvalidEllipticNumber(m, to_string(fam));
  if (phi % m != 0)
    throw InvalidEllipticNumber(m, to_string(fam) + " (non-integral slope)");
  return phi / m;
}

// ---------------------------------------------------------------------------
// Stable functionals.
//
// A functional assigns a linear map to each arrow of the cyclic chain:
//   symplectic: phi_i : M_i -> M_{i+1} for i = 1..ell, plus the long arrow
//               phi_m : M_m -> M_1;
//   orthogonal: phi_i : M_i -> M_{i+1} for i = 0..ell-1.
// Stability is read off a pencil of two quadratic forms on the distinguished
// end block (M_m resp. M_0): the native restriction of the ambient form and
// the form pulled back through the chain.  The functional built here places
// the pencil roots at distinct small rationals, so the pencil is squarefree
// and fully split over Q, and stays that way mod every prime that keeps the
// root residues distinct.

struct StabilityCert {
  bool pass = false;
  i64 p = 0;
  std::string reason;
  std::map<int, int> phi_rank;           // rank of each map mod p
  std::map<int, int> phi_rank_expected;  // rank of each map over Q
  QPoly delta;                           // pencil determinant over Q
  std::vector<BigRat> roots;             // its roots (all rational by design)
  std::vector<i64> roots_mod_p;
  bool squarefree_rational = false;
  bool split_rational = false;
  bool distinct_mod_p = false;
};

struct StableFunctional {
  Family family = Family::C;
  i64 seed = 0;
  std::map<int, QMat> phi;  // keys 1..ell and m (symplectic), 0..ell-1 (orthogonal)

  // Pencil data on the distinguished end block.
  QMat gram_first;   // Gram of the native form (q_A on M_m resp. q_0 on M_0)
  QMat gram_second;  // Gram of the transported form (q_B resp. q_C)
  QMat chain;        // symplectic: T = phi_{ell-1}..phi_1 phi_m; orthogonal: C
  QPoly delta;
  std::vector<BigRat> roots;
};

namespace detail {

// Seed-derived unit for the i-th middle map (1-based position).
inline i64 seed_unit(i64 seed, int pos) {
  return ((seed >> (pos - 1)) & 1) ? 2 : 1;
}

// Antidiagonal d x d permutation matrix.
inline QMat antidiag(int d) {
  QMat j(d, d);
  for (int a = 0; a < d; ++a) j.at(a, d - 1 - a) = 1;
  return j;
}

// Root layout shared by both constructions: entries describe the 2x2 (or 1x1)
// blocks of the transported Gram relative to the antidiagonal pairing of the
// pencil space.
struct RootPlan {
  // Pair blocks: coordinates (a, D+1-a) get roots {i^2, j^2}, both nonzero.
  struct Pair {
    int a;      // 1-based coordinate
    i64 i, j;   // integer square roots of the two roots, i < j
    BigRat mu1() const { return BigRat(i) * i; }
    BigRat mu2() const { return BigRat(j) * j; }
  };
  std::vector<Pair> pairs;
  bool has_zero_pair = false;  // one pair block carries roots {0, zero_mu}
  int zero_pair_a = 0;
  BigRat zero_mu;
  bool has_mid = false;  // self-paired middle coordinate of the pencil space
  BigRat mid_root;       // its root (0, -1, or a square)
  std::vector<BigRat> all_roots() const {
    std::vector<BigRat> r;
    for (const auto& pr : pairs) {
      r.push_back(pr.mu1());
      r.push_back(pr.mu2());
    }
    if (has_zero_pair) {
      r.push_back(0);
      r.push_back(zero_mu);
    }
    if (has_mid) r.push_back(mid_root);
    std::sort(r.begin(), r.end());
    return r;
  }
};

}  // namespace detail

inline StableFunctional build_functional(const GradedSpace& sp, i64 seed) {
  StableFunctional fn;
  fn.family = sp.family();
  fn.seed = seed;
  int d = sp.middle_dim();
  int ell = sp.ell();
  int m = sp.m();

  if (sp.symplectic()) {
    // phi_m is the antidiagonal unit map, so the native form
    // q_A(w) = omega(phi_m w, w) is the standard split form w^T J w.
    QMat J = detail::antidiag(d);
    // Transported Gram S_B: pair block (a, d+1-a) carries roots
    // {(2a-1)^2, (2a)^2}; an odd middle coordinate carries d^2.
    QMat SB(d, d);
    for (int a = 1; 2 * a <= d; ++a) {
      BigRat mu1 = (2 * a - 1) * (2 * a - 1);
      BigRat mu2 = (2 * a) * (2 * a);
      int i = a - 1, j = d - a;
      SB.at(i, i) = 1;
      SB.at(i, j) = (mu1 + mu2) / 2;
      SB.at(j, i) = (mu1 + mu2) / 2;
      SB.at(j, j) = (mu2 - mu1) * (mu2 - mu1) / 4;
    }
    if (d % 2 == 1) {
      int mid = (d - 1) / 2;
      SB.at(mid, mid) = BigRat(d) * BigRat(d);
    }
    // q_B(x) = omega(phi_ell T x, T x) with T the chain M_m -> M_ell.  With
    // omega(u^(ell+1), v^(ell)) = -u.v this gives Gram_B = -T^T phi_ell T,
    // so phi_ell = -J SB J against T = J reproduces Gram_B = SB exactly.
    QMat PB = J.scaled(-1).mul(SB).mul(J);
    BigRat unit_prod = 1;
    for (int i = 1; i <= ell - 1; ++i) {
      i64 u = detail::seed_unit(seed, i);
      unit_prod *= u;
      fn.phi[i] = QMat::identity(d).scaled(u);
    }
    fn.phi[ell] = PB.scaled(BigRat(1) / (unit_prod * unit_prod));
    fn.phi[m] = J;

    QMat T = fn.phi[m];
    for (int i = 1; i <= ell - 1; ++i) T = fn.phi[i].mul(T);
    fn.chain = T;
    fn.gram_first = J;
    QMat sym = fn.phi[ell].add(fn.phi[ell].transpose()).scaled(BigRat(1, 2));
    fn.gram_second = T.transpose().mul(sym).mul(T).scaled(-1);
    fn.delta = pencil_det(fn.gram_first, fn.gram_second);
    fn.roots = fn.delta.rational_roots();
    return fn;
  }

  // Orthogonal families.  The chain map C : M_0 -> M_ell realizes the target
  // Gram S_C block by block: each antidiagonal pair of M_0 with roots
  // {i^2, j^2} factors as a product of the two rational linear forms
  // x_a + ((j -+ i)/2)^2 x_{a'}, which lands in a hyperbolic plane of q_ell;
  // a {0, mu} pair contributes the single square (x_a + mu/4 x_{a'})^2, and a
  // middle coordinate maps straight onto the middle of q_ell (or to zero).
  int d0 = sp.piece_dim(0);
  int dl = sp.piece_dim(ell);
  detail::RootPlan plan;
  bool full_rank = (ell == 1 && d0 == dl && d0 == d + 1);
  int rank_target = full_rank ? d0 : std::min(d0, d);
  int npairs = d0 / 2;
  bool zero_in_pair = (rank_target == d0 - 1) && (d0 % 2 == 0);
  int square_pairs = npairs - (zero_in_pair ? 1 : 0);
  for (int a = 1; a <= square_pairs; ++a)
    plan.pairs.push_back({a, 2 * a - 1, 2 * a});
  if (zero_in_pair) {
    plan.has_zero_pair = true;
    plan.zero_pair_a = npairs;
    plan.zero_mu = BigRat((2 * square_pairs + 1) * (2 * square_pairs + 1));
  }
  if (d0 % 2 == 1) {
    plan.has_mid = true;
    // Quasi-split middles are matched by -1 (forced by the discriminant of
    // the twisted end form); a rank deficit parks the root at 0 instead.
    plan.mid_root = (rank_target == d0 - 1) ? BigRat(0) : BigRat(-1);
  }

  QMat C(dl, d0);
  int plane = 1;  // next unused hyperbolic plane of the end block M_ell
  auto form_into_row = [&](int row, int a, const BigRat& ca, const BigRat& cap) {
    C.at(row - 1, a - 1) = ca;
    C.at(row - 1, d0 - a) = cap;  // partner column a' = d0 + 1 - a
  };
  for (const auto& pr : plan.pairs) {
    // roots {i^2, j^2} with i < j: forms x + ((j-i)/2)^2 x' and
    // x + ((j+i)/2)^2 x', whose product is the pair block of S_C.
    BigRat lo = BigRat((pr.j - pr.i) * (pr.j - pr.i), 4);
    BigRat hi = BigRat((pr.j + pr.i) * (pr.j + pr.i), 4);
    form_into_row(plane, pr.a, 1, lo);
    form_into_row(dl + 1 - plane, pr.a, 1, hi);
    ++plane;
  }
  if (plan.has_zero_pair) {
    BigRat c = plan.zero_mu / 4;
    if (dl % 2 == 1) {
      // Route the square through the odd middle coordinate (unit +1 there:
      // this branch only occurs in family B).
      int mid = (dl + 1) / 2;
      form_into_row(mid, plan.zero_pair_a, 1, c);
    } else {
      // Route it along the diagonal of a fresh hyperbolic plane.
      form_into_row(plane, plan.zero_pair_a, 1, c);
      form_into_row(dl + 1 - plane, plan.zero_pair_a, 1, c);
      ++plane;
    }
  }
  if (plan.has_mid && plan.mid_root != 0) {
    int mid0 = (d0 + 1) / 2;
    int midl = (dl + 1) / 2;
    C.at(midl - 1, mid0 - 1) = 1;
  }

  // Factor C through the chain.  For ell == 1 the single arrow is C itself;
  // otherwise phi_0 collects the d distinct linear forms appearing in C and
  // the last arrow places them back into the rows, with identity middles.
  if (ell == 1) {
    fn.phi[0] = C;
  } else {
    std::vector<std::vector<BigRat>> forms;  // rows of P0
    std::vector<int> row_form(static_cast<std::size_t>(dl), -1);
    for (int r = 0; r < dl; ++r) {
      std::vector<BigRat> row(static_cast<std::size_t>(d0));
      bool nonzero = false;
      for (int c = 0; c < d0; ++c) {
        row[static_cast<std::size_t>(c)] = C.at(r, c);
        nonzero = nonzero || C.at(r, c) != 0;
      }
      if (!nonzero) continue;
      int found = -1;
      for (std::size_t k = 0; k < forms.size(); ++k)
        if (forms[k] == row) found = static_cast<int>(k);
      if (found < 0) {
        forms.push_back(row);
        found = static_cast<int>(forms.size()) - 1;
      }
      row_form[static_cast<std::size_t>(r)] = found;
    }
    if (static_cast<int>(forms.size()) != std::min(d0, d))
      throw ShapeMismatch("chain factorization expected " +
                          std::to_string(std::min(d0, d)) +
                          " distinct forms, found " +
                          std::to_string(forms.size()));
    QMat P0(d, d0);
    for (std::size_t k = 0; k < forms.size(); ++k)
      for (int c = 0; c < d0; ++c)
        P0.at(static_cast<int>(k), c) = forms[k][static_cast<std::size_t>(c)];
    QMat Q0(dl, d);
    for (int r = 0; r < dl; ++r)
      if (row_form[static_cast<std::size_t>(r)] >= 0)
        Q0.at(r, row_form[static_cast<std::size_t>(r)]) = 1;
    fn.phi[0] = P0;
    BigRat unit_prod = 1;
    for (int i = 1; i <= ell - 2; ++i) {
      i64 u = detail::seed_unit(seed, i);
      unit_prod *= u;
      fn.phi[i] = QMat::identity(d).scaled(u);
    }
    fn.phi[ell - 1] = Q0.scaled(BigRat(1) / unit_prod);
  }

  QMat chain = fn.phi[0];
  for (int i = 1; i <= ell - 1; ++i) chain = fn.phi[i].mul(chain);
  fn.chain = chain;
  fn.gram_first = sp.sub_gram(0, 0);
  fn.gram_second = chain.transpose().mul(sp.sub_gram(ell, ell)).mul(chain);
  fn.delta = pencil_det(fn.gram_first, fn.gram_second);
  fn.roots = fn.delta.rational_roots();
  return fn;
}

inline StabilityCert check_stability(const GradedSpace& sp,
                                     const StableFunctional& fn, i64 p) {
  PrimeField f = make_field(p);
  StabilityCert cert;
  cert.p = p;
  cert.delta = fn.delta;
  cert.roots = fn.roots;
  cert.squarefree_rational = fn.delta.squarefree();
  cert.split_rational = fn.delta.splits_with_distinct_rational_roots();

  bool ranks_ok = true;
  for (const auto& [k, mat] : fn.phi) {
    int want = mat.rank();
    cert.phi_rank_expected[k] = want;
    int got;
    try {
      got = rank_mod(reduce_mod(mat, f), f);
    } catch (const OutOfDomain&) {
      got = -1;  // a denominator died mod p
    }
    cert.phi_rank[k] = got;
    ranks_ok = ranks_ok && got == want;
  }

  bool residues_ok = true;
  std::vector<i64> res;
  for (const auto& r : fn.roots) {
    BigInt num = numerator(r), den = denominator(r);
    i64 dm = static_cast<i64>(den % p);
    if (dm == 0) {
      residues_ok = false;
      break;
    }
    i64 v = f.mul(f.reduce(static_cast<i64>(num % p)), f.inv(dm));
    res.push_back(v);
  }
  if (residues_ok) {
    std::vector<i64> sorted = res;
    std::sort(sorted.begin(), sorted.end());
    residues_ok = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }
  cert.roots_mod_p = res;
  cert.distinct_mod_p = residues_ok;

  int pencil_dim = fn.gram_first.rows();
  bool degree_ok = fn.delta.degree() == pencil_dim &&
                   static_cast<int>(fn.roots.size()) == pencil_dim;

  cert.pass = ranks_ok && cert.squarefree_rational && cert.split_rational &&
              degree_ok && residues_ok;
  if (!cert.pass) {
    if (!ranks_ok)
      cert.reason = "a chain map drops rank mod " + std::to_string(p);
    else if (!cert.squarefree_rational)
      cert.reason = "pencil is not squarefree over Q";
    else if (!cert.split_rational || !degree_ok)
      cert.reason = "pencil does not split into distinct rational roots";
    else
      cert.reason = "pencil roots collide mod " + std::to_string(p);
  }
  return cert;
}

// Gate + construct + certify.  The gate matches the smallest primes at which
// the square-root placement can possibly stay separated; below it no stable
// functional of this shape exists, which is reported rather than silently
// producing a degenerate pencil.
inline std::pair<StableFunctional, StabilityCert> build_stable_functional(
    const GradedSpace& sp, i64 seed, i64 p) {
  make_field(p);
  i64 pencil_dim = sp.symplectic() ? sp.d() : sp.piece_dim(0);
  i64 gate = std::max(sp.d(), pencil_dim) + 2;
  if (p <= gate)
    throw NoStableFound("no stable functional at p=" + std::to_string(p) +
                        " for " + sp.describe() + ": need p > " +
                        std::to_string(gate));
  StableFunctional fn = build_functional(sp, seed);
  StabilityCert cert = check_stability(sp, fn, p);
  if (!cert.pass)
    throw NoStableFound("functional for " + sp.describe() + " fails at p=" +
                        std::to_string(p) + ": " + cert.reason);
  return {std::move(fn), std::move(cert)};
}

}  // namespace klsv
