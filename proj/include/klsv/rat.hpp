#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "klsv/errors.hpp"
#include "klsv/ffield.hpp"

namespace klsv {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline bool is_integer(const BigRat& r) { return denominator(r) == 1; }

inline i64 to_i64(const BigRat& r) {
  if (!is_integer(r)) throw OutOfDomain("expected an integer, got " + r.str());
  return static_cast<i64>(numerator(r));
}

// Dense matrix over Q.  Dimensions stay tiny (a pencil for the largest graded
// space is 14 x 14), so exact Gaussian elimination is instant.
class QMat {
 public:
  QMat() = default;
  QMat(int rows, int cols)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0) {}

  static QMat identity(int n) {
    QMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  BigRat& at(int i, int j) { return a_[idx(i, j)]; }
  const BigRat& at(int i, int j) const { return a_[idx(i, j)]; }

  QMat transpose() const {
    QMat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
    return t;
  }

  QMat mul(const QMat& o) const {
    if (cols_ != o.rows_)
      throw ShapeMismatch("matrix product " + dims() + " * " + o.dims());
    QMat r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const BigRat& v = at(i, k);
        if (v == 0) continue;
        for (int j = 0; j < o.cols_; ++j) r.at(i, j) += v * o.at(k, j);
      }
    return r;
  }

  QMat add(const QMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw ShapeMismatch("matrix sum " + dims() + " + " + o.dims());
    QMat r = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
    return r;
  }

  QMat scaled(const BigRat& c) const {
    QMat r = *this;
    for (auto& x : r.a_) x *= c;
    return r;
  }

  bool equals(const QMat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

  BigRat det() const {
    if (rows_ != cols_) throw ShapeMismatch("determinant of " + dims());
    QMat m = *this;
    BigRat d = 1;
    int n = rows_;
    for (int c = 0; c < n; ++c) {
      int piv = -1;
      for (int r = c; r < n; ++r)
        if (m.at(r, c) != 0) {
          piv = r;
          break;
        }
      if (piv < 0) return 0;
      if (piv != c) {
        for (int j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(c, j));
        d = -d;
      }
      d *= m.at(c, c);
      BigRat inv_p = BigRat(1) / m.at(c, c);
      for (int r = c + 1; r < n; ++r) {
        if (m.at(r, c) == 0) continue;
        BigRat f = m.at(r, c) * inv_p;
        for (int j = c; j < n; ++j) m.at(r, j) -= f * m.at(c, j);
      }
    }
    return d;
  }

  int rank() const {
    QMat m = *this;
    int r = 0;
    for (int c = 0; c < cols_ && r < rows_; ++c) {
      int piv = -1;
      for (int i = r; i < rows_; ++i)
        if (m.at(i, c) != 0) {
          piv = i;
          break;
        }
      if (piv < 0) continue;
      if (piv != r)
        for (int j = 0; j < cols_; ++j) std::swap(m.at(piv, j), m.at(r, j));
      BigRat inv_p = BigRat(1) / m.at(r, c);
      for (int i = r + 1; i < rows_; ++i) {
        if (m.at(i, c) == 0) continue;
        BigRat f = m.at(i, c) * inv_p;
        for (int j = c; j < cols_; ++j) m.at(i, j) -= f * m.at(r, j);
      }
      ++r;
    }
    return r;
  }

  // Basis of the right kernel, as columns.
  std::vector<std::vector<BigRat>> kernel() const {
    QMat m = *this;
    int n = cols_;
    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < n && r < rows_; ++c) {
      int piv = -1;
      for (int i = r; i < rows_; ++i)
        if (m.at(i, c) != 0) {
          piv = i;
          break;
        }
      if (piv < 0) continue;
      if (piv != r)
        for (int j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(r, j));
      BigRat inv_p = BigRat(1) / m.at(r, c);
      for (int j = 0; j < n; ++j) m.at(r, j) *= inv_p;
      for (int i = 0; i < rows_; ++i) {
        if (i == r || m.at(i, c) == 0) continue;
        BigRat f = m.at(i, c);
        for (int j = 0; j < n; ++j) m.at(i, j) -= f * m.at(r, j);
      }
      pivot_col.push_back(c);
      ++r;
    }
    std::vector<bool> is_pivot(static_cast<std::size_t>(n), false);
    for (int c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;
    std::vector<std::vector<BigRat>> basis;
    for (int free = 0; free < n; ++free) {
      if (is_pivot[static_cast<std::size_t>(free)]) continue;
      std::vector<BigRat> v(static_cast<std::size_t>(n), 0);
      v[static_cast<std::size_t>(free)] = 1;
      for (int k = 0; k < r; ++k)
        v[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(k)])] =
            -m.at(k, free);
      basis.push_back(std::move(v));
    }
    return basis;
  }

  // Reduction mod p; every denominator must be invertible mod p.
  std::vector<i64> mod(const PrimeField& f) const {
    std::vector<i64> out(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) {
      BigInt num = numerator(a_[i]);
      BigInt den = denominator(a_[i]);
      i64 nm = static_cast<i64>(num % f.p());
      i64 dm = static_cast<i64>(den % f.p());
      if (dm == 0)
        throw OutOfDomain("denominator vanishes mod " + std::to_string(f.p()));
      out[i] = f.mul(f.reduce(nm), f.inv(dm));
    }
    return out;
  }

  std::string dims() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  std::size_t idx(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
      throw ShapeMismatch("index (" + std::to_string(i) + "," +
                          std::to_string(j) + ") outside " + dims());
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(j);
  }

  int rows_ = 0, cols_ = 0;
  std::vector<BigRat> a_;
};

// Integer matrix over F_p, the shape the hot counting loops consume.
struct ModMat {
  int rows = 0, cols = 0;
  std::vector<i64> a;

  i64 at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
             static_cast<std::size_t>(j)];
  }
};

inline ModMat reduce_mod(const QMat& m, const PrimeField& f) {
  return ModMat{m.rows(), m.cols(), m.mod(f)};
}

inline int rank_mod(const ModMat& m, const PrimeField& f) {
  std::vector<i64> a = m.a;
  auto at = [&](int i, int j) -> i64& {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(m.cols) +
             static_cast<std::size_t>(j)];
  };
  int r = 0;
  for (int c = 0; c < m.cols && r < m.rows; ++c) {
    int piv = -1;
    for (int i = r; i < m.rows; ++i)
      if (at(i, c) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != r)
      for (int j = 0; j < m.cols; ++j) std::swap(at(piv, j), at(r, j));
    i64 inv_p = f.inv(at(r, c));
    for (int i = r + 1; i < m.rows; ++i) {
      if (at(i, c) == 0) continue;
      i64 fac = f.mul(at(i, c), inv_p);
      for (int j = c; j < m.cols; ++j)
        at(i, j) = f.sub(at(i, j), f.mul(fac, at(r, j)));
    }
    ++r;
  }
  return r;
}

// Polynomial over Q, dense coefficients, index = degree.
class QPoly {
 public:
  QPoly() = default;
  explicit QPoly(std::vector<BigRat> c) : c_(std::move(c)) { trim(); }

  static QPoly constant(const BigRat& v) { return QPoly({v}); }

  const std::vector<BigRat>& coeffs() const { return c_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  BigRat eval(const BigRat& x) const {
    BigRat r = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
    return r;
  }

  QPoly derivative() const {
    if (c_.size() <= 1) return QPoly();
    std::vector<BigRat> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i)
      d[i - 1] = c_[i] * BigRat(static_cast<long long>(i));
    return QPoly(std::move(d));
  }

  QPoly mul(const QPoly& o) const {
    if (is_zero() || o.is_zero()) return QPoly();
    std::vector<BigRat> r(c_.size() + o.c_.size() - 1, 0);
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return QPoly(std::move(r));
  }

  QPoly sub(const QPoly& o) const {
    std::vector<BigRat> r(std::max(c_.size(), o.c_.size()), 0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
    return QPoly(std::move(r));
  }

  QPoly add(const QPoly& o) const {
    std::vector<BigRat> r(std::max(c_.size(), o.c_.size()), 0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return QPoly(std::move(r));
  }

  // Euclidean division; returns {quotient, remainder}.
  std::pair<QPoly, QPoly> divmod(const QPoly& d) const {
    if (d.is_zero()) throw OutOfDomain("polynomial division by zero");
    int dd = d.degree();
    std::vector<BigRat> rem = c_;
    std::vector<BigRat> quo(
        static_cast<int>(c_.size()) > dd ? c_.size() - static_cast<std::size_t>(dd) : 0, 0);
    BigRat lead = d.c_.back();
    for (int i = static_cast<int>(rem.size()) - 1; i >= dd; --i) {
      BigRat f = rem[static_cast<std::size_t>(i)] / lead;
      if (f == 0) continue;
      quo[static_cast<std::size_t>(i - dd)] = f;
      for (int j = 0; j <= dd; ++j)
        rem[static_cast<std::size_t>(i - dd + j)] -= f * d.c_[static_cast<std::size_t>(j)];
    }
    if (static_cast<int>(rem.size()) > dd) rem.resize(static_cast<std::size_t>(dd));
    return {QPoly(std::move(quo)), QPoly(std::move(rem))};
  }

  QPoly monic() const {
    if (is_zero()) return *this;
    QPoly r = *this;
    BigRat lead = c_.back();
    for (auto& x : r.c_) x /= lead;
    return r;
  }

  static QPoly gcd(QPoly a, QPoly b) {
    while (!b.is_zero()) {
      QPoly r = a.divmod(b).second;
      a = std::move(b);
      b = std::move(r);
    }
    return a.monic();
  }

  bool squarefree() const {
    if (is_zero()) return false;
    if (degree() == 0) return true;
    return gcd(*this, derivative()).degree() == 0;
  }

  // Rational roots with multiplicity stripped, found by the rational root
  // theorem on the primitive integer model.  Returned sorted ascending.
  std::vector<BigRat> rational_roots() const {
    std::vector<BigRat> roots;
    if (is_zero()) return roots;
    QPoly cur = *this;
    // Strip zero roots first.
    while (!cur.is_zero() && cur.c_[0] == 0) {
      std::vector<BigRat> shifted(cur.c_.begin() + 1, cur.c_.end());
      cur = QPoly(std::move(shifted));
      if (roots.empty() || roots.back() != 0) roots.push_back(0);
    }
    if (cur.degree() >= 1) {
      BigInt lcm = 1;
      for (const auto& c : cur.c_) lcm = boost::multiprecision::lcm(lcm, denominator(c));
      std::vector<BigInt> ic(cur.c_.size());
      for (std::size_t i = 0; i < cur.c_.size(); ++i)
        ic[i] = numerator(cur.c_[i] * BigRat(lcm));
      BigInt a0 = boost::multiprecision::abs(ic.front());
      BigInt an = boost::multiprecision::abs(ic.back());
      auto divisors = [](const BigInt& v) {
        std::vector<BigInt> ds;
        for (BigInt d = 1; d * d <= v; ++d)
          if (v % d == 0) {
            ds.push_back(d);
            ds.push_back(v / d);
          }
        return ds;
      };
      for (const BigInt& np : divisors(a0))
        for (const BigInt& dp : divisors(an))
          for (int s : {1, -1}) {
            BigRat cand = BigRat(np * s, dp);
            if (cur.eval(cand) == 0) {
              bool dup = false;
              for (const auto& r : roots) dup = dup || r == cand;
              if (!dup) roots.push_back(cand);
            }
          }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
  }

  // True when the polynomial factors over Q into distinct linear factors.
  bool splits_with_distinct_rational_roots() const {
    if (is_zero()) return false;
    if (!squarefree()) return false;
    return static_cast<int>(rational_roots().size()) == degree();
  }

  std::string str(const std::string& var = "x") const {
    if (is_zero()) return "0";
    std::string s;
    for (int d = degree(); d >= 0; --d) {
      const BigRat& c = c_[static_cast<std::size_t>(d)];
      if (c == 0) continue;
      if (!s.empty()) s += c > 0 ? " + " : " - ";
      else if (c < 0) s += "-";
      BigRat a = c > 0 ? c : BigRat(-c);
      bool unit = a == 1 && d > 0;
      if (!unit) s += a.str();
      if (d > 0) {
        if (!unit) s += "*";
        s += var;
        if (d > 1) s += "^" + std::to_string(d);
      }
    }
    return s;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<BigRat> c_;
};

// Exact Lagrange interpolation through the given nodes.
inline QPoly lagrange_interpolate(const std::vector<std::pair<BigRat, BigRat>>& pts) {
  QPoly acc;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    QPoly basis = QPoly::constant(1);
    BigRat denom = 1;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      basis = basis.mul(QPoly({-pts[j].first, 1}));
      denom *= pts[i].first - pts[j].first;
    }
    acc = acc.sub(basis.mul(QPoly::constant(-pts[i].second / denom)));
  }
  return acc;
}

// Characteristic pencil delta(lambda) = det(lambda * A - B), computed exactly
// by evaluation at n+1 integer nodes followed by interpolation.
inline QPoly pencil_det(const QMat& A, const QMat& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw ShapeMismatch("pencil needs two square matrices of equal size");
  int n = A.rows();
  std::vector<std::pair<BigRat, BigRat>> pts;
  for (int k = 0; k <= n; ++k) {
    BigRat lam = k;
    QMat m = A.scaled(lam).add(B.scaled(-1));
    pts.emplace_back(lam, m.det());
  }
  return lagrange_interpolate(pts);
}

}  // namespace klsv
