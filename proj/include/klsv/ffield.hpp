#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "klsv/errors.hpp"

namespace klsv {

using i64 = std::int64_t;
using u64 = std::uint64_t;

// Arithmetic in the prime field F_p for an odd prime p.  All values are kept
// in the canonical range [0, p).  p stays small (worst case a few hundred), so
// plain 64-bit products never overflow and inversion by Fermat is fine.
class PrimeField {
 public:
  explicit PrimeField(i64 p) : p_(p) {}

  i64 p() const { return p_; }

  i64 reduce(i64 a) const {
    i64 r = a % p_;
    return r < 0 ? r + p_ : r;
  }
  i64 add(i64 a, i64 b) const { return (a + b) % p_; }
  i64 sub(i64 a, i64 b) const { return (a - b + p_) % p_; }
  i64 mul(i64 a, i64 b) const { return (a * b) % p_; }
  i64 neg(i64 a) const { return a == 0 ? 0 : p_ - a; }

  i64 pow(i64 a, i64 e) const {
    a = reduce(a);
    i64 r = 1;
    while (e > 0) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }

  i64 inv(i64 a) const {
    a = reduce(a);
    if (a == 0) throw OutOfDomain("division by zero in F_" + std::to_string(p_));
    return pow(a, p_ - 2);
  }

  // Legendre symbol as an integer in {-1, 0, 1}.
  int legendre(i64 a) const {
    a = reduce(a);
    if (a == 0) return 0;
    i64 e = pow(a, (p_ - 1) / 2);
    return e == 1 ? 1 : -1;
  }

 private:
  i64 p_;
};

// Validates p and returns the field.  Rejects 2 with a dedicated error since
// the whole theory needs odd characteristic, and rejects composites.
inline PrimeField make_field(i64 p) {
  if (p == 2) throw EvenCharacteristic();
  if (p < 2) throw NotPrime(p);
  for (i64 q = 2; q * q <= p; ++q)
    if (p % q == 0) throw NotPrime(p);
  return PrimeField(p);
}

inline bool is_admissible_prime(i64 p, i64 floor_excl) {
  if (p <= 2 || p <= floor_excl) return false;
  for (i64 q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

// An element of Z[zeta_p] written on the spanning set 1, zeta, ..., zeta^{p-1}.
// That set is one vector too large (the minimal polynomial has degree p-1), so
// representatives are not unique until normalize() is applied; normalize uses
// the relation 1 + zeta + ... + zeta^{p-1} = 0 to clear the coefficient of
// zeta^0, which pins down a unique canonical form.
class CycInt {
 public:
  explicit CycInt(i64 p) : p_(p), c_(static_cast<std::size_t>(p), 0) {}

  i64 p() const { return p_; }
  const std::vector<i64>& coeffs() const { return c_; }

  // Adds weight * zeta^e.  This is the workhorse of every character sum:
  // exponents arrive already reduced mod p by the caller or not, both fine.
  void accumulate(i64 e, i64 weight = 1) {
    e %= p_;
    if (e < 0) e += p_;
    c_[static_cast<std::size_t>(e)] += weight;
  }

  void add(const CycInt& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  }
  void sub(const CycInt& o) {
    check(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  }
  void scale(i64 k) {
    for (auto& x : c_) x *= k;
  }

  // Applies the Galois automorphism zeta -> zeta^a for a coprime to p.
  CycInt galois(i64 a) const {
    a %= p_;
    if (a < 0) a += p_;
    if (a == 0) throw OutOfDomain("galois twist by 0 is not an automorphism");
    CycInt r(p_);
    for (std::size_t i = 0; i < c_.size(); ++i)
      r.accumulate(static_cast<i64>(i) * a, c_[i]);
    return r;
  }

  // Canonical form: coefficient of zeta^0 becomes 0.
  CycInt normalized() const {
    CycInt r = *this;
    i64 c0 = r.c_[0];
    if (c0 != 0)
      for (auto& x : r.c_) x -= c0;
    return r;
  }

  bool is_zero() const {
    CycInt n = normalized();
    return std::all_of(n.c_.begin(), n.c_.end(), [](i64 x) { return x == 0; });
  }

  // True when the normalized element is the rational integer v, i.e. equals
  // v * 1.  In canonical form the rational integer v is the vector with every
  // zeta^i (i >= 1) coefficient equal to -v and zeta^0 coefficient 0.
  bool equals_integer(i64 v) const {
    CycInt n = normalized();
    if (n.c_[0] != 0) return false;
    for (std::size_t i = 1; i < n.c_.size(); ++i)
      if (n.c_[i] != -v) return false;
    return true;
  }

  // If the element is a rational integer, returns it.
  bool as_integer(i64& out) const {
    CycInt n = normalized();
    i64 v = n.c_.size() > 1 ? -n.c_[1] : 0;
    for (std::size_t i = 1; i < n.c_.size(); ++i)
      if (n.c_[i] != -v) return false;
    out = v;
    return true;
  }

  bool equals(const CycInt& o) const {
    check(o);
    CycInt d = *this;
    d.sub(o);
    return d.is_zero();
  }

  // Numerical embedding, only used for diagnostics and sanity tests.
  std::complex<double> to_complex() const {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t i = 0; i < c_.size(); ++i) {
      double th = 2.0 * std::numbers::pi * static_cast<double>(i) /
                  static_cast<double>(p_);
      s += static_cast<double>(c_[i]) * std::complex<double>(std::cos(th), std::sin(th));
    }
    return s;
  }

 private:
  void check(const CycInt& o) const {
    if (p_ != o.p_) throw ModulusMismatch(p_, o.p_);
  }

  i64 p_;
  std::vector<i64> c_;
};

// Streams all vectors of F_p^dim in lexicographic order (last coordinate
// fastest).  dim = 0 yields exactly one empty vector.  The stream can start
// at an arbitrary fixed first coordinate so callers can split work.
class VectorStream {
 public:
  VectorStream(const PrimeField& f, int dim, u64 budget = 0)
      : p_(f.p()), dim_(dim), budget_(budget) {
    u64 total = 1;
    for (int i = 0; i < dim_; ++i) {
      if (budget_ && total > budget_ / static_cast<u64>(p_) + 1)
        throw BudgetExceeded(budget_);
      total *= static_cast<u64>(p_);
    }
    if (budget_ && total > budget_) throw BudgetExceeded(budget_);
    total_ = total;
    cur_.assign(static_cast<std::size_t>(dim_), 0);
    fresh_ = true;
  }

  u64 total() const { return total_; }

  // Restricts the stream to vectors whose first coordinate equals c.
  // Only meaningful for dim >= 1.
  void fix_first(i64 c) {
    cur_.assign(static_cast<std::size_t>(dim_), 0);
    cur_[0] = c;
    fixed_first_ = true;
    fresh_ = true;
    total_ = 1;
    for (int i = 1; i < dim_; ++i) total_ *= static_cast<u64>(p_);
  }

  // Advances to the next vector; returns false once exhausted.  The first
  // call yields the zero vector (or the fixed-first-coordinate origin).
  bool next(std::vector<i64>& out) {
    if (fresh_) {
      fresh_ = false;
      out = cur_;
      return dim_ >= 0;
    }
    int start = fixed_first_ ? 1 : 0;
    for (int i = dim_ - 1; i >= start; --i) {
      if (++cur_[static_cast<std::size_t>(i)] < p_) {
        out = cur_;
        return true;
      }
      cur_[static_cast<std::size_t>(i)] = 0;
    }
    return false;
  }

 private:
  i64 p_;
  int dim_;
  u64 budget_;
  u64 total_ = 1;
  std::vector<i64> cur_;
  bool fresh_ = true;
  bool fixed_first_ = false;
};

// Character-sum helper used everywhere: sum of zeta^{a x} over all x in F_p
// equals p when a == 0 and 0 otherwise; over nonzero x it is p*[a==0] - 1.
inline CycInt additive_character_sum(const PrimeField& f, i64 a,
                                     bool nonzero_only = false) {
  CycInt s(f.p());
  i64 x0 = nonzero_only ? 1 : 0;
  for (i64 x = x0; x < f.p(); ++x) s.accumulate(f.mul(f.reduce(a), x));
  return s;
}

}  // namespace klsv
