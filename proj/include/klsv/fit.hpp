#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "klsv/rat.hpp"

namespace klsv {

enum class FitStatus { Polynomial, NonPolynomial };

inline std::string to_string(FitStatus s) {
  return s == FitStatus::Polynomial ? "POLYNOMIAL" : "NON_POLYNOMIAL";
}

// Result of fitting point counts #X(F_p) against p.  When the counts agree
// with a single polynomial P of degree <= bound on every sampled prime
// (including the held-out ones), chi = P(1) is the compactly supported Euler
// characteristic by the standard specialization argument.
struct CountPolynomial {
  FitStatus status = FitStatus::NonPolynomial;
  QPoly poly;                                  // meaningful when Polynomial
  std::vector<std::pair<i64, i64>> samples;    // (p, count) actually used
  int degree_bound = 0;
  int holdout_checked = 0;                     // how many samples validated the fit
  std::string detail;                          // human-readable failure note
};

// Fits the first (bound + 1) samples exactly and validates the remaining ones.
// At least one held-out sample is required; fewer samples raise
// NotEnoughSamples because an unvalidated interpolation proves nothing.
inline CountPolynomial try_fit(const std::vector<std::pair<i64, i64>>& samples,
                               int degree_bound) {
  std::size_t need = static_cast<std::size_t>(degree_bound) + 2;
  if (samples.size() < need) throw NotEnoughSamples(samples.size(), need);

  CountPolynomial out;
  out.samples = samples;
  out.degree_bound = degree_bound;

  std::vector<std::pair<BigRat, BigRat>> nodes;
  for (int i = 0; i <= degree_bound; ++i)
    nodes.emplace_back(BigRat(samples[static_cast<std::size_t>(i)].first),
                       BigRat(samples[static_cast<std::size_t>(i)].second));
  QPoly p = lagrange_interpolate(nodes);

  for (std::size_t i = static_cast<std::size_t>(degree_bound) + 1;
       i < samples.size(); ++i) {
    BigRat want(samples[i].second);
    BigRat got = p.eval(BigRat(samples[i].first));
    if (got != want) {
      out.status = FitStatus::NonPolynomial;
      out.detail = "held-out prime " + std::to_string(samples[i].first) +
                   " expects " + got.str() + " from the degree-" +
                   std::to_string(degree_bound) + " fit but counted " +
                   std::to_string(samples[i].second);
      return out;
    }
    ++out.holdout_checked;
  }

  out.status = FitStatus::Polynomial;
  out.poly = p;
  return out;
}

// Throwing variant for callers that treat a non-polynomial count as an error.
inline CountPolynomial fit_count_polynomial(
    const std::vector<std::pair<i64, i64>>& samples, int degree_bound) {
  CountPolynomial cp = try_fit(samples, degree_bound);
  if (cp.status != FitStatus::Polynomial) throw NonPolynomialCount(cp.detail);
  return cp;
}

// chi_c = P(1).  The value must come out an integer; a fractional value means
// the fit cannot be a genuine count polynomial.
inline i64 euler_characteristic(const CountPolynomial& cp) {
  if (cp.status != FitStatus::Polynomial)
    throw NonPolynomialCount("no Euler characteristic without a polynomial fit");
  BigRat v = cp.poly.eval(1);
  if (!is_integer(v))
    throw NonPolynomialCount("specialization at 1 is not an integer: " + v.str());
  return to_i64(v);
}

}  // namespace klsv
