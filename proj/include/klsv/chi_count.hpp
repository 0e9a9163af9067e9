#pragma once

#include <algorithm>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "klsv/fit.hpp"
#include "klsv/varieties.hpp"

namespace klsv {

// Degree bound for the count polynomial of a registered locus, read off the
// ambient alone.  A cone over the listed blocks has at most p^total points;
// its projectivization drops one degree; decomposable classes grow like pairs
// modulo one scaling, so the bound doubles minus one.  Safe overestimates:
// they cost extra primes, never correctness.
inline int degree_bound_for(const VarietySpec& vs) {
  int total = 0;
  for (int pc : vs.pieces) total += vs.space->piece_dim(pc);
  if (vs.kind == AmbientKind::Projective) return total - 1;
  if (vs.interp.tensor == TensorModel::Decomposable) return 2 * total - 1;
  return total;
}

// A prime is usable for sampling when the functional's stability certificate
// holds there: reductions of the pencil roots stay distinct, so the counted
// fibers have the same shape at every sampled prime.  The lower gate mirrors
// build_stable_functional.
inline bool plan_admissible(const GradedSpace& sp, const StableFunctional& fn,
                            i64 p) {
  if (p < 3 || p % 2 == 0) return false;
  for (i64 q = 3; q * q <= p; q += 2)
    if (p % q == 0) return false;
  i64 pencil_dim = sp.symplectic() ? sp.d() : sp.piece_dim(0);
  if (p <= std::max(sp.d(), pencil_dim) + 2) return false;
  return check_stability(sp, fn, p).pass;
}

// The sampled primes for one locus: the first degree_bound + 2 + extra
// admissible primes, scanning odd numbers from 3 upward.  bound + 1 points
// pin the interpolation and the rest are held out.
struct PrimePlan {
  int degree_bound = 0;
  std::vector<i64> primes;
};

inline PrimePlan make_prime_plan(const VarietySpec& vs, int extra_holdout = 0) {
  validate_spec(vs);
  PrimePlan plan;
  plan.degree_bound = degree_bound_for(vs);
  int need = plan.degree_bound + 2 + extra_holdout;
  i64 candidate = 3;
  int examined = 0;
  while (static_cast<int>(plan.primes.size()) < need) {
    if (plan_admissible(*vs.space, *vs.fn, candidate))
      plan.primes.push_back(candidate);
    candidate += 2;
    if (++examined > 20000)
      throw NotEnoughSamples(plan.primes.size(),
                             static_cast<std::size_t>(need));
  }
  return plan;
}

// Counts the locus at every planned prime.  Distinct primes run concurrently;
// the largest prime additionally splits internally when threads remain.
inline std::vector<std::pair<i64, i64>> sample_counts(const VarietySpec& vs,
                                                      const PrimePlan& plan,
                                                      u64 budget = 0,
                                                      int threads = 1) {
  std::vector<std::pair<i64, i64>> samples(plan.primes.size());
  if (threads <= 1 || plan.primes.size() == 1) {
    for (std::size_t i = 0; i < plan.primes.size(); ++i)
      samples[i] = {plan.primes[i],
                    count_points(vs, plan.primes[i], budget, threads).count};
    return samples;
  }
  std::vector<std::future<i64>> jobs(plan.primes.size());
  for (std::size_t i = 0; i < plan.primes.size(); ++i) {
    i64 p = plan.primes[i];
    // The top prime dominates the work, so it gets the spare parallelism.
    int inner = (i + 1 == plan.primes.size()) ? threads : 1;
    jobs[i] = std::async(std::launch::async, [&vs, p, budget, inner] {
      return count_points(vs, p, budget, inner).count;
    });
  }
  for (std::size_t i = 0; i < plan.primes.size(); ++i)
    samples[i] = {plan.primes[i], jobs[i].get()};
  return samples;
}

struct ChiResult {
  CountPolynomial fit;
  PrimePlan plan;
  bool has_chi = false;
  i64 chi = 0;
};

// Count, fit, specialize at 1.  A failed holdout leaves has_chi false with
// the mismatch spelled out in fit.detail; it is an outcome, not an error.
inline ChiResult chi_by_counting(const VarietySpec& vs, const PrimePlan& plan,
                                 u64 budget = 0, int threads = 1) {
  ChiResult out;
  out.plan = plan;
  out.fit = try_fit(sample_counts(vs, plan, budget, threads),
                    plan.degree_bound);
  if (out.fit.status == FitStatus::Polynomial) {
    out.chi = euler_characteristic(out.fit);
    out.has_chi = true;
  }
  return out;
}

inline ChiResult chi_by_counting(const VarietySpec& vs, u64 budget = 0,
                                 int threads = 1, int extra_holdout = 0) {
  return chi_by_counting(vs, make_prime_plan(vs, extra_holdout), budget,
                         threads);
}

// One comparison of a computed chi against a recorded target value.
struct ChiTarget {
  std::string label;
  VarietySpec spec;
  bool has_target = false;
  i64 target = 0;

  ChiTarget(std::string lbl, VarietySpec vs)
      : label(std::move(lbl)), spec(std::move(vs)) {}
  ChiTarget(std::string lbl, VarietySpec vs, i64 want)
      : label(std::move(lbl)), spec(std::move(vs)), has_target(true),
        target(want) {}
};

struct ChiRow {
  std::string label;
  std::string interp;
  std::string status;  // MATCH, MISMATCH, NON_POLYNOMIAL, SKIPPED
  bool has_computed = false;
  i64 computed = 0;
  bool has_target = false;
  i64 target = 0;
  std::string detail;
  std::vector<std::pair<i64, i64>> samples;
};

// Runs every target and reports, never raising: a mismatch, a non-polynomial
// count, and an unusable spec are all rows, so one bad locus cannot take the
// rest of the table down with it.
inline std::vector<ChiRow> concordance(const std::vector<ChiTarget>& targets,
                                       u64 budget = 0, int threads = 1) {
  std::vector<ChiRow> rows;
  rows.reserve(targets.size());
  for (const ChiTarget& t : targets) {
    ChiRow row;
    row.label = t.label;
    row.interp = to_string(t.spec.interp);
    row.has_target = t.has_target;
    row.target = t.target;
    try {
      ChiResult r = chi_by_counting(t.spec, budget, threads);
      row.samples = r.fit.samples;
      if (!r.has_chi) {
        row.status = "NON_POLYNOMIAL";
        row.detail = r.fit.detail;
      } else {
        row.has_computed = true;
        row.computed = r.chi;
        if (!t.has_target)
          row.status = "MATCH";
        else if (r.chi == t.target)
          row.status = "MATCH";
        else
          row.status = "MISMATCH";
      }
    } catch (const Error& e) {
      row.status = "SKIPPED";
      row.detail = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace klsv
