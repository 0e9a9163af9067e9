#pragma once

#include <stdexcept>
#include <string>

namespace klsv {

// Every failure mode the toolkit can hit gets its own exception type so that
// callers (and tests) can match on the condition instead of parsing messages.
// All of them derive from Error, which itself derives from std::runtime_error.

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Field construction.
struct NotPrime : Error {
  explicit NotPrime(long long p)
      : Error("modulus " + std::to_string(p) + " is not prime") {}
};
struct EvenCharacteristic : Error {
  EvenCharacteristic()
      : Error("characteristic 2 is excluded: quadratic forms and their "
              "associated bilinear pairings degenerate there") {}
};

// Cyclotomic arithmetic.
struct ModulusMismatch : Error {
  ModulusMismatch(long long a, long long b)
      : Error("cyclotomic operands live over different primes: " +
              std::to_string(a) + " vs " + std::to_string(b)) {}
};

// Enumeration.
struct BudgetExceeded : Error {
  explicit BudgetExceeded(unsigned long long budget)
      : Error("enumeration would exceed the point budget of " +
              std::to_string(budget)) {}
};

// Graded space construction.
struct NotADivisor : Error {
  NotADivisor(long long d, long long n)
      : Error("block size " + std::to_string(d) + " does not divide " +
              std::to_string(n)) {}
};
struct InvalidDivisor : Error {
  explicit InvalidDivisor(const std::string& why) : Error(why) {}
};
struct ParityViolation : Error {
  explicit ParityViolation(const std::string& why) : Error(why) {}
};

// Stable functional search.
struct NoStableFound : Error {
  explicit NoStableFound(const std::string& why) : Error(why) {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& why) : Error(why) {}
};

// Wild-part prediction.
struct InvalidEllipticNumber : Error {
  InvalidEllipticNumber(long long m, const std::string& family)
      : Error("m = " + std::to_string(m) +
              " is not a valid block count for family " + family) {}
};

// Variety specification.
struct MissingPiece : Error {
  explicit MissingPiece(const std::string& why) : Error(why) {}
};
struct InhomogeneousOnProjective : Error {
  explicit InhomogeneousOnProjective(const std::string& form)
      : Error("form " + form +
              " is not homogeneous of a single degree, so it cuts no "
              "well-defined locus in projective space") {}
};
struct InhomogeneousCondition : Error {
  explicit InhomogeneousCondition(const std::string& form)
      : Error("condition on " + form +
              " compares a non-invariant value against a fixed scalar") {}
};

// Counting and interpolation.
struct NotEnoughSamples : Error {
  NotEnoughSamples(std::size_t have, std::size_t need)
      : Error("polynomial fit needs " + std::to_string(need) +
              " samples but only " + std::to_string(have) + " are available") {}
};
struct NonPolynomialCount : Error {
  explicit NonPolynomialCount(const std::string& why) : Error(why) {}
};

// Trace sums.
struct OnExcludedDivisor : Error {
  explicit OnExcludedDivisor(int i)
      : Error("point lies on the excluded divisor at depth " +
              std::to_string(i)) {}
};
struct OnExcludedQuadric : Error {
  explicit OnExcludedQuadric(int i)
      : Error("point lies on the excluded quadric at depth " +
              std::to_string(i)) {}
};
struct OutOfDomain : Error {
  explicit OutOfDomain(const std::string& why) : Error(why) {}
};
struct NoSuchStep : Error {
  explicit NoSuchStep(const std::string& why) : Error(why) {}
};

// Symbolic derivations.
struct UnknownDerivation : Error {
  explicit UnknownDerivation(const std::string& id)
      : Error("no registered derivation named " + id) {}
};
struct ArityMismatch : Error {
  explicit ArityMismatch(const std::string& why) : Error(why) {}
};
struct UnknownKind : Error {
  explicit UnknownKind(const std::string& why) : Error(why) {}
};

}  // namespace klsv
