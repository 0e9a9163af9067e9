#pragma once

// Batch verification front end: runs the counting oracle and the symbolic
// derivations against the recorded claim catalog, collects the outcomes as
// rows, and serializes them as JSON, CSV or markdown.  Rows never raise; a
// bad locus becomes a SKIPPED row.  The JSON form is byte-deterministic for
// a fixed invocation, so runtimes are reported only in the CSV and markdown
// renderings.

#include <chrono>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "klsv/chi_count.hpp"
#include "klsv/chi_symbolic.hpp"
#include "klsv/tracesum.hpp"

namespace klsv {

struct VerificationRow {
  std::string target;          // claim-catalog id
  std::string params;          // configuration, e.g. "C n=2 d=1"
  std::string citation;        // recorded source of the target value, or empty
  std::string interpretation;  // counting model or "symbolic"
  std::string computed;        // decimal value, or empty when none exists
  std::string target_value;    // decimal value, or empty for record-only rows
  std::string status;          // MATCH, MISMATCH, NON_POLYNOMIAL or SKIPPED
  i64 ms = 0;
};

// A verification target is HARD when its stated value is uncontested: a
// mismatch there is a real failure and flips the exit code.  The contested
// targets report their concordance without affecting the exit code.
struct TargetInfo {
  std::string id;
  std::string citation;
  bool contested = false;
  std::string summary;
};

inline const std::vector<TargetInfo>& verify_targets() {
  static const std::vector<TargetInfo> targets = {
      {"lemma-4.5", "Lemma 4.5 (symplectic pure-tensor cone)", false,
       "chi of the rank-at-most-one locus on the end window is 1"},
      {"lemma-4.6", "Lemma 4.6 (pairing divisor)", false,
       "chi of the gamma_1 = 1 divisor is 0"},
      {"lemma-4.7", "Lemma 4.7 (end-form quadric)", false,
       "chi of the q_A = 0 locus on the cone is 1"},
      {"lemma-4.8", "Lemma 4.8 (pairing-quadric intersection)", true,
       "contested intersection, reported per tensor-class model"},
      {"lemma-5.4", "Lemma 5.4 (end quadric pair)", false,
       "chi of the two-quadric end locus is 2d"},
      {"lemma-5.5", "Lemma 5.5 (three-quadric intersection)", false,
       "chi of the three-condition end locus is 2d"},
      {"prop-4.4-pieces", "Proposition 4.4 (two-block case)", false,
       "projective pieces of the two-block decomposition"},
      {"thm-sp", "Theorem 1.1 (symplectic combination)", true,
       "full symplectic combination, contested through the tensor model"},
      {"thm-orth", "Theorem 1.2 (orthogonal combination)", false,
       "signed end-window combination, 2d or 2(d+1)"},
      {"table1", "Table 1 (dimension, parity and Euler characteristics)",
       false, "all four column loci plus the signed combination"},
  };
  return targets;
}

inline const TargetInfo* find_target(const std::string& id) {
  for (const TargetInfo& t : verify_targets())
    if (t.id == id) return &t;
  return nullptr;
}

inline bool target_contested(const std::string& id) {
  const TargetInfo* t = find_target(id);
  return t != nullptr && t->contested;
}

// Exit-code contract: 0 only when every row of an uncontested target is a
// MATCH.  Rows of unknown targets count as uncontested.
inline int exit_code_for(const std::vector<VerificationRow>& rows) {
  for (const VerificationRow& r : rows)
    if (!target_contested(r.target) && r.status != "MATCH") return 1;
  return 0;
}

// The six orthogonal configurations of the end-window table, smallest block
// count each.
struct OrthConfig {
  Family family = Family::B;
  i64 n = 0;
  i64 d = 0;
  bool degenerate = false;
};

inline const std::vector<OrthConfig>& table_configs() {
  static const std::vector<OrthConfig> rows = {
      {Family::B, 2, 2, false}, {Family::B, 1, 1, false},
      {Family::D, 2, 2, false}, {Family::D, 2, 1, true},
      {Family::D2, 2, 1, false}, {Family::D2, 3, 2, true},
  };
  return rows;
}

struct VerifyOptions {
  std::vector<int> ds;  // d sweep; empty means the target's default
  std::optional<Family> family;
  std::optional<i64> n;
  std::optional<bool> degenerate;  // orthogonal profile filter
  std::vector<i64> primes;         // overrides the prime plan when nonempty
  i64 seed = 0;
  u64 budget = 0;
  int threads = 1;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  i64 ms() const {
    auto now = std::chrono::steady_clock::now();
    return std::chrono::duration_cast<std::chrono::milliseconds>(now - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string sym_params(i64 n, i64 d) {
  return "C n=" + std::to_string(n) + " d=" + std::to_string(d);
}

inline std::string orth_params(const OrthConfig& c) {
  std::string out = to_string(c.family) + " n=" + std::to_string(c.n) +
                    " d=" + std::to_string(c.d);
  if (c.family != Family::B) out += c.degenerate ? " deg" : " nondeg";
  return out;
}

inline PrimePlan plan_for(const VarietySpec& vs, const VerifyOptions& opt) {
  if (opt.primes.empty()) return make_prime_plan(vs);
  PrimePlan plan;
  plan.degree_bound = degree_bound_for(vs);
  plan.primes = opt.primes;
  return plan;
}

// Runs one counting job and turns the outcome into a row.  target_value is
// asserted when want is set; otherwise the row only records the computed chi.
inline VerificationRow count_row(const std::string& target,
                                 const std::string& params,
                                 const std::string& citation,
                                 const VarietySpec& vs,
                                 std::optional<i64> want,
                                 const VerifyOptions& opt) {
  VerificationRow row;
  row.target = target;
  row.params = params;
  row.citation = citation;
  row.interpretation = to_string(vs.interp);
  if (want) row.target_value = std::to_string(*want);
  Stopwatch timer;
  try {
    ChiResult r = chi_by_counting(vs, plan_for(vs, opt), opt.budget,
                                  opt.threads);
    if (!r.has_chi) {
      row.status = "NON_POLYNOMIAL";
    } else {
      row.computed = std::to_string(r.chi);
      row.status = (!want || r.chi == *want) ? "MATCH" : "MISMATCH";
    }
  } catch (const Error&) {
    row.status = "SKIPPED";
  }
  row.ms = timer.ms();
  return row;
}

// Fits the pointwise signed combination of several loci over one shared
// prime plan.  All parts must live in the same ambient so a single degree
// bound covers the sum.
inline CountPolynomial fit_signed(
    const std::vector<std::pair<i64, VarietySpec>>& parts,
    const PrimePlan& plan, u64 budget, int threads) {
  std::vector<std::pair<i64, i64>> samples;
  samples.reserve(plan.primes.size());
  for (i64 p : plan.primes) {
    i64 total = 0;
    for (const auto& [coeff, vs] : parts)
      total += coeff * count_points(vs, p, budget, threads).count;
    samples.emplace_back(p, total);
  }
  return try_fit(samples, plan.degree_bound);
}

inline VerificationRow signed_row(const std::string& target,
                                  const std::string& params,
                                  const std::string& citation,
                                  const std::string& interpretation,
                                  const std::vector<std::pair<i64, VarietySpec>>& parts,
                                  i64 sign, i64 want,
                                  const VerifyOptions& opt) {
  VerificationRow row;
  row.target = target;
  row.params = params;
  row.citation = citation;
  row.interpretation = interpretation;
  row.target_value = std::to_string(want);
  Stopwatch timer;
  try {
    PrimePlan plan = plan_for(parts.front().second, opt);
    CountPolynomial fit = fit_signed(parts, plan, opt.budget, opt.threads);
    if (fit.status != FitStatus::Polynomial) {
      row.status = "NON_POLYNOMIAL";
    } else {
      i64 value = sign * euler_characteristic(fit);
      row.computed = std::to_string(value);
      row.status = value == want ? "MATCH" : "MISMATCH";
    }
  } catch (const Error&) {
    row.status = "SKIPPED";
  }
  row.ms = timer.ms();
  return row;
}

// Replays a registered derivation and compares it against its stated value.
inline VerificationRow symbolic_row(const std::string& target,
                                    const std::string& params,
                                    const std::string& citation,
                                    const std::string& derivation_id,
                                    const DerivationParams& prm) {
  VerificationRow row;
  row.target = target;
  row.params = params;
  row.citation = citation;
  row.interpretation = "symbolic";
  Stopwatch timer;
  try {
    i64 want = derivation_target(derivation_id, prm);
    row.target_value = std::to_string(want);
    ChiExpr e = run_derivation(derivation_id, prm);
    row.computed = std::to_string(e.value);
    row.status = (replay(e) && e.value == want) ? "MATCH" : "MISMATCH";
  } catch (const Error&) {
    row.status = "SKIPPED";
  }
  row.ms = timer.ms();
  return row;
}

}  // namespace detail

// Model-level closed forms for the contested intersection: under the raw
// one-sided pairing the two conditions stay independent on every class and
// the locus keeps chi 0; symmetrizing the pairing splits off a hyperplane
// factor and the chi grows to d.  These are the values the counting oracle
// is expected to reproduce, recorded so the concordance can separate "the
// oracle disagrees with itself" from "the models disagree with the claim".
inline i64 intersection_closed_form(const Interpretation& it, i64 d) {
  return it.gamma == GammaModel::Symmetrized ? d : 0;
}

// Same role for the full symplectic end-window combination
// -chi(U_0) + chi(W_0) from the four piece values.  Symmetrizing lifts the
// divisor and the intersection by the same d, so the combination stays 0
// under every model; the claimed value is never reproduced by counting.
inline i64 combination_closed_form(const Interpretation& it, i64 d) {
  i64 divisor = it.gamma == GammaModel::Symmetrized ? d : 0;
  i64 cap = intersection_closed_form(it, d);
  return -(1 - divisor) + (1 - cap);
}

inline std::vector<VerificationRow> run_verify_target(const std::string& id,
                                                      const VerifyOptions& opt) {
  const TargetInfo* info = find_target(id);
  if (info == nullptr) throw UnknownDerivation(id);
  std::vector<VerificationRow> rows;

  auto ds_or = [&](std::vector<int> fallback) {
    return opt.ds.empty() ? fallback : opt.ds;
  };
  auto configs = [&]() {
    std::vector<OrthConfig> out;
    for (OrthConfig c : table_configs()) {
      if (opt.family && c.family != *opt.family) continue;
      if (!opt.ds.empty() &&
          std::find(opt.ds.begin(), opt.ds.end(), static_cast<int>(c.d)) ==
              opt.ds.end())
        continue;
      if (opt.degenerate && c.degenerate != *opt.degenerate) continue;
      if (opt.n) c.n = *opt.n;
      out.push_back(c);
    }
    return out;
  };

  // Shared runner for the three uncontested cone lemmas.
  auto sym_lemma = [&](const std::string& variety, i64 want,
                       const std::string& derivation) {
    for (int d : ds_or({1, 2, 3})) {
      i64 n = opt.n.value_or(d);
      GradedSpace sp = build_symplectic_space(n, d);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::sym_params(n, d);
      rows.push_back(detail::count_row(id, params, info->citation,
                                       make_variety(sp, fn, variety), want,
                                       opt));
      DerivationParams prm;
      prm.n = static_cast<int>(n);
      prm.d = d;
      rows.push_back(
          detail::symbolic_row(id, params, info->citation, derivation, prm));
    }
  };

  if (id == "lemma-4.5") {
    sym_lemma("SymSq", 1, "lemma-sym-square");
  } else if (id == "lemma-4.6") {
    sym_lemma("Gamma1", 0, "lemma-gamma1");
  } else if (id == "lemma-4.7") {
    sym_lemma("Gamma1Prime", 1, "lemma-gamma1prime");
  } else if (id == "lemma-4.8") {
    const std::vector<Interpretation> models = {
        {TensorModel::Parallel, GammaModel::Raw},
        {TensorModel::Decomposable, GammaModel::Raw},
        {TensorModel::Decomposable, GammaModel::Symmetrized}};
    for (int d : ds_or({1, 2})) {
      i64 n = opt.n.value_or(d);
      GradedSpace sp = build_symplectic_space(n, d);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::sym_params(n, d);
      for (const Interpretation& it : models) {
        VarietySpec vs = make_variety(sp, fn, "Gamma1CapGamma1Prime");
        vs.interp = it;
        rows.push_back(
            detail::count_row(id, params, info->citation, vs, -d, opt));
        // Record-only comparison against the model expectation; the target
        // is derived, so it carries no citation.
        VerificationRow model = rows.back();
        model.citation = "";
        model.interpretation = to_string(it) + " model expectation";
        model.target_value = std::to_string(intersection_closed_form(it, d));
        if (model.status == "MATCH" || model.status == "MISMATCH")
          model.status = model.computed == model.target_value ? "MATCH"
                                                              : "MISMATCH";
        model.ms = 0;
        rows.push_back(std::move(model));
      }
      DerivationParams prm;
      prm.n = static_cast<int>(n);
      prm.d = d;
      rows.push_back(detail::symbolic_row(id, params, info->citation,
                                          "lemma-two-quadrics", prm));
    }
  } else if (id == "lemma-5.4" || id == "lemma-5.5") {
    bool pair = id == "lemma-5.4";
    for (int d : ds_or({1, 2})) {
      OrthConfig c{Family::B, opt.n.value_or(d), d, false};
      GradedSpace sp = build_orthogonal_space(c.family, c.n, c.d);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::orth_params(c);
      rows.push_back(detail::count_row(
          id, params, info->citation,
          make_variety(sp, fn, pair ? "Q1" : "W11"), 2 * d, opt));
      DerivationParams prm;
      prm.family = Family::B;
      prm.d = d;
      rows.push_back(detail::symbolic_row(
          id, params, info->citation,
          pair ? "lemma-orth-Q1" : "lemma-orth-W11", prm));
    }
  } else if (id == "prop-4.4-pieces") {
    const std::vector<std::pair<std::string, std::string>> pieces = {
        {"PU0", "P(U_0)"},
        {"PU0p", "P(U_0')"},
        {"PW0", "P(W_0)"},
        {"PW0cap", "P(W_0 cap U_0')"}};
    for (int d : ds_or({1, 2})) {
      GradedSpace sp = build_symplectic_space(d, d);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::sym_params(d, d);
      DerivationParams prm;
      prm.n = d;
      prm.d = d;
      ChiExpr e = run_derivation("prop-m-eq-2", prm);
      for (const auto& [variety, column] : pieces)
        rows.push_back(detail::count_row(id, params, info->citation,
                                         make_variety(sp, fn, variety),
                                         trace_column(e, column), opt));
      rows.push_back(detail::symbolic_row(id, params, info->citation,
                                          "prop-m-eq-2", prm));
    }
  } else if (id == "thm-sp") {
    const std::vector<Interpretation> models = {
        {TensorModel::Parallel, GammaModel::Raw},
        {TensorModel::Decomposable, GammaModel::Raw},
        {TensorModel::Decomposable, GammaModel::Symmetrized}};
    for (int d : ds_or({1, 2})) {
      i64 n = opt.n.value_or(d);
      GradedSpace sp = build_symplectic_space(n, d);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::sym_params(n, d);
      for (const Interpretation& it : models) {
        std::vector<std::pair<i64, VarietySpec>> parts;
        for (const auto& [coeff, name] :
             std::vector<std::pair<i64, std::string>>{
                 {-1, "SymSq"},
                 {1, "Gamma1"},
                 {1, "Gamma1Prime"},
                 {-1, "Gamma1CapGamma1Prime"}}) {
          VarietySpec vs = make_variety(sp, fn, name);
          vs.interp = it;
          parts.emplace_back(coeff, std::move(vs));
        }
        rows.push_back(detail::signed_row(id, params, info->citation,
                                          to_string(it) + " combination",
                                          parts, 1, d, opt));
      }
      DerivationParams prm;
      prm.n = static_cast<int>(n);
      prm.d = d;
      rows.push_back(
          detail::symbolic_row(id, params, info->citation, "thm-sp", prm));
    }
  } else if (id == "table1" || id == "thm-orth") {
    bool full_table = id == "table1";
    for (const OrthConfig& c : configs()) {
      EndProfile profile =
          c.family == Family::B
              ? EndProfile::Auto
              : (c.degenerate ? EndProfile::Degenerate
                              : EndProfile::Nondegenerate);
      GradedSpace sp = build_orthogonal_space(c.family, c.n, c.d, profile);
      StableFunctional fn = build_functional(sp, opt.seed);
      std::string params = detail::orth_params(c);
      DerivationParams prm;
      prm.family = c.family;
      prm.d = static_cast<int>(c.d);
      prm.degenerate = c.degenerate;
      ChiExpr e = run_derivation("table1-row", prm);

      if (full_table) {
        const std::vector<std::pair<std::string, std::string>> columns = {
            {"Q", "column chi(Q)"},
            {"Q1", "column chi(Q_1)"},
            {"W1", "column chi(W_1)"},
            {"W11", "column chi(W_11)"}};
        for (const auto& [variety, column] : columns)
          rows.push_back(detail::count_row(
              id, params + " " + variety, info->citation,
              make_variety(sp, fn, variety), trace_column(e, column), opt));
      }

      // Signed end-window combination, counted pointwise so the four loci
      // share their samples' arithmetic.  An odd-dimensional window flips
      // the sign of the alternating sum.
      std::vector<std::pair<i64, VarietySpec>> parts = {
          {1, make_variety(sp, fn, "Q")},
          {-1, make_variety(sp, fn, "Q1")},
          {-1, make_variety(sp, fn, "W1")},
          {1, make_variety(sp, fn, "W11")}};
      int window_dim = sp.piece_dim(0) + sp.piece_dim(sp.ell());
      i64 sign = window_dim % 2 == 1 ? -1 : 1;
      rows.push_back(detail::signed_row(
          id, params + " comb", "Theorem 1.2 (orthogonal combination)",
          "signed combination", parts, sign, e.value, opt));
      rows.push_back(detail::symbolic_row(
          id, params, "Theorem 1.2 (orthogonal combination)",
          full_table ? "table1-row" : "thm-orth", prm));
    }
  } else {
    throw UnknownDerivation(id);
  }
  return rows;
}

// Adapts a trace-sum report to verification rows so the fixed CSV schema can
// carry identity checks too.  Identity targets are derived facts; the rows
// carry no citation.
inline std::vector<VerificationRow> rows_from_trace(const TraceSumReport& rep) {
  std::vector<VerificationRow> rows;
  std::string params = to_string(rep.family) + " n=" + std::to_string(rep.n) +
                       " d=" + std::to_string(rep.d) +
                       " p=" + std::to_string(rep.p);
  for (const IdentityRow& check : rep.checks) {
    VerificationRow row;
    row.target = "trace-" + check.name;
    row.params = params;
    row.interpretation = "cyclotomic";
    row.computed = sparse_list(check.lhs);
    row.target_value = sparse_list(check.rhs);
    if (check.measured_e != IdentityRow::kNoExponent)
      row.target_value += " e=" + std::to_string(check.measured_e);
    row.status = check.pass ? "MATCH" : "MISMATCH";
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class ReportFormat { Json, Csv, Markdown };

inline ReportFormat format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw OutOfDomain("unknown format '" + s + "' (want json, csv or markdown)");
}

namespace detail {

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out.empty() ? " " : out;
}

}  // namespace detail

// Renders rows in the requested format.  The JSON document is versioned and
// byte-deterministic: runtimes appear only in CSV and markdown.  A nonempty
// invocation echo is embedded in the JSON so a report names the run that
// produced it.
inline std::string emit_report(
    const std::vector<VerificationRow>& rows, ReportFormat fmt,
    const std::vector<std::pair<std::string, std::string>>& invocation = {}) {
  std::ostringstream out;
  if (fmt == ReportFormat::Json) {
    out << "{\"version\":1";
    if (!invocation.empty()) {
      out << ",\"invocation\":{";
      bool first = true;
      for (const auto& [key, value] : invocation) {
        if (!first) out << ",";
        first = false;
        out << detail::quoted(key) << ":" << detail::quoted(value);
      }
      out << "}";
    }
    out << ",\"rows\":[";
    bool first = true;
    for (const VerificationRow& r : rows) {
      if (!first) out << ",";
      first = false;
      out << "{\"target\":" << detail::quoted(r.target)
          << ",\"params\":" << detail::quoted(r.params)
          << ",\"citation\":" << detail::quoted(r.citation)
          << ",\"interpretation\":" << detail::quoted(r.interpretation)
          << ",\"computed\":" << detail::quoted(r.computed)
          << ",\"target_value\":" << detail::quoted(r.target_value)
          << ",\"status\":" << detail::quoted(r.status) << "}";
    }
    out << "]}";
    return out.str();
  }
  if (fmt == ReportFormat::Csv) {
    out << "target,params,citation,interpretation,computed,target_value,"
           "status,ms\n";
    for (const VerificationRow& r : rows)
      out << detail::csv_cell(r.target) << "," << detail::csv_cell(r.params)
          << "," << detail::csv_cell(r.citation) << ","
          << detail::csv_cell(r.interpretation) << ","
          << detail::csv_cell(r.computed) << ","
          << detail::csv_cell(r.target_value) << ","
          << detail::csv_cell(r.status) << "," << r.ms << "\n";
    return out.str();
  }
  out << "| target | params | citation | interpretation | computed | target "
         "value | status | ms |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const VerificationRow& r : rows)
    out << "| " << detail::md_cell(r.target) << " | "
        << detail::md_cell(r.params) << " | " << detail::md_cell(r.citation)
        << " | " << detail::md_cell(r.interpretation) << " | "
        << detail::md_cell(r.computed) << " | "
        << detail::md_cell(r.target_value) << " | "
        << detail::md_cell(r.status) << " | " << r.ms << " |\n";
  return out.str();
}

}  // namespace klsv
