// klv: verification front end.
//
//   klv verify <target>   run a claim-catalog target and report row outcomes
//   klv trace             exact trace sums and identity checks at a prime
//   klv registry          list verification targets and symbolic derivations
//   klv derive <id>       replay one symbolic derivation and print its trace
//
// Exit codes: 0 success, 1 hard mismatch or identity failure, 2 usage.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "klsv/report.hpp"

namespace {

using namespace klsv;

constexpr int kUsage = 2;

// Accepts "3", "1,3" and "1..4".
std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  auto range = text.find("..");
  if (range != std::string::npos) {
    int lo = std::stoi(text.substr(0, range));
    int hi = std::stoi(text.substr(range + 2));
    if (hi < lo) throw OutOfDomain("empty range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(std::stoi(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (out.empty()) throw OutOfDomain("empty list '" + text + "'");
  return out;
}

std::vector<i64> parse_prime_list(const std::string& text) {
  std::vector<i64> primes;
  for (int v : parse_int_list(text)) {
    if (!is_admissible_prime(v, 2))
      throw OutOfDomain("'" + std::to_string(v) + "' is not an odd prime");
    primes.push_back(v);
  }
  return primes;
}

bool parse_profile(const std::string& text) {
  if (text == "deg" || text == "degenerate") return true;
  if (text == "nondeg" || text == "nondegenerate") return false;
  throw OutOfDomain("unknown profile '" + text + "' (want nondeg or deg)");
}

void write_document(const std::string& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc;
    if (!doc.empty() && doc.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw OutOfDomain("cannot open '" + out_path + "' for writing");
  file << doc;
}

struct CommonFlags {
  std::string family = "C";
  i64 n = 0;  // 0 means "derive from d"
  std::string d_text;
  std::string profile;
  std::string primes_text;
  i64 seed = 0;
  u64 budget = 0;
  int threads = 1;
  std::string format = "markdown";
  std::string out;
};

void attach_common(CLI::App* cmd, CommonFlags& f, bool with_counting_knobs) {
  cmd->add_option("--family", f.family, "group family: C, B, D or 2D");
  cmd->add_option("--n", f.n, "space parameter n");
  cmd->add_option("--d", f.d_text, "middle dimension: one value, a,b or a..b");
  cmd->add_option("--profile", f.profile,
                  "end-block profile for D/2D: nondeg or deg");
  if (with_counting_knobs) {
    cmd->add_option("--primes", f.primes_text,
                    "comma-separated odd primes overriding the plan");
    cmd->add_option("--budget", f.budget,
                    "enumeration budget cap, 0 for unlimited");
  }
  cmd->add_option("--seed", f.seed, "functional seed");
  cmd->add_option("--threads", f.threads, "worker threads")
      ->envname("KLV_THREADS");
  cmd->add_option("--format", f.format, "output format: json, csv or markdown");
  cmd->add_option("--out", f.out, "write the report to this file");
}

VerifyOptions options_from(const CommonFlags& f, const CLI::App* cmd) {
  VerifyOptions opt;
  if (!f.d_text.empty()) opt.ds = parse_int_list(f.d_text);
  if (cmd->count("--family") > 0) opt.family = family_from_string(f.family);
  if (f.n > 0) opt.n = f.n;
  if (!f.profile.empty()) opt.degenerate = parse_profile(f.profile);
  if (!f.primes_text.empty()) opt.primes = parse_prime_list(f.primes_text);
  opt.seed = f.seed;
  opt.budget = f.budget;
  opt.threads = f.threads;
  return opt;
}

std::vector<std::pair<std::string, std::string>> invocation_echo(
    const std::string& command, const std::string& target,
    const CommonFlags& f, const CLI::App* cmd) {
  std::vector<std::pair<std::string, std::string>> echo;
  echo.emplace_back("command", command);
  if (!target.empty()) echo.emplace_back("target", target);
  if (cmd->count("--family") > 0) echo.emplace_back("family", f.family);
  if (f.n > 0) echo.emplace_back("n", std::to_string(f.n));
  if (!f.d_text.empty()) echo.emplace_back("d", f.d_text);
  if (!f.profile.empty()) echo.emplace_back("profile", f.profile);
  if (!f.primes_text.empty()) echo.emplace_back("primes", f.primes_text);
  echo.emplace_back("seed", std::to_string(f.seed));
  echo.emplace_back("budget", std::to_string(f.budget));
  return echo;
}

int run_verify(const std::string& target, const CommonFlags& f,
               const CLI::App* cmd) {
  VerifyOptions opt = options_from(f, cmd);
  std::vector<VerificationRow> rows = run_verify_target(target, opt);
  write_document(emit_report(rows, format_from_string(f.format),
                             invocation_echo("verify", target, f, cmd)),
                 f.out);
  return exit_code_for(rows);
}

GradedSpace space_from(const CommonFlags& f, i64 d) {
  Family fam = family_from_string(f.family);
  if (fam == Family::C) {
    i64 n = f.n > 0 ? f.n : d;
    return build_symplectic_space(n, d);
  }
  EndProfile profile = EndProfile::Auto;
  if (!f.profile.empty())
    profile = parse_profile(f.profile) ? EndProfile::Degenerate
                                       : EndProfile::Nondegenerate;
  i64 n = f.n > 0 ? f.n : d;
  return build_orthogonal_space(fam, n, d, profile);
}

int run_trace(const CommonFlags& f, const std::string& x_text) {
  std::vector<i64> primes =
      f.primes_text.empty() ? std::vector<i64>{3} : parse_prime_list(f.primes_text);
  std::vector<int> ds = f.d_text.empty() ? std::vector<int>{1}
                                         : parse_int_list(f.d_text);
  if (ds.size() != 1)
    throw OutOfDomain("trace wants exactly one d, got '" + f.d_text + "'");
  GradedSpace sp = space_from(f, ds[0]);
  StableFunctional fn = build_functional(sp, f.seed);

  std::vector<TraceSumReport> reports;
  bool all_pass = true;
  for (i64 p : primes) {
    TraceSumReport rep = make_trace_report(sp, fn, p, f.threads);
    if (!x_text.empty()) {
      std::vector<i64> keep;
      for (int x : parse_int_list(x_text)) {
        i64 r = ((x % p) + p) % p;
        if (r == 0)
          throw OutOfDomain("x=" + std::to_string(x) +
                            " vanishes mod p=" + std::to_string(p));
        keep.push_back(r);
      }
      TraceSumReport cut = rep;
      cut.xs.clear();
      cut.sums.clear();
      cut.weil.clear();
      for (i64 x : keep) {
        cut.xs.push_back(x);
        cut.sums.emplace(x, rep.sums.at(x));
        for (const WeilNote& note : rep.weil)
          if (note.x == x) cut.weil.push_back(note);
      }
      rep = std::move(cut);
    }
    for (const IdentityRow& row : rep.checks) all_pass = all_pass && row.pass;
    reports.push_back(std::move(rep));
  }

  ReportFormat fmt = format_from_string(f.format);
  std::string doc;
  if (fmt == ReportFormat::Json) {
    if (reports.size() == 1) {
      doc = to_json(reports[0]);
    } else {
      doc = "{\"version\":1,\"reports\":[";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0) doc += ",";
        doc += to_json(reports[i]);
      }
      doc += "]}";
    }
  } else {
    std::vector<VerificationRow> rows;
    for (const TraceSumReport& rep : reports) {
      std::vector<VerificationRow> part = rows_from_trace(rep);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (fmt == ReportFormat::Csv) {
      doc = emit_report(rows, fmt);
    } else {
      std::ostringstream md;
      for (const TraceSumReport& rep : reports) {
        md << "## " << sp.describe() << " at p=" << rep.p << "\n\n";
        md << "| x | S(x) | magnitude | reference |\n|---|---|---|---|\n";
        for (i64 x : rep.xs) {
          const WeilNote* note = nullptr;
          for (const WeilNote& w : rep.weil)
            if (w.x == x) note = &w;
          md << "| " << x << " | `" << sparse_list(rep.sums.at(x)) << "` | "
             << (note ? note->magnitude : 0.0) << " | "
             << (note ? note->reference : 0.0) << " |\n";
        }
        md << "\n";
      }
      md << emit_report(rows, ReportFormat::Markdown);
      doc = md.str();
    }
  }
  write_document(doc, f.out);
  return all_pass ? 0 : 1;
}

int run_registry(const std::string& format, const std::string& out) {
  ReportFormat fmt = format_from_string(format);
  std::ostringstream doc;
  if (fmt == ReportFormat::Json) {
    doc << "{\"version\":1,\"targets\":[";
    bool first = true;
    for (const TargetInfo& t : verify_targets()) {
      if (!first) doc << ",";
      first = false;
      doc << "{\"id\":" << detail::quoted(t.id)
          << ",\"class\":" << (t.contested ? "\"CONTESTED\"" : "\"HARD\"")
          << ",\"citation\":" << detail::quoted(t.citation)
          << ",\"summary\":" << detail::quoted(t.summary) << "}";
    }
    doc << "],\"derivations\":[";
    first = true;
    for (const std::string& id : derivation_names()) {
      if (!first) doc << ",";
      first = false;
      doc << detail::quoted(id);
    }
    doc << "]}";
  } else if (fmt == ReportFormat::Markdown) {
    doc << "| target | class | citation | summary |\n|---|---|---|---|\n";
    for (const TargetInfo& t : verify_targets())
      doc << "| " << t.id << " | " << (t.contested ? "CONTESTED" : "HARD")
          << " | " << t.citation << " | " << t.summary << " |\n";
    doc << "\nderivations:";
    for (const std::string& id : derivation_names()) doc << " " << id;
    doc << "\n";
  } else {
    throw OutOfDomain("registry has no csv form; use json or markdown");
  }
  write_document(doc.str(), out);
  return 0;
}

int run_derive(const std::string& id, const CommonFlags& f) {
  std::vector<int> ds = f.d_text.empty() ? std::vector<int>{1}
                                         : parse_int_list(f.d_text);
  if (ds.size() != 1)
    throw OutOfDomain("derive wants exactly one d, got '" + f.d_text + "'");
  DerivationParams prm;
  prm.family = family_from_string(f.family);
  prm.d = ds[0];
  prm.n = static_cast<int>(f.n > 0 ? f.n : prm.d);
  if (!f.profile.empty()) prm.degenerate = parse_profile(f.profile);

  ChiExpr e = run_derivation(id, prm);
  bool ok = replay(e) && e.value == derivation_target(id, prm);
  ReportFormat fmt = format_from_string(f.format);
  if (fmt == ReportFormat::Json)
    write_document(trace_to_json(e), f.out);
  else if (fmt == ReportFormat::Markdown)
    write_document(trace_to_markdown(e, id), f.out);
  else
    throw OutOfDomain("derive has no csv form; use json or markdown");
  return ok ? 0 : 1;
}

// Rewrites bare key=value tokens (the "verify lemma-4.5 d=1..3" style) into
// --key value pairs so one grammar serves both spellings.
std::vector<std::string> normalize_args(int argc, char** argv) {
  static const std::vector<std::string> keys = {
      "family", "n",       "d",     "profile", "primes", "seed",
      "budget", "threads", "format", "out",     "x"};
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string tok = argv[i];
    auto eq = tok.find('=');
    bool rewritten = false;
    if (eq != std::string::npos && !tok.empty() && tok[0] != '-') {
      std::string key = tok.substr(0, eq);
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        args.push_back("--" + key);
        args.push_back(tok.substr(eq + 1));
        rewritten = true;
      }
    }
    if (!rewritten) args.push_back(tok);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact verification toolkit: point-counting oracle, symbolic "
               "derivations and cyclotomic trace sums"};
  app.require_subcommand(1);

  std::string verify_target, derive_id, trace_x;
  CommonFlags verify_flags, trace_flags, derive_flags;
  std::string registry_format = "markdown", registry_out;

  CLI::App* verify = app.add_subcommand(
      "verify", "run a claim-catalog target against the counting oracle");
  verify->add_option("target", verify_target, "claim-catalog id")->required();
  attach_common(verify, verify_flags, true);

  CLI::App* trace = app.add_subcommand(
      "trace", "exact trace sums with projection and descent checks");
  attach_common(trace, trace_flags, true);
  trace->add_option("--x", trace_x, "restrict printed sums to these x values");

  CLI::App* registry =
      app.add_subcommand("registry", "list targets and derivations");
  registry->add_option("--format", registry_format, "json or markdown");
  registry->add_option("--out", registry_out, "write the listing to this file");

  CLI::App* derive =
      app.add_subcommand("derive", "replay one symbolic derivation");
  derive->add_option("id", derive_id, "derivation id")->required();
  attach_common(derive, derive_flags, false);

  std::vector<std::string> args = normalize_args(argc, argv);
  try {
    // CLI11 parses reversed argv.
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (verify->parsed()) return run_verify(verify_target, verify_flags, verify);
    if (trace->parsed()) return run_trace(trace_flags, trace_x);
    if (registry->parsed()) return run_registry(registry_format, registry_out);
    if (derive->parsed()) return run_derive(derive_id, derive_flags);
  } catch (const UnknownDerivation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    // Bad parameters, inadmissible primes, impossible profiles: usage, not
    // verification failure.
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
