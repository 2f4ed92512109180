#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "gks/chains.hpp"
#include "gks/config.hpp"
#include "gks/engine.hpp"
#include "gks/harmonic.hpp"
#include "gks/policy.hpp"
#include "gks/statesys.hpp"
#include "gks/verify.hpp"

using namespace gks;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kSolver = 3, kBudget = 4, kViolation = 5 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string format;
  unsigned jobs = 1;
  std::string out;
};

// A result: rows for table/csv, a document for json.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table key_values(const json& doc) {
  Table t{{"key", "value"}, {}};
  for (const auto& item : doc.items()) {
    if (item.value().is_array() || item.value().is_object()) continue;
    t.rows.push_back({item.key(), item.value().is_string() ? item.value().get<std::string>() : item.value().dump()});
  }
  return t;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

class Emitter {
 public:
  explicit Emitter(const Globals& g) {
    format_ = g.format;
    if (!g.out.empty()) {
      file_.open(g.out);
      if (!file_) throw std::invalid_argument("cannot write '" + g.out + "'");
    }
    if (format_.empty()) format_ = (g.out.empty() && isatty(STDOUT_FILENO)) ? "table" : "csv";
  }

  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

  void emit(const Table& t, const json& doc) {
    auto& o = os();
    if (format_ == "json") {
      o << doc.dump(2) << '\n';
    } else if (format_ == "csv") {
      for (std::size_t i = 0; i < t.header.size(); ++i) o << (i ? "," : "") << csv_cell(t.header[i]);
      o << '\n';
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << csv_cell(r[i]);
        o << '\n';
      }
    } else {
      std::vector<std::size_t> w(t.header.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = t.header[i].size();
      for (const auto& r : t.rows)
        for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
      auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          o << (i ? "  " : "") << r[i];
          if (i + 1 < r.size()) o << std::string(w[i] - r[i].size(), ' ');
        }
        o << '\n';
      };
      line(t.header);
      for (const auto& r : t.rows) line(r);
    }
    o.flush();
  }

 private:
  std::string format_;
  std::ofstream file_;
};

std::string yes_no(bool b) { return b ? "ok" : "FAIL"; }

json rows_json(const Table& t) {
  json arr = json::array();
  for (const auto& r : t.rows) {
    json o;
    for (std::size_t i = 0; i < r.size(); ++i) o[t.header[i]] = r[i];
    arr.push_back(o);
  }
  return arr;
}

// ---- alpha

int cmd_alpha(const Globals& g, unsigned lo, unsigned hi) {
  if (lo < 1 || hi < lo || hi > kMaxAlphaIndex) {
    throw std::invalid_argument("alpha: need 1 <= min <= max <= " + std::to_string(kMaxAlphaIndex));
  }
  Table t{{"ell", "alpha", "factorial", "bounds"}, {}};
  const auto table = alpha_table(hi);
  for (unsigned l = lo; l <= hi; ++l) {
    t.rows.push_back({std::to_string(l), table[l].to_string(), BigNat::factorial(l - 1).to_string(),
                      yes_no(alpha_bounds_check(l))});
  }
  Emitter e(g);
  e.emit(t, rows_json(t));
  return kOk;
}

// ---- chain

int cmd_chain(const Globals& g, const std::string& kind, unsigned k) {
  if (k < 1 || k > 20) throw std::invalid_argument("chain: k must be in 1..20");
  BirthDeathChain chain = kind == "harmonic" ? harmonic_chain(k)
                          : kind == "binary" ? binary_chain(k)
                                             : throw std::invalid_argument("chain: kind must be harmonic or binary");
  const auto oracle = eet_oracle_table(chain);
  Table t{{"ell", "h", "oracle", "match"}, {}};
  bool all = true;
  for (unsigned l = 0; l <= k; ++l) {
    const Rational h = l == 0 ? Rational() : eet_closed_form(chain, l);
    const bool m = h == oracle[l];
    all = all && m;
    t.rows.push_back({std::to_string(l), h.to_display(), oracle[l].to_display(), yes_no(m)});
  }
  Emitter e(g);
  json doc{{"kind", kind}, {"k", k}, {"rows", rows_json(t)}, {"oracle_agrees", all}};
  e.emit(t, doc);
  return all ? kOk : kViolation;
}

// ---- system

int cmd_system(const Globals& g, const std::string& p, const std::string& mode, double tol,
               const std::string& csv) {
  const auto policy = MemorylessPolicy::parse(p);
  SolveOptions opt;
  if (mode == "exact") opt.mode = SolveMode::exact;
  else if (mode == "iterative") opt.mode = SolveMode::iterative;
  else throw std::invalid_argument("system: mode must be exact or iterative");
  opt.tolerance = tol;
  const auto sol = solve_system(policy, opt);
  json doc = solution_summary(policy, sol);
  const auto mono = check_monotonicity(sol);
  const auto inner = check_subset_alpha_bound(sol);
  const auto phi = phi_transform(sol);
  doc["monotonicity_violations"] = mono.size();
  doc["alpha_bound_violations"] = inner.size();
  doc["phi_transform_ok"] = phi.ok();
  if (sol.exact()) {
    doc["bound_holds"] = sol.h(SubsetMask{1} << (sol.k() - 1)) >= lower_bound_hk(policy);
  }
  if (!csv.empty()) {
    std::ofstream f(csv);
    if (!f) throw std::invalid_argument("system: cannot write '" + csv + "'");
    write_solution_csv(f, sol);
  }
  Table t = key_values(doc);
  for (auto& r : t.rows) {
    // friendlier integers in the table view
    if (r[1].size() > 2 && r[1].compare(r[1].size() - 2, 2, "/1") == 0) r[1].resize(r[1].size() - 2);
  }
  Emitter e(g);
  e.emit(t, doc);
  const bool ok = mono.empty() && inner.empty() && phi.ok();
  return ok ? kOk : kViolation;
}

// ---- simulate

int cmd_simulate(const Globals& g, const std::string& path, const std::string& trace_flag,
                 std::optional<std::uint64_t> phases) {
  ExperimentConfig c = load_config(path);
  if (g.seed) c.seed = *g.seed;
  if (phases) c.phases = *phases;
  if (!trace_flag.empty()) c.trace_path = trace_flag;
  if (!c.trace_path.empty()) c.emit_trace = true;
  c.validate();

  RunSummary s;
  if (c.emit_trace) {
    const RunResult r = run(c);
    s = r.summary;
    if (!c.trace_path.empty()) {
      std::ofstream f(c.trace_path);
      if (!f) throw std::invalid_argument("simulate: cannot write '" + c.trace_path + "'");
      write_trace_csv(f, *r.trace);
    }
  } else {
    // same per-phase streams as run(), so the numbers match
    const auto est = estimate_ratio(c, c.phases, g.jobs);
    s.alg_cost = est.stats.alg_cost;
    s.adv_cost = est.stats.adv_cost;
    s.ratio = est.ratio;
    s.phases = est.stats.count;
    s.mean_phase_length = est.stats.mean();
    s.max_phase_length = est.stats.max_length;
    s.phase_length_stderr = est.stats.stderr_mean();
    s.steps = est.stats.steps;
    s.seed = c.seed;
    s.policy = c.policy.to_string();
    s.adversary = to_string(c.adversary);
    s.budget_exhausted = est.budget_exhausted;
  }
  json doc = summary_json(s);
  if (c.adversary == AdversaryKind::n2) doc["note"] = "n2 adversary: flip-last-metric schedule with complement requests";
  if (!c.summary_path.empty()) {
    std::ofstream f(c.summary_path);
    if (!f) throw std::invalid_argument("simulate: cannot write '" + c.summary_path + "'");
    f << doc.dump(2) << '\n';
  }
  Emitter e(g);
  e.emit(key_values(doc), doc);
  if (s.budget_exhausted) {
    std::cerr << "simulate: step budget of " << c.max_steps << " exhausted after " << s.phases << " of " << c.phases
              << " phases\n";
    return kBudget;
  }
  return kOk;
}

// ---- verify

int cmd_verify(const Globals& g, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("verify: cannot open '" + path + "'");
  const Trace trace = read_trace_csv(f);
  const PotentialContext ctx(trace.k);
  const VerifyReport rep = verify_trace(trace, ctx);
  const json doc = report_json(rep);
  Table t = key_values(doc);
  for (const auto& v : rep.violations) t.rows.push_back({"violation", "t=" + std::to_string(v.t) + " " + v.kind + ": " + v.detail});
  Emitter e(g);
  e.emit(t, doc);
  return rep.ok() ? kOk : kViolation;
}

// ---- sweep

struct SweepRow {
  std::string policy;
  std::vector<std::string> cells;
  int code = kOk;
};

int cmd_sweep(const Globals& g, const std::string& grid, std::uint64_t phases, unsigned n, const std::string& mode,
              std::uint64_t max_steps) {
  std::vector<std::string> specs;
  {
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ';')) {
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) specs.push_back(item);
    }
  }
  if (specs.empty()) throw std::invalid_argument("sweep: empty grid");
  SolveOptions opt;
  if (mode == "exact") opt.mode = SolveMode::exact;
  else if (mode == "iterative") opt.mode = SolveMode::iterative;
  else throw std::invalid_argument("sweep: mode must be exact or iterative");
  const std::uint64_t seed = g.seed.value_or(1);

  std::vector<SweepRow> rows(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < specs.size();) {
      SweepRow& row = rows[i];
      row.policy = specs[i];
      try {
        const auto policy = MemorylessPolicy::parse(specs[i]);
        if (opt.mode == SolveMode::exact && policy.k() > 8) {
          throw std::invalid_argument("sweep: exact mode supports k <= 8");
        }
        const auto sol = solve_system(policy, opt);
        const Rational bound = lower_bound_hk(policy);
        std::string hk, gap, zero_gap;
        if (sol.exact()) {
          const Rational v = sol.h(SubsetMask{1} << (policy.k() - 1));
          const Rational gp = competitive_gap(sol);
          hk = v.to_string();
          gap = gp.to_string();
          zero_gap = gp.is_zero() == policy.is_uniform() ? "ok" : "FAIL";
          if (zero_gap == "FAIL") row.code = kViolation;
        } else {
          hk = std::to_string(static_cast<double>(sol.h_last_approx()));
          gap = std::to_string(static_cast<double>(
              sol.h_last_approx() - Rational(BigNat(policy.k()) * alpha(policy.k())).to_long_double()));
        }
        std::string ratio, se;
        if (phases > 0) {
          ExperimentConfig c;
          c.policy = policy;
          c.spec = MetricSpec::uniform(policy.k(), n);
          c.adversary = n == 2 ? AdversaryKind::n2 : AdversaryKind::lower_bound;
          c.seed = seed;
          c.phases = phases;
          c.max_steps = max_steps;
          const auto est = estimate_ratio(c, phases, 1);
          ratio = std::to_string(est.ratio);
          se = std::to_string(est.stderr_ratio);
          if (est.budget_exhausted) row.code = std::max<int>(row.code, kBudget);
        }
        row.cells = {std::to_string(policy.k()), hk, bound.to_string(), gap, policy.is_uniform() ? "yes" : "no",
                     zero_gap, ratio, se, "ok"};
      } catch (const SolverError& e) {
        row.cells = {"", "", "", "", "", "", "", "", std::string("solver failure: ") + e.what()};
        row.code = kSolver;
      } catch (const std::invalid_argument& e) {
        row.cells = {"", "", "", "", "", "", "", "", std::string("rejected: ") + e.what()};
        row.code = std::max<int>(row.code, kValidation);
      }
    }
  };
  const unsigned jobs = std::max(1U, std::min<unsigned>(g.jobs, static_cast<unsigned>(specs.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Table t{{"policy", "k", "h_k", "bound", "gap", "uniform", "zero_gap_iff_uniform", "sim_ratio", "sim_stderr", "status"},
          {}};
  int code = kOk;
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.policy};
    cells.insert(cells.end(), r.cells.begin(), r.cells.end());
    t.rows.push_back(std::move(cells));
    if (r.code == kSolver) code = kSolver;
    else if (code != kSolver) code = std::max(code, r.code == kViolation ? kViolation : r.code);
  }
  Emitter e(g);
  e.emit(t, rows_json(t));
  for (const auto& r : rows) {
    if (r.code == kValidation || r.code == kSolver) std::cerr << "sweep: " << r.policy << ": " << r.cells.back() << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memoryless generalized k-server toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.jobs = std::max(1U, std::thread::hardware_concurrency());
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master RNG seed")->group("Global");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->group("Global");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1U, 1024U))->group("Global");
  app.add_option("--out", g.out, "Write the result here instead of stdout")->group("Global");

  unsigned a_min = 1, a_max = 0;
  auto* alpha_cmd = app.add_subcommand("alpha", "Harmonic recursion table");
  alpha_cmd->add_option("--min", a_min, "First ell");
  alpha_cmd->add_option("--max", a_max, "Last ell")->required();

  std::string chain_kind;
  unsigned chain_k = 0;
  auto* chain_cmd = app.add_subcommand("chain", "Expected extinction times of a birth-death chain");
  chain_cmd->add_option("kind", chain_kind, "harmonic or binary")->required();
  chain_cmd->add_option("--k", chain_k, "Number of metrics")->required();

  std::string sys_p, sys_mode = "exact", sys_csv;
  double sys_tol = 1e-12;
  unsigned sys_uniform = 0;
  auto* system_cmd = app.add_subcommand("system", "Solve the subset system for a memoryless policy");
  auto* p_opt = system_cmd->add_option("--p", sys_p, "Probabilities, e.g. 2/3,1/3");
  auto* u_opt = system_cmd->add_option("--uniform", sys_uniform, "Uniform policy over k metrics");
  p_opt->excludes(u_opt);
  system_cmd->add_option("--mode", sys_mode, "exact or iterative");
  system_cmd->add_option("--tol", sys_tol, "Iterative tolerance");
  system_cmd->add_option("--csv", sys_csv, "Dump every h(S) to this CSV");

  std::string sim_config, sim_trace;
  std::uint64_t sim_phases = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run an experiment config");
  simulate_cmd->add_option("config", sim_config, "JSON config")->required();
  simulate_cmd->add_option("--trace", sim_trace, "Write the trace CSV here");
  auto* sim_phases_opt = simulate_cmd->add_option("--phases", sim_phases, "Override the phase count");

  std::string verify_path;
  auto* verify_cmd = app.add_subcommand("verify", "Check a trace against the potential argument");
  verify_cmd->add_option("trace", verify_path, "Trace CSV")->required();

  std::string grid, sweep_mode = "exact";
  std::uint64_t sweep_phases = 0, sweep_max_steps = 1000000000;
  unsigned sweep_n = 3;
  auto* sweep_cmd = app.add_subcommand("sweep", "Solve (and optionally simulate) a grid of policies");
  sweep_cmd->add_option("--grid", grid, "Policies separated by ';', e.g. \"1/2,1/2;2/3,1/3\"")->required();
  sweep_cmd->add_option("--phases", sweep_phases, "Simulated phases per policy (0 = skip)");
  sweep_cmd->add_option("--n", sweep_n, "Points per metric for simulation (2 selects the n2 adversary)")
      ->check(CLI::Range(2U, 1000000U));
  sweep_cmd->add_option("--mode", sweep_mode, "exact or iterative");
  sweep_cmd->add_option("--max-steps", sweep_max_steps, "Step cap per policy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*alpha_cmd) return cmd_alpha(g, a_min, a_max);
    if (*chain_cmd) return cmd_chain(g, chain_kind, chain_k);
    if (*system_cmd) {
      if (*u_opt) {
        if (sys_uniform < 1) throw std::invalid_argument("system: --uniform needs k >= 1");
        sys_p = MemorylessPolicy::uniform(sys_uniform).to_string();
      } else if (!*p_opt) {
        throw std::invalid_argument("system: give --p or --uniform");
      }
      return cmd_system(g, sys_p, sys_mode, sys_tol, sys_csv);
    }
    if (*simulate_cmd) {
      return cmd_simulate(g, sim_config, sim_trace,
                          *sim_phases_opt ? std::optional<std::uint64_t>(sim_phases) : std::nullopt);
    }
    if (*verify_cmd) return cmd_verify(g, verify_path);
    if (*sweep_cmd) return cmd_sweep(g, grid, sweep_phases, sweep_n, sweep_mode, sweep_max_steps);
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
