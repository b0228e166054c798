#pragma once

// Batch experiment runner behind the command-line tool: config parsing, the subcommands, and
// CSV/JSON emission. Everything is buffered in memory and written once at the end, so a rerun
// with the same config overwrites its outputs byte for byte.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finaliter/csv.hpp"
#include "finaliter/errors.hpp"
#include "finaliter/lower_bounds.hpp"
#include "finaliter/montecarlo.hpp"
#include "finaliter/parallel.hpp"
#include "finaliter/report.hpp"
#include "finaliter/walk1d.hpp"

namespace finaliter {

enum class ExitStatus : int { Ok = 0, AssertionFailed = 1, UsageError = 2, IoError = 3 };

/// Bad or inconsistent configuration. Maps to ExitStatus::UsageError.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { LowerBound, Verify, Certify, Walk, MonteCarlo, Sweep };
enum class OutputFormat { Csv, Json };

inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::LowerBound: return "lowerbound";
    case Command::Verify: return "verify";
    case Command::Certify: return "certify";
    case Command::Walk: return "walk";
    case Command::MonteCarlo: return "mc";
    case Command::Sweep: return "sweep";
  }
  return "?";
}

inline Command parse_command(std::string_view s) {
  for (Command c : {Command::LowerBound, Command::Verify, Command::Certify, Command::Walk, Command::MonteCarlo,
                    Command::Sweep}) {
    if (command_name(c) == s) return c;
  }
  throw UsageError("unknown command '" + std::string(s) + "'");
}

struct ExperimentConfig {
  Command command = Command::Sweep;
  std::vector<Family> families{Family::StronglyConvexInverseT};
  std::vector<std::size_t> d{1};
  std::vector<std::size_t> T{64};

  // walk
  std::size_t n = 100;
  std::string profile = "quadratic";
  StationaryMethod method = StationaryMethod::ClosedForm;

  // mc
  NearlyLinearShape shape = NearlyLinearShape::Abs;
  double slope_ratio = 0.5;
  std::vector<double> knots;
  std::vector<double> slopes;
  double D = 1.0;
  double G = 1.0;
  double epsilon = 1.0;
  double c = 1.0;
  std::size_t trials = 10000;
  std::optional<double> x0;  // empty: uniform start

  // certify
  std::size_t samples = 10000;

  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::optional<unsigned> jobs;

  std::string out;  // empty: stdout
  OutputFormat format = OutputFormat::Csv;
  std::string curve;  // sweep only: optional bound-vs-x CSV
  std::string x_axis = "d";

  unsigned resolved_jobs() const { return jobs ? *jobs : default_jobs(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw UsageError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

inline double parse_double(std::string_view key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw UsageError(std::string(key) + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

inline std::size_t parse_positive(std::string_view key, std::string_view text) {
  const auto v = parse_unsigned(key, text);
  if (v == 0) throw UsageError(std::string(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

inline std::vector<double> parse_reals(std::string_view key, std::string_view text) {
  std::vector<double> values;
  if (trim(text).empty()) return values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(key, part));
  return values;
}

}  // namespace detail

/// Parses a positive integer list such as "64", "1,2,4,...,64" or "100,200,...,1000".
/// With three or more terms before "..." and a constant integer ratio the list continues
/// geometrically; otherwise it continues with the difference of the last two terms. The end
/// value is included when the progression hits it and is otherwise appended.
inline std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view text) {
  const auto parts = detail::split(text, ',');
  std::vector<std::size_t> out;
  std::size_t ellipsis = parts.size();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == "...") {
      if (ellipsis != parts.size()) throw UsageError(std::string(key) + ": at most one '...' allowed");
      ellipsis = i;
    }
  }
  if (ellipsis == parts.size()) {
    for (const auto& p : parts) out.push_back(detail::parse_positive(key, p));
    return out;
  }
  if (ellipsis < 2 || ellipsis + 2 != parts.size()) {
    throw UsageError(std::string(key) + ": '...' needs two or more leading terms and exactly one end term");
  }
  for (std::size_t i = 0; i < ellipsis; ++i) out.push_back(detail::parse_positive(key, parts[i]));
  const std::size_t last = detail::parse_positive(key, parts.back());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw UsageError(std::string(key) + ": terms before '...' must increase");
  }
  if (out.back() > last) throw UsageError(std::string(key) + ": end term is below the leading terms");

  bool geometric = out.size() >= 3 && out[1] % out[0] == 0;
  const std::size_t ratio = geometric ? out[1] / out[0] : 0;
  for (std::size_t i = 1; geometric && i < out.size(); ++i) geometric = out[i] == out[i - 1] * ratio;
  const std::size_t diff = out.back() - out[out.size() - 2];
  while (true) {
    const std::size_t next = geometric ? out.back() * ratio : out.back() + diff;
    if (next > last) break;
    out.push_back(next);
  }
  if (out.back() != last) out.push_back(last);
  return out;
}

/// Applies one key=value setting. Unknown keys are usage errors.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "command") {
    cfg.command = parse_command(value);
  } else if (key == "family") {
    cfg.families.clear();
    for (const auto& part : split(value, ',')) {
      if (part == "all") {
        cfg.families.assign(std::begin(kAllFamilies), std::end(kAllFamilies));
        continue;
      }
      try {
        cfg.families.push_back(parse_family(part));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  } else if (key == "d") {
    cfg.d = parse_size_list(key, value);
  } else if (key == "T") {
    cfg.T = parse_size_list(key, value);
  } else if (key == "n") {
    cfg.n = parse_positive(key, value);
  } else if (key == "profile") {
    cfg.profile = value;
  } else if (key == "method") {
    try {
      cfg.method = parse_method(value);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (key == "shape") {
    if (value == "abs") cfg.shape = NearlyLinearShape::Abs;
    else if (value == "asym_abs") cfg.shape = NearlyLinearShape::AsymAbs;
    else if (value == "piecewise") cfg.shape = NearlyLinearShape::Piecewise;
    else throw UsageError("unknown shape '" + value + "'");
  } else if (key == "slope_ratio") {
    cfg.slope_ratio = parse_double(key, value);
  } else if (key == "knots") {
    cfg.knots = parse_reals(key, value);
  } else if (key == "slopes") {
    cfg.slopes = parse_reals(key, value);
  } else if (key == "D") {
    cfg.D = parse_double(key, value);
  } else if (key == "G") {
    cfg.G = parse_double(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, value);
  } else if (key == "c") {
    cfg.c = parse_double(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_positive(key, value);
  } else if (key == "x0") {
    if (value == "uniform") cfg.x0.reset();
    else cfg.x0 = parse_double(key, value);
  } else if (key == "samples") {
    cfg.samples = parse_positive(key, value);
  } else if (key == "tol") {
    cfg.tol = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_unsigned(key, value);
  } else if (key == "jobs") {
    cfg.jobs = static_cast<unsigned>(parse_positive(key, value));
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "format") {
    if (value == "csv") cfg.format = OutputFormat::Csv;
    else if (value == "json") cfg.format = OutputFormat::Json;
    else throw UsageError("format must be csv or json, got '" + value + "'");
  } else if (key == "curve") {
    cfg.curve = value;
  } else if (key == "x_axis") {
    if (value != "d" && value != "T") throw UsageError("x_axis must be d or T");
    cfg.x_axis = value;
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

/// Flat key=value lines; blank lines and lines starting with '#' are skipped.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split(text, '\n')) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = detail::trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = detail::trim(std::string_view(line).substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv,
                                        ExperimentConfig base = {}) {
  // command first so later keys can be validated against it
  if (auto it = kv.find("command"); it != kv.end()) apply_setting(base, it->first, it->second);
  for (const auto& [key, value] : kv) {
    if (key != "command") apply_setting(base, key, value);
  }
  return base;
}

/// One evaluated lower-bound instance.
struct GridResult {
  Family family = Family::StronglyConvexInverseT;
  std::size_t d = 0;
  std::size_t T = 0;
  double final_value = 0.0;
  double bound = 0.0;
  double max_deviation = 0.0;
  std::optional<std::size_t> first_mismatch;
  std::size_t divergent_steps = 0;
  std::size_t projected_steps = 0;
  bool trajectory_ok = false;
  bool bound_ok = false;

  double ratio() const { return final_value / bound; }
  bool pass() const { return trajectory_ok && bound_ok && divergent_steps == 0 && projected_steps == 0; }
};

/// Checks an SGD run on one adversarial instance against the closed form and the bound. For
/// d = 1 the bound is only claimed non-strictly.
inline GridResult assess_run(const AdversarialInstance& inst, const AdversarialOracle& oracle, const SgdTrace& trace,
                             double tol) {
  const auto report = verify_trajectory(inst, trace, tol);
  GridResult r;
  r.family = inst.family();
  r.d = inst.dim();
  r.T = inst.horizon();
  r.final_value = report.final_value;
  r.bound = lower_bound_value(r.family, r.d, r.T);
  r.max_deviation = report.max_deviation;
  r.first_mismatch = report.first_mismatch;
  r.divergent_steps = oracle.divergent_steps().size();
  r.projected_steps = trace.projected_steps.size();
  r.trajectory_ok = report.pass;
  r.bound_ok = r.d == 1 ? r.final_value >= r.bound : r.final_value > r.bound;
  return r;
}

inline GridResult evaluate_point(Family family, std::size_t d, std::size_t T, double tol) {
  const auto inst = build_instance(family, d, T);
  AdversarialOracle oracle(inst);
  const SgdTrace trace = run_adversarial(inst, oracle);
  return assess_run(inst, oracle, trace, tol);
}

struct GridPoint {
  Family family;
  std::size_t d;
  std::size_t T;
};

/// Every (family, d, T) from the config lists with d <= T, in list order.
inline std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  if (cfg.families.empty() || cfg.d.empty() || cfg.T.empty()) throw UsageError("sweep lists must be non-empty");
  std::vector<GridPoint> pts;
  for (Family f : cfg.families) {
    for (std::size_t T : cfg.T) {
      for (std::size_t d : cfg.d) {
        if (d <= T) pts.push_back({f, d, T});
      }
    }
  }
  if (pts.empty()) throw UsageError("no (d, T) pair in the grid satisfies d <= T");
  return pts;
}

inline std::vector<GridResult> run_sweep(const std::vector<GridPoint>& points, double tol, unsigned jobs) {
  std::vector<GridResult> results(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    results[i] = evaluate_point(points[i].family, points[i].d, points[i].T, tol);
  });
  return results;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<GridResult>& results) {
  out << "family,d,T,final_value,bound,ratio,pass\n";
  for (const auto& r : results) {
    out << family_name(r.family) << ',' << r.d << ',' << r.T << ',' << format_real(r.final_value) << ','
        << format_real(r.bound) << ',' << format_real(r.ratio()) << ',' << (r.pass() ? "true" : "false") << '\n';
  }
}

inline Json grid_result_json(const GridResult& r) {
  Json j;
  j["family"] = std::string(family_name(r.family));
  j["d"] = r.d;
  j["T"] = r.T;
  j["final_value"] = r.final_value;
  j["bound"] = r.bound;
  j["ratio"] = r.ratio();
  j["max_deviation"] = r.max_deviation;
  j["pass"] = r.pass();
  return j;
}

/// Rows (x, final_suboptimality, bound) sorted by x = d or T; ties keep sweep order.
inline void emit_curve(std::ostream& out, const std::vector<GridResult>& results, std::string_view x_axis) {
  if (results.empty()) throw std::invalid_argument("emit_curve: no sweep results");
  if (x_axis != "d" && x_axis != "T") throw std::invalid_argument("emit_curve: x axis must be d or T");
  const bool by_d = x_axis == "d";
  std::vector<const GridResult*> rows;
  for (const auto& r : results) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [by_d](const GridResult* a, const GridResult* b) {
    return by_d ? a->d < b->d : a->T < b->T;
  });
  out << "x,final_suboptimality,bound\n";
  for (const auto* r : rows) {
    out << (by_d ? r->d : r->T) << ',' << format_real(r->final_value) << ',' << format_real(r->bound) << '\n';
  }
}

/// What run_experiment produced: the artifact text, the failures, and the exit status.
struct ExperimentOutcome {
  ExitStatus status = ExitStatus::Ok;
  std::string artifact;
  std::string curve;
  Json failures = Json::array();
};

namespace detail {

inline void add_failure(Json& failures, const GridResult& r, std::string reason) {
  Json f;
  f["family"] = std::string(family_name(r.family));
  f["d"] = r.d;
  f["T"] = r.T;
  f["reason"] = std::move(reason);
  failures.push_back(std::move(f));
}

inline std::string failure_reason(const GridResult& r) {
  std::vector<std::string> why;
  if (!r.trajectory_ok) {
    why.push_back("trajectory deviates from the closed form at t=" + std::to_string(r.first_mismatch.value_or(0)) +
                  " (max deviation " + format_real(r.max_deviation) + ")");
  }
  if (!r.bound_ok) why.push_back("final value " + format_real(r.final_value) + " below bound " + format_real(r.bound));
  if (r.divergent_steps) why.push_back(std::to_string(r.divergent_steps) + " oracle steps left the predicted path");
  if (r.projected_steps) why.push_back(std::to_string(r.projected_steps) + " projections activated");
  std::string s;
  for (const auto& w : why) s += (s.empty() ? "" : "; ") + w;
  return s;
}

inline GridPoint single_point(const ExperimentConfig& cfg) {
  if (cfg.families.size() != 1 || cfg.d.size() != 1 || cfg.T.size() != 1) {
    throw UsageError(std::string(command_name(cfg.command)) + " takes a single family, d and T; use sweep for grids");
  }
  if (cfg.d[0] > cfg.T[0]) throw UsageError("d must not exceed T");
  return {cfg.families[0], cfg.d[0], cfg.T[0]};
}

inline std::size_t single_T(const ExperimentConfig& cfg) {
  if (cfg.T.size() != 1) throw UsageError("mc takes a single T");
  return cfg.T[0];
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline NearlyLinearInstance mc_instance(const ExperimentConfig& cfg) {
  ShapeSpec spec;
  switch (cfg.shape) {
    case NearlyLinearShape::Abs: spec = ShapeSpec::abs(); break;
    case NearlyLinearShape::AsymAbs: spec = ShapeSpec::asym_abs(cfg.slope_ratio); break;
    case NearlyLinearShape::Piecewise: spec = ShapeSpec::piecewise({cfg.knots, cfg.slopes}); break;
  }
  try {
    return build_nearly_linear(spec, cfg.D, cfg.G, cfg.epsilon, cfg.c);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

}  // namespace detail

/// Runs the configured command in memory. Usage problems throw UsageError; failed embedded
/// assertions are reported through the outcome.
inline ExperimentOutcome compute_experiment(const ExperimentConfig& cfg) {
  using detail::dump;
  if (!(cfg.tol >= 0.0)) throw UsageError("tol must be non-negative");
  ExperimentOutcome outcome;
  std::ostringstream out;
  const bool json = cfg.format == OutputFormat::Json;
  auto fail = [&](const GridResult& r) {
    detail::add_failure(outcome.failures, r, detail::failure_reason(r));
  };

  switch (cfg.command) {
    case Command::LowerBound: {
      const auto p = detail::single_point(cfg);
      const auto inst = build_instance(p.family, p.d, p.T);
      if (json) out << dump(instance_json(inst));
      else write_instance_csv(out, inst);
      break;
    }
    case Command::Verify: {
      const auto p = detail::single_point(cfg);
      const auto inst = build_instance(p.family, p.d, p.T);
      AdversarialOracle oracle(inst);
      const SgdTrace trace = run_adversarial(inst, oracle);
      const auto r = assess_run(inst, oracle, trace, cfg.tol);
      if (!r.pass()) fail(r);
      if (json) {
        const auto report = verify_trajectory(inst, trace, cfg.tol);
        out << dump(verification_json(inst, report, r.bound, r.pass()));
      } else {
        write_trace_csv(out, trace);
      }
      break;
    }
    case Command::Certify: {
      const auto points = grid_points(cfg);
      std::vector<Json> rows(points.size());
      std::vector<std::optional<std::string>> reasons(points.size());
      parallel_for(points.size(), cfg.resolved_jobs(), [&](std::size_t i) {
        const auto inst = build_instance(points[i].family, points[i].d, points[i].T);
        const double L = family_lipschitz_constant(inst.family());
        const auto lip = check_lipschitz(inst, L, cfg.samples, cfg.seed);
        Json j;
        j["family"] = std::string(family_name(inst.family()));
        j["d"] = inst.dim();
        j["T"] = inst.horizon();
        j["L"] = L;
        j["lipschitz"] = certificate_json(lip, "worst_ratio");
        bool pass = lip.pass;
        std::string why = lip.pass ? "" : "Lipschitz check failed with ratio " + format_real(lip.worst);
        if (is_strongly_convex(inst.family())) {
          const auto sc = check_strong_convexity(inst, 1.0, cfg.samples, cfg.seed);
          j["alpha"] = 1.0;
          j["strong_convexity"] = certificate_json(sc, "worst_slack");
          if (!sc.pass) why += std::string(why.empty() ? "" : "; ") + "strong convexity slack " + format_real(sc.worst);
          pass = pass && sc.pass;
        }
        j["pass"] = pass;
        rows[i] = std::move(j);
        if (!pass) reasons[i] = why;
      });
      if (json) {
        out << dump(Json(rows));
      } else {
        out << "family,d,T,L,lipschitz_worst_ratio,strong_convexity_worst_slack,pass\n";
        for (const auto& j : rows) {
          out << j["family"].get<std::string>() << ',' << j["d"].get<std::size_t>() << ','
              << j["T"].get<std::size_t>() << ',' << format_real(j["L"].get<double>()) << ','
              << format_real(j["lipschitz"]["worst_ratio"].get<double>()) << ',';
          if (j.contains("strong_convexity")) out << format_real(j["strong_convexity"]["worst_slack"].get<double>());
          out << ',' << (j["pass"].get<bool>() ? "true" : "false") << '\n';
        }
      }
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!reasons[i]) continue;
        GridResult r;
        r.family = points[i].family;
        r.d = points[i].d;
        r.T = points[i].T;
        detail::add_failure(outcome.failures, r, *reasons[i]);
      }
      break;
    }
    case Command::Walk: {
      ConvexFunction1D f;
      try {
        f = profiles::by_name(cfg.profile);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto chain = chain_from_function(f, cfg.n);
      const auto stationary = stationary_solve(chain, cfg.method);
      const double subopt = stationary_suboptimality(chain, stationary, f);
      const bool pass = subopt <= stationary_bound(cfg.n);
      if (!pass) {
        Json fj;
        fj["instance"] = cfg.profile;
        fj["n"] = cfg.n;
        fj["T"] = cfg.n * cfg.n;
        fj["reason"] = "stationary suboptimality " + format_real(subopt) + " exceeds " +
                       format_real(stationary_bound(cfg.n));
        outcome.failures.push_back(std::move(fj));
      }
      if (json) out << dump(walk_json(chain, stationary, cfg.profile, subopt, pass));
      else write_walk_csv(out, chain, stationary, f);
      break;
    }
    case Command::MonteCarlo: {
      const auto inst = detail::mc_instance(cfg);
      const std::size_t T = detail::single_T(cfg);
      const StartRule start = cfg.x0 ? StartRule::at(*cfg.x0) : StartRule::uniform();
      PathStatistics stats;
      try {
        stats = simulate_paths(inst, T, cfg.trials, start, cfg.seed, cfg.resolved_jobs());
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
      if (json) out << dump(monte_carlo_json(inst, stats));
      else write_paths_csv(out, stats);
      break;
    }
    case Command::Sweep: {
      const auto results = run_sweep(grid_points(cfg), cfg.tol, cfg.resolved_jobs());
      for (const auto& r : results) {
        if (!r.pass()) fail(r);
      }
      if (json) {
        Json rows = Json::array();
        for (const auto& r : results) rows.push_back(grid_result_json(r));
        out << dump(rows);
      } else {
        write_sweep_csv(out, results);
      }
      if (!cfg.curve.empty()) {
        std::ostringstream curve;
        emit_curve(curve, results, cfg.x_axis);
        outcome.curve = curve.str();
      }
      break;
    }
  }
  outcome.artifact = out.str();
  if (!outcome.failures.empty()) outcome.status = ExitStatus::AssertionFailed;
  return outcome;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw IoError("write to '" + path + "' failed");
}

/// Runs the experiment and writes its artifacts (stdout when `out` is empty). On failure a
/// JSON report naming every failing instance goes to `err`. Returns the process exit code.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& stdout_stream = std::cout,
                          std::ostream& err = std::cerr) {
  try {
    const auto outcome = compute_experiment(cfg);
    if (cfg.out.empty()) stdout_stream << outcome.artifact;
    else write_text_file(cfg.out, outcome.artifact);
    if (!cfg.curve.empty() && cfg.command == Command::Sweep) write_text_file(cfg.curve, outcome.curve);
    if (outcome.status != ExitStatus::Ok) {
      Json report;
      report["status"] = "fail";
      report["command"] = std::string(command_name(cfg.command));
      report["failures"] = outcome.failures;
      err << report.dump() << '\n';
    }
    return static_cast<int>(outcome.status);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::UsageError);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return static_cast<int>(ExitStatus::IoError);
  }
}

}  // namespace finaliter
