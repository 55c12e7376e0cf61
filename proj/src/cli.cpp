#include "coopreg/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coopreg/audit.hpp"
#include "coopreg/paper_example.hpp"
#include "coopreg/simulation.hpp"

namespace coopreg {

namespace {

bool log_enabled() {
  const char* lvl = std::getenv("COOPREG_LOG");
  return lvl != nullptr && std::string(lvl) != "" && std::string(lvl) != "quiet";
}

void log_note(std::ostream& err, const std::string& msg) {
  if (log_enabled()) err << "[coopreg] " << msg << "\n";
}

Scenario resolve_scenario(const std::string& name) {
  if (name == "paper_example" || name == "builtin:paper_example") return paper_example_scenario();
  return load_scenario(name);
}

std::string interval_text(double lo, double hi) {
  const double inf = std::numeric_limits<double>::infinity();
  if (lo == -inf && hi == inf) return "unbounded";
  std::ostringstream out;
  out << "(" << lo << ", " << hi << ")";
  return out.str();
}

/// Designs every agent's controller from an audit. Throws AssumptionViolation
/// or std::runtime_error when a gain cannot be produced or certified.
GainBundle synthesize_bundle(const Scenario& sc, const AuditReport& audit, std::ostream& err) {
  if (!audit.interval.feasible)
    throw AssumptionViolation("observer", "no feasible observer gain interval");
  const double mu = audit.chosen_mu ? *audit.chosen_mu
                                    : pick_mu(audit.interval, sc.S0, audit.h, sc.sim.mu);

  GainBundle bundle;
  bundle.mu = mu;
  for (int i = 0; i < sc.n_agents(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const AgentPlant& a = sc.agents[si];
    const AgentAudit& aa = audit.agents[si];
    if (!aa.k1_found || !aa.K1)
      throw AssumptionViolation(
          "A1", "agent " + std::to_string(i + 1) + ": no stabilizing state feedback found");
    if (!aa.regulator.ok)
      throw AssumptionViolation("A3", "agent " + std::to_string(i + 1) +
                                          ": regulator equations unsolvable, residual " +
                                          std::to_string(aa.regulator.residual));
    Eigen::MatrixXd L;
    if (sc.user_L[si]) {
      L = *sc.user_L[si];
      log_note(err, "agent " + std::to_string(i + 1) + ": using the supplied estimator gain");
    } else {
      if (!aa.detectability.pass)
        throw AssumptionViolation(
            "A2", "agent " + std::to_string(i + 1) + ": composite pair not detectable");
      L = design_l(a).L;
    }
    bundle.controllers.push_back(
        assemble_controller(a, aa.regulator.X, aa.regulator.U, *aa.K1, L, mu, sc.S0, audit.h));
  }
  return bundle;
}

/// Replaces the observer gain after assembly; used by `simulate --mu` so an
/// out-of-interval gain can be run to exhibit divergence.
void force_mu(GainBundle& bundle, const Scenario& sc, const HMatrix& h, double mu) {
  const double radius = spectral_radius(observer_matrix(sc.S0, h, mu));
  bundle.mu = mu;
  for (auto& c : bundle.controllers) {
    c.mu = mu;
    c.observer_radius = radius;
  }
}

struct CommonOptions {
  std::string config;
  std::string config_flag;
  std::string out_path;
  std::optional<double> mu;
  std::optional<unsigned> seed;
  std::optional<int> horizon;
  bool force = false;
  std::string gains_path;

  std::string config_name() const { return !config.empty() ? config : config_flag; }
};

int cmd_audit(const CommonOptions& opt, std::ostream& out) {
  const Scenario sc = resolve_scenario(opt.config_name());
  const AuditReport report = audit_assumptions(sc);
  out << report.to_text();
  if (!opt.out_path.empty()) {
    std::ofstream f(opt.out_path);
    if (!f) throw ConfigError("cannot write report: " + opt.out_path);
    f << report.to_json() << "\n";
  }
  return report.all_assumptions_pass ? kExitOk : kExitAssumption;
}

int cmd_mu(const CommonOptions& opt, std::ostream& out) {
  Scenario sc = resolve_scenario(opt.config_name());
  if (opt.mu) sc.sim.mu = opt.mu;
  const HMatrix h = build_h_matrix(sc.network);
  const LeaderSpectrum leader = leader_spectral_radius(sc.S0);
  const MuInterval interval = mu_interval(sc.S0, h);
  const NaiveFeasibility naive = naive_observer_feasibility(sc.S0, h);

  out << "leader spectral radius |lambda_q| = " << leader.radius << "\n";
  out << "proposed observer: "
      << (interval.feasible ? interval_text(interval.lower, interval.upper) : "infeasible") << "\n";
  if (interval.feasible) {
    const double mu = pick_mu(interval, sc.S0, h, sc.sim.mu);
    out << "chosen mu = " << mu << (sc.sim.mu ? " (overridden)" : " (midpoint)") << "\n";
  }
  out << "per-eigenvalue constraints:\n";
  for (const auto& c : interval.diagnostics) {
    out << "  a=" << c.a << " b=" << c.b << " delta=" << c.delta << " -> "
        << (c.empty ? "empty" : c.whole_line ? "all mu" : interval_text(c.lo, c.hi)) << "\n";
  }
  out << "naive observer: "
      << (naive.feasible ? interval_text(naive.lower, naive.upper) : "infeasible") << "\n";

  if (!opt.out_path.empty()) {
    nlohmann::json j;
    j["leader_radius"] = leader.radius;
    j["proposed"]["feasible"] = interval.feasible;
    if (interval.feasible) {
      j["proposed"]["lower"] = interval.lower;
      j["proposed"]["upper"] = interval.upper;
    }
    j["naive"]["feasible"] = naive.feasible;
    if (naive.feasible) {
      j["naive"]["lower"] = naive.lower;
      j["naive"]["upper"] = naive.upper;
    }
    std::ofstream f(opt.out_path);
    if (!f) throw ConfigError("cannot write report: " + opt.out_path);
    f << j.dump(2) << "\n";
  }
  return interval.feasible ? kExitOk : kExitAssumption;
}

int cmd_synthesize(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc = resolve_scenario(opt.config_name());
  if (opt.mu) sc.sim.mu = opt.mu;
  const AuditReport audit = audit_assumptions(sc);
  if (!audit.all_assumptions_pass && !opt.force) {
    err << "audit failed; re-run `coopreg audit` for details or pass --force\n";
    err << audit.to_text();
    return kExitAssumption;
  }
  const GainBundle bundle = synthesize_bundle(sc, audit, err);
  const std::string path = opt.out_path.empty() ? "coopreg_gains.json" : opt.out_path;
  save_gains(bundle, path);
  out << "wrote " << path << " (mu = " << bundle.mu << ")\n";
  for (std::size_t i = 0; i < bundle.controllers.size(); ++i) {
    const auto& c = bundle.controllers[i];
    out << "agent " << i + 1 << ": loop radius " << c.k1_radius << ", estimator radius "
        << c.estimator_radius << ", observer radius " << c.observer_radius << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc = resolve_scenario(opt.config_name());
  if (opt.seed) sc.sim.seed = *opt.seed;
  if (opt.horizon) sc.sim.horizon = *opt.horizon;

  GainBundle bundle;
  const HMatrix h = build_h_matrix(sc.network);
  if (!opt.gains_path.empty()) {
    bundle = load_gains(opt.gains_path, sc);
  } else {
    const AuditReport audit = audit_assumptions(sc);
    if (!audit.solvable && !opt.force) {
      err << "audit failed; re-run `coopreg audit` for details or pass --force\n";
      return kExitAssumption;
    }
    bundle = synthesize_bundle(sc, audit, err);
  }
  if (opt.mu) {
    const MuInterval interval = mu_interval(sc.S0, h);
    if (interval.classify(*opt.mu) != Stability::Stable)
      err << "warning: mu = " << *opt.mu << " lies outside the certified interval "
          << interval_text(interval.lower, interval.upper) << "\n";
    force_mu(bundle, sc, h, *opt.mu);
  }

  const InitialConditions init = sc.sim.initial == InitialMode::Zero
                                     ? zero_initial_conditions(sc)
                                     : random_initial_conditions(sc, sc.sim.seed);
  const SimulationTrace trace = run(sc, bundle, init, sc.sim.horizon);
  if (!opt.out_path.empty()) write_trace_csv(trace, opt.out_path);

  if (trace.overflow_step) {
    err << "state overflow at step " << *trace.overflow_step
        << "; the closed loop diverges with the supplied gains\n";
    return kExitNumerical;
  }
  const ConvergenceMetrics metrics = convergence_metrics(trace, sc.sim.tail_fraction);
  for (std::size_t i = 0; i < metrics.agents.size(); ++i)
    out << "agent " << i + 1 << ": tail max |e| = " << metrics.agents[i].tail_max
        << ", fitted rate = " << metrics.agents[i].fitted_rate << "\n";
  out << "worst tail = " << metrics.worst_tail << " (tolerance " << sc.sim.tail_tolerance << ")\n";
  if (metrics.worst_tail > sc.sim.tail_tolerance) {
    err << "tail criterion not met";
    if (metrics.worst_rate >= 1.0)
      err << "; fitted rate " << metrics.worst_rate << " >= 1 indicates divergence";
    err << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct ComparisonRow {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

int cmd_reproduce(const CommonOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc = paper_example_scenario();
  if (opt.seed) sc.sim.seed = *opt.seed;
  const PaperReference ref = paper_example_reference();
  std::vector<ComparisonRow> rows;

  const AuditReport audit = audit_assumptions(sc);
  out << audit.to_text() << "\n";

  {
    double dev = 0.0;
    for (Eigen::Index k = 0; k < audit.h.spectrum.size(); ++k)
      dev = std::max(dev, std::abs(audit.h.spectrum(k) - ref.h_spectrum(k)));
    rows.push_back({"H spectrum {1,1,1,1}", dev, 0.0, dev <= 0.0});
  }
  {
    const double dev = std::max(std::abs(audit.interval.lower - ref.mu_lower),
                                std::abs(audit.interval.upper - ref.mu_upper));
    rows.push_back({"mu interval (0, 2)", dev, 1e-12, dev <= 1e-12});
  }
  {
    const AgentPlant& a = sc.agents.front();
    std::vector<DelayTerm> terms;
    for (std::size_t l = 0; l < a.delays.size(); ++l)
      terms.push_back({a.delays[l], a.B[l] * *sc.user_K1.front()});
    const CharPolyRoots roots = char_poly_roots(a.A, terms);
    const auto match = match_root_multisets(roots.nonzero, ref.loop_roots, 1e-3);
    rows.push_back({"closed-loop root set", match.value_or(
                        std::numeric_limits<double>::infinity()),
                    1e-3, match.has_value()});
  }
  for (int i = 0; i < sc.n_agents(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const RegulatorSolution& rs = audit.agents[si].regulator;
    const double dev = std::max((rs.X - ref.X).cwiseAbs().maxCoeff(),
                                (rs.U - ref.U[si]).cwiseAbs().maxCoeff());
    rows.push_back({"regulator solution X,U (agent " + std::to_string(i + 1) + ")", dev, 1e-8,
                    dev <= 1e-8});
  }

  const GainBundle bundle = synthesize_bundle(sc, audit, err);
  for (int i = 0; i < sc.n_agents(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    Eigen::MatrixXd K2(1, 4);
    K2 << bundle.controllers[si].K2x, bundle.controllers[si].K2w;
    const double dev = (K2 - ref.K2[si]).cwiseAbs().maxCoeff();
    rows.push_back({"K2 (agent " + std::to_string(i + 1) + ")", dev, 1e-8, dev <= 1e-8});
  }

  const SimulationTrace trace =
      run(sc, bundle, random_initial_conditions(sc, sc.sim.seed), sc.sim.horizon);
  if (!opt.out_path.empty()) write_trace_csv(trace, opt.out_path);
  const ConvergenceMetrics metrics = convergence_metrics(trace, sc.sim.tail_fraction);
  rows.push_back({"simulation tail max |e|", metrics.worst_tail, sc.sim.tail_tolerance,
                  metrics.worst_tail <= sc.sim.tail_tolerance});

  out << std::left << std::setw(38) << "quantity" << std::setw(14) << "deviation" << std::setw(14)
      << "tolerance" << "verdict\n";
  bool all_pass = true;
  for (const auto& row : rows) {
    out << std::left << std::setw(38) << row.name << std::setw(14) << row.deviation
        << std::setw(14) << row.tolerance << (row.pass ? "match" : "MISMATCH") << "\n";
    all_pass = all_pass && row.pass;
  }
  if (!all_pass)
    err << "some reference rows did not match; see the table above\n";
  return all_pass ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cooperative output regulation toolkit for discrete time-delay multi-agent systems"};
  app.require_subcommand(1);

  CommonOptions opt;
  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("CONFIG", opt.config,
                      "scenario config path or the built-in name 'paper_example'");
      cmd->add_option("--config", opt.config_flag, "scenario config path");
    }
    cmd->add_option("--out", opt.out_path, "output file path");
    return cmd;
  };

  CLI::App* audit = add_common(app.add_subcommand("audit", "run the assumption audit"), true);
  CLI::App* mu = add_common(app.add_subcommand("mu", "report the observer gain interval"), true);
  mu->add_option("--mu", opt.mu, "observer gain override");
  CLI::App* synth =
      add_common(app.add_subcommand("synthesize", "design and export the gain bundle"), true);
  synth->add_option("--mu", opt.mu, "observer gain override");
  synth->add_flag("--force", opt.force, "proceed despite a failed audit");
  CLI::App* sim =
      add_common(app.add_subcommand("simulate", "run the closed loop and export the trace"), true);
  sim->add_option("--gains", opt.gains_path, "gain bundle path (default: synthesize in memory)");
  sim->add_option("--mu", opt.mu, "observer gain override (runs even outside the interval)");
  sim->add_option("--seed", opt.seed, "initial-condition seed override");
  sim->add_option("--horizon", opt.horizon, "horizon override");
  sim->add_flag("--force", opt.force, "proceed despite a failed audit");
  CLI::App* rep = add_common(
      app.add_subcommand("reproduce-paper", "compare the built-in scenario against its references"),
      false);
  rep->add_option("--seed", opt.seed, "initial-condition seed override");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (audit->parsed() || mu->parsed() || synth->parsed() || sim->parsed()) {
      if (opt.config_name().empty()) {
        err << "a scenario config is required (path or 'paper_example')\n";
        return kExitValidation;
      }
    }
    if (audit->parsed()) return cmd_audit(opt, out);
    if (mu->parsed()) return cmd_mu(opt, out);
    if (synth->parsed()) return cmd_synthesize(opt, out, err);
    if (sim->parsed()) return cmd_simulate(opt, out, err);
    if (rep->parsed()) return cmd_reproduce(opt, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const AssumptionViolation& e) {
    err << "assumption failure: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace coopreg
