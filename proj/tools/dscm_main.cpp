#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dscm/dbn.hpp"
#include "dscm/error.hpp"
#include "dscm/integrator.hpp"
#include "dscm/io.hpp"
#include "dscm/scenario.hpp"
#include "dscm/signal_literal.hpp"
#include "dscm/stability.hpp"
#include "dscm/structural.hpp"

namespace fs = std::filesystem;
using namespace dscm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Flags {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> ics;
  std::optional<int> trials;
  std::optional<double> horizon;
  std::vector<double> deltas;
  bool outer = false;
  bool json = false;
};

/// Writes the primary artifact to --out, else $DSCM_OUTPUT_DIR/<name>, else stdout.
void emit(const Flags& flags, const std::string& name, const std::string& content) {
  fs::path target;
  if (!flags.out.empty()) {
    target = flags.out;
  } else if (const char* dir = std::getenv("DSCM_OUTPUT_DIR"); dir && *dir) {
    fs::create_directories(dir);
    target = fs::path(dir) / name;
  } else {
    std::cout << content;
    return;
  }
  std::ofstream file(target);
  if (!file) throw ValidationError("out: cannot write '" + target.string() + "'");
  file << content;
  std::cerr << "wrote " << target.string() << '\n';
}

bool has_destination(const Flags& flags) {
  const char* dir = std::getenv("DSCM_OUTPUT_DIR");
  return !flags.out.empty() || (dir && *dir);
}

Scenario load(const Flags& flags) {
  Scenario scenario = load_scenario(flags.scenario);
  if (flags.seed) scenario.run.seed = *flags.seed;
  if (flags.tol) scenario.run.tol = *flags.tol;
  if (flags.ics) scenario.run.ics = *flags.ics;
  if (flags.trials) scenario.run.trials = *flags.trials;
  if (!flags.deltas.empty()) scenario.run.deltas = flags.deltas;
  if (scenario.run.ics < 2) throw ValidationError("ics: must be >= 2");
  if (!(scenario.run.tol > 0.0)) throw ValidationError("tol: must be > 0");
  if (flags.horizon && !(*flags.horizon > 0.0)) throw ValidationError("horizon: must be > 0");
  return scenario;
}

/// Checks run at least twice the horizon the decay envelope needs unless
/// --horizon pins it.
StabilityOptions check_options(const Scenario& scenario, const CausalOde& ode, const Flags& flags) {
  StabilityOptions options = stability_options(scenario);
  if (flags.horizon) {
    options.horizon = *flags.horizon;
  } else {
    const double needed = required_horizon(ode, options.tol, options.transient_fraction);
    if (std::isfinite(needed)) options.horizon = std::max(options.horizon, 2.0 * needed);
  }
  return options;
}

std::string fixed(double value, int precision = 6) {
  std::ostringstream out;
  out << std::setprecision(precision) << value;
  return out.str();
}

int cmd_simulate(const Flags& flags) {
  const Scenario scenario = load(flags);
  const CausalOde ode = intervene(build_system(scenario), scenario.interventions);
  const double horizon = flags.horizon.value_or(scenario.simulation.horizon);
  const double dt = scenario.simulation.dt.value_or(default_step(ode));
  const SimulationResult result = simulate(ode, horizon, dt);
  std::ostringstream csv;
  write_csv(csv, result);
  emit(flags, "simulate.csv", csv.str());
  return kExitOk;
}

int cmd_graph(const Flags& flags) {
  const Scenario scenario = load(flags);
  const CausalOde ode = build_system(scenario);
  const std::string text = "before: " + causal_graph(ode).to_string() + "\nafter: " +
                           causal_graph(intervene(ode, scenario.interventions)).to_string() +
                           "\n";
  emit(flags, "graph.txt", text);
  return kExitOk;
}

int cmd_derive(const Flags& flags) {
  const Scenario scenario = load(flags);
  const Dscm dscm = derive_dscm(intervene(build_system(scenario), scenario.interventions));
  if (flags.json || has_destination(flags)) {
    emit(flags, "derive.json", dscm_to_json(dscm).dump(2) + "\n");
  } else {
    std::cout << format_dscm(dscm);
  }
  return kExitOk;
}

int cmd_solve(const Flags& flags) {
  const Scenario scenario = load(flags);
  const Dscm dscm = derive_dscm(intervene(build_system(scenario), scenario.interventions));
  const SolveOutcome outcome = solve_dscm(dscm);
  if (const auto* failure = std::get_if<NoUniqueSolution>(&outcome)) {
    std::cerr << "solve: no unique solution at omega=" << failure->omega << ": "
              << failure->reason << '\n';
    return kExitFail;
  }
  const auto& solution = std::get<TrajectoryBundle>(outcome);
  std::string text;
  if (flags.json) {
    text = bundle_to_json(solution).dump(2) + "\n";
  } else {
    for (const auto& [label, signal] : solution) {
      text += "x" + std::to_string(label) + " = " + to_literal(signal) + "\n";
    }
  }
  emit(flags, flags.json ? "solve.json" : "solve.txt", text);
  return kExitOk;
}

int cmd_check_stability(const Flags& flags) {
  const Scenario scenario = load(flags);
  const CausalOde base = build_system(scenario);
  const CausalOde ode = intervene(base, scenario.interventions);
  const StabilityOptions options = check_options(scenario, ode, flags);

  const StabilityReport dynamic = check_dynamic_stability(ode, scenario.dyn, options);
  std::optional<StructuralStabilityReport> structural;
  if (scenario.run.trials > 0) {
    structural = check_structural_dynamic_stability(
        base, scenario.dyn, scenario.run.trials, check_options(scenario, base, flags));
  }
  const bool passed = dynamic.verdict == Verdict::stable && (!structural || structural->passed);

  nlohmann::json report;
  report["passed"] = passed;
  report["horizon"] = options.horizon;
  report["tol"] = options.tol;
  report["seed"] = options.seed;
  report["dynamic"] = report_to_json(dynamic);
  report["structural"] = structural ? report_to_json(*structural) : nlohmann::json(nullptr);

  if (flags.json && !has_destination(flags)) {
    std::cout << report.dump(2) << '\n';
  } else {
    if (has_destination(flags)) emit(flags, "check-stability.json", report.dump(2) + "\n");
    std::cout << "dynamic stability: " << to_string(dynamic.verdict)
              << "  horizon=" << fixed(options.horizon)
              << "  required=" << fixed(dynamic.required_horizon)
              << "  discrepancy=" << fixed(dynamic.max_discrepancy, 3)
              << "  residual=" << fixed(dynamic.max_residual, 3) << '\n';
    for (const auto& [label, eta] : dynamic.eta) {
      std::cout << "  x" << label << " -> " << to_literal(eta) << '\n';
    }
    if (structural) {
      std::cout << "structural dynamic stability (" << scenario.run.trials
                << " trials per variable):\n"
                << std::left << std::setw(6) << "free" << std::setw(7) << "trial"
                << std::setw(11) << "verdict" << std::setw(11) << "in_family"
                << std::setw(14) << "discrepancy" << "residual\n";
      for (const auto& t : structural->trials) {
        std::cout << std::left << std::setw(6) << ("x" + std::to_string(t.free_variable))
                  << std::setw(7) << t.trial << std::setw(11) << to_string(t.verdict)
                  << std::setw(11) << (t.in_family ? "yes" : "no") << std::setw(14)
                  << fixed(t.discrepancy, 3) << fixed(t.residual, 3) << '\n';
      }
    }
  }
  std::cout << (passed ? "PASS" : "FAIL") << '\n';
  return passed ? kExitOk : kExitFail;
}

int cmd_verify_commute(const Flags& flags) {
  const Scenario scenario = load(flags);
  const CausalOde ode = build_system(scenario);
  std::optional<TrajectoryBundle> outer;
  if (flags.outer || !scenario.outer_interventions.empty()) outer = scenario.outer_interventions;

  TrajectoryBundle all = scenario.interventions;
  if (outer) all.insert(outer->begin(), outer->end());
  CommutationOptions options;
  options.simulation = check_options(scenario, intervene(ode, all), flags);

  const CommutationReport report = verify_commutation(ode, scenario.interventions, outer, options);
  nlohmann::json json = report_to_json(report);
  json["horizon"] = options.simulation.horizon;
  json["tol"] = options.simulation.tol;

  if (flags.json && !has_destination(flags)) {
    std::cout << json.dump(2) << '\n';
  } else {
    if (has_destination(flags)) emit(flags, "verify-commute.json", json.dump(2) + "\n");
    std::cout << "coefficient discrepancy: " << fixed(report.coefficient_discrepancy, 3) << '\n'
              << "solution gap:            " << fixed(report.solution_gap, 3) << '\n'
              << "simulation verdict:      " << to_string(report.simulation_verdict) << '\n'
              << "simulation discrepancy:  " << fixed(report.simulation_discrepancy, 3) << '\n';
    if (report.solve_failure) {
      std::cout << "solve failed at omega=" << report.solve_failure->omega << ": "
                << report.solve_failure->reason << '\n';
    }
    for (const auto& [label, signal] : report.solution) {
      std::cout << "  x" << label << " = " << to_literal(signal) << '\n';
    }
  }
  std::cout << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? kExitOk : kExitFail;
}

int cmd_dbn_study(const Flags& flags) {
  const Scenario scenario = load(flags);
  const CausalOde ode = intervene(build_system(scenario), scenario.interventions);
  std::vector<double> deltas = scenario.run.deltas;
  if (deltas.empty()) deltas = {0.1, 0.05, 0.025, 0.0125};
  const double horizon = flags.horizon.value_or(scenario.simulation.horizon);
  const auto rows = discretization_study(ode, deltas, horizon);

  std::ostringstream csv;
  write_study_csv(csv, rows);
  emit(flags, "dbn-study.csv", csv.str());
  if (has_destination(flags)) {
    for (const auto& row : rows) {
      std::cout << "delta=" << row.delta << "  steps=" << row.steps << "  sup_error="
                << (row.error ? *row.error : fixed(row.sup_error)) << '\n';
    }
  }
  std::cerr << "empirical order: " << fixed(empirical_order(rows), 4) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic structural causal models of linear ODE systems"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", flags.scenario, "scenario JSON file")->required();
    sub->add_option("--out", flags.out, "output path (default: $DSCM_OUTPUT_DIR or stdout)");
    sub->add_option("--seed", flags.seed, "seed for sampled initial conditions and trials");
    sub->add_option("--tol", flags.tol, "tolerance in variable units");
    sub->add_option("--horizon", flags.horizon, "simulation horizon");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "integrate the intervened system to CSV");
  auto* graph_cmd = app.add_subcommand("graph", "edge list before and after intervention");
  auto* derive_cmd = app.add_subcommand("derive", "structural equations of the intervened system");
  auto* solve_cmd = app.add_subcommand("solve", "asymptotic trajectory of every variable");
  auto* stability_cmd = app.add_subcommand("check-stability", "numerical stability checks");
  auto* commute_cmd = app.add_subcommand("verify-commute", "derive/intervene commutation check");
  auto* study_cmd = app.add_subcommand("dbn-study", "Euler discretization error table");
  for (auto* sub : {simulate_cmd, graph_cmd, derive_cmd, solve_cmd, stability_cmd, commute_cmd,
                    study_cmd}) {
    add_common(sub);
  }
  for (auto* sub : {derive_cmd, solve_cmd, stability_cmd, commute_cmd}) {
    sub->add_flag("--json", flags.json, "machine-readable output on stdout");
  }
  for (auto* sub : {stability_cmd, commute_cmd}) {
    sub->add_option("--ics", flags.ics, "number of sampled initial conditions");
  }
  stability_cmd->add_option("--trials", flags.trials, "random interventions per variable (0 skips)");
  commute_cmd->add_flag("--outer", flags.outer, "also apply outer_interventions on both paths");
  study_cmd->add_option("--deltas", flags.deltas, "step sizes")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(flags);
    if (*graph_cmd) return cmd_graph(flags);
    if (*derive_cmd) return cmd_derive(flags);
    if (*solve_cmd) return cmd_solve(flags);
    if (*stability_cmd) return cmd_check_stability(flags);
    if (*commute_cmd) return cmd_verify_commute(flags);
    if (*study_cmd) return cmd_dbn_study(flags);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DerivationError& e) {
    std::cerr << "derive: " << e.what() << '\n';
    return kExitFail;
  } catch (const DivergenceError& e) {
    std::cerr << "simulation diverged at t=" << e.time() << ": " << e.what() << '\n';
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
