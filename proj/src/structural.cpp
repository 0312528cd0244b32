#include "dscm/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "dscm/error.hpp"

namespace dscm {
namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Fixed-point residual accepted when verifying a solved bundle.
constexpr double kFixedPointTolerance = 1e-9;

std::complex<double> phasor(const CosComponent& c) { return std::polar(c.amplitude, c.phase); }

void add_component(QuasiPeriodicSignal& signal, double omega, std::complex<double> z) {
  signal.components.push_back({std::abs(z), omega, std::arg(z)});
}

std::string label_name(Label label) { return "x" + std::to_string(label); }

double max_abs_offset(const TrajectoryBundle& bundle) {
  double m = 0.0;
  for (const auto& [_, s] : bundle) {
    m = std::max(m, std::abs(s.offset));
    for (const auto& c : s.components) m = std::max(m, c.amplitude);
  }
  return m;
}

}  // namespace

ForcedResponse forced_response(double amplitude, double phase, double omega, double mass,
                               double damping, double stiffness) {
  const double reactive = stiffness - mass * omega * omega;
  const double resistive = damping * omega;
  return {amplitude / std::sqrt(reactive * reactive + resistive * resistive),
          phase - std::atan2(resistive, reactive)};
}

std::vector<Label> StructuralEquation::parents() const {
  std::vector<Label> out;
  for (const auto& [label, _] : parent_weights) out.push_back(label);
  return out;
}

double StructuralEquation::dc_gain(Label parent) const {
  const auto it = parent_weights.find(parent);
  return it == parent_weights.end() ? 0.0 : it->second / stiffness;
}

double StructuralEquation::dc_offset() const {
  return (constant + canonicalize(forcing).offset) / stiffness;
}

std::complex<double> StructuralEquation::forcing_response(double omega) const {
  return 1.0 / std::complex<double>(stiffness - mass * omega * omega, damping * omega);
}

std::complex<double> StructuralEquation::frequency_response(Label parent, double omega) const {
  const auto it = parent_weights.find(parent);
  if (it == parent_weights.end()) return 0.0;
  return it->second * forcing_response(omega);
}

Dscm::Dscm(std::vector<DscmEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto* eq = std::get_if<StructuralEquation>(&entries_[k]);
    if (eq == nullptr) continue;
    const auto label = static_cast<Label>(k + 1);
    if (eq->owner != label) {
      throw ValidationError(label_name(label) + ": equation owner mismatch");
    }
    for (const auto& [parent, _] : eq->parent_weights) {
      if (parent == label || !contains(parent)) {
        throw ValidationError(label_name(label) + ".parents: invalid label " +
                              std::to_string(parent));
      }
    }
  }
}

std::vector<Label> Dscm::labels() const {
  std::vector<Label> out(entries_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<Label>(k + 1);
  return out;
}

const DscmEntry& Dscm::entry(Label label) const {
  if (!contains(label)) {
    throw ValidationError("unknown variable label " + std::to_string(label));
  }
  return entries_[static_cast<std::size_t>(label - 1)];
}

bool Dscm::is_clamped(Label label) const {
  return std::holds_alternative<ClampedMechanism>(entry(label));
}

Dscm derive_dscm(const CausalOde& ode) {
  std::vector<DscmEntry> entries;
  entries.reserve(ode.size());
  for (Label label : ode.labels()) {
    const Mechanism& mech = ode.mechanism(label);
    if (const auto* clamp = std::get_if<ClampedMechanism>(&mech)) {
      entries.emplace_back(*clamp);
      continue;
    }
    const auto& lin = std::get<LinearMechanism>(mech);
    if (lin.stiffness == 0.0) {
      throw DerivationError(DerivationError::Kind::underdetermined_dc,
                            label_name(label) + ": stiffness a = 0 leaves the DC response "
                                                "undetermined");
    }
    if (!(lin.damping > 0.0)) {
      throw DerivationError(DerivationError::Kind::stability_precondition,
                            label_name(label) + ": damping b = 0, homogeneous motion never "
                                                "decays (not structurally dynamically stable)");
    }
    entries.emplace_back(StructuralEquation{label, lin.mass, lin.damping, lin.stiffness,
                                            lin.constant, lin.parent_weights, lin.forcing});
  }
  return Dscm(std::move(entries));
}

QuasiPeriodicSignal apply_structural_equation(const StructuralEquation& equation,
                                              const TrajectoryBundle& parents) {
  QuasiPeriodicSignal out;
  double dc = equation.constant;
  for (const auto& [parent, weight] : equation.parent_weights) {
    const auto it = parents.find(parent);
    if (it == parents.end()) {
      throw ValidationError(label_name(equation.owner) + ": missing parent " +
                            label_name(parent));
    }
    const QuasiPeriodicSignal input = canonicalize(it->second);
    dc += weight * input.offset;
    for (const auto& c : input.components) {
      add_component(out, c.angular_frequency,
                    phasor(c) * equation.frequency_response(parent, c.angular_frequency));
    }
  }
  const QuasiPeriodicSignal forcing = canonicalize(equation.forcing);
  dc += forcing.offset;
  for (const auto& c : forcing.components) {
    add_component(out, c.angular_frequency,
                  phasor(c) * equation.forcing_response(c.angular_frequency));
  }
  out.offset = dc / equation.stiffness;
  return canonicalize(out);
}

Dscm intervene_dscm(const Dscm& dscm, const TrajectoryBundle& targets) {
  std::vector<DscmEntry> entries;
  for (Label label : dscm.labels()) entries.push_back(dscm.entry(label));
  for (const auto& [label, signal] : targets) {
    if (!dscm.contains(label)) {
      throw ValidationError("interventions: unknown variable label " + std::to_string(label));
    }
    entries[static_cast<std::size_t>(label - 1)] = ClampedMechanism{signal};
  }
  return Dscm(std::move(entries));
}

SolveOutcome solve_dscm(const Dscm& dscm) {
  TrajectoryBundle bundle;
  std::vector<const StructuralEquation*> free;
  std::vector<double> omegas{0.0};
  for (Label label : dscm.labels()) {
    if (const auto* clamp = std::get_if<ClampedMechanism>(&dscm.entry(label))) {
      bundle[label] = canonicalize(clamp->signal);
      for (const auto& c : bundle[label].components) omegas.push_back(c.angular_frequency);
    } else {
      const auto& eq = std::get<StructuralEquation>(dscm.entry(label));
      free.push_back(&eq);
      for (const auto& c : canonicalize(eq.forcing).components) {
        omegas.push_back(c.angular_frequency);
      }
    }
  }
  if (free.empty()) return bundle;

  std::sort(omegas.begin(), omegas.end());
  omegas.erase(std::unique(omegas.begin(), omegas.end(),
                           [](double a, double b) {
                             return b - a <= kFrequencyMergeEpsilon * std::max(1.0, b);
                           }),
               omegas.end());

  std::vector<Eigen::Index> slot(dscm.size() + 1, -1);
  for (std::size_t r = 0; r < free.size(); ++r) {
    slot[static_cast<std::size_t>(free[r]->owner)] = static_cast<Eigen::Index>(r);
  }

  const auto n = static_cast<Eigen::Index>(free.size());
  std::vector<QuasiPeriodicSignal> solved(free.size());
  for (double omega : omegas) {
    const double match = kFrequencyMergeEpsilon * std::max(1.0, omega);
    Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const StructuralEquation& eq = *free[static_cast<std::size_t>(r)];
      for (const auto& [parent, _] : eq.parent_weights) {
        const std::complex<double> gain = eq.frequency_response(parent, omega);
        const Eigen::Index col = slot[static_cast<std::size_t>(parent)];
        if (col >= 0) {
          system(r, col) -= gain;
        } else {
          rhs(r) += gain * phasor_at(bundle.at(parent), omega, match);
        }
      }
      rhs(r) += eq.forcing_response(omega) * phasor_at(eq.forcing, omega, match);
      if (omega == 0.0) rhs(r) += eq.constant / eq.stiffness;
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond >= kSingularityEpsilon)) {
      return NoUniqueSolution{omega, "reciprocal condition estimate " + std::to_string(rcond) +
                                         " below " + std::to_string(kSingularityEpsilon)};
    }
    const Eigen::VectorXcd z = lu.solve(rhs);
    for (Eigen::Index r = 0; r < n; ++r) {
      auto& signal = solved[static_cast<std::size_t>(r)];
      if (omega == 0.0) {
        signal.offset = z(r).real();
      } else {
        add_component(signal, omega, z(r));
      }
    }
  }

  for (std::size_t r = 0; r < free.size(); ++r) {
    bundle[free[r]->owner] = canonicalize(solved[r]);
  }

  const double scale_ref = 1.0 + max_abs_offset(bundle);
  for (const StructuralEquation* eq : free) {
    const double residual = asymptotic_distance(apply_structural_equation(*eq, bundle),
                                                bundle.at(eq->owner), kFrequencyMergeEpsilon);
    if (residual > kFixedPointTolerance * scale_ref) {
      return NoUniqueSolution{0.0, label_name(eq->owner) + ": fixed-point residual " +
                                       std::to_string(residual)};
    }
  }
  return bundle;
}

double coefficient_discrepancy(const Dscm& a, const Dscm& b) {
  if (a.size() != b.size()) return kInfinity;
  double worst = 0.0;
  for (Label label : a.labels()) {
    const DscmEntry& ea = a.entry(label);
    const DscmEntry& eb = b.entry(label);
    if (ea.index() != eb.index()) return kInfinity;
    if (const auto* ca = std::get_if<ClampedMechanism>(&ea)) {
      const auto& cb = std::get<ClampedMechanism>(eb);
      worst = std::max(worst, asymptotic_distance(ca->signal, cb.signal, kFrequencyMergeEpsilon));
      continue;
    }
    const auto& sa = std::get<StructuralEquation>(ea);
    const auto& sb = std::get<StructuralEquation>(eb);
    if (sa.parents() != sb.parents()) return kInfinity;
    worst = std::max({worst, std::abs(sa.mass - sb.mass), std::abs(sa.damping - sb.damping),
                      std::abs(sa.stiffness - sb.stiffness), std::abs(sa.constant - sb.constant),
                      asymptotic_distance(sa.forcing, sb.forcing, kFrequencyMergeEpsilon)});
    for (const auto& [parent, weight] : sa.parent_weights) {
      worst = std::max(worst, std::abs(weight - sb.parent_weights.at(parent)));
    }
  }
  return worst;
}

CommutationReport verify_commutation(const CausalOde& ode, const TrajectoryBundle& inner,
                                     const std::optional<TrajectoryBundle>& outer,
                                     const CommutationOptions& options) {
  if (outer) {
    for (const auto& [label, _] : *outer) {
      if (inner.contains(label)) {
        throw ValidationError("outer: label " + std::to_string(label) +
                              " is already targeted by the inner intervention");
      }
    }
  }

  const Dscm observational = derive_dscm(ode);
  Dscm path_a = intervene_dscm(observational, inner);
  CausalOde intervened = intervene(ode, inner);
  std::optional<Dscm> mixed;
  if (outer) {
    path_a = intervene_dscm(path_a, *outer);
    // Mixed route: derive on the singly intervened system, then intervene.
    mixed = intervene_dscm(derive_dscm(intervened), *outer);
    intervened = intervene(intervened, *outer);
  }
  const Dscm path_b = derive_dscm(intervened);

  CommutationReport report{path_a, path_b, 0.0, 0.0, 0.0, Verdict::unstable, {}, {}, {}, false};
  report.coefficient_discrepancy = coefficient_discrepancy(path_a, path_b);
  if (mixed) {
    report.coefficient_discrepancy =
        std::max(report.coefficient_discrepancy, coefficient_discrepancy(path_a, *mixed));
  }

  const SolveOutcome solved_a = solve_dscm(path_a);
  const SolveOutcome solved_b = solve_dscm(path_b);
  if (const auto* failure = std::get_if<NoUniqueSolution>(&solved_a)) {
    report.solve_failure = *failure;
    return report;
  }
  if (const auto* failure = std::get_if<NoUniqueSolution>(&solved_b)) {
    report.solve_failure = *failure;
    return report;
  }
  report.solution = std::get<TrajectoryBundle>(solved_a);
  report.solution_gap = asymptotic_distance(report.solution, std::get<TrajectoryBundle>(solved_b),
                                            kFrequencyMergeEpsilon);

  const StabilityReport sim = check_dynamic_stability(intervened, DynSpec{}, options.simulation);
  report.simulation_verdict = sim.verdict;
  report.simulated = sim.eta;
  report.simulation_discrepancy =
      sim.verdict == Verdict::divergent
          ? kInfinity
          : asymptotic_distance(report.solution, sim.eta, options.simulation.tol);

  report.passed = report.coefficient_discrepancy <= options.coefficient_tol &&
                  report.solution_gap <= options.coefficient_tol &&
                  sim.verdict == Verdict::stable &&
                  report.simulation_discrepancy <= options.simulation.tol;
  return report;
}

}  // namespace dscm
