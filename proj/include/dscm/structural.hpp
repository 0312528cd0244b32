#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dscm/ode_model.hpp"
#include "dscm/stability.hpp"
#include "dscm/trajectory.hpp"

namespace dscm {

/// Amplitude and phase of the steady response of m x'' + b x' + a x = g(t)
/// to g(t) = amplitude * cos(omega t + phase):
///
///     A' = A / sqrt((a - m w^2)^2 + (b w)^2)
///     phi' = phi - atan2(b w, a - m w^2)
struct ForcedResponse {
  double amplitude = 0.0;
  double phase = 0.0;
};

[[nodiscard]] ForcedResponse forced_response(double amplitude, double phase, double omega,
                                             double mass, double damping, double stiffness);

/// Closed-form structural equation of a linear mechanism, kept as its
/// coefficient record so that two derivations can be compared exactly.
struct StructuralEquation {
  Label owner = 0;
  double mass = 1.0;
  double damping = 0.0;
  double stiffness = 0.0;
  double constant = 0.0;
  std::map<Label, double> parent_weights;
  QuasiPeriodicSignal forcing;

  [[nodiscard]] std::vector<Label> parents() const;
  /// w_ij / a_i
  [[nodiscard]] double dc_gain(Label parent) const;
  /// (c_i + DC of forcing) / a_i
  [[nodiscard]] double dc_offset() const;
  /// H_ij(w) = w_ij / (a_i - m_i w^2 + i b_i w)
  [[nodiscard]] std::complex<double> frequency_response(Label parent, double omega) const;
  /// 1 / (a_i - m_i w^2 + i b_i w), the gain applied to intrinsic forcing.
  [[nodiscard]] std::complex<double> forcing_response(double omega) const;

  friend bool operator==(const StructuralEquation&, const StructuralEquation&) = default;
};

using DscmEntry = std::variant<StructuralEquation, ClampedMechanism>;

/// Dynamic structural causal model: one entry per label 1..D.
class Dscm {
 public:
  explicit Dscm(std::vector<DscmEntry> entries);

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] std::vector<Label> labels() const;
  [[nodiscard]] bool contains(Label label) const noexcept {
    return label >= 1 && static_cast<std::size_t>(label) <= entries_.size();
  }
  [[nodiscard]] const DscmEntry& entry(Label label) const;
  [[nodiscard]] bool is_clamped(Label label) const;

  friend bool operator==(const Dscm&, const Dscm&) = default;

 private:
  std::vector<DscmEntry> entries_;
};

/// Derives structural equations from a linear system. Every free mechanism
/// needs a != 0 (unique DC response) and b > 0 (decaying homogeneous part);
/// otherwise DerivationError.
[[nodiscard]] Dscm derive_dscm(const CausalOde& ode);

/// F_i applied to parent signals, canonicalized. Throws ValidationError when
/// a parent is missing from the bundle.
[[nodiscard]] QuasiPeriodicSignal apply_structural_equation(const StructuralEquation& equation,
                                                            const TrajectoryBundle& parents);

[[nodiscard]] Dscm intervene_dscm(const Dscm& dscm, const TrajectoryBundle& targets);

/// Systems with reciprocal condition estimate below this have no unique solution.
inline constexpr double kSingularityEpsilon = 1e-10;

struct NoUniqueSolution {
  double omega = 0.0;
  std::string reason;
};

using SolveOutcome = std::variant<TrajectoryBundle, NoUniqueSolution>;

/// Solves X_i = F_i(X_pa(i)) jointly, one complex linear system per active
/// frequency (0, every clamp frequency, every intrinsic forcing frequency).
[[nodiscard]] SolveOutcome solve_dscm(const Dscm& dscm);

/// Largest coefficient difference between two models with matching entry
/// kinds and parent sets; infinity when the structures differ.
[[nodiscard]] double coefficient_discrepancy(const Dscm& a, const Dscm& b);

struct CommutationOptions {
  StabilityOptions simulation;
  double coefficient_tol = 1e-12;
};

struct CommutationReport {
  Dscm derive_then_intervene;  ///< path A
  Dscm intervene_then_derive;  ///< path B
  double coefficient_discrepancy = 0.0;
  /// Solution of path A against path B.
  double solution_gap = 0.0;
  /// Solution of path A against the fitted asymptotics of the simulated ODE.
  double simulation_discrepancy = 0.0;
  Verdict simulation_verdict = Verdict::unstable;
  TrajectoryBundle solution;
  TrajectoryBundle simulated;
  std::optional<NoUniqueSolution> solve_failure;
  bool passed = false;
};

/// Checks that intervening before or after deriving yields the same model,
/// and that its solution matches simulation. With `outer`, the second
/// intervention (disjoint from `inner`) is applied on both paths as well.
[[nodiscard]] CommutationReport verify_commutation(const CausalOde& ode,
                                                   const TrajectoryBundle& inner,
                                                   const std::optional<TrajectoryBundle>& outer,
                                                   const CommutationOptions& options);

}  // namespace dscm
