#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dscm/ode_model.hpp"
#include "dscm/trajectory.hpp"

namespace dscm {

/// The admitted modular trajectory family: per variable, a DC term (when
/// allowed) plus cosines at the listed angular frequencies.
struct DynSpec {
  std::vector<double> frequencies;                    ///< shared by every label
  std::map<Label, std::vector<double>> per_label;     ///< overrides for single labels
  bool allow_constant = true;
  std::optional<double> amplitude_bound;              ///< bound used when drawing interventions

  /// Frequencies admitted for `label` (per-label entry if present, else shared).
  [[nodiscard]] const std::vector<double>& frequencies_for(Label label) const;
  /// Union of every listed frequency, sorted and deduplicated.
  [[nodiscard]] std::vector<double> all_frequencies() const;
  /// Throws ValidationError unless all frequencies are positive, finite and distinct.
  void validate() const;

  friend bool operator==(const DynSpec&, const DynSpec&) = default;
};

enum class Verdict { stable, unstable, divergent };

[[nodiscard]] const char* to_string(Verdict verdict);

struct StabilityOptions {
  int n_ics = 5;
  double horizon = 100.0;
  std::optional<double> dt;  ///< default_step() when unset
  double tol = 1e-3;
  std::uint64_t seed = 1;
  double transient_fraction = 0.5;  ///< fits use the last (1 - fraction) of the run
};

struct StabilityReport {
  Verdict verdict = Verdict::unstable;
  TrajectoryBundle eta;          ///< mean of the per-IC fits (set when stable)
  double max_discrepancy = 0.0;  ///< largest pairwise asymptotic_distance between fits
  double max_trailing_gap = 0.0; ///< largest pairwise |x_a(t) - x_b(t)| in the fit window
  double max_residual = 0.0;     ///< largest fit RMS residual
  std::vector<double> fit_frequencies;
  /// Horizon at which exp(-(b/2m) * horizon * fraction) reaches tol for the
  /// weakest damping; infinite when some free variable is undamped.
  double required_horizon = 0.0;
  bool horizon_sufficient = true;
  std::optional<double> divergence_time;
  std::vector<std::map<Label, InitialCondition>> initial_conditions;
};

/// Numerical check of dynamic stability: simulate from `n_ics` seeded initial
/// conditions (positions in rest +- 5, velocities in +-5), fit each window at
/// spec frequencies plus every clamp and forcing frequency of the system, and
/// require pairwise agreement and small residuals within tol.
[[nodiscard]] StabilityReport check_dynamic_stability(const CausalOde& ode, const DynSpec& spec,
                                                      const StabilityOptions& options);

/// ln(1/tol) / (min_i b_i/(2 m_i) * (1 - transient_fraction)) over free variables.
[[nodiscard]] double required_horizon(const CausalOde& ode, double tol, double transient_fraction);

/// Seeded initial conditions over the documented sampling box.
[[nodiscard]] std::vector<std::map<Label, InitialCondition>> sample_initial_conditions(
    const CausalOde& ode, int count, std::uint64_t seed);

/// Draws one admitted signal for `label`: an offset in [-bound, bound] (when
/// constants are allowed) and, for each admitted frequency, with probability
/// 1/2, a cosine with amplitude in (0, bound] and phase in [0, 2 pi).
[[nodiscard]] QuasiPeriodicSignal draw_signal(const DynSpec& spec, Label label,
                                              std::mt19937_64& rng);

struct StructuralTrial {
  Label free_variable = 0;
  int trial = 0;
  Verdict verdict = Verdict::unstable;
  bool in_family = false;
  double discrepancy = 0.0;
  double residual = 0.0;
  QuasiPeriodicSignal fitted;
  TrajectoryBundle intervention;
};

struct StructuralStabilityReport {
  bool passed = false;
  std::vector<StructuralTrial> trials;
  std::optional<std::pair<Label, int>> first_failure;
};

/// For every variable i, clamps all others to `trials` random admitted signals
/// and checks that i settles to a unique member of Dyn_i.
[[nodiscard]] StructuralStabilityReport check_structural_dynamic_stability(
    const CausalOde& ode, const DynSpec& spec, int trials, const StabilityOptions& options);

}  // namespace dscm
