#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dscm/ode_model.hpp"

namespace dscm {

/// Forward-Euler update of one linear variable:
///
///     x' = x + dx_dv * v
///     v' = dv_dv * v + dv_dx * x + sum_j dv_dparent[j] * x_j
///          + dv_const + forcing_gain * forcing(n delta)
struct EulerUpdate {
  double dx_dv = 0.0;         ///< delta
  double dv_dv = 1.0;         ///< 1 - delta b / m
  double dv_dx = 0.0;         ///< -delta a / m
  std::map<Label, double> dv_dparent;  ///< delta w_j / m
  double dv_const = 0.0;      ///< delta c / m
  double forcing_gain = 0.0;  ///< delta / m
  QuasiPeriodicSignal forcing;

  friend bool operator==(const EulerUpdate&, const EulerUpdate&) = default;
};

/// Clamped nodes are sampled at grid times (zero-order hold).
using DbnNode = std::variant<EulerUpdate, ClampedMechanism>;

struct DbnState {
  std::size_t step = 0;
  std::vector<double> position;  ///< indexed by label - 1
  std::vector<double> velocity;
};

/// s_{n+1} = matrix * s_n + offset, s = (x_1..x_D, v_1..v_D).
struct AffineStep {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
};

/// Deterministic dynamic Bayesian network from an Euler discretization.
class DbnModel {
 public:
  DbnModel(double delta, std::vector<DbnNode> nodes);

  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const DbnNode& node(Label label) const;

  /// Transition from step n to n+1 as one affine map; clamped rows are zero
  /// with the next grid sample (and its derivative) in the offset.
  [[nodiscard]] AffineStep affine_step(std::size_t n) const;

  /// Applies one update; clamped nodes take their signal at (n+1) delta.
  [[nodiscard]] DbnState advance(const DbnState& state) const;

 private:
  double delta_;
  std::vector<DbnNode> nodes_;
};

/// Throws ValidationError unless delta > 0.
[[nodiscard]] DbnModel euler_discretize(const CausalOde& ode, double delta);

/// Initial state from the system's initial conditions (and overrides);
/// clamped nodes take their signal at t = 0.
[[nodiscard]] DbnState initial_state(const DbnModel& dbn, const CausalOde& ode,
                                     const std::map<Label, InitialCondition>& overrides = {});

/// state0 followed by `steps` updates. Throws DivergenceError carrying the
/// first step with a non-finite or blown-up entry.
[[nodiscard]] std::vector<DbnState> rollout(const DbnModel& dbn, const DbnState& state0,
                                            std::size_t steps);

struct StudyRow {
  double delta = 0.0;
  std::size_t steps = 0;
  double sup_error = 0.0;            ///< sup over grid times and free variables
  std::optional<std::string> error;  ///< set when the rollout diverged
};

/// Euler rollout error against an RK4 reference at dt = min(delta) / 16, one
/// row per delta sorted ascending. Every delta must divide the horizon.
[[nodiscard]] std::vector<StudyRow> discretization_study(
    const CausalOde& ode, std::span<const double> deltas, double horizon,
    const std::map<Label, InitialCondition>& overrides = {});

/// Least-squares slope of log(sup_error) against log(delta) over rows
/// without errors.
[[nodiscard]] double empirical_order(std::span<const StudyRow> rows);

/// `delta,steps,sup_error` CSV.
void write_study_csv(std::ostream& out, std::span<const StudyRow> rows);

}  // namespace dscm
