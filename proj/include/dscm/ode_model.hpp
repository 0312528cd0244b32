#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dscm/trajectory.hpp"

namespace dscm {

/// m x'' + b x' + a x = sum_j w_j x_j + c + forcing(t)
struct LinearMechanism {
  double mass = 1.0;
  double damping = 0.0;
  double stiffness = 0.0;  ///< a, coefficient of the variable itself
  std::map<Label, double> parent_weights;
  double constant = 0.0;
  QuasiPeriodicSignal forcing;

  friend bool operator==(const LinearMechanism&, const LinearMechanism&) = default;
};

/// x(t) - signal(t) = 0
struct ClampedMechanism {
  QuasiPeriodicSignal signal;

  friend bool operator==(const ClampedMechanism&, const ClampedMechanism&) = default;
};

using Mechanism = std::variant<LinearMechanism, ClampedMechanism>;

struct InitialCondition {
  double position = 0.0;
  double velocity = 0.0;

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

/// A causally structured system of D coupled second-order ODEs with labels 1..D.
///
/// Immutable; intervene() and with_initial_conditions() return new values.
class CausalOde {
 public:
  /// Mechanism k belongs to label k+1. `initial_conditions` may be empty or
  /// sized like `mechanisms`; clamped variables must not carry one.
  explicit CausalOde(std::vector<Mechanism> mechanisms,
                     std::vector<std::optional<InitialCondition>> initial_conditions = {});

  [[nodiscard]] std::size_t size() const noexcept { return mechanisms_.size(); }
  [[nodiscard]] std::vector<Label> labels() const;
  [[nodiscard]] bool contains(Label label) const noexcept {
    return label >= 1 && static_cast<std::size_t>(label) <= mechanisms_.size();
  }

  [[nodiscard]] const Mechanism& mechanism(Label label) const;
  [[nodiscard]] bool is_clamped(Label label) const;
  [[nodiscard]] const std::optional<InitialCondition>& initial_condition(Label label) const;

  /// Replaces initial conditions of the listed (linear) variables.
  [[nodiscard]] CausalOde with_initial_conditions(
      const std::map<Label, InitialCondition>& initial) const;

  friend bool operator==(const CausalOde&, const CausalOde&) = default;

 private:
  void check_label(Label label) const;

  std::vector<Mechanism> mechanisms_;
  std::vector<std::optional<InitialCondition>> initial_;
};

/// Chain of `count` masses between walls at 0 and `wall`; spring k_i with
/// natural length l_i joins mass i and i+1 (indices 0..count). Zero springs
/// produce no parent edge.
[[nodiscard]] CausalOde build_mass_spring(std::size_t count, std::span<const double> masses,
                                          std::span<const double> dampings,
                                          std::span<const double> springs,
                                          std::span<const double> lengths, double wall);

/// Perfect intervention: each targeted variable is clamped to its signal and
/// loses its initial condition. Throws ValidationError on unknown labels.
[[nodiscard]] CausalOde intervene(const CausalOde& ode, const TrajectoryBundle& targets);

/// DC equilibrium of the linear variables with clamps held at their offsets,
/// or nullopt when the stiffness system is singular.
[[nodiscard]] std::optional<std::vector<double>> rest_positions(const CausalOde& ode);

struct Edge {
  Label from = 0;
  Label to = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct CausalGraph {
  std::vector<Label> nodes;
  std::set<Edge> edges;

  [[nodiscard]] bool has_edge(Label from, Label to) const { return edges.contains({from, to}); }
  /// Space-separated `j->i` list in (from, to) order, e.g. `1->1 1->2`.
  [[nodiscard]] std::string to_string() const;
};

/// Parent edges plus a self-loop on every linear (second-order) variable.
[[nodiscard]] CausalGraph causal_graph(const CausalOde& ode);

}  // namespace dscm
