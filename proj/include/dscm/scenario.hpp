#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dscm/ode_model.hpp"
#include "dscm/stability.hpp"
#include "dscm/trajectory.hpp"

namespace dscm {

struct MassSpringParameters {
  std::vector<double> masses;
  std::vector<double> dampings;
  std::vector<double> springs;  ///< k_0..k_D
  std::vector<double> lengths;  ///< l_0..l_D
  double wall = 0.0;

  friend bool operator==(const MassSpringParameters&, const MassSpringParameters&) = default;
};

struct SimulationSettings {
  double horizon = 100.0;
  std::optional<double> dt;
  std::map<Label, InitialCondition> initial_conditions;

  friend bool operator==(const SimulationSettings&, const SimulationSettings&) = default;
};

struct RunSettings {
  std::uint64_t seed = 1;
  double tol = 1e-3;
  int ics = 5;
  int trials = 3;
  double transient_fraction = 0.5;
  std::vector<double> deltas;

  friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

/// One file drives every CLI subcommand. JSON layout:
///
///     {
///       "system": {"mass_spring": {"masses": [..], "dampings": [..],
///                                  "springs": [..], "lengths": [..], "wall": L}}
///              | {"variables": [{"label": 1, "mass": m, "damping": b,
///                                "stiffness": a, "constant": c,
///                                "parents": {"2": w}, "forcing": "<signal>"},
///                               {"label": 2, "clamp": "<signal>"}]},
///       "interventions": {"1": "<signal>"},
///       "outer_interventions": {"3": "<signal>"},
///       "dyn": {"frequencies": [..], "per_label": {"1": [..]},
///               "allow_constant": true, "amplitude_bound": 1.0},
///       "simulation": {"horizon": 100, "dt": 0.01,
///                      "initial_conditions": {"1": [x0, v0]}},
///       "run": {"seed": 1, "tol": 0.001, "ics": 5, "trials": 3,
///               "transient_fraction": 0.5, "deltas": [..]}
///     }
///
/// Only "system" is required. Signals use the literal syntax of parse_signal().
struct Scenario {
  std::variant<MassSpringParameters, std::vector<Mechanism>> system;
  TrajectoryBundle interventions;
  TrajectoryBundle outer_interventions;
  DynSpec dyn;
  SimulationSettings simulation;
  RunSettings run;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses and validates; ValidationError messages name the offending field.
[[nodiscard]] Scenario parse_scenario(std::string_view json_text);
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);
[[nodiscard]] std::string serialize_scenario(const Scenario& scenario);

/// The unintervened system with the scenario's initial conditions applied.
[[nodiscard]] CausalOde build_system(const Scenario& scenario);

/// Stability options assembled from the run and simulation settings.
[[nodiscard]] StabilityOptions stability_options(const Scenario& scenario);

}  // namespace dscm
