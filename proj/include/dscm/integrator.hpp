#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <vector>

#include "dscm/ode_model.hpp"

namespace dscm {

/// |state| beyond this is treated as a blow-up.
inline constexpr double kBlowUpThreshold = 1e12;

/// Uniformly sampled positions of every variable, sample n at time n * dt
/// (or a contiguous suffix of such a run, see trailing_window()).
struct SimulationResult {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  ///< positions[label - 1][n]

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  [[nodiscard]] const std::vector<double>& position(Label label) const;
};

/// min(0.01, (2 pi / w_max) / 50) over every frequency present in clamps,
/// forcings and undamped natural frequencies sqrt(a/m).
[[nodiscard]] double default_step(const CausalOde& ode);

/// Classical fixed-step RK4 on (x, x') for every linear variable; clamped
/// variables are evaluated exactly at each sample time. The run covers
/// ceil(horizon / dt) steps. Throws DivergenceError on non-finite or blown-up
/// state and ValidationError when a linear variable lacks an initial condition.
[[nodiscard]] SimulationResult simulate(const CausalOde& ode, double horizon, double dt,
                                        const std::map<Label, InitialCondition>& overrides = {});

/// The last ceil(fraction * N) samples. Requires 0 < fraction < 1.
[[nodiscard]] SimulationResult trailing_window(const SimulationResult& result, double fraction);

/// `t,x1,...,xD` header then one row per sample, shortest round-trip decimals.
void write_csv(std::ostream& out, const SimulationResult& result);

}  // namespace dscm
