#include "dscm/integrator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "dscm/error.hpp"

namespace dscm {
namespace {

struct Coupling {
  std::size_t source;  // label - 1
  double weight;
};

// Flattened linear mechanism; state index k holds (x, v) at 2k, 2k+1.
struct LinearRow {
  std::size_t variable;
  double inv_mass;
  double damping;
  double stiffness;
  double constant;
  const QuasiPeriodicSignal* forcing;
  std::vector<Coupling> parents;
};

class OdeStepper {
 public:
  explicit OdeStepper(const CausalOde& ode) : slot_(ode.size(), kClamped), clamps_(ode.size()) {
    for (Label label : ode.labels()) {
      const auto k = static_cast<std::size_t>(label - 1);
      if (const auto* clamp = std::get_if<ClampedMechanism>(&ode.mechanism(label))) {
        clamps_[k] = &clamp->signal;
        continue;
      }
      const auto& lin = std::get<LinearMechanism>(ode.mechanism(label));
      slot_[k] = rows_.size();
      LinearRow row{k, 1.0 / lin.mass, lin.damping, lin.stiffness, lin.constant, &lin.forcing, {}};
      for (const auto& [parent, weight] : lin.parent_weights) {
        row.parents.push_back({static_cast<std::size_t>(parent - 1), weight});
      }
      rows_.push_back(std::move(row));
    }
  }

  [[nodiscard]] std::size_t state_size() const { return 2 * rows_.size(); }
  [[nodiscard]] const std::vector<LinearRow>& rows() const { return rows_; }

  [[nodiscard]] double position(std::size_t variable, const std::vector<double>& y,
                                double t) const {
    const std::size_t s = slot_[variable];
    return s == kClamped ? eval(*clamps_[variable], t) : y[2 * s];
  }

  void derivative(double t, const std::vector<double>& y, std::vector<double>& dy) const {
    for (std::size_t s = 0; s < rows_.size(); ++s) {
      const LinearRow& row = rows_[s];
      const double x = y[2 * s];
      const double v = y[2 * s + 1];
      double force = row.constant + eval(*row.forcing, t) - row.damping * v - row.stiffness * x;
      for (const auto& p : row.parents) force += p.weight * position(p.source, y, t);
      dy[2 * s] = v;
      dy[2 * s + 1] = force * row.inv_mass;
    }
  }

 private:
  static constexpr std::size_t kClamped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> slot_;
  std::vector<const QuasiPeriodicSignal*> clamps_;
  std::vector<LinearRow> rows_;
};

void max_frequency(const QuasiPeriodicSignal& s, double& w_max) {
  for (const auto& c : s.components) w_max = std::max(w_max, std::abs(c.angular_frequency));
}

void append_number(std::string& line, double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  line.append(buf, ptr);
}

}  // namespace

const std::vector<double>& SimulationResult::position(Label label) const {
  if (label < 1 || static_cast<std::size_t>(label) > positions.size()) {
    throw ValidationError("unknown variable label " + std::to_string(label));
  }
  return positions[static_cast<std::size_t>(label - 1)];
}

double default_step(const CausalOde& ode) {
  double w_max = 0.0;
  for (Label label : ode.labels()) {
    if (const auto* clamp = std::get_if<ClampedMechanism>(&ode.mechanism(label))) {
      max_frequency(clamp->signal, w_max);
      continue;
    }
    const auto& lin = std::get<LinearMechanism>(ode.mechanism(label));
    max_frequency(lin.forcing, w_max);
    if (lin.stiffness > 0.0) w_max = std::max(w_max, std::sqrt(lin.stiffness / lin.mass));
  }
  if (w_max <= 0.0) return 0.01;
  return std::min(0.01, 2.0 * std::numbers::pi / w_max / 50.0);
}

SimulationResult simulate(const CausalOde& ode, double horizon, double dt,
                          const std::map<Label, InitialCondition>& overrides) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("horizon: must be finite and > 0");
  }
  if (!(dt > 0.0) || !(dt < horizon)) throw ValidationError("dt: must satisfy 0 < dt < horizon");

  const CausalOde system = overrides.empty() ? ode : ode.with_initial_conditions(overrides);
  const OdeStepper stepper(system);

  std::vector<double> y(stepper.state_size());
  for (std::size_t s = 0; s < stepper.rows().size(); ++s) {
    const auto label = static_cast<Label>(stepper.rows()[s].variable + 1);
    const auto& ic = system.initial_condition(label);
    if (!ic) {
      throw ValidationError("initial_conditions: missing for x" + std::to_string(label));
    }
    y[2 * s] = ic->position;
    y[2 * s + 1] = ic->velocity;
  }

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  SimulationResult result;
  result.dt = dt;
  result.times.reserve(steps + 1);
  result.positions.assign(system.size(), {});
  for (auto& p : result.positions) p.reserve(steps + 1);

  auto record = [&](double t) {
    result.times.push_back(t);
    for (std::size_t v = 0; v < system.size(); ++v) {
      result.positions[v].push_back(stepper.position(v, y, t));
    }
  };

  std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
  record(0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    stepper.derivative(t, y, k1);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    stepper.derivative(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    stepper.derivative(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + dt * k3[i];
    stepper.derivative(t + dt, tmp, k4);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    const double t_next = static_cast<double>(n + 1) * dt;
    for (double value : y) {
      if (!std::isfinite(value) || std::abs(value) > kBlowUpThreshold) {
        throw DivergenceError(t_next, n + 1,
                              "simulation diverged at t=" + std::to_string(t_next));
      }
    }
    record(t_next);
  }
  return result;
}

SimulationResult trailing_window(const SimulationResult& result, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("trailing_window: fraction must lie in (0, 1)");
  }
  const std::size_t n = result.size();
  const auto keep = std::min(
      n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  const std::size_t first = n - keep;

  SimulationResult window;
  window.dt = result.dt;
  window.times.assign(result.times.begin() + static_cast<std::ptrdiff_t>(first), result.times.end());
  for (const auto& p : result.positions) {
    window.positions.emplace_back(p.begin() + static_cast<std::ptrdiff_t>(first), p.end());
  }
  return window;
}

void write_csv(std::ostream& out, const SimulationResult& result) {
  std::string line = "t";
  for (std::size_t v = 0; v < result.positions.size(); ++v) line += ",x" + std::to_string(v + 1);
  out << line << '\n';
  for (std::size_t n = 0; n < result.size(); ++n) {
    line.clear();
    append_number(line, result.times[n]);
    for (const auto& p : result.positions) {
      line += ',';
      append_number(line, p[n]);
    }
    out << line << '\n';
  }
}

}  // namespace dscm
