#include "dscm/dbn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "dscm/error.hpp"
#include "dscm/integrator.hpp"

namespace dscm {
namespace {

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

bool is_multiple(double value, double unit, std::size_t& count) {
  const double ratio = value / unit;
  const double rounded = std::round(ratio);
  count = static_cast<std::size_t>(rounded);
  return rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio);
}

}  // namespace

DbnModel::DbnModel(double delta, std::vector<DbnNode> nodes)
    : delta_(delta), nodes_(std::move(nodes)) {
  if (!(delta_ > 0.0) || !std::isfinite(delta_)) {
    throw ValidationError("delta: must be finite and > 0");
  }
}

const DbnNode& DbnModel::node(Label label) const {
  if (label < 1 || static_cast<std::size_t>(label) > nodes_.size()) {
    throw ValidationError("unknown variable label " + std::to_string(label));
  }
  return nodes_[static_cast<std::size_t>(label - 1)];
}

AffineStep DbnModel::affine_step(std::size_t n) const {
  const auto d = static_cast<Eigen::Index>(nodes_.size());
  AffineStep step{Eigen::MatrixXd::Zero(2 * d, 2 * d), Eigen::VectorXd::Zero(2 * d)};
  const double t = static_cast<double>(n) * delta_;
  for (Eigen::Index i = 0; i < d; ++i) {
    const DbnNode& node = nodes_[static_cast<std::size_t>(i)];
    if (const auto* clamp = std::get_if<ClampedMechanism>(&node)) {
      step.offset(i) = eval(clamp->signal, t + delta_);
      step.offset(d + i) = eval_derivative(clamp->signal, t + delta_);
      continue;
    }
    const auto& u = std::get<EulerUpdate>(node);
    step.matrix(i, i) = 1.0;
    step.matrix(i, d + i) = u.dx_dv;
    step.matrix(d + i, d + i) = u.dv_dv;
    step.matrix(d + i, i) = u.dv_dx;
    for (const auto& [parent, gain] : u.dv_dparent) step.matrix(d + i, parent - 1) += gain;
    step.offset(d + i) = u.dv_const + u.forcing_gain * eval(u.forcing, t);
  }
  return step;
}

DbnState DbnModel::advance(const DbnState& state) const {
  DbnState next;
  next.step = state.step + 1;
  next.position.resize(nodes_.size());
  next.velocity.resize(nodes_.size());
  const double t = static_cast<double>(state.step) * delta_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (const auto* clamp = std::get_if<ClampedMechanism>(&nodes_[i])) {
      next.position[i] = eval(clamp->signal, t + delta_);
      next.velocity[i] = eval_derivative(clamp->signal, t + delta_);
      continue;
    }
    const auto& u = std::get<EulerUpdate>(nodes_[i]);
    const double x = state.position[i];
    const double v = state.velocity[i];
    double dv = u.dv_dx * x + u.dv_const + u.forcing_gain * eval(u.forcing, t);
    for (const auto& [parent, gain] : u.dv_dparent) {
      dv += gain * state.position[static_cast<std::size_t>(parent - 1)];
    }
    next.position[i] = x + u.dx_dv * v;
    next.velocity[i] = u.dv_dv * v + dv;
  }
  return next;
}

DbnModel euler_discretize(const CausalOde& ode, double delta) {
  if (!(delta > 0.0)) throw ValidationError("delta: must be > 0");
  std::vector<DbnNode> nodes;
  for (Label label : ode.labels()) {
    const Mechanism& mech = ode.mechanism(label);
    if (const auto* clamp = std::get_if<ClampedMechanism>(&mech)) {
      nodes.emplace_back(*clamp);
      continue;
    }
    const auto& lin = std::get<LinearMechanism>(mech);
    const double h = delta / lin.mass;
    EulerUpdate u;
    u.dx_dv = delta;
    u.dv_dv = 1.0 - h * lin.damping;
    u.dv_dx = -h * lin.stiffness;
    for (const auto& [parent, weight] : lin.parent_weights) u.dv_dparent[parent] = h * weight;
    u.dv_const = h * lin.constant;
    u.forcing_gain = h;
    u.forcing = lin.forcing;
    nodes.emplace_back(std::move(u));
  }
  return DbnModel(delta, std::move(nodes));
}

DbnState initial_state(const DbnModel& dbn, const CausalOde& ode,
                       const std::map<Label, InitialCondition>& overrides) {
  if (dbn.size() != ode.size()) throw ValidationError("initial_state: size mismatch");
  const CausalOde system = overrides.empty() ? ode : ode.with_initial_conditions(overrides);
  DbnState state;
  state.position.resize(ode.size());
  state.velocity.resize(ode.size());
  for (Label label : system.labels()) {
    const auto k = static_cast<std::size_t>(label - 1);
    if (const auto* clamp = std::get_if<ClampedMechanism>(&dbn.node(label))) {
      state.position[k] = eval(clamp->signal, 0.0);
      state.velocity[k] = eval_derivative(clamp->signal, 0.0);
      continue;
    }
    const auto& ic = system.initial_condition(label);
    if (!ic) {
      throw ValidationError("initial_conditions: missing for x" + std::to_string(label));
    }
    state.position[k] = ic->position;
    state.velocity[k] = ic->velocity;
  }
  return state;
}

std::vector<DbnState> rollout(const DbnModel& dbn, const DbnState& state0, std::size_t steps) {
  if (state0.position.size() != dbn.size() || state0.velocity.size() != dbn.size()) {
    throw ValidationError("rollout: state size does not match the model");
  }
  std::vector<DbnState> states;
  states.reserve(steps + 1);
  states.push_back(state0);
  for (std::size_t n = 0; n < steps; ++n) {
    DbnState next = dbn.advance(states.back());
    for (std::size_t i = 0; i < next.position.size(); ++i) {
      const double x = next.position[i];
      const double v = next.velocity[i];
      if (!std::isfinite(x) || !std::isfinite(v) || std::abs(x) > kBlowUpThreshold ||
          std::abs(v) > kBlowUpThreshold) {
        throw DivergenceError(static_cast<double>(next.step) * dbn.delta(), next.step,
                              "rollout diverged at step " + std::to_string(next.step));
      }
    }
    states.push_back(std::move(next));
  }
  return states;
}

std::vector<StudyRow> discretization_study(const CausalOde& ode, std::span<const double> deltas,
                                           double horizon,
                                           const std::map<Label, InitialCondition>& overrides) {
  if (deltas.empty()) throw ValidationError("deltas: need at least one step size");
  std::vector<double> sorted(deltas.begin(), deltas.end());
  std::sort(sorted.begin(), sorted.end());
  for (double delta : sorted) {
    std::size_t steps = 0;
    if (!(delta > 0.0) || !is_multiple(horizon, delta, steps)) {
      throw ValidationError("deltas: " + format_number(delta) + " does not divide the horizon " +
                            format_number(horizon));
    }
  }

  const double reference_dt = sorted.front() / 16.0;
  const SimulationResult reference = simulate(ode, horizon, reference_dt, overrides);

  std::vector<StudyRow> rows;
  for (double delta : sorted) {
    StudyRow row;
    row.delta = delta;
    is_multiple(horizon, delta, row.steps);
    std::size_t stride = 0;
    if (!is_multiple(delta, reference_dt, stride)) {
      throw ValidationError("deltas: " + format_number(delta) +
                            " is not a multiple of the reference step");
    }
    try {
      const DbnModel dbn = euler_discretize(ode, delta);
      const auto states = rollout(dbn, initial_state(dbn, ode, overrides), row.steps);
      for (const DbnState& state : states) {
        const std::size_t ref = state.step * stride;
        for (Label label : ode.labels()) {
          if (ode.is_clamped(label)) continue;
          const auto k = static_cast<std::size_t>(label - 1);
          row.sup_error =
              std::max(row.sup_error, std::abs(state.position[k] - reference.positions[k][ref]));
        }
      }
    } catch (const DivergenceError& e) {
      row.sup_error = std::numeric_limits<double>::infinity();
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double empirical_order(std::span<const StudyRow> rows) {
  std::vector<std::pair<double, double>> points;
  for (const auto& row : rows) {
    if (!row.error && row.sup_error > 0.0) {
      points.emplace_back(std::log(row.delta), std::log(row.sup_error));
    }
  }
  if (points.size() < 2) throw ValidationError("empirical_order: need two finite rows");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) mx += x, my += y;
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : points) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

void write_study_csv(std::ostream& out, std::span<const StudyRow> rows) {
  out << "delta,steps,sup_error\n";
  for (const auto& row : rows) {
    out << format_number(row.delta) << ',' << row.steps << ',' << format_number(row.sup_error)
        << '\n';
  }
}

}  // namespace dscm
