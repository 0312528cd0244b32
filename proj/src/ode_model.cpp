#include "dscm/ode_model.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "dscm/error.hpp"

namespace dscm {
namespace {

void require_finite(double value, const std::string& field) {
  if (!std::isfinite(value)) throw ValidationError(field + ": value must be finite");
}

void validate_signal(const QuasiPeriodicSignal& signal, const std::string& field) {
  require_finite(signal.offset, field + ".offset");
  for (const auto& c : signal.components) {
    require_finite(c.amplitude, field + ".amplitude");
    require_finite(c.angular_frequency, field + ".frequency");
    require_finite(c.phase, field + ".phase");
  }
}

}  // namespace

CausalOde::CausalOde(std::vector<Mechanism> mechanisms,
                     std::vector<std::optional<InitialCondition>> initial_conditions)
    : mechanisms_(std::move(mechanisms)), initial_(std::move(initial_conditions)) {
  if (initial_.empty()) initial_.resize(mechanisms_.size());
  if (initial_.size() != mechanisms_.size()) {
    throw ValidationError("initial_conditions: expected " + std::to_string(mechanisms_.size()) +
                          " entries, got " + std::to_string(initial_.size()));
  }
  for (std::size_t k = 0; k < mechanisms_.size(); ++k) {
    const Label label = static_cast<Label>(k + 1);
    const std::string field = "x" + std::to_string(label);
    if (const auto* lin = std::get_if<LinearMechanism>(&mechanisms_[k])) {
      if (!(lin->mass > 0.0)) throw ValidationError(field + ".mass: must be > 0");
      if (!(lin->damping >= 0.0)) throw ValidationError(field + ".damping: must be >= 0");
      require_finite(lin->mass, field + ".mass");
      require_finite(lin->damping, field + ".damping");
      require_finite(lin->stiffness, field + ".stiffness");
      require_finite(lin->constant, field + ".constant");
      validate_signal(lin->forcing, field + ".forcing");
      for (const auto& [parent, weight] : lin->parent_weights) {
        if (parent == label) throw ValidationError(field + ".parents: self reference");
        if (!contains(parent)) {
          throw ValidationError(field + ".parents: unknown variable label " +
                                std::to_string(parent));
        }
        require_finite(weight, field + ".parents");
      }
      if (initial_[k]) {
        require_finite(initial_[k]->position, field + ".initial.position");
        require_finite(initial_[k]->velocity, field + ".initial.velocity");
      }
    } else {
      validate_signal(std::get<ClampedMechanism>(mechanisms_[k]).signal, field + ".clamp");
      if (initial_[k]) {
        throw ValidationError(field + ": clamped variables take no initial condition");
      }
    }
  }
}

std::vector<Label> CausalOde::labels() const {
  std::vector<Label> out(mechanisms_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<Label>(k + 1);
  return out;
}

void CausalOde::check_label(Label label) const {
  if (!contains(label)) {
    throw ValidationError("unknown variable label " + std::to_string(label));
  }
}

const Mechanism& CausalOde::mechanism(Label label) const {
  check_label(label);
  return mechanisms_[static_cast<std::size_t>(label - 1)];
}

bool CausalOde::is_clamped(Label label) const {
  return std::holds_alternative<ClampedMechanism>(mechanism(label));
}

const std::optional<InitialCondition>& CausalOde::initial_condition(Label label) const {
  check_label(label);
  return initial_[static_cast<std::size_t>(label - 1)];
}

CausalOde CausalOde::with_initial_conditions(
    const std::map<Label, InitialCondition>& initial) const {
  auto next = initial_;
  for (const auto& [label, ic] : initial) {
    check_label(label);
    if (is_clamped(label)) {
      throw ValidationError("x" + std::to_string(label) +
                            ": clamped variables take no initial condition");
    }
    next[static_cast<std::size_t>(label - 1)] = ic;
  }
  return CausalOde(mechanisms_, std::move(next));
}

CausalOde build_mass_spring(std::size_t count, std::span<const double> masses,
                            std::span<const double> dampings, std::span<const double> springs,
                            std::span<const double> lengths, double wall) {
  if (count == 0) throw ValidationError("masses: need at least one mass");
  if (masses.size() != count) throw ValidationError("masses: expected D entries");
  if (dampings.size() != count) throw ValidationError("dampings: expected D entries");
  if (springs.size() != count + 1) throw ValidationError("springs: expected D+1 entries");
  if (lengths.size() != count + 1) throw ValidationError("lengths: expected D+1 entries");
  for (double k : springs) {
    if (!(k >= 0.0)) throw ValidationError("springs: constants must be >= 0");
  }
  require_finite(wall, "wall");

  std::vector<Mechanism> mechanisms;
  mechanisms.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    const double k_left = springs[i - 1];
    const double k_right = springs[i];
    LinearMechanism mech;
    mech.mass = masses[i - 1];
    mech.damping = dampings[i - 1];
    mech.stiffness = k_left + k_right;
    // left wall sits at 0 and contributes nothing beyond its rest length
    mech.constant = k_left * lengths[i - 1] - k_right * lengths[i];
    if (i > 1 && k_left != 0.0) mech.parent_weights[static_cast<Label>(i - 1)] = k_left;
    if (i < count && k_right != 0.0) mech.parent_weights[static_cast<Label>(i + 1)] = k_right;
    if (i == count) mech.constant += k_right * wall;
    mechanisms.emplace_back(std::move(mech));
  }
  return CausalOde(std::move(mechanisms));
}

CausalOde intervene(const CausalOde& ode, const TrajectoryBundle& targets) {
  std::vector<Mechanism> mechanisms;
  std::vector<std::optional<InitialCondition>> initial;
  for (Label label : ode.labels()) {
    mechanisms.push_back(ode.mechanism(label));
    initial.push_back(ode.initial_condition(label));
  }
  for (const auto& [label, signal] : targets) {
    if (!ode.contains(label)) {
      throw ValidationError("interventions: unknown variable label " + std::to_string(label));
    }
    const auto k = static_cast<std::size_t>(label - 1);
    mechanisms[k] = ClampedMechanism{signal};
    initial[k].reset();
  }
  return CausalOde(std::move(mechanisms), std::move(initial));
}

std::optional<std::vector<double>> rest_positions(const CausalOde& ode) {
  const auto n = static_cast<Eigen::Index>(ode.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Label label : ode.labels()) {
    const Eigen::Index row = label - 1;
    if (const auto* clamp = std::get_if<ClampedMechanism>(&ode.mechanism(label))) {
      system(row, row) = 1.0;
      rhs(row) = clamp->signal.offset;
      continue;
    }
    const auto& lin = std::get<LinearMechanism>(ode.mechanism(label));
    system(row, row) = lin.stiffness;
    for (const auto& [parent, weight] : lin.parent_weights) system(row, parent - 1) -= weight;
    rhs(row) = lin.constant + canonicalize(lin.forcing).offset;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd x = lu.solve(rhs);
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::string CausalGraph::to_string() const {
  std::string out;
  for (const auto& e : edges) {
    if (!out.empty()) out += ' ';
    out += std::to_string(e.from) + "->" + std::to_string(e.to);
  }
  return out;
}

CausalGraph causal_graph(const CausalOde& ode) {
  CausalGraph graph;
  graph.nodes = ode.labels();
  for (Label label : graph.nodes) {
    const auto* lin = std::get_if<LinearMechanism>(&ode.mechanism(label));
    if (lin == nullptr) continue;
    graph.edges.insert({label, label});
    for (const auto& [parent, _] : lin->parent_weights) graph.edges.insert({parent, label});
  }
  return graph;
}

}  // namespace dscm
