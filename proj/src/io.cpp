#include "dscm/io.hpp"

#include <cmath>
#include <sstream>

#include "dscm/error.hpp"
#include "dscm/signal_literal.hpp"

namespace dscm {
namespace {

using nlohmann::json;

// JSON has no infinity; keep it readable instead of collapsing to null.
json number(double value) {
  if (std::isfinite(value)) return value;
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

double read_number(const json& object, const char* key, const std::string& field) {
  if (!object.contains(key) || !object.at(key).is_number()) {
    throw ValidationError(field + "." + key + ": expected a number");
  }
  return object.at(key).get<double>();
}

QuasiPeriodicSignal read_signal(const json& object, const char* key, const std::string& field) {
  if (!object.contains(key) || !object.at(key).is_string()) {
    throw ValidationError(field + "." + key + ": expected a signal literal");
  }
  return parse_signal(object.at(key).get<std::string>());
}

}  // namespace

json bundle_to_json(const TrajectoryBundle& bundle) {
  json out = json::object();
  for (const auto& [label, signal] : bundle) out[std::to_string(label)] = to_literal(signal);
  return out;
}

json dscm_to_json(const Dscm& dscm) {
  json vars = json::array();
  for (Label label : dscm.labels()) {
    json v;
    v["label"] = label;
    if (const auto* clamp = std::get_if<ClampedMechanism>(&dscm.entry(label))) {
      v["kind"] = "clamp";
      v["signal"] = to_literal(clamp->signal);
    } else {
      const auto& eq = std::get<StructuralEquation>(dscm.entry(label));
      v["kind"] = "structural";
      v["mass"] = eq.mass;
      v["damping"] = eq.damping;
      v["stiffness"] = eq.stiffness;
      v["constant"] = eq.constant;
      json parents = json::array();
      for (const auto& [parent, weight] : eq.parent_weights) {
        parents.push_back({{"label", parent}, {"weight", weight}});
      }
      v["parents"] = parents;
      v["forcing"] = to_literal(eq.forcing);
    }
    vars.push_back(v);
  }
  return {{"variables", vars}};
}

Dscm dscm_from_json(const json& root) {
  if (!root.is_object() || !root.contains("variables") || !root.at("variables").is_array()) {
    throw ValidationError("dscm.variables: expected an array");
  }
  std::vector<DscmEntry> entries;
  const json& vars = root.at("variables");
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const std::string field = "dscm.variables[" + std::to_string(k) + "]";
    const json& v = vars[k];
    const Label label = static_cast<Label>(k + 1);
    if (!v.is_object() || !v.contains("kind") || !v.at("kind").is_string()) {
      throw ValidationError(field + ".kind: expected \"structural\" or \"clamp\"");
    }
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "clamp") {
      entries.emplace_back(ClampedMechanism{read_signal(v, "signal", field)});
    } else if (kind == "structural") {
      StructuralEquation eq;
      eq.owner = label;
      eq.mass = read_number(v, "mass", field);
      eq.damping = read_number(v, "damping", field);
      eq.stiffness = read_number(v, "stiffness", field);
      eq.constant = read_number(v, "constant", field);
      if (v.contains("parents")) {
        for (const auto& p : v.at("parents")) {
          if (!p.contains("label") || !p.at("label").is_number_integer()) {
            throw ValidationError(field + ".parents: each entry needs an integer label");
          }
          eq.parent_weights[p.at("label").get<Label>()] = read_number(p, "weight", field + ".parents");
        }
      }
      eq.forcing = read_signal(v, "forcing", field);
      entries.emplace_back(std::move(eq));
    } else {
      throw ValidationError(field + ".kind: unknown kind '" + kind + "'");
    }
  }
  return Dscm(std::move(entries));
}

json report_to_json(const StabilityReport& report) {
  json out;
  out["verdict"] = to_string(report.verdict);
  out["eta"] = bundle_to_json(report.eta);
  out["max_discrepancy"] = number(report.max_discrepancy);
  out["max_trailing_gap"] = number(report.max_trailing_gap);
  out["max_residual"] = number(report.max_residual);
  out["fit_frequencies"] = report.fit_frequencies;
  out["required_horizon"] = number(report.required_horizon);
  out["horizon_sufficient"] = report.horizon_sufficient;
  out["divergence_time"] = report.divergence_time ? json(*report.divergence_time) : json(nullptr);
  json ics = json::array();
  for (const auto& set : report.initial_conditions) {
    json one = json::object();
    for (const auto& [label, ic] : set) one[std::to_string(label)] = {ic.position, ic.velocity};
    ics.push_back(one);
  }
  out["initial_conditions"] = ics;
  return out;
}

json report_to_json(const StructuralStabilityReport& report) {
  json out;
  out["passed"] = report.passed;
  json trials = json::array();
  for (const auto& t : report.trials) {
    trials.push_back({{"free_variable", t.free_variable},
                      {"trial", t.trial},
                      {"verdict", to_string(t.verdict)},
                      {"in_family", t.in_family},
                      {"discrepancy", number(t.discrepancy)},
                      {"residual", number(t.residual)},
                      {"fitted", to_literal(t.fitted)},
                      {"intervention", bundle_to_json(t.intervention)}});
  }
  out["trials"] = trials;
  if (report.first_failure) {
    out["first_failure"] = {{"free_variable", report.first_failure->first},
                            {"trial", report.first_failure->second}};
  } else {
    out["first_failure"] = nullptr;
  }
  return out;
}

json report_to_json(const CommutationReport& report) {
  json out;
  out["passed"] = report.passed;
  out["coefficient_discrepancy"] = number(report.coefficient_discrepancy);
  out["solution_gap"] = number(report.solution_gap);
  out["simulation_discrepancy"] = number(report.simulation_discrepancy);
  out["simulation_verdict"] = to_string(report.simulation_verdict);
  out["solution"] = bundle_to_json(report.solution);
  out["simulated"] = bundle_to_json(report.simulated);
  out["derive_then_intervene"] = dscm_to_json(report.derive_then_intervene);
  out["intervene_then_derive"] = dscm_to_json(report.intervene_then_derive);
  if (report.solve_failure) {
    out["solve_failure"] = {{"omega", report.solve_failure->omega},
                            {"reason", report.solve_failure->reason}};
  } else {
    out["solve_failure"] = nullptr;
  }
  return out;
}

std::string format_dscm(const Dscm& dscm) {
  std::ostringstream out;
  for (Label label : dscm.labels()) {
    out << 'x' << label << " := ";
    if (const auto* clamp = std::get_if<ClampedMechanism>(&dscm.entry(label))) {
      out << "do(" << to_literal(clamp->signal) << ")\n";
      continue;
    }
    const auto& eq = std::get<StructuralEquation>(dscm.entry(label));
    out << "F(";
    bool first = true;
    for (const auto& [parent, weight] : eq.parent_weights) {
      out << (first ? "" : ", ") << 'x' << parent << ':' << weight;
      first = false;
    }
    out << ")  m=" << eq.mass << " b=" << eq.damping << " a=" << eq.stiffness
        << " c=" << eq.constant;
    if (!eq.forcing.components.empty() || eq.forcing.offset != 0.0) {
      out << " f=" << to_literal(eq.forcing);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dscm
