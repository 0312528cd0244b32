#include "dscm/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dscm/error.hpp"
#include "dscm/signal_literal.hpp"

namespace dscm {
namespace {

using nlohmann::json;

void allow_keys(const json& object, const std::string& field, std::set<std::string> keys) {
  if (!object.is_object()) throw ValidationError(field + ": expected an object");
  for (const auto& [key, _] : object.items()) {
    if (!keys.contains(key)) throw ValidationError(field + ": unknown key '" + key + "'");
  }
}

double get_number(const json& value, const std::string& field) {
  if (!value.is_number()) throw ValidationError(field + ": expected a number");
  return value.get<double>();
}

double number_or(const json& object, const char* key, double fallback, const std::string& field) {
  return object.contains(key) ? get_number(object.at(key), field + "." + key) : fallback;
}

std::vector<double> number_list(const json& value, const std::string& field) {
  if (!value.is_array()) throw ValidationError(field + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < value.size(); ++k) {
    out.push_back(get_number(value[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Label parse_label(const std::string& key, const std::string& field) {
  std::size_t used = 0;
  int label = 0;
  try {
    label = std::stoi(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || label < 1) {
    throw ValidationError(field + ": '" + key + "' is not a variable label");
  }
  return label;
}

QuasiPeriodicSignal signal_field(const json& value, const std::string& field) {
  if (!value.is_string()) throw ValidationError(field + ": expected a signal literal string");
  try {
    return parse_signal(value.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(field + ": " + e.what());
  }
}

TrajectoryBundle bundle_field(const json& value, const std::string& field) {
  if (!value.is_object()) throw ValidationError(field + ": expected {label: signal}");
  TrajectoryBundle out;
  for (const auto& [key, signal] : value.items()) {
    out[parse_label(key, field)] = signal_field(signal, field + "." + key);
  }
  return out;
}

Mechanism variable_from_json(const json& v, const std::string& field) {
  if (v.contains("clamp")) {
    allow_keys(v, field, {"label", "clamp"});
    return ClampedMechanism{signal_field(v.at("clamp"), field + ".clamp")};
  }
  allow_keys(v, field, {"label", "mass", "damping", "stiffness", "constant", "parents", "forcing"});
  LinearMechanism lin;
  lin.mass = number_or(v, "mass", 1.0, field);
  lin.damping = number_or(v, "damping", 0.0, field);
  lin.stiffness = number_or(v, "stiffness", 0.0, field);
  lin.constant = number_or(v, "constant", 0.0, field);
  if (v.contains("parents")) {
    const json& parents = v.at("parents");
    if (!parents.is_object()) throw ValidationError(field + ".parents: expected {label: weight}");
    for (const auto& [key, weight] : parents.items()) {
      lin.parent_weights[parse_label(key, field + ".parents")] =
          get_number(weight, field + ".parents." + key);
    }
  }
  if (v.contains("forcing")) lin.forcing = signal_field(v.at("forcing"), field + ".forcing");
  return lin;
}

json signal_json(const QuasiPeriodicSignal& s) { return to_literal(s); }

json bundle_json(const TrajectoryBundle& bundle) {
  json out = json::object();
  for (const auto& [label, signal] : bundle) out[std::to_string(label)] = signal_json(signal);
  return out;
}

void validate_targets(const TrajectoryBundle& targets, const CausalOde& ode,
                      const std::string& field) {
  for (const auto& [label, _] : targets) {
    if (!ode.contains(label)) {
      throw ValidationError(field + ": unknown variable label " + std::to_string(label));
    }
  }
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
  }
  allow_keys(root, "scenario",
             {"system", "interventions", "outer_interventions", "dyn", "simulation", "run"});
  if (!root.contains("system")) throw ValidationError("system: missing");

  Scenario scenario;
  const json& system = root.at("system");
  allow_keys(system, "system", {"mass_spring", "variables"});
  if (system.contains("mass_spring") == system.contains("variables")) {
    throw ValidationError("system: give exactly one of 'mass_spring' or 'variables'");
  }
  if (system.contains("mass_spring")) {
    const json& ms = system.at("mass_spring");
    const std::string f = "system.mass_spring";
    allow_keys(ms, f, {"masses", "dampings", "springs", "lengths", "wall"});
    for (const char* key : {"masses", "dampings", "springs", "lengths", "wall"}) {
      if (!ms.contains(key)) throw ValidationError(f + "." + key + ": missing");
    }
    MassSpringParameters p;
    p.masses = number_list(ms.at("masses"), f + ".masses");
    p.dampings = number_list(ms.at("dampings"), f + ".dampings");
    p.springs = number_list(ms.at("springs"), f + ".springs");
    p.lengths = number_list(ms.at("lengths"), f + ".lengths");
    p.wall = get_number(ms.at("wall"), f + ".wall");
    scenario.system = std::move(p);
  } else {
    const json& vars = system.at("variables");
    if (!vars.is_array()) throw ValidationError("system.variables: expected an array");
    std::vector<Mechanism> mechanisms;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const std::string f = "system.variables[" + std::to_string(k) + "]";
      const json& v = vars[k];
      if (!v.is_object()) throw ValidationError(f + ": expected an object");
      if (v.contains("label") &&
          !(v.at("label").is_number_integer() && v.at("label").get<long>() == static_cast<long>(k + 1))) {
        throw ValidationError(f + ".label: labels must run 1..D in order");
      }
      mechanisms.push_back(variable_from_json(v, f));
    }
    scenario.system = std::move(mechanisms);
  }

  if (root.contains("interventions")) {
    scenario.interventions = bundle_field(root.at("interventions"), "interventions");
  }
  if (root.contains("outer_interventions")) {
    scenario.outer_interventions =
        bundle_field(root.at("outer_interventions"), "outer_interventions");
  }

  if (root.contains("dyn")) {
    const json& dyn = root.at("dyn");
    allow_keys(dyn, "dyn", {"frequencies", "per_label", "allow_constant", "amplitude_bound"});
    if (dyn.contains("frequencies")) {
      scenario.dyn.frequencies = number_list(dyn.at("frequencies"), "dyn.frequencies");
    }
    if (dyn.contains("per_label")) {
      const json& per = dyn.at("per_label");
      if (!per.is_object()) throw ValidationError("dyn.per_label: expected {label: [..]}");
      for (const auto& [key, list] : per.items()) {
        scenario.dyn.per_label[parse_label(key, "dyn.per_label")] =
            number_list(list, "dyn.per_label." + key);
      }
    }
    if (dyn.contains("allow_constant")) {
      if (!dyn.at("allow_constant").is_boolean()) {
        throw ValidationError("dyn.allow_constant: expected a boolean");
      }
      scenario.dyn.allow_constant = dyn.at("allow_constant").get<bool>();
    }
    if (dyn.contains("amplitude_bound") && !dyn.at("amplitude_bound").is_null()) {
      scenario.dyn.amplitude_bound = get_number(dyn.at("amplitude_bound"), "dyn.amplitude_bound");
    }
  }

  if (root.contains("simulation")) {
    const json& sim = root.at("simulation");
    allow_keys(sim, "simulation", {"horizon", "dt", "initial_conditions"});
    scenario.simulation.horizon = number_or(sim, "horizon", 100.0, "simulation");
    if (sim.contains("dt") && !sim.at("dt").is_null()) {
      scenario.simulation.dt = get_number(sim.at("dt"), "simulation.dt");
    }
    if (sim.contains("initial_conditions")) {
      const json& ics = sim.at("initial_conditions");
      if (!ics.is_object()) {
        throw ValidationError("simulation.initial_conditions: expected {label: [x0, v0]}");
      }
      for (const auto& [key, pair] : ics.items()) {
        const std::string f = "simulation.initial_conditions." + key;
        const auto values = number_list(pair, f);
        if (values.size() != 2) throw ValidationError(f + ": expected [position, velocity]");
        scenario.simulation.initial_conditions[parse_label(key, f)] = {values[0], values[1]};
      }
    }
  }

  if (root.contains("run")) {
    const json& run = root.at("run");
    allow_keys(run, "run", {"seed", "tol", "ics", "trials", "transient_fraction", "deltas"});
    if (run.contains("seed")) {
      if (!run.at("seed").is_number_unsigned()) {
        throw ValidationError("run.seed: expected a non-negative integer");
      }
      scenario.run.seed = run.at("seed").get<std::uint64_t>();
    }
    scenario.run.tol = number_or(run, "tol", 1e-3, "run");
    for (const char* key : {"ics", "trials"}) {
      if (!run.contains(key)) continue;
      if (!run.at(key).is_number_integer()) {
        throw ValidationError(std::string("run.") + key + ": expected an integer");
      }
      (std::string(key) == "ics" ? scenario.run.ics : scenario.run.trials) = run.at(key).get<int>();
    }
    scenario.run.transient_fraction = number_or(run, "transient_fraction", 0.5, "run");
    if (run.contains("deltas")) scenario.run.deltas = number_list(run.at("deltas"), "run.deltas");
  }

  // Validate against the model construction rules before anything runs.
  const CausalOde ode = build_system(scenario);
  validate_targets(scenario.interventions, ode, "interventions");
  validate_targets(scenario.outer_interventions, ode, "outer_interventions");
  for (const auto& [label, _] : scenario.outer_interventions) {
    if (scenario.interventions.contains(label)) {
      throw ValidationError("outer_interventions: label " + std::to_string(label) +
                            " also appears in interventions");
    }
  }
  scenario.dyn.validate();
  if (!(scenario.simulation.horizon > 0.0)) throw ValidationError("simulation.horizon: must be > 0");
  if (scenario.simulation.dt && !(*scenario.simulation.dt > 0.0)) {
    throw ValidationError("simulation.dt: must be > 0");
  }
  if (!(scenario.run.tol > 0.0)) throw ValidationError("run.tol: must be > 0");
  if (scenario.run.ics < 2) throw ValidationError("run.ics: must be >= 2");
  if (scenario.run.trials < 1) throw ValidationError("run.trials: must be >= 1");
  if (!(scenario.run.transient_fraction > 0.0 && scenario.run.transient_fraction < 1.0)) {
    throw ValidationError("run.transient_fraction: must lie in (0, 1)");
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize_scenario(const Scenario& scenario) {
  json root;
  if (const auto* ms = std::get_if<MassSpringParameters>(&scenario.system)) {
    root["system"]["mass_spring"] = {{"masses", ms->masses},   {"dampings", ms->dampings},
                                     {"springs", ms->springs}, {"lengths", ms->lengths},
                                     {"wall", ms->wall}};
  } else {
    json vars = json::array();
    const auto& mechanisms = std::get<std::vector<Mechanism>>(scenario.system);
    for (std::size_t k = 0; k < mechanisms.size(); ++k) {
      json v;
      v["label"] = k + 1;
      if (const auto* clamp = std::get_if<ClampedMechanism>(&mechanisms[k])) {
        v["clamp"] = signal_json(clamp->signal);
      } else {
        const auto& lin = std::get<LinearMechanism>(mechanisms[k]);
        v["mass"] = lin.mass;
        v["damping"] = lin.damping;
        v["stiffness"] = lin.stiffness;
        v["constant"] = lin.constant;
        json parents = json::object();
        for (const auto& [label, w] : lin.parent_weights) parents[std::to_string(label)] = w;
        v["parents"] = parents;
        v["forcing"] = signal_json(lin.forcing);
      }
      vars.push_back(v);
    }
    root["system"]["variables"] = vars;
  }
  root["interventions"] = bundle_json(scenario.interventions);
  root["outer_interventions"] = bundle_json(scenario.outer_interventions);

  json dyn;
  dyn["frequencies"] = scenario.dyn.frequencies;
  json per = json::object();
  for (const auto& [label, list] : scenario.dyn.per_label) per[std::to_string(label)] = list;
  dyn["per_label"] = per;
  dyn["allow_constant"] = scenario.dyn.allow_constant;
  dyn["amplitude_bound"] =
      scenario.dyn.amplitude_bound ? json(*scenario.dyn.amplitude_bound) : json(nullptr);
  root["dyn"] = dyn;

  json sim;
  sim["horizon"] = scenario.simulation.horizon;
  sim["dt"] = scenario.simulation.dt ? json(*scenario.simulation.dt) : json(nullptr);
  json ics = json::object();
  for (const auto& [label, ic] : scenario.simulation.initial_conditions) {
    ics[std::to_string(label)] = {ic.position, ic.velocity};
  }
  sim["initial_conditions"] = ics;
  root["simulation"] = sim;

  root["run"] = {{"seed", scenario.run.seed},
                 {"tol", scenario.run.tol},
                 {"ics", scenario.run.ics},
                 {"trials", scenario.run.trials},
                 {"transient_fraction", scenario.run.transient_fraction},
                 {"deltas", scenario.run.deltas}};
  return root.dump(2) + "\n";
}

CausalOde build_system(const Scenario& scenario) {
  CausalOde ode = std::visit(
      [](const auto& system) -> CausalOde {
        if constexpr (std::is_same_v<std::decay_t<decltype(system)>, MassSpringParameters>) {
          return build_mass_spring(system.masses.size(), system.masses, system.dampings,
                                   system.springs, system.lengths, system.wall);
        } else {
          return CausalOde(system);
        }
      },
      scenario.system);
  for (const auto& [label, _] : scenario.simulation.initial_conditions) {
    if (!ode.contains(label)) {
      throw ValidationError("simulation.initial_conditions: unknown variable label " +
                            std::to_string(label));
    }
  }
  return ode.with_initial_conditions(scenario.simulation.initial_conditions);
}

StabilityOptions stability_options(const Scenario& scenario) {
  StabilityOptions options;
  options.n_ics = scenario.run.ics;
  options.horizon = scenario.simulation.horizon;
  options.dt = scenario.simulation.dt;
  options.tol = scenario.run.tol;
  options.seed = scenario.run.seed;
  options.transient_fraction = scenario.run.transient_fraction;
  return options;
}

}  // namespace dscm
