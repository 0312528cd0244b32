#include "dscm/stability.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

#include "dscm/error.hpp"
#include "dscm/integrator.hpp"

namespace dscm {
namespace {

constexpr double kIcPositionSpread = 5.0;
constexpr double kIcVelocitySpread = 5.0;

void sorted_unique(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || v - out.back() > kFrequencyMergeEpsilon * std::max(1.0, v)) {
      out.push_back(v);
    }
  }
  values = std::move(out);
}

void collect_frequencies(const QuasiPeriodicSignal& signal, std::vector<double>& out) {
  for (const auto& c : canonicalize(signal).components) out.push_back(c.angular_frequency);
}

std::vector<double> fit_frequencies(const CausalOde& ode, const DynSpec& spec) {
  std::vector<double> out = spec.all_frequencies();
  for (Label label : ode.labels()) {
    std::visit(
        [&](const auto& mech) {
          if constexpr (std::is_same_v<std::decay_t<decltype(mech)>, ClampedMechanism>) {
            collect_frequencies(mech.signal, out);
          } else {
            collect_frequencies(mech.forcing, out);
          }
        },
        ode.mechanism(label));
  }
  sorted_unique(out);
  return out;
}

struct RunFits {
  std::map<Label, FitResult> fits;
  SimulationResult window;
};

bool in_family(const QuasiPeriodicSignal& fitted, const DynSpec& spec, Label label, double tol) {
  const QuasiPeriodicSignal canonical = canonicalize(fitted);
  if (!spec.allow_constant && std::abs(canonical.offset) > tol) return false;
  const auto& admitted = spec.frequencies_for(label);
  for (const auto& c : canonical.components) {
    if (c.amplitude <= tol) continue;
    const bool admitted_frequency =
        std::any_of(admitted.begin(), admitted.end(),
                    [&](double w) { return std::abs(w - c.angular_frequency) <= 1e-9; });
    if (!admitted_frequency) return false;
  }
  return true;
}

}  // namespace

const std::vector<double>& DynSpec::frequencies_for(Label label) const {
  const auto it = per_label.find(label);
  return it == per_label.end() ? frequencies : it->second;
}

std::vector<double> DynSpec::all_frequencies() const {
  std::vector<double> out = frequencies;
  for (const auto& [_, list] : per_label) out.insert(out.end(), list.begin(), list.end());
  sorted_unique(out);
  return out;
}

void DynSpec::validate() const {
  auto check = [](const std::vector<double>& list, const std::string& field) {
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (!(list[k] > 0.0) || !std::isfinite(list[k])) {
        throw ValidationError(field + ": frequencies must be finite and > 0");
      }
      for (std::size_t m = 0; m < k; ++m) {
        if (list[m] == list[k]) throw ValidationError(field + ": frequencies must be distinct");
      }
    }
  };
  check(frequencies, "dyn.frequencies");
  for (const auto& [label, list] : per_label) {
    check(list, "dyn.per_label." + std::to_string(label));
  }
  if (amplitude_bound && !(*amplitude_bound > 0.0)) {
    throw ValidationError("dyn.amplitude_bound: must be > 0");
  }
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::divergent: return "divergent";
  }
  return "unknown";
}

double required_horizon(const CausalOde& ode, double tol, double transient_fraction) {
  double slowest = std::numeric_limits<double>::infinity();
  for (Label label : ode.labels()) {
    if (const auto* lin = std::get_if<LinearMechanism>(&ode.mechanism(label))) {
      slowest = std::min(slowest, lin->damping / (2.0 * lin->mass));
    }
  }
  if (std::isinf(slowest)) return 0.0;  // nothing free to settle
  if (slowest <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 / tol) / (slowest * (1.0 - transient_fraction));
}

std::vector<std::map<Label, InitialCondition>> sample_initial_conditions(const CausalOde& ode,
                                                                         int count,
                                                                         std::uint64_t seed) {
  const auto rest = rest_positions(ode);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> position(-kIcPositionSpread, kIcPositionSpread);
  std::uniform_real_distribution<double> velocity(-kIcVelocitySpread, kIcVelocitySpread);
  std::vector<std::map<Label, InitialCondition>> out(static_cast<std::size_t>(count));
  for (auto& ics : out) {
    for (Label label : ode.labels()) {
      if (ode.is_clamped(label)) continue;
      const double center = rest ? (*rest)[static_cast<std::size_t>(label - 1)] : 0.0;
      const double x = center + position(rng);
      ics[label] = {x, velocity(rng)};
    }
  }
  return out;
}

QuasiPeriodicSignal draw_signal(const DynSpec& spec, Label label, std::mt19937_64& rng) {
  const double bound = spec.amplitude_bound.value_or(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QuasiPeriodicSignal signal;
  if (spec.allow_constant) signal.offset = bound * (2.0 * unit(rng) - 1.0);
  for (double omega : spec.frequencies_for(label)) {
    if (unit(rng) < 0.5) continue;
    const double amplitude = bound * (1.0 - unit(rng));
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    signal.components.push_back({amplitude, omega, phase});
  }
  return signal;
}

StabilityReport check_dynamic_stability(const CausalOde& ode, const DynSpec& spec,
                                        const StabilityOptions& options) {
  spec.validate();
  if (options.n_ics < 2) throw ValidationError("ics: need at least 2 initial conditions");
  if (!(options.tol > 0.0)) throw ValidationError("tol: must be > 0");
  if (!(options.transient_fraction > 0.0 && options.transient_fraction < 1.0)) {
    throw ValidationError("transient_fraction: must lie in (0, 1)");
  }

  StabilityReport report;
  report.fit_frequencies = fit_frequencies(ode, spec);
  report.required_horizon = required_horizon(ode, options.tol, options.transient_fraction);
  report.horizon_sufficient = options.horizon >= report.required_horizon;

  std::vector<Label> free;
  for (Label label : ode.labels()) {
    if (ode.is_clamped(label)) {
      report.eta[label] = canonicalize(std::get<ClampedMechanism>(ode.mechanism(label)).signal);
    } else {
      free.push_back(label);
    }
  }
  if (free.empty()) {
    report.verdict = Verdict::stable;
    return report;
  }

  report.initial_conditions = sample_initial_conditions(ode, options.n_ics, options.seed);
  const double dt = options.dt.value_or(default_step(ode));

  std::vector<std::future<RunFits>> jobs;
  for (const auto& ics : report.initial_conditions) {
    jobs.push_back(std::async(std::launch::async, [&, ics] {
      const SimulationResult run = simulate(ode, options.horizon, dt, ics);
      RunFits out;
      out.window = trailing_window(run, 1.0 - options.transient_fraction);
      for (Label label : free) {
        out.fits[label] = fit_quasi_periodic(out.window.times, out.window.position(label),
                                             report.fit_frequencies);
      }
      return out;
    }));
  }

  // Reduce in IC order so the report does not depend on completion order.
  std::vector<RunFits> runs;
  for (auto& job : jobs) {
    try {
      runs.push_back(job.get());
    } catch (const DivergenceError& e) {
      if (!report.divergence_time || e.time() < *report.divergence_time) {
        report.divergence_time = e.time();
      }
    }
  }
  if (report.divergence_time) {
    report.verdict = Verdict::divergent;
    report.max_discrepancy = std::numeric_limits<double>::infinity();
    report.max_trailing_gap = std::numeric_limits<double>::infinity();
    return report;
  }

  for (const auto& run : runs) {
    for (const auto& [_, fit] : run.fits) {
      report.max_residual = std::max(report.max_residual, fit.rms_residual);
    }
  }
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      for (Label label : free) {
        report.max_discrepancy =
            std::max(report.max_discrepancy,
                     asymptotic_distance(runs[a].fits.at(label).signal,
                                         runs[b].fits.at(label).signal, options.tol));
        const auto& xa = runs[a].window.position(label);
        const auto& xb = runs[b].window.position(label);
        for (std::size_t n = 0; n < xa.size(); ++n) {
          report.max_trailing_gap = std::max(report.max_trailing_gap, std::abs(xa[n] - xb[n]));
        }
      }
    }
  }

  for (Label label : free) {
    QuasiPeriodicSignal sum;
    for (const auto& run : runs) sum = superpose(sum, run.fits.at(label).signal);
    report.eta[label] = scale(sum, 1.0 / static_cast<double>(runs.size()));
  }

  report.verdict = report.max_discrepancy <= options.tol && report.max_residual <= options.tol
                       ? Verdict::stable
                       : Verdict::unstable;
  return report;
}

StructuralStabilityReport check_structural_dynamic_stability(const CausalOde& ode,
                                                             const DynSpec& spec, int trials,
                                                             const StabilityOptions& options) {
  if (trials < 1) throw ValidationError("trials: must be >= 1");
  spec.validate();

  StructuralStabilityReport report;
  report.passed = true;
  for (Label free : ode.labels()) {
    for (int trial = 0; trial < trials; ++trial) {
      std::seed_seq seq{options.seed, static_cast<std::uint64_t>(free),
                        static_cast<std::uint64_t>(trial)};
      std::mt19937_64 rng(seq);

      StructuralTrial outcome;
      outcome.free_variable = free;
      outcome.trial = trial;
      for (Label other : ode.labels()) {
        if (other != free) outcome.intervention[other] = draw_signal(spec, other, rng);
      }

      StabilityOptions run = options;
      run.seed = rng();
      const StabilityReport check =
          check_dynamic_stability(intervene(ode, outcome.intervention), spec, run);
      outcome.verdict = check.verdict;
      outcome.discrepancy = check.max_discrepancy;
      outcome.residual = check.max_residual;
      if (check.verdict == Verdict::stable) {
        outcome.fitted = check.eta.at(free);
        outcome.in_family = in_family(outcome.fitted, spec, free, options.tol);
      }

      if (check.verdict != Verdict::stable || !outcome.in_family) {
        report.passed = false;
        if (!report.first_failure) report.first_failure = {{free, trial}};
      }
      report.trials.push_back(std::move(outcome));
    }
  }
  return report;
}

}  // namespace dscm
