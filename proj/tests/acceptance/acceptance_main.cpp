// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//
// Exit status is nonzero when any criterion fails, except those listed in
// kKnownUnattainable, whose failure is reported but expected (see README).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dscm/dbn.hpp"
#include "dscm/error.hpp"
#include "dscm/integrator.hpp"
#include "dscm/stability.hpp"
#include "dscm/structural.hpp"
#include "support/oracles.hpp"

using namespace dscm;

namespace {

// Pinned tolerances.
constexpr double kTrajectoryTol = 1e-3;       // convergence, fit and solution agreement
constexpr double kAmplitudeTol = 1e-3;        // frequency-response amplitude
constexpr double kPhaseTol = 1e-2;            // frequency-response phase, rad
constexpr double kCoefficientTol = 1e-12;     // commutation coefficients
constexpr double kStaticTol = 1e-12;          // DC-only solutions
constexpr double kOrderCenter = 1.0;          // Euler order
constexpr double kOrderSlack = 0.2;
constexpr double kRk4RatioLow = 12.0;
constexpr double kRk4RatioHigh = 20.0;
constexpr double kFitRoundTripTol = 1e-8;
constexpr double kAssociativityTol = 1e-9;

const std::set<int> kKnownUnattainable{1};

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

/// m x'' + b x' + k x = 2 + x2 with x2 clamped to F cos(w t).
CausalOde forced_oscillator(double omega, double m = 1.0, double b = 0.1, double k = 1.0,
                            double l = 2.0, double force = 2.0) {
  LinearMechanism x1;
  x1.mass = m;
  x1.damping = b;
  x1.stiffness = k;
  x1.constant = k * l;
  x1.parent_weights[2] = 1.0;
  return CausalOde({x1, ClampedMechanism{QuasiPeriodicSignal::cosine(force, omega)}});
}

CausalOde chain(std::size_t d) {
  const std::vector<double> m{1.0, 1.5, 0.8}, b{0.5, 0.7, 0.6}, k{1.0, 2.0, 1.5, 1.0},
      l{1.0, 0.8, 1.2, 1.0};
  return build_mass_spring(d, std::vector<double>(m.begin(), m.begin() + d),
                           std::vector<double>(b.begin(), b.begin() + d),
                           std::vector<double>(k.begin(), k.begin() + d + 1),
                           std::vector<double>(l.begin(), l.begin() + d + 1),
                           static_cast<double>(d + 1));
}

StabilityOptions sufficient(const CausalOde& ode) {
  StabilityOptions o;
  o.tol = kTrajectoryTol;
  const double needed = required_horizon(ode, o.tol, o.transient_fraction);
  o.horizon = std::max(100.0, 2.0 * needed);
  return o;
}

/// Up to three cosines (plus offset near `center`) on a fixed frequency menu.
QuasiPeriodicSignal draw_intervention(std::mt19937_64& rng, double center) {
  static const std::vector<double> menu{0.7, 1.3, 2.1, 3.4};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QuasiPeriodicSignal s;
  s.offset = center + (2.0 * unit(rng) - 1.0);
  const int count = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int j = 0; j < count; ++j) {
    const double w = menu[std::uniform_int_distribution<std::size_t>(0, menu.size() - 1)(rng)];
    s.components.push_back({0.1 + 0.9 * unit(rng), w, 2.0 * std::numbers::pi * unit(rng)});
  }
  return s;
}

std::vector<TrajectoryBundle> subsets(std::size_t d, std::mt19937_64& rng, const std::vector<double>& rest,
                                      std::vector<unsigned>* masks = nullptr) {
  std::vector<TrajectoryBundle> out;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    TrajectoryBundle zeta;
    for (Label i = 1; i <= static_cast<Label>(d); ++i) {
      if (mask & (1u << (i - 1))) zeta[i] = draw_intervention(rng, rest[i - 1]);
    }
    out.push_back(zeta);
    if (masks) masks->push_back(mask);
  }
  return out;
}

// 1. Forced oscillator reproduction at the literal horizon.
Outcome criterion_1() {
  bool ok = true;
  std::ostringstream detail;
  for (double omega : {2.0, 3.0}) {
    const auto ode = forced_oscillator(omega);
    StabilityOptions o;  // horizon 100, 5 ICs, last half, tol 1e-3
    const auto report = check_dynamic_stability(ode, DynSpec{{omega}}, o);
    const auto& eta = report.eta.at(1);
    const bool shape = std::abs(eta.offset - 2.0) <= kTrajectoryTol && eta.components.size() == 1 &&
                       eta.components[0].angular_frequency == omega;
    const bool converged = report.max_trailing_gap <= kTrajectoryTol;
    ok = ok && shape && converged;
    detail << "w=" << omega << ": trailing gap " << fmt(report.max_trailing_gap) << ", fit spread "
           << fmt(report.max_discrepancy) << ", offset " << fmt(eta.offset) << "; ";
  }
  detail << "horizon 100 < required " << fmt(required_horizon(forced_oscillator(2.0), kTrajectoryTol, 0.5));
  return {ok, detail.str()};
}

// 1 (informational). Same check at the horizon the decay envelope needs.
Outcome criterion_1_at_required_horizon() {
  bool ok = true;
  std::ostringstream detail;
  for (double omega : {2.0, 3.0}) {
    const auto ode = forced_oscillator(omega);
    const auto o = sufficient(ode);
    const auto report = check_dynamic_stability(ode, DynSpec{{omega}}, o);
    const auto& eta = report.eta.at(1);
    ok = ok && report.verdict == Verdict::stable && report.max_trailing_gap <= kTrajectoryTol &&
         std::abs(eta.offset - 2.0) <= kTrajectoryTol && eta.components.size() == 1 &&
         eta.components[0].angular_frequency == omega;
    detail << "w=" << omega << ": horizon " << fmt(o.horizon) << ", trailing gap "
           << fmt(report.max_trailing_gap) << "; ";
  }
  return {ok, detail.str()};
}

// 2. Frequency response against simulate + fit.
Outcome criterion_2() {
  int tuples = 0;
  int good = 0;
  double worst_amp = 0.0;
  double worst_phase = 0.0;
  for (double b : {0.1, 1.0}) {
    for (double k : {1.0, 4.0}) {
      for (double m : {0.5, 2.0}) {
        for (double omega : {0.5, 1.5, 3.0}) {
          LinearMechanism x1;
          x1.mass = m;
          x1.damping = b;
          x1.stiffness = k;
          x1.parent_weights[2] = k;
          const auto zeta = QuasiPeriodicSignal::cosine(1.0, omega);
          const CausalOde ode({x1, ClampedMechanism{zeta}}, {InitialCondition{0.0, 0.0}, std::nullopt});
          const auto predicted =
              apply_structural_equation(std::get<StructuralEquation>(derive_dscm(ode).entry(1)), {{2, zeta}});

          const double horizon = sufficient(ode).horizon;
          const auto window = trailing_window(simulate(ode, horizon, default_step(ode)), 0.5);
          const auto fit = fit_quasi_periodic(window.times, window.position(1), std::vector<double>{omega});
          const auto& p = predicted.components.at(0);
          const auto& f = fit.signal.components.at(0);
          const double amp_err = std::abs(p.amplitude - f.amplitude);
          const double phase_err = oracle::angle_gap(p.phase, f.phase);
          worst_amp = std::max(worst_amp, amp_err);
          worst_phase = std::max(worst_phase, phase_err);
          ++tuples;
          if (amp_err <= kAmplitudeTol && phase_err <= kPhaseTol) ++good;
        }
      }
    }
  }
  return {tuples >= 20 && good == tuples,
          std::to_string(good) + "/" + std::to_string(tuples) + " tuples, worst amplitude error " +
              fmt(worst_amp) + ", worst phase error " + fmt(worst_phase) + " rad"};
}

// 3. Solutions of the intervened model match simulated asymptotics.
Outcome criterion_3() {
  int cases = 0;
  int good = 0;
  double worst = 0.0;
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto ode = chain(d);
    const auto derived = derive_dscm(ode);
    const auto rest = *rest_positions(ode);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      std::mt19937_64 rng(seed * 1000 + d);
      for (const auto& zeta : subsets(d, rng, rest)) {
        const auto solved = solve_dscm(intervene_dscm(derived, zeta));
        const auto intervened = intervene(ode, zeta);
        const auto report = check_dynamic_stability(intervened, DynSpec{}, sufficient(intervened));
        ++cases;
        if (!std::holds_alternative<TrajectoryBundle>(solved) || report.verdict != Verdict::stable) continue;
        const double gap = asymptotic_distance(std::get<TrajectoryBundle>(solved), report.eta, kTrajectoryTol);
        worst = std::max(worst, gap);
        if (gap <= kTrajectoryTol) ++good;
      }
    }
  }
  return {good == cases, std::to_string(good) + "/" + std::to_string(cases) +
                             " (D, subset, seed) cases, worst distance " + fmt(worst)};
}

// 4. Derive/intervene commutation for every disjoint (I, J).
Outcome criterion_4() {
  int cases = 0;
  int good = 0;
  double worst_coef = 0.0;
  double worst_sim = 0.0;
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto ode = chain(d);
    const auto rest = *rest_positions(ode);
    std::mt19937_64 rng(40 + d);
    std::vector<unsigned> masks;
    const auto draws = subsets(d, rng, rest, &masks);
    for (std::size_t a = 0; a < draws.size(); ++a) {
      for (std::size_t b = 0; b < draws.size(); ++b) {
        if (masks[a] & masks[b]) continue;
        TrajectoryBundle both = draws[a];
        both.insert(draws[b].begin(), draws[b].end());
        CommutationOptions o;
        o.coefficient_tol = kCoefficientTol;
        o.simulation = sufficient(intervene(ode, both));
        const auto outer = masks[b] ? std::optional<TrajectoryBundle>(draws[b]) : std::nullopt;
        const auto report = verify_commutation(ode, draws[a], outer, o);
        ++cases;
        worst_coef = std::max(worst_coef, report.coefficient_discrepancy);
        worst_sim = std::max(worst_sim, report.simulation_discrepancy);
        if (report.passed) ++good;
      }
    }
  }
  return {good == cases, std::to_string(good) + "/" + std::to_string(cases) + " (I, J) pairs, max coefficient gap " +
                             fmt(worst_coef) + ", max solution-vs-simulation " + fmt(worst_sim)};
}

// 5. DC-only interventions reproduce the equilibrium formula.
Outcome criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  int cases = 0;
  int good = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + trial % 3;
    std::vector<double> m(d), b(d), k(d + 1), l(d + 1);
    for (auto* v : {&m, &b, &k, &l}) {
      for (double& x : *v) x = pos(rng);
    }
    const double wall = 2.0 * d + pos(rng);
    const auto ode = build_mass_spring(d, m, b, k, l, wall);
    const auto derived = derive_dscm(ode);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      TrajectoryBundle zeta;
      std::vector<double> clamped(d, std::nan(""));
      for (Label i = 1; i <= static_cast<Label>(d); ++i) {
        if (mask & (1u << (i - 1))) {
          clamped[i - 1] = 4.0 * pos(rng) - 6.0;
          zeta[i] = QuasiPeriodicSignal::constant(clamped[i - 1]);
        }
      }
      const auto solved = solve_dscm(intervene_dscm(derived, zeta));
      const auto want = oracle::chain_equilibrium(k, l, wall, clamped);
      ++cases;
      if (!std::holds_alternative<TrajectoryBundle>(solved)) continue;
      double gap = 0.0;
      for (const auto& [label, s] : std::get<TrajectoryBundle>(solved)) {
        gap = std::max(gap, std::abs(s.offset - want[label - 1]));
        if (!s.components.empty()) gap = INFINITY;
      }
      worst = std::max(worst, gap);
      if (gap <= kStaticTol) ++good;
    }
  }
  return {good == cases, std::to_string(good) + "/" + std::to_string(cases) + " systems, worst gap " + fmt(worst)};
}

// 6. Euler network coefficients, first-order convergence and aliasing.
Outcome criterion_6() {
  const std::vector<double> m{1.3, 0.7}, b{0.2, 0.4}, k{1.1, 2.3, 0.9}, l{0.5, 1.5, 2.5};
  const double wall = 6.0;
  const double dl = 0.05;
  const auto dbn = euler_discretize(build_mass_spring(2, m, b, k, l, wall), dl);
  const auto& x1 = std::get<EulerUpdate>(dbn.node(1));
  const auto& x2 = std::get<EulerUpdate>(dbn.node(2));
  const bool coefficients =
      x1.dx_dv == dl && x1.dv_dv == 1.0 - dl / m[0] * b[0] && x1.dv_dx == -dl / m[0] * (k[0] + k[1]) &&
      x1.dv_dparent == std::map<Label, double>{{2, dl / m[0] * k[1]}} &&
      x1.dv_const == dl / m[0] * (k[0] * l[0] - k[1] * l[1]) && x2.dx_dv == dl &&
      x2.dv_dv == 1.0 - dl / m[1] * b[1] && x2.dv_dx == -dl / m[1] * (k[1] + k[2]) &&
      x2.dv_dparent == std::map<Label, double>{{1, dl / m[1] * k[1]}} &&
      std::abs(x2.dv_const - dl / m[1] * (k[1] * l[1] - k[2] * l[2] + k[2] * wall)) <= 1e-15;

  const auto ode = forced_oscillator(3.0).with_initial_conditions({{1, {0.0, 0.0}}});
  const std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  const double order = empirical_order(discretization_study(ode, deltas, 10.0));
  const bool first_order = std::abs(order - kOrderCenter) <= kOrderSlack;

  const double step = 0.1;
  const auto zeta = QuasiPeriodicSignal::cosine(1.0, 2.0 * std::numbers::pi / step);
  const auto clamped = intervene(chain(2), {{1, zeta}}).with_initial_conditions({{2, {2.0, 0.0}}});
  const auto rollout_dbn = euler_discretize(clamped, step);
  bool aliased = true;
  for (const auto& s : rollout(rollout_dbn, initial_state(rollout_dbn, clamped), 100)) {
    aliased = aliased && std::abs(s.position[0] - 1.0) <= 1e-9;
  }
  return {coefficients && first_order && aliased,
          std::string("coefficients ") + (coefficients ? "exact" : "MISMATCH") + ", order " + fmt(order) +
              ", clamp samples " + (aliased ? "constant" : "vary")};
}

// 7. Negative controls.
Outcome criterion_7() {
  StabilityOptions o;
  o.horizon = 200.0;
  LinearMechanism free;
  free.stiffness = 1.0;
  const bool free_unstable = check_dynamic_stability(CausalOde({free}), DynSpec{}, o).verdict == Verdict::unstable;
  const std::vector<double> m{1.0, 1.0}, zero{0.0, 0.0}, k{1.0, 1.0, 1.0}, l{1.0, 1.0, 1.0};
  const auto undamped = build_mass_spring(2, m, zero, k, l, 3.0);
  const bool chain_unstable = check_dynamic_stability(undamped, DynSpec{}, o).verdict == Verdict::unstable;

  bool refused = false;
  try {
    (void)derive_dscm(undamped);
  } catch (const DerivationError& e) {
    refused = e.kind() == DerivationError::Kind::stability_precondition;
  }

  // Linear resonant growth F t / 2 crosses the 1e12 blow-up threshold near t = 200 for F = 1e10.
  LinearMechanism resonant;
  resonant.stiffness = 1.0;
  resonant.parent_weights[2] = 1.0;
  const CausalOde driven({resonant, ClampedMechanism{QuasiPeriodicSignal::cosine(1e10, 1.0)}});
  StabilityOptions long_run;
  long_run.horizon = 1000.0;
  const auto report = check_dynamic_stability(driven, DynSpec{{1.0}}, long_run);
  const bool diverged = report.verdict == Verdict::divergent && report.divergence_time.has_value();

  return {free_unstable && chain_unstable && refused && diverged,
          std::string("undamped oscillator ") + (free_unstable ? "unstable" : "NOT unstable") + ", undamped chain " +
              (chain_unstable ? "unstable" : "NOT unstable") + ", derive " + (refused ? "refuses" : "accepts") +
              ", resonance " + (diverged ? "diverges at t=" + fmt(*report.divergence_time) : "not detected")};
}

// 8. RK4 order and the trajectory-algebra properties.
Outcome criterion_8() {
  const auto ode = forced_oscillator(3.0).with_initial_conditions({{1, {0.0, 0.0}}});
  const double horizon = 20.0;
  const auto ref = simulate(ode, horizon, 0.1 / 8.0);
  auto error = [&](double dt, std::size_t stride) {
    const auto run = simulate(ode, horizon, dt);
    double e = 0.0;
    for (std::size_t n = 0; n < run.size(); ++n) {
      e = std::max(e, std::abs(run.position(1)[n] - ref.position(1)[n * stride]));
    }
    return e;
  };
  const double ratio = error(0.1, 8) / error(0.05, 4);
  const bool order = ratio >= kRk4RatioLow && ratio <= kRk4RatioHigh;

  std::mt19937 rng(8);
  int total = 0;
  int good = 0;
  for (int n = 0; n < 300; ++n) {
    const auto s = oracle::random_signal(rng, 6, n % 2 ? std::vector<double>{1.0, 2.5} : std::vector<double>{});
    ++total;
    if (oracle::sup_gap(s, canonicalize(s), 30.0, 1001) <=
        static_cast<double>(s.components.size()) * kAmplitudeEpsilon + 1e-12) {
      ++good;
    }
  }
  for (int n = 0; n < 300; ++n) {
    const std::vector<double> shared{0.5, 1.0, 2.0};
    const auto a = oracle::random_signal(rng, 3, shared);
    const auto b = oracle::random_signal(rng, 3, shared);
    const auto c = oracle::random_signal(rng, 3);
    ++total;
    if (asymptotically_equal(superpose(superpose(a, b), c), superpose(a, superpose(b, c)), kAssociativityTol)) ++good;
  }
  std::vector<double> times;
  for (int n = 0; n < 800; ++n) times.push_back(40.0 * n / 799.0);
  for (int n = 0; n < 300; ++n) {
    const auto truth = canonicalize(oracle::random_signal(rng, 3));
    if (truth.components.empty()) continue;
    std::vector<double> values;
    for (double t : times) values.push_back(eval(truth, t));
    ++total;
    const auto fit = fit_quasi_periodic(times, values, truth.frequencies());
    if (asymptotic_distance(fit.signal, truth, 1e-9) <= kFitRoundTripTol) ++good;
  }
  return {order && good == total,
          "RK4 ratio " + fmt(ratio) + ", properties " + std::to_string(good) + "/" + std::to_string(total)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, 0 = none
  };
  const std::vector<Criterion> criteria{
      {1, "forced oscillator converges across ICs at horizon 100", criterion_1, 5.0},
      {2, "frequency response matches simulation", criterion_2, 60.0},
      {3, "intervened model solutions match simulation", criterion_3, 300.0},
      {4, "derive and intervene commute", criterion_4, 0.0},
      {5, "DC-only solutions match the equilibrium formula", criterion_5, 0.0},
      {6, "Euler network coefficients, order and aliasing", criterion_6, 0.0},
      {7, "negative controls", criterion_7, 0.0},
      {8, "RK4 order and trajectory properties", criterion_8, 0.0},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit == 0.0 || seconds < c.time_limit;
    const bool passed = out.passed && in_time;
    std::printf("criterion %d %s: %s (%s; %.2fs%s)\n", c.id, passed ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                seconds, in_time ? "" : ", over time limit");
    if (!passed && !kKnownUnattainable.contains(c.id)) ++unexpected;

    if (c.id == 1) {
      const auto info = criterion_1_at_required_horizon();
      std::printf("  info: same check at twice the decay-required horizon: %s (%s)\n",
                  info.passed ? "PASS" : "FAIL", info.detail.c_str());
      if (!info.passed) ++unexpected;
    }
  }
  std::fflush(stdout);
  return unexpected == 0 ? 0 : 1;
}
