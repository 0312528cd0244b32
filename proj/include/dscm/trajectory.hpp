#pragma once

#include <complex>
#include <map>
#include <span>
#include <vector>

namespace dscm {

/// Variable label, 1-based as in the system definition.
using Label = int;

/// Components whose amplitude falls below this are dropped by canonicalize().
inline constexpr double kAmplitudeEpsilon = 1e-9;

/// Frequencies closer than this (relative to max(1, w)) are treated as equal
/// when merging components.
inline constexpr double kFrequencyMergeEpsilon = 1e-12;

/// A * cos(w t + phase).
struct CosComponent {
  double amplitude = 0.0;
  double angular_frequency = 0.0;
  double phase = 0.0;

  friend bool operator==(const CosComponent&, const CosComponent&) = default;
};

/// Constant offset plus a finite sum of cosines.
///
/// Values are not canonical in general: components may share a frequency,
/// carry negative amplitudes or unreduced phases. canonicalize() produces the
/// unique representative (positive amplitudes, distinct positive frequencies in
/// ascending order, phases in [0, 2pi)).
struct QuasiPeriodicSignal {
  double offset = 0.0;
  std::vector<CosComponent> components;

  static QuasiPeriodicSignal constant(double value) { return {value, {}}; }
  static QuasiPeriodicSignal cosine(double amplitude, double omega, double phase = 0.0,
                                    double offset = 0.0) {
    return {offset, {{amplitude, omega, phase}}};
  }

  /// Angular frequencies of the components, in storage order.
  [[nodiscard]] std::vector<double> frequencies() const;

  friend bool operator==(const QuasiPeriodicSignal&, const QuasiPeriodicSignal&) = default;
};

/// Per-variable signals; houses interventions and asymptotic trajectories.
using TrajectoryBundle = std::map<Label, QuasiPeriodicSignal>;

[[nodiscard]] double eval(const QuasiPeriodicSignal& signal, double t);

/// Time derivative of the signal at t.
[[nodiscard]] double eval_derivative(const QuasiPeriodicSignal& signal, double t);

[[nodiscard]] QuasiPeriodicSignal canonicalize(const QuasiPeriodicSignal& signal);

[[nodiscard]] QuasiPeriodicSignal superpose(const QuasiPeriodicSignal& a,
                                            const QuasiPeriodicSignal& b);
[[nodiscard]] QuasiPeriodicSignal scale(const QuasiPeriodicSignal& a, double factor);

/// Complex amplitude A e^{i phase} of the canonical form at `omega` (0 when
/// no component lies within `frequency_tol`). At omega == 0 returns the offset.
[[nodiscard]] std::complex<double> phasor_at(const QuasiPeriodicSignal& signal, double omega,
                                             double frequency_tol = kFrequencyMergeEpsilon);

/// Largest per-frequency phasor difference between the canonical forms of a
/// and b, including the offset difference. Components are paired when their
/// frequencies differ by at most `frequency_tol`; unpaired components are
/// compared against zero.
[[nodiscard]] double asymptotic_distance(const QuasiPeriodicSignal& a,
                                         const QuasiPeriodicSignal& b, double frequency_tol);

/// Decides whether a(t) - b(t) -> 0, up to `tol` in amplitude and frequency.
[[nodiscard]] bool asymptotically_equal(const QuasiPeriodicSignal& a,
                                        const QuasiPeriodicSignal& b, double tol);

/// Max of asymptotic_distance over the union of labels (missing labels count
/// as the zero signal).
[[nodiscard]] double asymptotic_distance(const TrajectoryBundle& a, const TrajectoryBundle& b,
                                         double frequency_tol);

struct Sample {
  double t = 0.0;
  double value = 0.0;
};

struct FitResult {
  QuasiPeriodicSignal signal;  // canonical
  double rms_residual = 0.0;
};

/// Least-squares fit of c0 + sum_k (a_k cos(w_k t) + b_k sin(w_k t)) at known
/// frequencies. Throws ValidationError on violated preconditions and
/// DegenerateFitError when the design matrix is rank deficient.
[[nodiscard]] FitResult fit_quasi_periodic(std::span<const double> times,
                                           std::span<const double> values,
                                           std::span<const double> frequencies);
[[nodiscard]] FitResult fit_quasi_periodic(std::span<const Sample> samples,
                                           std::span<const double> frequencies);

}  // namespace dscm
