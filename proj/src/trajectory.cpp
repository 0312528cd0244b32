#include "dscm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "dscm/error.hpp"

namespace dscm {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reduce_phase(double phase) {
  double r = std::fmod(phase, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

bool same_frequency(double a, double b) {
  return std::abs(a - b) <= kFrequencyMergeEpsilon * std::max(1.0, std::max(a, b));
}

struct Phasor {
  double omega;
  std::complex<double> value;
  CosComponent original;
};

bool is_canonical(const CosComponent& c) {
  return c.amplitude >= kAmplitudeEpsilon && c.angular_frequency > kFrequencyMergeEpsilon &&
         c.phase >= 0.0 && c.phase < kTwoPi;
}

}  // namespace

std::vector<double> QuasiPeriodicSignal::frequencies() const {
  std::vector<double> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.angular_frequency);
  return out;
}

double eval(const QuasiPeriodicSignal& signal, double t) {
  double value = signal.offset;
  for (const auto& c : signal.components) {
    value += c.amplitude * std::cos(c.angular_frequency * t + c.phase);
  }
  return value;
}

double eval_derivative(const QuasiPeriodicSignal& signal, double t) {
  double value = 0.0;
  for (const auto& c : signal.components) {
    value -= c.amplitude * c.angular_frequency * std::sin(c.angular_frequency * t + c.phase);
  }
  return value;
}

QuasiPeriodicSignal canonicalize(const QuasiPeriodicSignal& signal) {
  QuasiPeriodicSignal out;
  out.offset = signal.offset;

  std::vector<Phasor> phasors;
  phasors.reserve(signal.components.size());
  for (const auto& c : signal.components) {
    double omega = c.angular_frequency;
    double phase = c.phase;
    // cos(-w t + p) == cos(w t - p)
    if (omega < 0.0) {
      omega = -omega;
      phase = -phase;
    }
    if (omega <= kFrequencyMergeEpsilon) {
      out.offset += c.amplitude * std::cos(phase);
      continue;
    }
    phasors.push_back({omega, std::polar(1.0, phase) * c.amplitude, c});
  }

  std::stable_sort(phasors.begin(), phasors.end(),
                   [](const Phasor& a, const Phasor& b) { return a.omega < b.omega; });

  for (std::size_t i = 0; i < phasors.size();) {
    const double omega = phasors[i].omega;
    std::complex<double> sum = 0.0;
    std::size_t j = i;
    while (j < phasors.size() && same_frequency(phasors[j].omega, omega)) {
      sum += phasors[j].value;
      ++j;
    }
    // A lone component already in canonical form is kept bit for bit, which
    // makes canonicalize idempotent.
    if (j == i + 1 && is_canonical(phasors[i].original)) {
      out.components.push_back(phasors[i].original);
      i = j;
      continue;
    }
    const double amplitude = std::abs(sum);
    if (amplitude >= kAmplitudeEpsilon) {
      out.components.push_back({amplitude, omega, reduce_phase(std::arg(sum))});
    }
    i = j;
  }
  return out;
}

QuasiPeriodicSignal superpose(const QuasiPeriodicSignal& a, const QuasiPeriodicSignal& b) {
  QuasiPeriodicSignal sum;
  sum.offset = a.offset + b.offset;
  sum.components = a.components;
  sum.components.insert(sum.components.end(), b.components.begin(), b.components.end());
  return canonicalize(sum);
}

QuasiPeriodicSignal scale(const QuasiPeriodicSignal& a, double factor) {
  QuasiPeriodicSignal scaled = a;
  scaled.offset *= factor;
  for (auto& c : scaled.components) c.amplitude *= factor;
  return canonicalize(scaled);
}

std::complex<double> phasor_at(const QuasiPeriodicSignal& signal, double omega,
                               double frequency_tol) {
  const QuasiPeriodicSignal canonical = canonicalize(signal);
  if (omega <= frequency_tol) return canonical.offset;
  std::complex<double> sum = 0.0;
  for (const auto& c : canonical.components) {
    if (std::abs(c.angular_frequency - omega) <= frequency_tol) {
      sum += std::polar(c.amplitude, c.phase);
    }
  }
  return sum;
}

double asymptotic_distance(const QuasiPeriodicSignal& a, const QuasiPeriodicSignal& b,
                           double frequency_tol) {
  const QuasiPeriodicSignal ca = canonicalize(a);
  const QuasiPeriodicSignal cb = canonicalize(b);
  double distance = std::abs(ca.offset - cb.offset);

  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ca.components.size() || j < cb.components.size()) {
    if (j == cb.components.size()) {
      distance = std::max(distance, ca.components[i++].amplitude);
      continue;
    }
    if (i == ca.components.size()) {
      distance = std::max(distance, cb.components[j++].amplitude);
      continue;
    }
    const auto& x = ca.components[i];
    const auto& y = cb.components[j];
    if (std::abs(x.angular_frequency - y.angular_frequency) <= frequency_tol) {
      const auto diff = std::polar(x.amplitude, x.phase) - std::polar(y.amplitude, y.phase);
      distance = std::max(distance, std::abs(diff));
      ++i;
      ++j;
    } else if (x.angular_frequency < y.angular_frequency) {
      distance = std::max(distance, x.amplitude);
      ++i;
    } else {
      distance = std::max(distance, y.amplitude);
      ++j;
    }
  }
  return distance;
}

bool asymptotically_equal(const QuasiPeriodicSignal& a, const QuasiPeriodicSignal& b,
                          double tol) {
  return asymptotic_distance(a, b, tol) <= tol;
}

double asymptotic_distance(const TrajectoryBundle& a, const TrajectoryBundle& b,
                           double frequency_tol) {
  std::set<Label> labels;
  for (const auto& [label, _] : a) labels.insert(label);
  for (const auto& [label, _] : b) labels.insert(label);
  const QuasiPeriodicSignal zero;
  double distance = 0.0;
  for (Label label : labels) {
    const auto ia = a.find(label);
    const auto ib = b.find(label);
    const auto& sa = ia == a.end() ? zero : ia->second;
    const auto& sb = ib == b.end() ? zero : ib->second;
    distance = std::max(distance, asymptotic_distance(sa, sb, frequency_tol));
  }
  return distance;
}

FitResult fit_quasi_periodic(std::span<const double> times, std::span<const double> values,
                             std::span<const double> frequencies) {
  if (times.size() != values.size()) {
    throw ValidationError("fit: times and values differ in length");
  }
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (!(frequencies[k] > 0.0) || !std::isfinite(frequencies[k])) {
      throw ValidationError("fit: frequencies must be finite and positive");
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (frequencies[m] == frequencies[k]) {
        throw ValidationError("fit: frequencies must be pairwise distinct");
      }
    }
  }
  const std::size_t n = times.size();
  const std::size_t columns = 1 + 2 * frequencies.size();
  if (n < columns) {
    throw ValidationError("fit: need at least " + std::to_string(columns) + " samples, got " +
                          std::to_string(n));
  }
  if (!frequencies.empty()) {
    const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
    const double slowest = *std::min_element(frequencies.begin(), frequencies.end());
    if (*hi - *lo < kTwoPi / slowest * (1.0 - 1e-9)) {
      throw ValidationError("fit: samples span less than one period of the slowest frequency");
    }
  }

  Eigen::MatrixXd design(n, columns);
  Eigen::VectorXd rhs(n);
  for (std::size_t r = 0; r < n; ++r) {
    design(r, 0) = 1.0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
      const double arg = frequencies[k] * times[r];
      design(r, 1 + 2 * k) = std::cos(arg);
      design(r, 2 + 2 * k) = std::sin(arg);
    }
    rhs(r) = values[r];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(columns)) {
    throw DegenerateFitError("fit: design matrix has rank " + std::to_string(qr.rank()) +
                             " < " + std::to_string(columns) + " (aliased sample grid?)");
  }
  const Eigen::VectorXd coef = qr.solve(rhs);
  const Eigen::VectorXd residual = design * coef - rhs;

  QuasiPeriodicSignal fitted;
  fitted.offset = coef(0);
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    // a cos + b sin == A cos(w t + phi) with A e^{i phi} = a - i b
    const double a = coef(1 + 2 * k);
    const double b = coef(2 + 2 * k);
    fitted.components.push_back({std::hypot(a, b), frequencies[k], std::atan2(-b, a)});
  }
  return {canonicalize(fitted), std::sqrt(residual.squaredNorm() / static_cast<double>(n))};
}

FitResult fit_quasi_periodic(std::span<const Sample> samples,
                             std::span<const double> frequencies) {
  std::vector<double> times;
  std::vector<double> values;
  times.reserve(samples.size());
  values.reserve(samples.size());
  for (const auto& s : samples) {
    times.push_back(s.t);
    values.push_back(s.value);
  }
  return fit_quasi_periodic(times, values, frequencies);
}

}  // namespace dscm
