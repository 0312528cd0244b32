#pragma once

#include <string>
#include <string_view>

#include "dscm/trajectory.hpp"

namespace dscm {

/// Parses a signal literal such as `2 + 0.5*cos(3*t + 1.0)`.
///
/// Grammar (whitespace-insensitive):
///
///     signal  := [sign] term { sign term }
///     term    := number [ '*' cosine ] | cosine
///     cosine  := 'cos' '(' [ [ sign ] number '*' ] 't' [ sign number ] ')'
///     sign    := '+' | '-'
///
/// Bare numbers accumulate into the offset. Components are kept exactly as
/// written (no canonicalization), so to_literal(parse_signal(s)) reproduces
/// every field bit for bit. Throws ValidationError on malformed input.
[[nodiscard]] QuasiPeriodicSignal parse_signal(std::string_view text);

/// Renders a signal with shortest round-trip decimal numbers.
[[nodiscard]] std::string to_literal(const QuasiPeriodicSignal& signal);

}  // namespace dscm
