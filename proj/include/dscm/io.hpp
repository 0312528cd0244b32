#pragma once

#include <string>

#include "json.hpp"

#include "dscm/stability.hpp"
#include "dscm/structural.hpp"
#include "dscm/trajectory.hpp"

namespace dscm {

/// {"1": "<literal>", ...}
[[nodiscard]] nlohmann::json bundle_to_json(const TrajectoryBundle& bundle);

/// {"variables": [{"label": 1, "kind": "structural", "mass": .., "damping": ..,
/// "stiffness": .., "constant": .., "parents": [{"label": 2, "weight": ..}],
/// "forcing": "<literal>"}, {"label": 2, "kind": "clamp", "signal": "<literal>"}]}
[[nodiscard]] nlohmann::json dscm_to_json(const Dscm& dscm);
[[nodiscard]] Dscm dscm_from_json(const nlohmann::json& json);

[[nodiscard]] nlohmann::json report_to_json(const StabilityReport& report);
[[nodiscard]] nlohmann::json report_to_json(const StructuralStabilityReport& report);
[[nodiscard]] nlohmann::json report_to_json(const CommutationReport& report);

/// Fixed-width text rendering of a structural model, one variable per line.
[[nodiscard]] std::string format_dscm(const Dscm& dscm);

}  // namespace dscm
