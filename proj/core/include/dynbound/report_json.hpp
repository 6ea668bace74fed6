#pragma once

#include <nlohmann/json.hpp>

#include "dynbound/boundlaw.hpp"
#include "dynbound/lyapunov.hpp"
#include "dynbound/upo.hpp"

namespace dynbound {

// Stable key names; absent margins serialize as null.
nlohmann::json to_json(const BoundCertificate& cert);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const RefutationReport& report);
nlohmann::json to_json(const PeriodicOrbit& orbit);
/// Census document: a list of orbits.
nlohmann::json census_to_json(const CensusResult& census);
nlohmann::json to_json(const LyapunovResult& result);

}  // namespace dynbound
