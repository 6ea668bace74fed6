#include "dynbound/report_json.hpp"

namespace dynbound {

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json vec(std::span<const double> v) { return nlohmann::json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

nlohmann::json to_json(const BoundCertificate& cert) {
  return {{"component", cert.component}, {"alpha", cert.alpha}, {"source", to_string(cert.source)}};
}

nlohmann::json to_json(const BoundReport& r) {
  return {
      {"component", r.component},
      {"alpha", r.alpha},
      {"t0", r.t0},
      {"xj0", r.xj0},
      {"tolerance", r.tolerance},
      {"forward_holds", r.forward_holds},
      {"backward_holds", r.backward_holds},
      {"naive_backward_violated", r.naive_backward_violated},
      {"margins",
       {{"forward", opt(r.forward_margin)},
        {"backward", opt(r.backward_margin)},
        {"naive_backward", opt(r.naive_backward_margin)}}},
      {"samples_checked", r.samples_checked},
      {"forward_escaped", r.forward_escaped},
      {"backward_escaped", r.backward_escaped},
      {"forward_reached", r.forward_reached},
      {"backward_reached", r.backward_reached},
  };
}

nlohmann::json to_json(const RefutationReport& r) {
  nlohmann::json j = {
      {"verdict", r.verdict_text()},
      {"falsified", r.verdict == RefutationReport::Verdict::Falsified},
      {"certificate", to_json(r.certificate)},
      {"seed", r.seed},
      {"horizon", r.horizon},
      {"bounded", r.bounded},
      {"escaped", r.escaped},
      {"reached_time", r.reached_time},
      {"witnessed_bound", r.witnessed_bound},
      {"growth_ratio", r.growth_ratio},
      {"reason", r.reason},
  };
  if (r.equilibrium) {
    j["equilibrium"] = {{"point", r.equilibrium->point},
                        {"residual", r.equilibrium->residual},
                        {"newton_iterations", r.equilibrium->newton_iterations}};
  } else {
    j["equilibrium"] = nullptr;
  }
  if (r.closed_orbit) {
    j["closed_orbit"] = {{"period", r.closed_orbit->period}, {"closure", r.closed_orbit->closure}};
  } else {
    j["closed_orbit"] = nullptr;
  }
  if (r.bounds) {
    const auto b = to_json(*r.bounds);
    j["forward_holds"] = b["forward_holds"];
    j["backward_holds"] = b["backward_holds"];
    j["naive_backward_violated"] = b["naive_backward_violated"];
    j["margins"] = b["margins"];
    j["bounds"] = b;
  }
  return j;
}

nlohmann::json to_json(const PeriodicOrbit& o) {
  nlohmann::json mult = nlohmann::json::array();
  for (const auto& m : o.floquet_multipliers) mult.push_back({m.real(), m.imag()});
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : o.orbit_points) points.push_back({p.coords[0], p.coords[1]});
  return {
      {"k", o.k},
      {"period", o.period},
      {"section_point", {o.section_fixed_point.coords[0], o.section_fixed_point.coords[1]}},
      {"state", vec(o.section_fixed_point.state)},
      {"multipliers", mult},
      {"stability", to_string(o.stability)},
      {"residual", o.residual},
      {"newton_iterations", o.newton_iterations},
      {"monodromy_determinant", o.monodromy_determinant},
      {"liouville_determinant", o.liouville_determinant},
      {"section_points", points},
  };
}

nlohmann::json census_to_json(const CensusResult& census) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& o : census.orbits) out.push_back(to_json(o));
  return out;
}

nlohmann::json to_json(const LyapunovResult& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& cp : r.convergence_history) history.push_back({{"time", cp.time}, {"exponents", cp.exponents}});
  return {
      {"exponents", r.exponents},
      {"sum", r.sum()},
      {"mean_divergence", r.mean_divergence},
      {"transient_skipped", r.transient_skipped},
      {"total_time", r.total_time},
      {"renorm_interval", r.renorm_interval},
      {"renormalizations", r.renormalizations},
      {"convergence_history", history},
  };
}

}  // namespace dynbound
