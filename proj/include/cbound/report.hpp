#pragma once

// BoundReport as a JSON document and as a flat CSV row.

#include <string>
#include <vector>

#include <json.hpp>

#include "cbound/bounds.hpp"
#include "cbound/format.hpp"
#include "cbound/serialization.hpp"

namespace cbound {

inline nlohmann::json moments_to_json(const MarginMoments& mm) {
  nlohmann::json j{{"mu1", mm.mu1}, {"mu2", mm.mu2}, {"m", mm.m}};
  j["kind"] = mm.kind.is_omega ? "omega" : "true";
  if (mm.kind.is_omega) j["omega"] = mm.kind.omega;
  return j;
}

inline nlohmann::json report_to_json(const BoundReport& r) {
  nlohmann::json j;
  j["space"] = space_to_json(r.space);
  j["m"] = r.m;
  j["risk_test"] = r.risk_test;
  j["risk_margin_rule"] = r.risk_margin_rule;
  j["gibbs_risk"] = r.gibbs_risk;
  j["gibbs_bound"] = r.gibbs_bound;
  j["moments"] = moments_to_json(r.moments);
  j["c_bound"] = r.c_bound ? nlohmann::json(*r.c_bound) : nlohmann::json(nullptr);
  j["c_bound_defined"] = r.c_bound.has_value();
  j["c_bound_reported"] = r.c_bound_reported();
  auto om = nlohmann::json::array();
  for (const auto& o : r.omegas) {
    om.push_back({{"label", o.label},
                  {"omega", o.moments.kind.omega},
                  {"moments", moments_to_json(o.moments)},
                  {"value", o.value ? nlohmann::json(*o.value) : nlohmann::json(nullptr)},
                  {"reported", o.reported()},
                  {"defined", o.value.has_value()},
                  {"is_valid_risk_bound", o.is_valid_risk_bound}});
  }
  j["omega_c_bounds"] = std::move(om);
  if (r.pac) {
    j["pac"] = {{"value", r.pac->value}, {"first_moment_lower", r.pac->lower}, {"second_moment_upper", r.pac->upper},
                {"kl", r.pac->kl},       {"B", r.pac->b},                     {"delta", r.pac->delta},
                {"m", r.pac->m}};
  } else {
    j["pac"] = nullptr;
  }
  j["delta"] = r.delta;
  return j;
}

inline std::vector<std::string> report_csv_columns(const BoundReport& r) {
  std::vector<std::string> cols{"space", "Q", "m", "risk_test", "risk_margin_rule", "gibbs_risk", "gibbs_bound",
                                "mu1", "mu2", "c_bound", "c_bound_defined"};
  for (const auto& o : r.omegas) {
    cols.push_back("c_omega[" + o.label + "]");
    cols.push_back("c_omega[" + o.label + "]_defined");
    cols.push_back("c_omega[" + o.label + "]_valid");
  }
  for (const char* c : {"pac_bound", "pac_m", "kl", "B", "delta"}) cols.emplace_back(c);
  return cols;
}

inline std::vector<std::string> report_csv_values(const BoundReport& r) {
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  std::vector<std::string> v{to_string(r.space.kind()),
                             std::to_string(r.space.q()),
                             std::to_string(r.m),
                             format_double(r.risk_test),
                             format_double(r.risk_margin_rule),
                             format_double(r.gibbs_risk),
                             format_double(r.gibbs_bound),
                             format_double(r.moments.mu1),
                             format_double(r.moments.mu2),
                             format_double(r.c_bound_reported()),
                             b(r.c_bound.has_value())};
  for (const auto& o : r.omegas) {
    v.push_back(format_double(o.reported()));
    v.push_back(b(o.value.has_value()));
    v.push_back(b(o.is_valid_risk_bound));
  }
  if (r.pac) {
    v.push_back(format_double(r.pac->value));
    v.push_back(std::to_string(r.pac->m));
    v.push_back(format_double(r.pac->kl));
    v.push_back(format_double(r.pac->b));
  } else {
    v.insert(v.end(), {"", "", "", ""});
  }
  v.push_back(format_double(r.delta));
  return v;
}

inline std::string join_csv(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += csv_field(fields[i]);
  }
  return s;
}

inline std::string report_to_csv(const BoundReport& r) {
  return join_csv(report_csv_columns(r)) + "\n" + join_csv(report_csv_values(r)) + "\n";
}

}  // namespace cbound
