#pragma once

// JSON documents for output spaces, voters, and ensembles:
//
//   {"space": {"kind": "multiclass", "Q": 3},
//    "rho": [...], "pi": [...],            // pi optional
//    "classes": ["setosa", ...],           // optional label names, index order
//    "voters": [{"type": "tree", "tree": {"feature": 2, "threshold": 2.45,
//                                         "left": {"leaf": 0}, "right": {...}}},
//               {"type": "constant", "output": [...]},
//               {"type": "table", "index_feature": 0, "outputs": [[...], ...]}]}

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/learners.hpp"
#include "cbound/output_space.hpp"

namespace cbound {

inline nlohmann::json space_to_json(const OutputSpace& s) {
  nlohmann::json j{{"kind", to_string(s.kind())}};
  if (s.kind() != SpaceKind::Binary) j["Q"] = s.q();
  return j;
}

inline OutputSpace space_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "binary") return OutputSpace::binary();
  if (kind == "multiclass") return OutputSpace::multiclass(j.at("Q").get<std::size_t>());
  if (kind == "multilabel") return OutputSpace::multilabel(j.at("Q").get<std::size_t>());
  fail(ErrorCategory::Parse, "unknown space kind '" + kind + "'");
}

inline VoterPtr voter_from_json(const nlohmann::json& j, const OutputSpace& space) {
  const auto type = j.at("type").get<std::string>();
  if (type == "tree") {
    if (space.kind() != SpaceKind::Multiclass) fail(ErrorCategory::Parse, "tree voters need a multiclass space");
    return std::make_shared<TreeVoter>(DecisionTree::from_json(j.at("tree"), space.q()));
  }
  if (type == "constant") return std::make_shared<ConstantVoter>(space, j.at("output").get<std::vector<double>>());
  if (type == "table") {
    return std::make_shared<TableVoter>(space, j.at("outputs").get<std::vector<std::vector<double>>>(),
                                        j.value("index_feature", std::size_t{0}));
  }
  fail(ErrorCategory::Parse, "unknown voter type '" + type + "'");
}

inline nlohmann::json ensemble_to_json(const WeightedEnsemble& e, const std::vector<std::string>& classes = {}) {
  nlohmann::json j;
  j["space"] = space_to_json(e.space());
  j["rho"] = e.rho();
  if (e.pi()) j["pi"] = *e.pi();
  if (!classes.empty()) j["classes"] = classes;
  auto voters = nlohmann::json::array();
  for (const auto& v : e.voters()) voters.push_back(v->to_json());
  j["voters"] = std::move(voters);
  return j;
}

struct LoadedEnsemble {
  WeightedEnsemble ensemble;
  std::vector<std::string> classes;
};

inline LoadedEnsemble ensemble_from_json(const nlohmann::json& j) {
  try {
    const auto space = space_from_json(j.at("space"));
    std::vector<VoterPtr> voters;
    for (const auto& v : j.at("voters")) voters.push_back(voter_from_json(v, space));
    std::optional<std::vector<double>> pi;
    if (j.contains("pi") && !j.at("pi").is_null()) pi = j.at("pi").get<std::vector<double>>();
    std::vector<std::string> classes;
    if (j.contains("classes")) classes = j.at("classes").get<std::vector<std::string>>();
    return {WeightedEnsemble(space, std::move(voters), j.at("rho").get<std::vector<double>>(), std::move(pi)), std::move(classes)};
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCategory::Parse, std::string("ensemble JSON: ") + ex.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCategory::Parse, path + ": " + ex.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCategory::Io, "write failed for " + path);
}

}  // namespace cbound
