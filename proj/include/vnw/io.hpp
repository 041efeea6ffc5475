#pragma once

// JSON forms of packages and family descriptors.
//
// Package:
//   {"C": "p/q", "E": "p/q", "background": "p/q", "k": 1.0,
//    "Q": [...], "P": [...], "omega1": [...], "omega2": [...]}
// Family descriptor (exact members, k = 1):
//   {"omega1": [{"lambda": [re, im], "m": 1, "part": "re", "weight": "-4", "k": 1}, ...],
//    "omega2": [...]}

#include <string>
#include <vector>

#include "json.hpp"

#include "vnw/helmholtz.hpp"
#include "vnw/moutard.hpp"

namespace vnw {

nlohmann::json package_to_json(const PotentialPackage& pkg);
/// Throws FormatError on missing or malformed fields.
PotentialPackage package_from_json(const nlohmann::json& j);

struct FamilySpec {
  std::vector<ExactFamilyTerm> omega1;
  std::vector<ExactFamilyTerm> omega2;
  double k = 1.0;
};

/// Throws FormatError for malformed input, IncompatibleWavenumber when the
/// members disagree on k, ParameterError when k != 1 (no exact form).
FamilySpec parse_family(const nlohmann::json& j);
nlohmann::json family_to_json(const FamilySpec& spec);

nlohmann::json read_json_file(const std::string& path);
/// Pretty-printed with sorted keys and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace vnw
