#include "vnw/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "vnw/errors.hpp"

namespace vnw {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

Rational rational_field(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  throw FormatError(std::string("field '") + key + "' must be a rational string");
}

RingElement ring_field(const nlohmann::json& j, const char* key) {
  try {
    return field(j, key).get<RingElement>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<ExactFamilyTerm> parse_terms(const nlohmann::json& list, double* k, bool* k_seen) {
  if (!list.is_array() || list.empty()) throw FormatError("family entry must be a nonempty array");
  std::vector<ExactFamilyTerm> out;
  for (const auto& t : list) {
    const auto& lam = field(t, "lambda");
    if (!lam.is_array() || lam.size() != 2 || !lam[0].is_number() || !lam[1].is_number()) {
      throw FormatError("lambda must be [re, im]");
    }
    const auto& m = field(t, "m");
    if (!m.is_number_integer()) throw FormatError("m must be an integer");
    const auto& part = field(t, "part");
    if (!part.is_string() || (part != "re" && part != "im")) throw FormatError("part must be \"re\" or \"im\"");
    const double kt = t.contains("k") ? t.at("k").get<double>() : 1.0;
    if (*k_seen && kt != *k) {
      throw IncompatibleWavenumber("family members use different wavenumbers");
    }
    *k = kt;
    *k_seen = true;
    Rational weight(1);
    if (t.contains("weight")) weight = rational_field(t, "weight");
    out.push_back({{lam[0].get<double>(), lam[1].get<double>()},
                   m.get<int>(),
                   part == "re" ? Part::kReal : Part::kImag,
                   weight});
  }
  return out;
}

nlohmann::json terms_to_json(const std::vector<ExactFamilyTerm>& terms, double k) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : terms) {
    out.push_back({{"lambda", {t.lambda.real(), t.lambda.imag()}},
                   {"m", t.m},
                   {"part", t.part == Part::kReal ? "re" : "im"},
                   {"weight", rational_to_string(t.weight)},
                   {"k", k}});
  }
  return out;
}

}  // namespace

nlohmann::json package_to_json(const PotentialPackage& pkg) {
  return nlohmann::json{{"C", rational_to_string(pkg.C)},
                        {"E", rational_to_string(pkg.energy)},
                        {"background", rational_to_string(pkg.background)},
                        {"k", pkg.k},
                        {"Q", pkg.Q},
                        {"P", pkg.P},
                        {"omega1", pkg.psi1_num},
                        {"omega2", pkg.psi2_num}};
}

PotentialPackage package_from_json(const nlohmann::json& j) {
  PotentialPackage pkg;
  pkg.C = rational_field(j, "C");
  pkg.energy = rational_field(j, "E");
  pkg.background = j.contains("background") ? rational_field(j, "background") : Rational(-1);
  const auto& k = field(j, "k");
  if (!k.is_number() || !(k.get<double>() > 0)) throw FormatError("k must be a positive number");
  pkg.k = k.get<double>();
  pkg.Q = ring_field(j, "Q");
  pkg.P = ring_field(j, "P");
  pkg.psi1_num = ring_field(j, "omega1");
  pkg.psi2_num = ring_field(j, "omega2");
  return pkg;
}

FamilySpec parse_family(const nlohmann::json& j) {
  FamilySpec spec;
  bool seen = false;
  spec.omega1 = parse_terms(field(j, "omega1"), &spec.k, &seen);
  spec.omega2 = parse_terms(field(j, "omega2"), &spec.k, &seen);
  if (spec.k != 1.0) throw ParameterError("exact family members are available for k = 1 only");
  return spec;
}

nlohmann::json family_to_json(const FamilySpec& spec) {
  return nlohmann::json{{"omega1", terms_to_json(spec.omega1, spec.k)},
                        {"omega2", terms_to_json(spec.omega2, spec.k)}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace vnw
