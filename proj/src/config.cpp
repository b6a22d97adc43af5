#include "crm/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "crm/error.hpp"

namespace crm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string child(const std::string& at, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') {
      escaped += "~0";
    } else if (c == '/') {
      escaped += "~1";
    } else {
      escaped += c;
    }
  }
  return at + "/" + escaped;
}

std::string child(const std::string& at, std::size_t index) {
  return at + "/" + std::to_string(index);
}

const Json& require(const Json& j, const std::string& key, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(child(at, key), "required field is missing");
  return *it;
}

double number(const Json& j, const std::string& at) {
  if (!j.is_number()) throw ConfigError(at, "expected a number, got " + j.dump());
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(at, "expected a finite number");
  return v;
}

// A number, or null / absent meaning +infinity.
double upper_end(const Json& j, const std::string& key, const std::string& at) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return kInf;
  return number(*it, child(at, key));
}

double optional_number(const Json& j, const std::string& key, double fallback,
                       const std::string& at) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return number(*it, child(at, key));
}

const Json& array(const Json& j, const std::string& at) {
  if (!j.is_array()) throw ConfigError(at, "expected an array");
  return j;
}

std::vector<double> numbers(const Json& j, std::size_t n, const std::string& at) {
  array(j, at);
  if (j.size() != n) {
    throw ConfigError(at, "expected " + std::to_string(n) + " numbers, got " +
                              std::to_string(j.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(j[i], child(at, i)));
  return out;
}

std::size_t index_value(const Json& j, const std::string& at) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(at, "expected a non-negative integer, got " + j.dump());
  }
  return j.get<std::size_t>();
}

// Runs `build`, turning library domain errors into ConfigError at `at`.
template <class F>
auto at_pointer(const std::string& at, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(at, e.what());
  }
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

FamilyPtr family_from_json(const Json& j, const std::string& at) {
  const Json& name_node = require(j, "family", at);
  const std::string where = child(at, "family");
  if (!name_node.is_string()) throw ConfigError(where, "expected a family name");
  const std::string name = name_node.get<std::string>();
  return at_pointer(at, [&]() -> FamilyPtr {
    if (name == "beta") return make_beta();
    if (name == "gamma") return make_gamma();
    if (name == "pareto") return make_pareto(optional_number(j, "u_m", 1.0, at));
    if (name == "pareto_loglog") {
      return make_pareto_loglog(optional_number(j, "u_m", 1.0, at));
    }
    if (name == "lognormal") return make_lognormal(optional_number(j, "mu", 0.0, at));
    if (name == "poisson") return make_poisson();
    if (name == "bernoulli") return make_bernoulli();
    throw ConfigError(where, "unknown family '" + name +
                                 "' (beta, gamma, pareto, pareto_loglog, "
                                 "lognormal, poisson, bernoulli)");
  });
}

Params params_from_json(const Json& j, const ExpFamily& fam, const std::string& at) {
  const std::size_t dim = fam.dimension();
  if (j.is_array()) return numbers(j, dim, at);
  if (!j.is_object()) throw ConfigError(at, "expected an object or an array");
  Params values;
  for (std::size_t k = 0; k < dim; ++k) {
    values.push_back(number(require(j, fam.coordinate_name(k), at),
                            child(at, fam.coordinate_name(k))));
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::size_t k = 0; k < dim; ++k) known |= item.key() == fam.coordinate_name(k);
    if (!known) throw ConfigError(child(at, item.key()), "unknown coordinate");
  }
  return values;
}

ParameterPath path_from_json(const Json& j, const ExpFamily& fam,
                             const std::string& at) {
  const std::size_t dim = fam.dimension();
  std::vector<std::optional<PathComponent>> comps(dim);

  if (auto it = j.find("params"); it != j.end()) {
    const Params values = params_from_json(*it, fam, child(at, "params"));
    for (std::size_t k = 0; k < dim; ++k) {
      comps[k] = PathComponent({PathPiece{0.0, kInf, values[k], 0.0}});
    }
  }

  if (auto it = j.find("path"); it != j.end()) {
    const std::string p_at = child(at, "path");
    array(*it, p_at);
    std::vector<bool> seen(dim, false);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& c = (*it)[i];
      const std::string c_at = child(p_at, i);
      const std::size_t coord = index_value(require(c, "coord", c_at), child(c_at, "coord"));
      if (coord >= dim) {
        throw ConfigError(child(c_at, "coord"), "family " + fam.name() + " has " +
                                                    std::to_string(dim) + " coordinates");
      }
      if (seen[coord]) throw ConfigError(child(c_at, "coord"), "coordinate listed twice");
      seen[coord] = true;
      const Json& pieces = array(require(c, "pieces", c_at), child(c_at, "pieces"));
      std::vector<PathPiece> out;
      for (std::size_t q = 0; q < pieces.size(); ++q) {
        const Json& p = pieces[q];
        const std::string q_at = child(child(c_at, "pieces"), q);
        PathPiece piece;
        piece.from = optional_number(p, "from", 0.0, q_at);
        piece.to = upper_end(p, "to", q_at);
        if (p.contains("const") == p.contains("affine")) {
          throw ConfigError(q_at, "a piece needs exactly one of 'const' or 'affine'");
        }
        if (p.contains("const")) {
          piece.intercept = number(p["const"], child(q_at, "const"));
        } else {
          const auto ab = numbers(p["affine"], 2, child(q_at, "affine"));
          piece.intercept = ab[0];
          piece.slope = ab[1];
        }
        out.push_back(piece);
      }
      comps[coord] = at_pointer(c_at, [&] { return PathComponent(out); });
    }
  }

  std::vector<PathComponent> ready;
  for (std::size_t k = 0; k < dim; ++k) {
    if (!comps[k]) {
      throw ConfigError(at, "coordinate " + std::to_string(k) + " (" +
                                fam.coordinate_name(k) +
                                ") is given by neither 'params' nor 'path'");
    }
    ready.push_back(*comps[k]);
  }

  std::vector<PathAtom> atoms;
  if (auto it = j.find("atoms"); it != j.end()) {
    const std::string a_at = child(at, "atoms");
    array(*it, a_at);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string i_at = child(a_at, i);
      const double z = number(require((*it)[i], "at", i_at), child(i_at, "at"));
      atoms.push_back({z, numbers(require((*it)[i], "params", i_at), dim,
                                  child(i_at, "params"))});
    }
  }
  return at_pointer(at, [&] { return ParameterPath(ready, atoms); });
}

BaseMeasure base_from_json(const Json& j, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected an object");
  if (auto it = j.find("lebesgue"); it != j.end()) {
    const double rate = number(*it, child(at, "lebesgue"));
    return at_pointer(at, [&] { return BaseMeasure::lebesgue(rate); });
  }
  std::vector<DensityPiece> pieces;
  if (auto it = j.find("density_pieces"); it != j.end()) {
    const std::string d_at = child(at, "density_pieces");
    array(*it, d_at);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& p = (*it)[i];
      const std::string p_at = child(d_at, i);
      DensityPiece d;
      d.from = optional_number(p, "from", 0.0, p_at);
      d.to = upper_end(p, "to", p_at);
      const int forms = p.contains("const") + p.contains("affine") + p.contains("rational");
      if (forms != 1) {
        throw ConfigError(p_at, "a density piece needs exactly one of 'const', "
                                "'affine' or 'rational'");
      }
      if (p.contains("const")) {
        d.p0 = number(p["const"], child(p_at, "const"));
      } else if (p.contains("affine")) {
        const auto ab = numbers(p["affine"], 2, child(p_at, "affine"));
        d.p0 = ab[0];
        d.p1 = ab[1];
      } else {
        const auto r = numbers(p["rational"], 4, child(p_at, "rational"));
        d.p0 = r[0];
        d.p1 = r[1];
        d.q0 = r[2];
        d.q1 = r[3];
      }
      pieces.push_back(d);
    }
  }
  std::vector<Jump> jumps;
  if (auto it = j.find("jumps"); it != j.end()) {
    const std::string j_at = child(at, "jumps");
    array(*it, j_at);
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto lm = numbers((*it)[i], 2, child(j_at, i));
      jumps.push_back({lm[0], lm[1]});
    }
  }
  return at_pointer(at, [&] { return BaseMeasure(pieces, jumps); });
}

LevyContext context_from_json(const Json& j, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "expected an object");
  const FamilyPtr fam = family_from_json(j, at);
  ParameterPath path = path_from_json(j, *fam, at);
  BaseMeasure base = base_from_json(require(j, "base", at), child(at, "base"));
  const std::size_t k = index_value(require(j, "k", at), child(at, "k"));
  if (k >= fam->dimension()) {
    throw ConfigError(child(at, "k"), "family " + fam->name() + " has " +
                                          std::to_string(fam->dimension()) +
                                          " statistics (k is zero-based)");
  }
  try {
    return LevyContext(fam, std::move(path), std::move(base), k);
  } catch (const ConditionError& e) {
    throw ConfigError(at, e.what());
  }
}

Json path_to_json(const ParameterPath& path) {
  Json comps = Json::array();
  for (std::size_t k = 0; k < path.dimension(); ++k) {
    Json pieces = Json::array();
    for (const auto& p : path.components()[k].pieces()) {
      Json piece{{"from", p.from}};
      piece["to"] = std::isfinite(p.to) ? Json(p.to) : Json(nullptr);
      if (p.slope == 0.0) {
        piece["const"] = p.intercept;
      } else {
        piece["affine"] = {p.intercept, p.slope};
      }
      pieces.push_back(piece);
    }
    comps.push_back({{"coord", k}, {"pieces", pieces}});
  }
  Json out{{"path", comps}};
  if (!path.atoms().empty()) {
    Json atoms = Json::array();
    for (const auto& a : path.atoms()) atoms.push_back({{"at", a.at}, {"params", a.value}});
    out["atoms"] = atoms;
  }
  return out;
}

SampleSetup sample_setup_from_json(const Json& j, std::optional<std::size_t> truncation,
                                   std::optional<double> z_max) {
  if (!j.is_object()) throw ConfigError("", "expected an object");
  SampleSetup s;
  if (z_max) {
    s.z_max = *z_max;
  } else {
    s.z_max = number(require(j, "z_max", ""), "/z_max");
  }
  if (!(s.z_max > 0.0)) {
    if (z_max) throw ConfigError("", "--zmax must be > 0");
    throw ConfigError("/z_max", "must be > 0");
  }
  if (auto it = j.find("tail_mass"); it != j.end()) {
    s.tail_mass = number(*it, "/tail_mass");
  }

  const bool has_list = j.contains("components");
  const bool has_series = j.contains("series");
  if (has_list == has_series) {
    throw ConfigError("", "give exactly one of 'components' or 'series'");
  }
  if (has_list) {
    const Json& list = array(j["components"], "/components");
    std::size_t n = list.size();
    if (truncation) {
      if (*truncation > n) {
        throw ConfigError("/components", "truncation " + std::to_string(*truncation) +
                                             " exceeds the " + std::to_string(n) +
                                             " listed components");
      }
      n = *truncation;
    }
    for (std::size_t i = 0; i < n; ++i) {
      s.components.push_back(context_from_json(list[i], child("/components", i)));
    }
  } else {
    const Json& series = j["series"];
    const std::string at = "/series";
    const Json& kind = require(series, "kind", at);
    if (kind != "pareto") throw ConfigError(at + "/kind", "only 'pareto' series are built in");
    const auto alpha = numbers(require(series, "alpha", at), 2, at + "/alpha");
    const double u_m = optional_number(series, "u_m", 1.0, at);
    std::size_t terms = 0;
    if (truncation) {
      terms = *truncation;
    } else {
      terms = index_value(require(series, "terms", at), at + "/terms");
    }
    s.components = at_pointer(at, [&] { return pareto_series(terms, alpha[0], alpha[1], u_m); });
    if (!s.tail_mass) {
      // Series component n has mass proportional to 1/n, so the dropped
      // tail is infinite whenever the mass is positive.
      s.tail_mass = pareto_series_mass(1, alpha[0], alpha[1], s.z_max) > 0.0 ? kInf : 0.0;
    }
  }
  if (s.components.empty()) throw ConfigError("", "truncation level must be >= 1");

  if (auto it = j.find("likelihood"); it != j.end()) {
    s.likelihood = family_from_json(*it, "/likelihood");
    std::string link = "identity";
    if (auto l = it->find("link"); l != it->end()) {
      if (!l->is_string()) throw ConfigError("/likelihood/link", "expected a string");
      link = l->get<std::string>();
    }
    if (link == "identity") {
      s.link = identity_link();
    } else if (link == "reciprocal") {
      s.link = reciprocal_link();
    } else {
      throw ConfigError("/likelihood/link", "unknown link '" + link +
                                                "' (identity, reciprocal)");
    }
  }
  return s;
}

ConjugatePair pair_from_json(const Json& j, const std::string& at) {
  const Json& p = require(j, "pair", at);
  const std::string p_at = child(at, "pair");
  const Json& name = require(p, "name", p_at);
  if (!name.is_string()) throw ConfigError(child(p_at, "name"), "expected a string");
  try {
    if (p.contains("hyper")) {
      return ConjugatePair::make(name.get<std::string>(),
                                 number(p["hyper"], child(p_at, "hyper")));
    }
    return ConjugatePair::make(name.get<std::string>());
  } catch (const UnsupportedPairError& e) {
    throw ConfigError(child(p_at, "name"), e.what());
  } catch (const DomainError& e) {
    throw ConfigError(child(p_at, "hyper"), e.what());
  }
}

ObservationMode mode_from_string(const std::string& s) {
  if (s == "uniform") return ObservationMode::Uniform;
  if (s == "per-atom") return ObservationMode::PerAtom;
  throw ConfigError("", "unknown mode '" + s + "' (uniform, per-atom)");
}

std::vector<LocatedObservation> read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open observations file '" + path + "'");
  std::vector<LocatedObservation> out;
  std::string line;
  std::size_t number_of_line = 0;
  while (std::getline(in, line)) {
    ++number_of_line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (number_of_line == 1 && line.find_first_of("0123456789") == std::string::npos) {
      continue;  // header
    }
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) {
      throw ConfigError("", path + ":" + std::to_string(number_of_line) +
                                ": expected 'location,value'");
    }
    try {
      std::size_t used_a = 0, used_b = 0;
      const double loc = std::stod(a, &used_a);
      const double val = std::stod(b, &used_b);
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing");
      out.push_back({loc, val});
    } catch (const std::logic_error&) {
      throw ConfigError("", path + ":" + std::to_string(number_of_line) +
                                ": cannot read numbers from '" + line + "'");
    }
  }
  return out;
}

}  // namespace crm
