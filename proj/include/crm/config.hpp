#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crm/conjugacy.hpp"
#include "crm/levy.hpp"
#include "crm/sampler.hpp"

namespace crm {

using Json = nlohmann::json;

/// Reads and parses a JSON file; parse failures become ConfigError.
Json read_json_file(const std::string& path);

/// {"family": "beta" | "gamma" | "pareto" | "pareto_loglog" | "lognormal" |
///  "poisson" | "bernoulli", "u_m": .., "mu": ..}. `at` is the JSON pointer
/// of `j` used in error messages.
FamilyPtr family_from_json(const Json& j, const std::string& at = "");

/// A single parameter point: an array in coordinate order or an object keyed
/// by coordinate name.
Params params_from_json(const Json& j, const ExpFamily& fam, const std::string& at = "");

/// Parameter path from "params" (constant coordinates, an object keyed by
/// coordinate name or an array) and/or "path": [{"coord": j, "pieces":
/// [{"from": z0, "to": z1, "const": c} | {"from", "to", "affine": [a, b]}]}],
/// plus optional "atoms": [{"at": z, "params": [...]}]. Coordinates listed in
/// "path" override "params".
ParameterPath path_from_json(const Json& j, const ExpFamily& fam,
                             const std::string& at = "");

/// {"density_pieces": [{"from", "to", "const" | "affine" | "rational":
/// [p0, p1, q0, q1]}], "jumps": [[location, mass], ...]} or {"lebesgue": r}.
BaseMeasure base_from_json(const Json& j, const std::string& at = "");

/// Family, path, {"base": ...} and statistic index "k" (zero-based).
LevyContext context_from_json(const Json& j, const std::string& at = "");

Json path_to_json(const ParameterPath& path);

/// Multi-component sampling setup. The config is either
/// {"components": [context, ...]} or {"series": {"kind": "pareto",
/// "alpha": [a0, a1], "u_m": u, "terms": N}}, with "z_max", an optional
/// "tail_mass" and an optional "likelihood": {"family": .., "link":
/// "identity" | "reciprocal"}.
struct SampleSetup {
  std::vector<LevyContext> components;
  double z_max = 1.0;
  std::optional<double> tail_mass;
  FamilyPtr likelihood;
  std::optional<Link> link;
};

/// `truncation` keeps the first N components (or sets the series length);
/// `z_max` overrides the config value.
SampleSetup sample_setup_from_json(const Json& j,
                                   std::optional<std::size_t> truncation,
                                   std::optional<double> z_max);

/// {"pair": {"name": .., "hyper": ..}} next to a prior context.
ConjugatePair pair_from_json(const Json& j, const std::string& at = "");

ObservationMode mode_from_string(const std::string& s);

/// "location,value" CSV with a header line.
std::vector<LocatedObservation> read_observations_csv(const std::string& path);

}  // namespace crm
