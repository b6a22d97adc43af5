#include "crm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "crm/construct.hpp"
#include "crm/decompositions.hpp"
#include "crm/error.hpp"

namespace crm::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("", "cannot write '" + path.string() + "'");
  out << content;
}

std::string config_hash(const Json& config) { return fnv1a_hex(config.dump()); }

// ---------------------------------------------------------------------------
// Report rows

CheckRow relative_row(const std::string& suite, const std::string& check, double observed,
                      double oracle, double tolerance) {
  const double gap = std::abs(observed - oracle) / std::max(std::abs(oracle), 1e-300);
  return {suite, check, observed, oracle, gap, kNaN, tolerance, gap < tolerance ? "pass" : "fail"};
}

CheckRow exact_row(const std::string& suite, const std::string& check, double observed,
                   double oracle) {
  const double gap = std::abs(observed - oracle);
  return {suite, check, observed, oracle, gap, kNaN, 0.0, observed == oracle ? "pass" : "fail"};
}

CheckRow mc_row(const std::string& suite, const std::string& check, double observed,
                double oracle, double se, double sigmas) {
  const double gap = std::abs(observed - oracle);
  return {suite, check, observed, oracle, gap, se, sigmas * se,
          gap <= sigmas * se ? "pass" : "fail"};
}

CheckRow info_row(const std::string& suite, const std::string& check, double observed,
                  double oracle) {
  return {suite, check, observed, oracle, std::abs(observed - oracle), kNaN, kNaN, "info"};
}

std::string csv_number(double v) { return std::isnan(v) ? "" : format_double(v); }

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double max_abs_diff(const Params& a, const Params& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

double optional_field(const Json* config, const char* key, double fallback) {
  if (config == nullptr) return fallback;
  auto it = config->find(key);
  if (it == config->end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string("/") + key, "expected a number");
  return it->get<double>();
}

// ---------------------------------------------------------------------------
// moments

std::vector<CheckRow> suite_moments(const SuiteOptions& o) {
  const std::string suite = "moments";
  FamilyPtr fam = make_beta();
  Params p{2.0, 3.0};
  if (o.config) {
    fam = family_from_json(*o.config);
    p = params_from_json(o.config->contains("params") ? (*o.config)["params"] : Json(),
                         *fam, "/params");
    try {
      require_admissible(*fam, p);
    } catch (const DomainError& e) {
      throw ConfigError("/params", e.what());
    }
  }
  const std::size_t draws = o.replicates.value_or(100000);
  std::vector<CheckRow> rows;
  std::string label = fam->name() + "(";
  for (std::size_t j = 0; j < p.size(); ++j) label += (j ? "," : "") + short_double(p[j]);
  label += ")";

  std::vector<double> xs(draws);
  Rng rng = make_stream(o.seed, 0);
  for (double& x : xs) x = sample(*fam, p, rng);

  const bool beta = fam->name() == "beta";
  for (int m = 1; m <= 3; ++m) {
    const std::string tag = label + " E[X^" + std::to_string(m) + "]";
    double oracle = kNaN;
    if (beta) {
      oracle = std::exp(std::lgamma(p[0] + m) + std::lgamma(p[0] + p[1]) -
                        std::lgamma(p[0] + p[1] + m) - std::lgamma(p[0]));
      rows.push_back(relative_row(suite, tag + " partition shift vs gamma ratio",
                                  statistic_mgf(*fam, p, 0, m), oracle, 1e-8));
    } else {
      try {
        oracle = expectation(*fam, p, [m](double x) { return std::pow(x, m); });
      } catch (const Error&) {
        oracle = kInf;
      }
    }
    double mean = 0.0, sq = 0.0;
    for (double x : xs) mean += std::pow(x, m);
    mean /= static_cast<double>(draws);
    for (double x : xs) sq += (std::pow(x, m) - mean) * (std::pow(x, m) - mean);
    const double se = std::sqrt(sq / static_cast<double>(draws - 1) / static_cast<double>(draws));
    if (std::isfinite(oracle)) {
      rows.push_back(mc_row(suite, tag + " Monte Carlo", mean, oracle, se, 3.0));
    } else {
      rows.push_back(info_row(suite, tag + " Monte Carlo (moment is infinite)", mean, oracle));
    }
  }

  for (std::size_t k = 0; k < fam->dimension(); ++k) {
    for (int m = 1; m <= 3; ++m) {
      const std::string tag = label + " E[T" + std::to_string(k) + "^" + std::to_string(m) + "]";
      double engine = kNaN;
      try {
        engine = moment_suff_stat(*fam, p, k, m);
      } catch (const DerivativeDomainError& e) {
        rows.push_back(info_row(suite, tag + " engine unavailable", kNaN, kNaN));
        continue;
      }
      const double quad = expectation(*fam, p, [&](double x) {
        return std::pow(fam->statistic(k, x), m);
      });
      rows.push_back(relative_row(suite, tag + " engine vs quadrature", engine, quad, 1e-4));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// laplace

std::vector<CheckRow> suite_laplace(const SuiteOptions& o) {
  const std::string suite = "laplace";
  const Json* cfg = o.config ? &*o.config : nullptr;
  const LevyContext ctx =
      cfg ? context_from_json(*cfg)
          : LevyContext(make_gamma(), ParameterPath::constant({2.0, 3.0}),
                        BaseMeasure::lebesgue(1.0), 1);
  const double t = optional_field(cfg, "t", 1.0);
  const double theta = optional_field(cfg, "theta", 1.0);
  std::vector<int> resolutions{8, 32, 128, 512};
  if (cfg && cfg->contains("resolutions")) {
    resolutions = (*cfg)["resolutions"].get<std::vector<int>>();
  }
  const std::size_t reps = o.replicates.value_or(10000);
  const double oracle = std::exp(-laplace_exponent(ctx, t, theta));

  std::vector<CheckRow> rows;
  double previous = kInf;
  int increases = 0;
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    const int n = resolutions[i];
    const auto est = empirical_laplace(ctx, DiscretizationPlan{n, t}, t, theta, reps,
                                       derive_seed(o.seed, static_cast<std::uint64_t>(n)));
    const double gap = std::abs(est.estimate - oracle);
    if (gap >= previous) ++increases;
    previous = gap;
    CheckRow row{suite, "n=" + std::to_string(n), est.estimate, oracle, gap,
                 est.std_error, 0.02, "info"};
    if (i + 1 == resolutions.size()) row.status = gap < 0.02 ? "pass" : "fail";
    rows.push_back(row);
  }
  rows.push_back({suite, "gap decreasing in n (count of non-decreasing steps)",
                  static_cast<double>(increases), 0.0, static_cast<double>(increases), kNaN,
                  0.0, increases == 0 ? "pass" : "fail"});
  return rows;
}

// ---------------------------------------------------------------------------
// conjugacy

struct PairData {
  const char* name;
  Params prior;
  std::vector<double> first, second;
  Params expected_union;
  std::vector<double> grid_ys;
};

std::vector<double> exp_of(std::initializer_list<double> logs) {
  std::vector<double> out;
  for (double d : logs) out.push_back(std::exp(d));
  return out;
}

std::vector<PairData> pair_data() {
  // Observations whose increments are dyadic, so every sum below is exact.
  return {
      {"beta-bernoulli", {2.0, 3.0}, {1, 0, 0}, {1, 1}, {5.0, 5.0}, {1, 0, 1, 1, 0, 0, 1}},
      {"gamma-poisson", {2.0, 1.0}, {3, 0, 2}, {1, 4}, {12.0, 6.0}, {3, 5, 2, 4}},
      {"geng-lognormal", {1.0, 2.0}, exp_of({0.5, -1.5, 2.0}), exp_of({0.75, -3.0}),
       {3.5, 2.0 + 0.125 + 1.125 + 2.0 + 0.28125 + 4.5}, {0.5, 1.7, 2.4, 0.9, 3.1}},
      {"geng-pareto", {2.0, 1.0}, exp_of({0.5, 1.25, 2.0}), exp_of({0.75, 3.0}),
       {7.0, 1.0 + 7.5}, {1.2, 3.5, 1.05, 2.2}},
  };
}

std::vector<CheckRow> suite_conjugacy(const SuiteOptions&) {
  const std::string suite = "conjugacy";
  std::vector<CheckRow> rows;
  for (const auto& d : pair_data()) {
    const auto pair = ConjugatePair::make(d.name);
    const std::string n = d.name;
    rows.push_back(exact_row(suite, n + " tau(p, []) = p",
                             max_abs_diff(pair.tau(d.prior, {}), d.prior), 0.0));
    std::vector<double> both = d.first;
    both.insert(both.end(), d.second.begin(), d.second.end());
    const Params seq = pair.tau(pair.tau(d.prior, d.first), d.second);
    const Params once = pair.tau(d.prior, both);
    rows.push_back(exact_row(suite, n + " sequential update = update on union",
                             max_abs_diff(seq, once), 0.0));
    for (std::size_t j = 0; j < once.size(); ++j) {
      rows.push_back(exact_row(suite,
                               n + " update formula " + pair.prior()->coordinate_name(j),
                               once[j], d.expected_union[j]));
    }
    const double tv = grid_bayes_tv(pair, d.prior, d.grid_ys);
    rows.push_back({suite, n + " grid Bayes total variation", tv, 0.0, tv, kNaN, 1e-3,
                    tv < 1e-3 ? "pass" : "fail"});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// activity

std::vector<CheckRow> suite_activity(const SuiteOptions& o) {
  const std::string suite = "activity";
  std::vector<CheckRow> rows;
  auto add = [&](const std::string& check, const LevyContext& ctx, const std::string& want,
                 double want_mass) {
    const Activity a = classify_activity(ctx, 1.0);
    double mass = kNaN;
    if (auto* f = std::get_if<FiniteActivity>(&a)) mass = f->total_mass;
    if (auto* h = std::get_if<NotTimeHomogeneous>(&a)) mass = h->total_mass;
    const bool class_ok = activity_name(a) == want;
    const bool mass_ok =
        want_mass == 0.0 ? mass == 0.0 : std::abs(mass - want_mass) <= 1e-6 * want_mass;
    rows.push_back({suite, check + " -> " + activity_name(a) + " (expected " + want + ")",
                    mass, want_mass, std::abs(mass - want_mass), kNaN, 1e-6,
                    class_ok && mass_ok ? "pass" : "fail"});
  };
  // Component (index 1, h = 2) with c = 2 and unit base rate.
  add("gamma component index=1 h=2 c=2", gamma_component(1, 2.0, 2.0, 0.0, 1.0, 1),
      "FiniteActivity", 1.0 / 8.0);
  {
    ParameterPath path({PathComponent({PathPiece{0.0, kInf, 0.0, 0.0}}),
                        PathComponent({PathPiece{0.0, kInf, 0.0, 1.0}})});
    add("pareto alpha(z)=z lebesgue base", LevyContext(make_pareto_loglog(1.0), path,
                                                       BaseMeasure::lebesgue(), 0),
        "NotTimeHomogeneous", 1.0);
  }
  add("null base measure",
      LevyContext(make_gamma(), ParameterPath::constant({2.0, 3.0}), BaseMeasure::null(), 1),
      "FiniteActivity", 0.0);
  if (o.config) {
    const LevyContext ctx = context_from_json(*o.config);
    const Activity a = classify_activity(ctx, 1.0);
    double mass = kNaN;
    if (auto* f = std::get_if<FiniteActivity>(&a)) mass = f->total_mass;
    if (auto* h = std::get_if<NotTimeHomogeneous>(&a)) mass = h->total_mass;
    rows.push_back(info_row(suite, "config -> " + activity_name(a), mass, kNaN));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// examples

std::vector<CheckRow> example_pareto_series(const SuiteOptions& o) {
  const std::string suite = "examples";
  const Json* cfg = o.config ? &*o.config : nullptr;
  const double alpha = optional_field(cfg, "alpha", 1.0);
  const double u_m = optional_field(cfg, "u_m", 1.0);
  const double u = optional_field(cfg, "u", 2.0);
  const auto terms = static_cast<std::size_t>(optional_field(cfg, "terms", 50.0));
  if (!(alpha > 0.0) || !(u > u_m) || terms == 0) {
    throw ConfigError("", "pareto-series needs alpha > 0, u > u_m and terms >= 1");
  }
  // Independent oracle: the Levy densities of the series components over
  // (0, 1], each computed by quadrature and summed.
  const auto comps = pareto_series(terms, alpha, 0.0, u_m);
  std::vector<CheckRow> rows;
  double oracle = 0.0;
  for (std::size_t n = 1; n <= terms; ++n) {
    oracle += levy_density_u(comps[n - 1], 1.0, u);
    rows.push_back(relative_row(suite, "pareto-series S_" + std::to_string(n),
                                pareto_series_density(n, alpha, u_m, u), oracle, 1e-8));
  }
  const double limit = pareto_series_limit(alpha, u_m, u);
  rows.push_back(info_row(suite, "pareto-series S_" + std::to_string(terms) + " vs limit",
                          pareto_series_density(terms, alpha, u_m, u), limit));
  const double printed =
      1.0 + std::pow(u_m, alpha) / (std::pow(u, -(alpha + 1.0)) - std::pow(u_m, alpha));
  rows.push_back(info_row(suite, "pareto-series printed closed form vs limit", printed, limit));
  return rows;
}

std::vector<CheckRow> example_beta_bernoulli(const SuiteOptions&) {
  const std::string suite = "examples";
  const double c = 2.0, b0 = 0.3;
  std::vector<Jump> jumps;
  for (int i = 1; i <= 5; ++i) jumps.push_back({static_cast<double>(i), 1.0});
  const LevyContext prior(make_beta(), ParameterPath::constant({c * b0, c * (1.0 - b0)}),
                          BaseMeasure({}, jumps), 0);
  const std::vector<LocatedObservation> obs{{3.0, 1.0}, {3.0, 0.0}, {3.0, 1.0}};
  const auto post = posterior_context(ConjugatePair::make("beta-bernoulli"), prior, obs,
                                      ObservationMode::PerAtom);
  const Params at = post.path()(3.0);
  const double sum_x = 2.0, n = 3.0;
  return {
      exact_row(suite, "beta-bernoulli 5-atom alpha at z=3", at[0], c * b0 + sum_x),
      exact_row(suite, "beta-bernoulli 5-atom beta at z=3", at[1], c * (1.0 - b0) + (n - sum_x)),
      exact_row(suite, "beta-bernoulli 5-atom alpha at z=2 unchanged", post.path()(2.0)[0],
                c * b0),
  };
}

std::vector<CheckRow> example_geng_lognormal(const SuiteOptions&) {
  const std::string suite = "examples";
  const auto pair = ConjugatePair::make("geng-lognormal", 0.0);
  const auto ys = exp_of({1.0, -2.0, 0.0, 3.0});
  const Params post = pair.tau({1.0, 2.0}, ys);
  return {
      exact_row(suite, "geng-lognormal n=4 alpha + n/2", post[0], 1.0 + 2.0),
      exact_row(suite, "geng-lognormal n=4 beta + sum (ln x)^2 / 2", post[1],
                2.0 + (1.0 + 4.0 + 0.0 + 9.0) / 2.0),
  };
}

std::vector<CheckRow> example_geng_pareto(const SuiteOptions&) {
  const std::string suite = "examples";
  const auto pair = ConjugatePair::make("geng-pareto", 1.0);
  const Params post = pair.tau({2.0, 1.0}, exp_of({1.0, 2.0}));
  return {
      exact_row(suite, "geng-pareto c + n", post[0], 4.0),
      exact_row(suite, "geng-pareto c G0 + sum ln(x / x_m)", post[1], 4.0),
  };
}

using SuiteFn = std::vector<CheckRow> (*)(const SuiteOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& examples() {
  static const std::vector<std::pair<std::string, SuiteFn>> table{
      {"pareto-series", example_pareto_series},
      {"beta-bernoulli", example_beta_bernoulli},
      {"geng-lognormal", example_geng_lognormal},
      {"geng-pareto", example_geng_pareto},
  };
  return table;
}

std::vector<CheckRow> suite_examples(const SuiteOptions& o) {
  std::vector<CheckRow> rows;
  bool found = false;
  for (const auto& [name, fn] : examples()) {
    if (!o.target.empty() && o.target != name) continue;
    found = true;
    SuiteOptions sub = o;
    if (o.target.empty()) sub.config.reset();
    auto more = fn(sub);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  if (!found) {
    std::string known;
    for (const auto& e : examples()) known += (known.empty() ? "" : ", ") + e.first;
    throw ConfigError("", "unknown example '" + o.target + "' (" + known + ")");
  }
  return rows;
}

const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> table{
      {"moments", suite_moments},   {"laplace", suite_laplace},
      {"conjugacy", suite_conjugacy}, {"activity", suite_activity},
      {"examples", suite_examples},
  };
  return table;
}

// ---------------------------------------------------------------------------
// posterior diff

std::string describe_params(const ExpFamily& fam, const Params& p) {
  std::string out;
  for (std::size_t j = 0; j < p.size(); ++j) {
    out += (j ? ", " : "") + fam.coordinate_name(j) + " = " + short_double(p[j]);
  }
  return out;
}

std::string path_diff(const ExpFamily& fam, const ParameterPath& before,
                      const ParameterPath& after) {
  std::ostringstream out;
  for (std::size_t j = 0; j < after.dimension(); ++j) {
    const auto& was = before.components()[j].pieces();
    const auto& now = after.components()[j].pieces();
    for (std::size_t i = 0; i < now.size() && i < was.size(); ++i) {
      if (was[i].intercept == now[i].intercept && was[i].slope == now[i].slope) continue;
      out << fam.coordinate_name(j) << " on [" << short_double(now[i].from) << ", "
          << short_double(now[i].to) << "): intercept " << short_double(was[i].intercept)
          << " -> " << short_double(now[i].intercept) << "\n";
    }
  }
  for (const auto& atom : after.atoms()) {
    const Params was = before(atom.at);
    if (was == atom.value) continue;
    out << "atom at z = " << short_double(atom.at) << ": (" << describe_params(fam, was)
        << ") -> (" << describe_params(fam, atom.value) << ")\n";
  }
  return out.str();
}

int report_error(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << "\n";
  return kExitUsage;
}

}  // namespace

std::string short_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

SampleRun run_sample(const Json& config, std::uint64_t seed,
                     std::optional<std::size_t> truncation, std::optional<double> z_max) {
  const SampleSetup setup = sample_setup_from_json(config, truncation, z_max);
  SampleRun run;
  run.draw = sample_crm(setup.components, setup.z_max, seed, setup.tail_mass);
  run.files.push_back({"atoms.csv", atoms_csv(run.draw)});
  std::vector<double> grid(kPathGridPoints);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = setup.z_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  }
  run.files.push_back({"path.csv", path_csv(run.draw, grid)});
  if (setup.likelihood) {
    const auto obs = sample_likelihood(run.draw, *setup.likelihood, *setup.link,
                                       derive_seed(seed, kLikelihoodStream));
    run.files.push_back({"observations.csv", observations_csv(obs)});
  }
  return run;
}

Json make_manifest(const Json& config, std::uint64_t seed, const SampleRun& run,
                   const std::string& started_at, const std::string& finished_at) {
  Json outputs = Json::array();
  for (const auto& f : run.files) {
    outputs.push_back({{"file", f.file}, {"bytes", f.content.size()},
                       {"fnv1a", fnv1a_hex(f.content)}});
  }
  Json masses = Json::array();
  for (double m : run.draw.component_mass) masses.push_back(m);
  return Json{{"command", "sample"},
              {"config", config},
              {"config_hash", config_hash(config)},
              {"seed", seed},
              {"truncation", run.draw.truncation},
              {"z_max", run.draw.z_max},
              {"started_at", started_at},
              {"finished_at", finished_at},
              {"atom_count", run.draw.atoms.size()},
              {"component_mass", masses},
              {"tail", run.draw.tail_report()},
              {"outputs", outputs}};
}

std::vector<ReplayCheck> replay_manifest(const Json& manifest, SampleRun* out) {
  if (!manifest.is_object() || manifest.value("command", "") != "sample") {
    throw ConfigError("/command", "not a sample manifest");
  }
  for (const char* key : {"config", "config_hash", "seed", "truncation", "z_max", "outputs"}) {
    if (!manifest.contains(key)) {
      throw ConfigError(std::string("/") + key, "required field is missing");
    }
  }
  const Json& config = manifest["config"];
  const Json& seed = manifest["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ConfigError("/seed", "expected an unsigned integer");
  }
  std::vector<ReplayCheck> checks;
  const std::string hash = config_hash(config);
  checks.push_back({"config", manifest["config_hash"].get<std::string>(), hash,
                    hash == manifest["config_hash"].get<std::string>()});
  SampleRun run = run_sample(config, seed.get<std::uint64_t>(),
                             manifest["truncation"].get<std::size_t>(),
                             manifest["z_max"].get<double>());
  for (const auto& entry : manifest["outputs"]) {
    const std::string file = entry.at("file").get<std::string>();
    const std::string recorded = entry.at("fnv1a").get<std::string>();
    std::string replayed = "(missing)";
    for (const auto& f : run.files) {
      if (f.file == file) replayed = fnv1a_hex(f.content);
    }
    checks.push_back({file, recorded, replayed, recorded == replayed});
  }
  if (out) *out = std::move(run);
  return checks;
}

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& s : suites()) out.push_back(s.first);
  return out;
}

std::vector<CheckRow> run_suite(const std::string& suite, const SuiteOptions& options) {
  for (const auto& [name, fn] : suites()) {
    if (name != suite) continue;
    if (!options.target.empty() && name != "examples") {
      throw ConfigError("", "suite '" + name + "' takes no target");
    }
    return fn(options);
  }
  std::string known;
  for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("", "unknown suite '" + suite + "' (" + known + ")");
}

std::string report_csv(const std::vector<CheckRow>& rows) {
  std::string out = "suite,check,observed,oracle,gap,std_error,tolerance,status\n";
  for (const auto& r : rows) {
    out += quoted(r.suite) + "," + quoted(r.check) + "," + csv_number(r.observed) + "," +
           csv_number(r.oracle) + "," + csv_number(r.gap) + "," + csv_number(r.std_error) +
           "," + csv_number(r.tolerance) + "," + r.status + "\n";
  }
  return out;
}

PosteriorResult run_posterior(const Json& prior_config,
                              const std::vector<LocatedObservation>& observations,
                              ObservationMode mode) {
  const ConjugatePair pair = pair_from_json(prior_config);
  const LevyContext prior = context_from_json(prior_config);
  if (observations.empty()) return {prior_config, ""};

  const LevyContext post = posterior_context(pair, prior, observations, mode);
  Json config = prior_config;
  config.erase("params");
  config.erase("path");
  config.erase("atoms");
  config.update(path_to_json(post.path()));

  // The written config must describe the same path it was built from.
  const LevyContext reread = context_from_json(config);
  if (!(reread.path() == post.path())) {
    throw DomainError("posterior config does not round-trip through the path parser");
  }
  return {config, path_diff(prior.family(), prior.path(), post.path())};
}

// ---------------------------------------------------------------------------
// Command line

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Completely random measures from exponential families: sampling, "
               "verification and conjugate posteriors."};
  app.require_subcommand(1);

  std::string config_path, out_dir, suite, target, mode_name, observations_path,
      manifest_path;
  std::uint64_t seed = 1;
  std::optional<std::size_t> truncation, replicates;
  std::optional<double> z_max;

  auto* sample = app.add_subcommand("sample", "Draw a truncated CRM and write its atoms");
  sample->add_option("--config", config_path, "Sampling config (JSON)")->required();
  sample->add_option("--seed", seed, "Root seed");
  sample->add_option("--truncation", truncation, "Number of components N")
      ->check(CLI::PositiveNumber);
  sample->add_option("--zmax", z_max, "Sampling region (0, zmax]");
  sample->add_option("--out", out_dir, "Output directory")->required();

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite,--suite", suite, "moments, laplace, conjugacy, activity, examples")
      ->required();
  verify->add_option("target", target, "Example name for the examples suite");
  verify->add_option("--config", config_path, "Suite-specific config (JSON)");
  verify->add_option("--seed", seed, "Root seed");
  verify->add_option("--replicates", replicates, "Monte Carlo replicates")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
  verify->add_option("--out", out_dir, "Also write the report to DIR/verify_<suite>.csv");

  auto* posterior = app.add_subcommand("posterior", "Apply the conjugate update to a prior config");
  posterior->add_option("--config", config_path, "Prior config with a \"pair\" (JSON)")
      ->required();
  posterior->add_option("--observations", observations_path, "location,value CSV")
      ->required();
  posterior->add_option("--mode", mode_name, "uniform or per-atom")
      ->required()
      ->check(CLI::IsMember({"uniform", "per-atom"}));
  posterior->add_option("--out", out_dir, "Output directory")->required();

  auto* replay = app.add_subcommand("replay", "Rerun a sample manifest and compare outputs");
  replay->add_option("manifest", manifest_path, "manifest.json of a sample run")->required();
  replay->add_option("--out", out_dir, "Also write the replayed files here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*sample) {
      const std::string started = utc_now();
      const Json config = read_json_file(config_path);
      SampleRun result;
      try {
        result = run_sample(config, seed, truncation, z_max);
      } catch (const TruncationError& e) {
        err << "error: " << e.what()
            << "\nhint: restrict the region with --zmax or give the component a base "
               "measure with finite mass on (0, zmax]\n";
        return kExitUsage;
      }
      fs::create_directories(out_dir);
      for (const auto& f : result.files) write_file(fs::path(out_dir) / f.file, f.content);
      const Json manifest = make_manifest(config, seed, result, started, utc_now());
      write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
      out << "sampled " << result.draw.atoms.size() << " atoms from "
          << result.draw.truncation << " components on (0, " << short_double(result.draw.z_max)
          << "]; " << result.draw.tail_report() << "\n";
      for (const auto& f : result.files) out << "wrote " << (fs::path(out_dir) / f.file).string() << "\n";
      out << "wrote " << (fs::path(out_dir) / "manifest.json").string() << "\n";
      return kExitOk;
    }

    if (*verify) {
      SuiteOptions options;
      options.seed = seed;
      options.replicates = replicates;
      options.target = target;
      if (!config_path.empty()) options.config = read_json_file(config_path);
      const auto rows = run_suite(suite, options);
      const std::string csv = report_csv(rows);
      out << csv;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / ("verify_" + suite + ".csv"), csv);
      }
      const auto failed = std::count_if(rows.begin(), rows.end(),
                                        [](const CheckRow& r) { return r.status == "fail"; });
      if (failed > 0) {
        err << failed << " of " << rows.size() << " checks failed\n";
        return kExitCheckFailed;
      }
      return kExitOk;
    }

    if (*posterior) {
      const Json config = read_json_file(config_path);
      const auto observations = read_observations_csv(observations_path);
      const PosteriorResult result =
          run_posterior(config, observations, mode_from_string(mode_name));
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / "posterior.json", result.config.dump(2) + "\n");
      write_file(fs::path(out_dir) / "diff.txt", result.diff);
      out << result.diff;
      out << "wrote " << (fs::path(out_dir) / "posterior.json").string() << "\n";
      return kExitOk;
    }

    if (*replay) {
      const Json manifest = read_json_file(manifest_path);
      SampleRun result;
      const auto checks = replay_manifest(manifest, &result);
      bool all = true;
      const fs::path recorded_dir = fs::path(manifest_path).parent_path();
      for (const auto& c : checks) {
        bool ok = c.matches;
        std::string note;
        if (c.file != "config") {
          const fs::path on_disk = recorded_dir / c.file;
          if (fs::exists(on_disk)) {
            for (const auto& f : result.files) {
              if (f.file == c.file && read_file(on_disk) != f.content) {
                ok = false;
                note = " (file on disk differs)";
              }
            }
          }
        }
        all = all && ok;
        out << (ok ? "match    " : "MISMATCH ") << c.file << " recorded " << c.recorded_hash
            << " replayed " << c.replayed_hash << note << "\n";
      }
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (const auto& f : result.files) write_file(fs::path(out_dir) / f.file, f.content);
      }
      return all ? kExitOk : kExitCheckFailed;
    }
  } catch (const ConfigError& e) {
    return report_error(err, e);
  } catch (const Error& e) {
    return report_error(err, e);
  } catch (const Json::exception& e) {
    return report_error(err, e);
  } catch (const fs::filesystem_error& e) {
    return report_error(err, e);
  }
  return kExitUsage;
}

}  // namespace crm::cli
