#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crm/config.hpp"

namespace crm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct Artifact {
  std::string file;
  std::string content;
};

/// Output of one sampling run, before anything touches the disk.
struct SampleRun {
  CRMDraw draw;
  std::vector<Artifact> files;
};

/// Number of points of the uniform grid on [0, z_max] used for path.csv.
inline constexpr std::size_t kPathGridPoints = 201;

/// atoms.csv, path.csv and, with a likelihood in the config,
/// observations.csv. Likelihood draws use the root seed
/// derive_seed(seed, kLikelihoodStream) so they never share a stream with
/// the components.
inline constexpr std::uint64_t kLikelihoodStream = 0xFFFFFFFFull;
SampleRun run_sample(const Json& config, std::uint64_t seed,
                     std::optional<std::size_t> truncation,
                     std::optional<double> z_max);

/// Manifest of a finished run. Truncation and z_max are the effective
/// values, so replaying with them reproduces the run.
Json make_manifest(const Json& config, std::uint64_t seed, const SampleRun& run,
                   const std::string& started_at, const std::string& finished_at);

/// Reruns a manifest in memory. Each entry compares the regenerated file
/// with the recorded hash.
struct ReplayCheck {
  std::string file;
  std::string recorded_hash;
  std::string replayed_hash;
  bool matches = false;
};
std::vector<ReplayCheck> replay_manifest(const Json& manifest, SampleRun* run = nullptr);

/// One row of a verification report.
struct CheckRow {
  std::string suite;
  std::string check;
  double observed = 0.0;
  double oracle = 0.0;
  double gap = 0.0;
  /// NaN when the check is deterministic.
  double std_error = 0.0;
  double tolerance = 0.0;
  /// "pass", "fail" or "info".
  std::string status;
};

struct SuiteOptions {
  std::optional<Json> config;
  std::uint64_t seed = 1;
  std::optional<std::size_t> replicates;
  /// Sub-selection inside a suite ("pareto-series" for examples).
  std::string target;
};

std::vector<std::string> suite_names();
/// Throws ConfigError for an unknown suite or target.
std::vector<CheckRow> run_suite(const std::string& suite, const SuiteOptions& options);
std::string report_csv(const std::vector<CheckRow>& rows);

struct PosteriorResult {
  Json config;
  std::string diff;
};

/// The prior config with its path replaced by the tau-updated one. With no
/// observations the config is returned unchanged and the diff is empty.
PosteriorResult run_posterior(const Json& prior_config,
                              const std::vector<LocatedObservation>& observations,
                              ObservationMode mode);

/// Shortest decimal text that reads back to the same double.
std::string short_double(double v);

/// Entry point of the `crm` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crm::cli
