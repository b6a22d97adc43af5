#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "crm/config.hpp"
#include "crm/error.hpp"

using namespace crm;

namespace {

std::string pointer_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "(no error)";
}

std::filesystem::path scratch_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "crm_test_config";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

const Json kGamma = Json::parse(R"({
  "family": "gamma",
  "params": {"shape": 2.0, "rate": 3.0},
  "base": {"lebesgue": 1.0},
  "k": 1
})");

}  // namespace

TEST_CASE("family names") {
  for (const char* name :
       {"beta", "gamma", "pareto", "pareto_loglog", "lognormal", "poisson", "bernoulli"}) {
    CHECK(family_from_json(Json{{"family", name}})->name() == name);
  }
  CHECK(pointer_of([] { family_from_json(Json{{"family", "weibull"}}); }) == "/family");
  CHECK(pointer_of([] { family_from_json(Json{{"family", 3}}); }) == "/family");
  CHECK(pointer_of([] { family_from_json(Json::object()); }) == "/family");
  CHECK(pointer_of([] { family_from_json(Json{{"family", "pareto"}, {"u_m", -1.0}}); }) == "");
  CHECK(pointer_of([] { family_from_json(Json{{"family", "pareto"}, {"u_m", "x"}}); }) == "/u_m");
}

TEST_CASE("parameters by name or position") {
  const auto beta = make_beta();
  CHECK(params_from_json(Json::parse(R"({"alpha": 1, "beta": 2})"), *beta) == Params{1, 2});
  CHECK(params_from_json(Json::parse("[1, 2]"), *beta) == Params{1, 2});
  CHECK(pointer_of([&] { params_from_json(Json::parse(R"({"alpha": 1})"), *beta, "/params"); }) ==
        "/params/beta");
  CHECK(pointer_of([&] {
          params_from_json(Json::parse(R"({"alpha": 1, "beta": 2, "gamma": 3})"), *beta, "/p");
        }) == "/p/gamma");
  CHECK(pointer_of([&] { params_from_json(Json::parse("[1]"), *beta, "/p"); }) == "/p");
  CHECK(pointer_of([&] { params_from_json(Json::parse(R"([1, "two"])"), *beta, "/p"); }) ==
        "/p/1");
}

TEST_CASE("paths from params, pieces and atoms") {
  const auto gamma = make_gamma();
  const Json j = Json::parse(R"({
    "params": [2.0, 9.0],
    "path": [{"coord": 1, "pieces": [{"from": 0, "to": 1, "const": 3.0},
                                      {"from": 1, "affine": [2.0, 1.0]}]}],
    "atoms": [{"at": 0.5, "params": [7.0, 8.0]}]
  })");
  const ParameterPath path = path_from_json(j, *gamma);
  CHECK(path(0.25) == Params{2.0, 3.0});
  CHECK(path(2.0) == Params{2.0, 4.0});
  CHECK(path(0.5) == Params{7.0, 8.0});

  // Output of path_to_json reads back to the same path.
  CHECK(path_from_json(path_to_json(path), *gamma) == path);

  CHECK(pointer_of([&] {
          path_from_json(Json::parse(R"({"path": [{"coord": 2, "pieces": []}]})"), *gamma);
        }) == "/path/0/coord");
  CHECK(pointer_of([&] {
          path_from_json(Json::parse(R"({"params": [1, 1], "path": [{"coord": 0, "pieces":
              [{"from": 0, "const": 1, "affine": [1, 1]}]}]})"), *gamma);
        }) == "/path/0/pieces/0");
  CHECK(pointer_of([&] {
          path_from_json(Json::parse(R"({"params": [1, 1], "path": [{"coord": 0, "pieces":
              [{"from": 2, "to": 1, "const": 1}]}]})"), *gamma);
        }) == "/path/0");
  CHECK(pointer_of([&] {
          path_from_json(Json::parse(R"({"path": [{"coord": 0, "pieces": [{"const": 1}]}]})"),
                         *gamma);
        }) == "");
  CHECK(pointer_of([&] {
          path_from_json(Json::parse(R"({"params": [1, 1], "atoms": [{"at": 1}]})"), *gamma);
        }) == "/atoms/0/params");
}

TEST_CASE("base measures") {
  const BaseMeasure leb = base_from_json(Json::parse(R"({"lebesgue": 2.5})"));
  CHECK(leb.increment(0.0, 2.0) == doctest::Approx(5.0));

  const BaseMeasure mixed = base_from_json(Json::parse(R"({
    "density_pieces": [{"from": 0, "to": 1, "const": 1.0},
                       {"from": 1, "to": 2, "affine": [0.0, 1.0]},
                       {"from": 2, "to": null, "rational": [1.0, 0.0, 0.0, 1.0]}],
    "jumps": [[0.5, 2.0]]
  })"));
  CHECK(mixed.increment(0.0, 1.0) == doctest::Approx(3.0));
  CHECK(mixed.increment(1.0, 2.0) == doctest::Approx(1.5));
  CHECK(mixed.increment(2.0, 4.0) == doctest::Approx(std::log(2.0)));
  CHECK(base_from_json(Json::object()).is_null());

  CHECK(pointer_of([] { base_from_json(Json::parse(R"({"lebesgue": -1})"), "/base"); }) ==
        "/base");
  CHECK(pointer_of([] {
          base_from_json(Json::parse(R"({"density_pieces": [{"from": 0}]})"), "/base");
        }) == "/base/density_pieces/0");
  CHECK(pointer_of([] { base_from_json(Json::parse(R"({"jumps": [[1]]})"), "/base"); }) ==
        "/base/jumps/0");
  CHECK(pointer_of([] { base_from_json(Json::parse("[]"), "/base"); }) == "/base");
}

TEST_CASE("contexts") {
  const LevyContext ctx = context_from_json(kGamma);
  CHECK(ctx.family().name() == "gamma");
  CHECK(ctx.k() == 1);

  Json bad_k = kGamma;
  bad_k["k"] = 2;
  CHECK(pointer_of([&] { context_from_json(bad_k); }) == "/k");
  bad_k["k"] = -1;
  CHECK(pointer_of([&] { context_from_json(bad_k); }) == "/k");

  Json no_base = kGamma;
  no_base.erase("base");
  CHECK(pointer_of([&] { context_from_json(no_base, "/components/2"); }) ==
        "/components/2/base");

  // A rate of -1 leaves the natural space: the condition check fails.
  Json outside = kGamma;
  outside["params"]["rate"] = -1.0;
  CHECK(pointer_of([&] { context_from_json(outside, "/c"); }) == "/c");
}

TEST_CASE("sampling setups") {
  Json cfg{{"z_max", 2.0}, {"components", Json::array({kGamma, kGamma, kGamma})}};
  auto setup = sample_setup_from_json(cfg, std::nullopt, std::nullopt);
  CHECK(setup.components.size() == 3);
  CHECK(setup.z_max == 2.0);
  CHECK_FALSE(setup.tail_mass);
  CHECK_FALSE(setup.likelihood);

  setup = sample_setup_from_json(cfg, 2, 0.5);
  CHECK(setup.components.size() == 2);
  CHECK(setup.z_max == 0.5);
  CHECK(pointer_of([&] { sample_setup_from_json(cfg, 4, std::nullopt); }) == "/components");
  CHECK(pointer_of([&] { sample_setup_from_json(cfg, 0, std::nullopt); }) == "");
  CHECK(pointer_of([&] { sample_setup_from_json(cfg, std::nullopt, -1.0); }) == "");

  cfg["components"][1]["family"] = "nope";
  CHECK(pointer_of([&] { sample_setup_from_json(cfg, std::nullopt, std::nullopt); }) ==
        "/components/1/family");

  Json series = Json::parse(R"({"z_max": 1, "tail_mass": 0.25,
    "series": {"kind": "pareto", "alpha": [1, 1], "u_m": 1, "terms": 4}})");
  setup = sample_setup_from_json(series, std::nullopt, std::nullopt);
  CHECK(setup.components.size() == 4);
  CHECK(setup.tail_mass == 0.25);
  setup = sample_setup_from_json(series, 7, std::nullopt);
  CHECK(setup.components.size() == 7);
  series.erase("tail_mass");
  CHECK(std::isinf(*sample_setup_from_json(series, std::nullopt, std::nullopt).tail_mass));
  series["series"]["kind"] = "beta";
  CHECK(pointer_of([&] { sample_setup_from_json(series, std::nullopt, std::nullopt); }) ==
        "/series/kind");

  Json both = Json::parse(R"({"z_max": 1, "components": [], "series": {}})");
  CHECK(pointer_of([&] { sample_setup_from_json(both, std::nullopt, std::nullopt); }) == "");
  Json no_zmax = Json::parse(R"({"components": []})");
  CHECK(pointer_of([&] { sample_setup_from_json(no_zmax, std::nullopt, std::nullopt); }) ==
        "/z_max");

  Json lik{{"z_max", 1.0}, {"components", Json::array({kGamma})},
           {"likelihood", {{"family", "lognormal"}, {"link", "reciprocal"}}}};
  setup = sample_setup_from_json(lik, std::nullopt, std::nullopt);
  REQUIRE(setup.likelihood);
  CHECK(setup.link->map(4.0) == Params{0.25});
  lik["likelihood"]["link"] = "log";
  CHECK(pointer_of([&] { sample_setup_from_json(lik, std::nullopt, std::nullopt); }) ==
        "/likelihood/link");
}

TEST_CASE("pairs and modes") {
  CHECK(pair_from_json(Json::parse(R"({"pair": {"name": "gamma-poisson"}})")).name() ==
        "gamma-poisson");
  CHECK(pair_from_json(Json::parse(R"({"pair": {"name": "geng-pareto", "hyper": 2}})"))
            .hyper() == 2.0);
  CHECK(pointer_of([] { pair_from_json(Json::parse(R"({"pair": {"name": "x"}})")); }) ==
        "/pair/name");
  CHECK(pointer_of([] {
          pair_from_json(Json::parse(R"({"pair": {"name": "geng-pareto", "hyper": 0}})"));
        }) == "/pair/hyper");
  CHECK(pointer_of([] { pair_from_json(Json::object()); }) == "/pair");

  CHECK(mode_from_string("uniform") == ObservationMode::Uniform);
  CHECK(mode_from_string("per-atom") == ObservationMode::PerAtom);
  CHECK_THROWS_AS(mode_from_string("atom"), ConfigError);
}

TEST_CASE("observation files") {
  const auto ok = scratch_file("obs.csv", "location,value\r\n0.5,1\n\n2,3.25\n");
  const auto obs = read_observations_csv(ok.string());
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].location == 0.5);
  CHECK(obs[1].value == 3.25);

  CHECK(read_observations_csv(scratch_file("empty.csv", "location,value\n").string()).empty());
  CHECK_THROWS_AS(read_observations_csv(scratch_file("bad.csv", "location,value\n1\n").string()),
                  ConfigError);
  CHECK_THROWS_AS(
      read_observations_csv(scratch_file("junk.csv", "location,value\n1,2x\n").string()),
      ConfigError);
  CHECK_THROWS_AS(read_observations_csv("/nonexistent/obs.csv"), ConfigError);

  CHECK_THROWS_AS(read_json_file(scratch_file("bad.json", "{").string()), ConfigError);
  CHECK(read_json_file(scratch_file("ok.json", "{\"a\": 1}").string())["a"] == 1);
}
