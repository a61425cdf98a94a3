#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qscope/config.hpp"
#include "qscope/errors.hpp"
#include "qscope/runner.hpp"

using namespace qscope;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("qscope_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("fig9 preset") {
  RunConfig c = resolve_config({}, {{"preset", "fig9"}});
  CHECK(c.subcommand == "sre");
  REQUIRE(c.protocol);
  CHECK(c.params.gamma * c.protocol->duration == doctest::Approx(1000.0));
  CHECK(c.params.cooperativity == 200.0);
  CHECK(1.0 / c.params.kappa_over_omega == doctest::Approx(10.0));
  CHECK(resolution_analytic(c.params.focus) * c.params.focus.lambda0() ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(c.protocol->z_end - c.protocol->z_start) == doctest::Approx(8.0));
  CHECK(c.protocol->repeats == 3);
  CHECK(c.initial.kind == InitialState::Kind::thermal);
  CHECK(c.initial.value == 1.0);
}

TEST_CASE("fig6 preset") {
  RunConfig c = resolve_config({}, {{"preset", "fig6"}});
  CHECK(c.subcommand == "movie");
  CHECK(c.gamma_list == std::vector<double>{1, 2, 4});
  CHECK(c.cooperativity_list.size() == 3);
  CHECK(std::isinf(c.cooperativity_list.back()));
  CHECK(c.initial.kind == InitialState::Kind::coherent);
  CHECK(c.initial.value == 2.0);
  CHECK(resolution_analytic(c.params.focus) * c.params.focus.lambda0() ==
        doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("empty config lists the required keys") {
  try {
    resolve_config({}, {});
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    std::string m = e.what();
    CHECK(m.find("subcommand") != std::string::npos);
    CHECK(m.find("epsilon") != std::string::npos);
  }
}

TEST_CASE("unknown keys and bad values are rejected with the key name") {
  CHECK_THROWS_WITH_AS(parse_config_text("gama = 3\n"), doctest::Contains("gama"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config({}, {{"preset", "fig3"}, {"ensemble", "0"}}),
                       doctest::Contains("ensemble"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config({}, {{"preset", "fig3"}, {"epsilon", "abc"}}),
                       doctest::Contains("epsilon"), ConfigError);
  CHECK_THROWS_WITH_AS(resolve_config({}, {{"preset", "fig6"}, {"dt", "0.02"}}),
                       doctest::Contains("dt"), ConfigError);
}

TEST_CASE("flags override file values which override presets") {
  auto file = parse_config_text("# comment\npreset = fig9\nseed = 5\ncooperativity = 100 # inline\n");
  RunConfig c = resolve_config(file, {{"seed", "7"}});
  CHECK(c.integrator.seed == 7);
  CHECK(c.params.cooperativity == 100.0);
  CHECK(c.params.gamma == 1.0);
  CHECK(c.values.at("cooperativity") == "100");
}

TEST_CASE("config hash follows the resolved text") {
  RunConfig a = resolve_config({}, {{"preset", "fig3"}});
  RunConfig b = resolve_config({}, {{"preset", "fig3"}});
  RunConfig c = resolve_config({}, {{"preset", "fig3"}, {"seed", "2"}});
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("initial state parsing") {
  CHECK(InitialState::parse("ground").str() == "fock:0");
  CHECK(InitialState::parse("fock:3").populations(5)[3] == doctest::Approx(1.0));
  CHECK_THROWS_AS(InitialState::parse("squeezed:1"), ConfigError);
  CHECK_THROWS_AS(InitialState::parse("fock:-1"), ConfigError);
}

TEST_CASE("focus run writes table, summary, resolved config and manifest") {
  fs::path dir = scratch("focus");
  RunConfig c = resolve_config({}, {{"subcommand", "focus"}, {"epsilon", "0.1"},
                                    {"beta", "0.2"}, {"out", dir.string()}});
  RunReport r = run(c);
  CHECK(fs::exists(dir / "focus_table.tsv"));
  CHECK(fs::exists(dir / "focus_summary.jsonl"));
  CHECK(slurp(dir / "config.resolved") == c.resolved_text());
  std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find(config_hash(c)) != std::string::npos);
  CHECK(manifest.find("\"status\": \"ok\"") != std::string::npos);
  CHECK(r.outputs.size() == 3);
}

TEST_CASE("reruns are byte-identical and thread-count independent") {
  std::map<std::string, std::string> flags{{"preset", "fig6"},   {"gamma", "2"},
                                           {"cooperativity", "10"}, {"ensemble", "6"},
                                           {"t_end", "1"},         {"motional_dim", "10"},
                                           {"trajectory_files", "2"}};
  std::vector<fs::path> dirs;
  for (const char* threads : {"1", "4", "auto"}) {
    fs::path d = scratch(std::string("det_") + threads);
    auto f = flags;
    f["threads"] = threads;
    f["out"] = d.string();
    run(resolve_config({}, f));
    dirs.push_back(d);
  }
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    std::string name = entry.path().filename().string();
    if (name == "manifest.json" || name == "config.resolved") continue;
    for (std::size_t k = 1; k < dirs.size(); ++k) CHECK(slurp(entry.path()) == slurp(dirs[k] / name));
  }
}

TEST_CASE("failed runs flag partial output in the manifest") {
  fs::path dir = scratch("fail");
  RunConfig c = resolve_config({}, {{"subcommand", "snr"}, {"epsilon", "0.1"}, {"beta", "0.2"},
                                    {"mode", "cascade"}, {"snr_model", "sre"},
                                    {"gamma_T", "10"}, {"out", dir.string()}});
  CHECK_THROWS_AS(run(c), ConfigError);
  std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("\"partial\": true") != std::string::npos);
}
