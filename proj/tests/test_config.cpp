#include <doctest.h>

#include <string>

#include "config.hpp"

using fwlcli::ConfigError;
using fwlcli::parse_config;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  auto c = parse_config("");
  CHECK(c.model.delta == 0.05);
  CHECK(c.model.c_w == 16.0);
  CHECK(c.spectral.k_points == 200);
  CHECK(c.eps.size() == 3);
  CHECK(c.ladder.size() == 5);
  CHECK(c.output_dir == "out");
}

TEST_CASE("sections set their keys") {
  auto c = parse_config(
      "seed = 7\noutput_dir = results\n"
      "[model]\ndelta = 0.1\nmu = 0.2\n"
      "[numerics]\nk_points = 64\ntol = 1e-9\ncore_h = 2\n"
      "[task]\nroot = 1\neps = 0.04, 0.02\nladder = 1e-4,2e-4,3e-4,4e-4,5e-4\n");
  CHECK(c.seed == 7);
  CHECK(c.output_dir == "results");
  CHECK(c.model.delta == 0.1);
  CHECK(c.model.mu == 0.2);
  CHECK(c.spectral.k_points == 64);
  CHECK(c.numerics.tol == 1e-9);
  CHECK(c.numerics.core_h == 2.0);
  CHECK(c.root == 1);
  REQUIRE(c.eps.size() == 2);
  CHECK(c.eps[1] == 0.02);
  CHECK(c.ladder.size() == 5);
}

TEST_CASE("empty known sections are allowed") {
  CHECK(error_of("[model]\n[numerics]\n[task]\n").empty());
}

TEST_CASE("unknown keys are named") {
  CHECK(error_of("[model]\ndleta = 0.1\n") == "unknown config key 'model.dleta'");
  CHECK(error_of("sed = 1\n") == "unknown config key 'sed'");
  CHECK(error_of("model = 3\n") == "unknown config key 'model'");
  CHECK(error_of("[modle]\ndelta = 0.1\n").find("unknown config section 'modle'") != std::string::npos);
}

TEST_CASE("malformed values are rejected") {
  CHECK(error_of("[model]\ndelta = 0.1x\n").find("not a number") != std::string::npos);
  CHECK(error_of("[numerics]\nk_points = 64.5\n").find("not an integer") != std::string::npos);
  CHECK(error_of("[task]\neps = 0.1,,0.2\n").find("not a number") != std::string::npos);
  CHECK(error_of("[model\ndelta = 0.1\n").find("config syntax") != std::string::npos);
}

TEST_CASE("grids need at least 64 points") {
  CHECK(error_of("[numerics]\nk_points = 63\n").find("k_points") != std::string::npos);
  CHECK(error_of("[numerics]\nn_fast = 10\n").find("n_fast") != std::string::npos);
  CHECK(error_of("[numerics]\nrho_samples = 32\n").find("rho_samples") != std::string::npos);
  CHECK(error_of("[numerics]\ncheck_points = 2\n").find("check_points") != std::string::npos);
  CHECK(error_of("[numerics]\nk_points = 64\n").empty());
}

TEST_CASE("tolerances and geometry must be positive") {
  CHECK(error_of("[numerics]\ntol = 0\n").find("tol") != std::string::npos);
  CHECK(error_of("[numerics]\nkernel_tol = -1e-6\n").find("kernel_tol") != std::string::npos);
  CHECK(error_of("[task]\nd = 4\n").find("task.d") != std::string::npos);
  CHECK(error_of("[task]\nladder = 1e-4, 2e-4\n").find("five") != std::string::npos);
  CHECK(error_of("[task]\ndmu = 0\n").find("dmu") != std::string::npos);
}

TEST_CASE("raw text is kept for hashing") {
  const std::string t = "seed = 3\n";
  CHECK(parse_config(t).text == t);
}
