#include <doctest.h>
#include <freewaylab/freewaylab.h>

#include <cmath>
#include <json.hpp>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

// takes ownership of a returned string
std::string take(char* s) {
  std::string r = s ? s : "";
  fwl_free(s);
  return r;
}

struct Model {
  fwl_model* h = nullptr;
  explicit Model(const fwl_pcb_params& p) { REQUIRE(fwl_model_create_pcb(&p, &h) == FWL_OK); }
  Model() {
    fwl_pcb_params p;
    fwl_pcb_default_params(&p);
    REQUIRE(fwl_model_create_pcb(&p, &h) == FWL_OK);
  }
  ~Model() { fwl_model_free(h); }
};

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(fwl_status_name(FWL_OK)) == "ok");
  CHECK(std::string(fwl_status_name(FWL_ERR_EXISTENCE)) != std::string(fwl_status_name(FWL_ERR_DEGENERATE)));
  CHECK(std::string(fwl_version()).size() > 0);
}

TEST_CASE("defaults") {
  fwl_pcb_params p;
  fwl_pcb_default_params(&p);
  CHECK(p.c_w == 16.0);
  CHECK(p.delta == 0.05);
  fwl_numerics n;
  fwl_default_numerics(&n);
  CHECK(n.core_h == 1.5);
  CHECK(n.degree == 10);
  fwl_spectral_options s;
  fwl_default_spectral_options(&s);
  CHECK(s.k_max == 10.0);
  CHECK(s.k_points == 200);
  fwl_pcb_default_params(nullptr);
}

TEST_CASE("invalid parameters and null handles") {
  fwl_pcb_params p;
  fwl_pcb_default_params(&p);
  p.m = 0.7;
  fwl_model* m = reinterpret_cast<fwl_model*>(0x1);
  CHECK(fwl_model_create_pcb(&p, &m) == FWL_ERR_ARGUMENT);
  CHECK(m == nullptr);
  CHECK(std::string(fwl_last_error()).find("m must lie") != std::string::npos);

  CHECK(fwl_model_create_pcb(nullptr, &m) == FWL_ERR_ARGUMENT);
  char* out = nullptr;
  CHECK(fwl_model_check(nullptr, 10, &out) == FWL_ERR_ARGUMENT);
  CHECK(out == nullptr);
  CHECK(fwl_orbit_info(nullptr, &out) == FWL_ERR_ARGUMENT);
  CHECK(fwl_orbit_nodes(nullptr) == 0);
  CHECK(fwl_orbit_dim(nullptr) == 0);
  fwl_model_free(nullptr);
  fwl_orbit_free(nullptr);
  fwl_free(nullptr);
}

TEST_CASE("success clears the last error") {
  fwl_pcb_params p;
  fwl_pcb_default_params(&p);
  p.delta = 2;
  fwl_model* m = nullptr;
  REQUIRE(fwl_model_create_pcb(&p, &m) != FWL_OK);
  CHECK(std::string(fwl_last_error()).size() > 0);
  Model ok;
  CHECK(std::string(fwl_last_error()).empty());
}

TEST_CASE("canonical JSON sorts keys and keeps full precision") {
  char* out = nullptr;
  REQUIRE(fwl_json_canonical("{\"b\": 0.1, \"a\": [1, 2.5], \"c\": {\"z\": 1, \"y\": null}}", &out) == FWL_OK);
  const std::string s = take(out);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("\"y\"") < s.find("\"z\""));
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.back() == '\n');
  // idempotent
  REQUIRE(fwl_json_canonical(s.c_str(), &out) == FWL_OK);
  CHECK(take(out) == s);
  CHECK(fwl_json_canonical("{not json", &out) == FWL_ERR_ARGUMENT);
}

TEST_CASE("model check reports a hyperbolic rest state") {
  Model m;
  char* out = nullptr;
  REQUIRE(fwl_model_check(m.h, 100, &out) == FWL_OK);
  auto j = json::parse(take(out));
  CHECK(j["hyperbolic"].get<bool>());
  CHECK(j["delta_p_check"]["max_abs_error"].get<double>() <= 1e-8);
  CHECK(j["delta_p_check"]["points"].get<int>() == 100);
  CHECK(fwl_model_check(m.h, 1, &out) == FWL_ERR_ARGUMENT);
}

TEST_CASE("existence scan and fast spectrum through the C interface") {
  Model m;
  char* out = nullptr;
  REQUIRE(fwl_rho_scan(m.h, 1e-3, 0.5, 200, &out) == FWL_OK);
  auto j = json::parse(take(out));
  REQUIRE(j["roots"].size() == 2);
  CHECK(j["roots"][0]["s"].get<double>() == doctest::Approx(0.0741956).epsilon(1e-6));
  CHECK(j["s"].size() == 200);
  CHECK(fwl_rho_scan(m.h, 0.5, 0.1, 200, &out) == FWL_ERR_ARGUMENT);

  REQUIRE(fwl_fast_sl_spectrum(m.h, 0.1, 2000, 40, &out) == FWL_OK);
  auto f = json::parse(take(out));
  CHECK(f["eigenvalues"][2].get<double>() == doctest::Approx(1.25).epsilon(1e-3));
  CHECK(f["parity"][1].get<int>() == -1);
}

TEST_CASE("no admissible root is an existence failure naming the interval") {
  fwl_pcb_params p;
  fwl_pcb_default_params(&p);
  p.t0 = 2.0;
  Model m(p);
  fwl_orbit* o = nullptr;
  CHECK(fwl_connect_freeway(m.h, 0, nullptr, &o) == FWL_ERR_EXISTENCE);
  CHECK(o == nullptr);
  CHECK(std::string(fwl_last_error()).find("no admissible root of rho in [") != std::string::npos);
}

TEST_CASE("freeway orbit round trip") {
  Model m;
  fwl_orbit* o = nullptr;
  CHECK(fwl_connect_freeway(m.h, 5, nullptr, &o) == FWL_ERR_ARGUMENT);
  REQUIRE(fwl_connect_freeway(m.h, 0, nullptr, &o) == FWL_OK);
  const int N = fwl_orbit_nodes(o), n = fwl_orbit_dim(o);
  CHECK(n == 2);
  CHECK(N > 100);
  std::vector<double> z(N), u(N * n), v(N * n);
  REQUIRE(fwl_orbit_copy(o, z.data(), u.data(), v.data()) == FWL_OK);
  CHECK(z.front() == doctest::Approx(-z.back()));
  for (double x : v) CHECK(x == 0.0);
  char* out = nullptr;
  REQUIRE(fwl_orbit_info(o, &out) == FWL_OK);
  auto info = json::parse(take(out));
  CHECK(info["residual"].get<double>() <= 1e-10);
  CHECK(info["F1"].get<double>() <= 1e-14);
  CHECK_FALSE(info["tollroad"].get<bool>());

  const double eps[2] = {0.02, 0.01};
  REQUIRE(fwl_energy_dress(o, 2, 1.0, 0.2, eps, 2, &out) == FWL_OK);
  auto e = json::parse(take(out));
  CHECK(e["rows"].size() == 2);
  CHECK(fwl_energy_dress(o, 5, 1.0, 0.2, eps, 2, &out) == FWL_ERR_ARGUMENT);
  CHECK(fwl_energy_dress(o, 2, 1.0, 0.2, nullptr, 2, &out) == FWL_ERR_ARGUMENT);
  fwl_orbit_free(o);
}

TEST_CASE("toll-road offset must be positive") {
  Model m;
  fwl_orbit* o = nullptr;
  CHECK(fwl_connect_tollroad(m.h, -1e-4, &o) == FWL_ERR_ARGUMENT);
  CHECK(fwl_connect_tollroad(m.h, 0.0, &o) == FWL_ERR_ARGUMENT);
}

TEST_CASE("reports are deterministic") {
  Model m;
  char *a = nullptr, *b = nullptr;
  REQUIRE(fwl_rho_scan(m.h, 1e-3, 0.5, 100, &a) == FWL_OK);
  REQUIRE(fwl_rho_scan(m.h, 1e-3, 0.5, 100, &b) == FWL_OK);
  CHECK(take(a) == take(b));
}
