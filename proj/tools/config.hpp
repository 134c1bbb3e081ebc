#pragma once

#include <freewaylab/freewaylab.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace fwlcli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  fwl_pcb_params model{};
  fwl_numerics numerics{};
  fwl_spectral_options spectral{};
  int n_fast = 2000;
  double L_fast = 40;
  int rho_samples = 400;
  int check_points = 100;

  int root = 0;
  double s_min = 1e-3;
  double s_max = 0;  // 0: just below u1_max
  int d = 2;
  double R = 1.0;
  double ell = 0.2;
  std::vector<double> eps{0.02, 0.01, 0.005};
  std::vector<double> ladder{1e-4, 2e-4, 4e-4, 8e-4, 16e-4};
  double dmu = 4e-4;

  long seed = 0;
  std::string output_dir = "out";
  std::string text;  // raw file contents, hashed into the manifest
};

// strict INI: sections [model], [numerics], [task]; seed and output_dir at top level
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace fwlcli
