#pragma once

// Command-line front end: config loading and the price / hedge / simulate /
// deform / verify commands. Human-readable text goes to the given stream;
// machine-readable records are written under RunParams::out_dir.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbm/model.hpp"

namespace cbm::app {

enum ExitCode : int { kOk = 0, kValidationError = 1, kVerificationFailure = 2, kIoError = 3 };

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunParams {
  std::size_t samples = 100'000;
  std::uint64_t seed = 42;
  double beta = 1e-3;
  double delta = 1e-3;
  double tol = 1e-9;
  std::optional<double> target;
  std::string out_dir = "cbm-report";
  std::size_t threads = 1;
  std::string fault_inject;
  std::size_t sweep_points = 33;
  bool dump_terms = false;
  // hedge: explicit path (n jump vectors, user order) or a named path kind:
  // random | all-up | all-down | all-b
  std::vector<std::vector<double>> path;
  std::string path_kind = "random";
};

struct RunConfig {
  MarketModel model;
  BasketOption option;
  RunParams run;

  /// The effective configuration (file values plus CLI overrides).
  nlohmann::json to_json() const;
};

/// Parses {model:{m,n,R,S0,D,U}, option:{c,K}, run:{...}}. Errors carry the
/// line for syntax problems and the field path for invalid values
/// (e.g. "option.K required", "model.D[0]: D_1 < R violated").
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Re-runs model/option validation; used after CLI overrides.
void validate_config(const RunConfig& config);

int cmd_price(const RunConfig& config, std::ostream& out);
int cmd_hedge(const RunConfig& config, std::ostream& out);
int cmd_simulate(const RunConfig& config, std::ostream& out);
int cmd_deform(const RunConfig& config, std::ostream& out);
int cmd_verify(const RunConfig& config, std::ostream& out);

/// Fault names accepted by --fault-inject.
const std::vector<std::string>& known_faults();

/// Writes `content` to out_dir/name, creating the directory. Throws IoError.
void write_output(const RunParams& run, const std::string& name, const std::string& content);

}  // namespace cbm::app
