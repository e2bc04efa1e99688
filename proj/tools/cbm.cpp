// cbm: price, hedge, simulate, deform and verify basket calls in the
// continuous-binomial market model.

#include <iostream>

#include <CLI11.hpp>

#include "cbm/app.hpp"
#include "cbm/deformation.hpp"
#include "cbm/measures.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<double> tol;
  std::optional<double> target;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::string> fault;
  std::optional<std::string> path_kind;
  std::optional<std::size_t> sweep_points;
  bool dump_terms = false;
};

void apply(const Overrides& o, cbm::app::RunConfig& config) {
  auto& run = config.run;
  if (o.seed) run.seed = *o.seed;
  if (o.samples) run.samples = *o.samples;
  if (o.beta) run.beta = *o.beta;
  if (o.delta) run.delta = *o.delta;
  if (o.tol) run.tol = *o.tol;
  if (o.target) run.target = *o.target;
  if (o.out) run.out_dir = *o.out;
  if (o.threads) run.threads = *o.threads;
  if (o.fault) run.fault_inject = *o.fault;
  if (o.path_kind) {
    run.path_kind = *o.path_kind;
    run.path.clear();
  }
  if (o.sweep_points) run.sweep_points = *o.sweep_points;
  if (o.dump_terms) run.dump_terms = true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Price-interval endpoints, maximal hedges and measure checks for basket calls"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "Config file (JSON)")->required();
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--samples", o.samples, "Monte-Carlo sample count");
    cmd->add_option("--beta", o.beta, "Uniform background weight of smoothed measures");
    cmd->add_option("--delta", o.delta, "Box size of smoothed measures");
    cmd->add_option("--tol", o.tol, "Tolerance (hedge slack, deformation solve)");
    cmd->add_option("--target", o.target, "Target price for the deformation solve");
    cmd->add_option("--out", o.out, "Output directory for machine-readable reports");
    cmd->add_option("--threads", o.threads, "Worker threads");
    cmd->add_option("--fault-inject", o.fault, "Inject a named fault (verify negative control)");
  };

  auto* price = app.add_subcommand("price", "Endpoints of the price interval at time 0");
  add_common(price);
  price->add_flag("--dump-terms", o.dump_terms, "Write the count-vector terms to terms.csv");
  auto* hedge = app.add_subcommand("hedge", "Maximal hedging strategy along a path");
  add_common(hedge);
  hedge->add_option("--path-kind", o.path_kind, "random | all-up | all-down | all-b");
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo prices under risk-neutral measure families");
  add_common(simulate);
  auto* deform = app.add_subcommand("deform", "Jump-bound deformation sweep and target solve");
  add_common(deform);
  deform->add_option("--sweep-points", o.sweep_points, "Number of s values in the sweep");
  auto* verify = app.add_subcommand("verify", "Run the invariant suites");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cbm::app::kOk : cbm::app::kValidationError;
  }

  try {
    cbm::app::RunConfig config = cbm::app::load_config(o.config_path);
    apply(o, config);
    cbm::app::validate_config(config);
    if (price->parsed()) return cbm::app::cmd_price(config, std::cout);
    if (hedge->parsed()) return cbm::app::cmd_hedge(config, std::cout);
    if (simulate->parsed()) return cbm::app::cmd_simulate(config, std::cout);
    if (deform->parsed()) return cbm::app::cmd_deform(config, std::cout);
    return cbm::app::cmd_verify(config, std::cout);
  } catch (const cbm::app::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return cbm::app::kIoError;
  } catch (const cbm::app::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return cbm::app::kValidationError;
  } catch (const cbm::ModelError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return cbm::app::kValidationError;
  } catch (const cbm::MeasureInfeasible& e) {
    std::cerr << "measure construction failed: " << e.what() << '\n';
    return cbm::app::kValidationError;
  } catch (const cbm::DeformationError& e) {
    std::cerr << "deformation: " << e.what() << '\n';
    return cbm::app::kValidationError;
  }
}
