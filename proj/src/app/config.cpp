#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cbm/app.hpp"

namespace cbm::app {

using nlohmann::json;

namespace {

const json& require_field(const json& parent, const std::string& parent_path, const std::string& key) {
  if (!parent.is_object() || !parent.contains(key)) {
    throw ConfigError(fmt::format("{}.{} required", parent_path, key));
  }
  return parent.at(key);
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ConfigError(fmt::format("{}: expected a number", path));
  return value.get<double>();
}

std::size_t as_count(const json& value, const std::string& path) {
  if (!value.is_number_integer() || value.get<long long>() < 0) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer", path));
  }
  return value.get<std::size_t>();
}

std::vector<double> as_vector(const json& value, const std::string& path) {
  if (!value.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", path));
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_number(value[i], fmt::format("{}[{}]", path, i)));
  return out;
}

void read_run(const json& run, RunParams& params) {
  if (!run.is_object()) throw ConfigError("run: expected an object");
  for (const auto& [key, value] : run.items()) {
    const std::string path = "run." + key;
    if (key == "samples") {
      params.samples = as_count(value, path);
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError(path + ": expected an unsigned integer");
      params.seed = value.get<std::uint64_t>();
    } else if (key == "beta") {
      params.beta = as_number(value, path);
    } else if (key == "delta") {
      params.delta = as_number(value, path);
    } else if (key == "tol") {
      params.tol = as_number(value, path);
    } else if (key == "target") {
      if (!value.is_null()) params.target = as_number(value, path);
    } else if (key == "out") {
      if (!value.is_string()) throw ConfigError(path + ": expected a string");
      params.out_dir = value.get<std::string>();
    } else if (key == "threads") {
      params.threads = as_count(value, path);
    } else if (key == "fault_inject") {
      if (!value.is_string()) throw ConfigError(path + ": expected a string");
      params.fault_inject = value.get<std::string>();
    } else if (key == "sweep_points") {
      params.sweep_points = as_count(value, path);
    } else if (key == "dump_terms") {
      if (!value.is_boolean()) throw ConfigError(path + ": expected true or false");
      params.dump_terms = value.get<bool>();
    } else if (key == "path") {
      if (!value.is_array()) throw ConfigError(path + ": expected an array of jump vectors");
      params.path.clear();
      for (std::size_t k = 0; k < value.size(); ++k) params.path.push_back(as_vector(value[k], fmt::format("{}[{}]", path, k)));
    } else if (key == "path_kind") {
      if (!value.is_string()) throw ConfigError(path + ": expected a string");
      params.path_kind = value.get<std::string>();
    } else {
      throw ConfigError(fmt::format("{}: unknown field", path));
    }
  }
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

void validate_config(const RunConfig& config) {
  try {
    validate_model(config.model);
  } catch (const ModelError& e) {
    throw ConfigError(e.field().empty() ? fmt::format("model: {}", e.what())
                                        : fmt::format("model.{}: {}", e.field(), e.what()));
  }
  try {
    validate_option(config.option, config.model.m);
  } catch (const ModelError& e) {
    throw ConfigError(e.field().empty() ? fmt::format("option: {}", e.what())
                                        : fmt::format("option.{}: {}", e.field(), e.what()));
  }
  const RunParams& run = config.run;
  if (run.samples < 2) throw ConfigError("run.samples: must be at least 2");
  if (!(run.beta > 0.0 && run.beta < 1.0)) throw ConfigError("run.beta: must lie in (0,1)");
  if (!(run.delta > 0.0 && run.delta < 0.5)) throw ConfigError("run.delta: must lie in (0,0.5)");
  if (!(run.tol > 0.0)) throw ConfigError("run.tol: must be positive");
  if (run.threads == 0) throw ConfigError("run.threads: must be at least 1");
  if (run.sweep_points < 2) throw ConfigError("run.sweep_points: must be at least 2");
  if (!run.fault_inject.empty()) {
    const auto& faults = known_faults();
    if (std::find(faults.begin(), faults.end(), run.fault_inject) == faults.end()) {
      throw ConfigError(fmt::format("run.fault_inject: unknown fault '{}'", run.fault_inject));
    }
  }
  static const std::vector<std::string> kinds{"random", "all-up", "all-down", "all-b"};
  if (std::find(kinds.begin(), kinds.end(), run.path_kind) == kinds.end()) {
    throw ConfigError(fmt::format("run.path_kind: unknown path kind '{}'", run.path_kind));
  }
  if (!run.path.empty()) {
    if (run.path.size() != config.model.n) {
      throw ConfigError(fmt::format("run.path: expected n = {} jump vectors", config.model.n));
    }
    for (std::size_t k = 0; k < run.path.size(); ++k) {
      if (run.path[k].size() != config.model.m) {
        throw ConfigError(fmt::format("run.path[{}]: expected m = {} coordinates", k, config.model.m));
      }
      for (std::size_t i = 0; i < run.path[k].size(); ++i) {
        if (!(run.path[k][i] >= 0.0 && run.path[k][i] <= 1.0)) {
          throw ConfigError(fmt::format("run.path[{}][{}]: jump coordinate outside [0,1]", k, i));
        }
      }
    }
  }
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}:{}: parse error: {}", source, line_of(text, e.byte), e.what()));
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");

  RunConfig config;
  const json& model = require_field(root, "config", "model");
  const json& option = require_field(root, "config", "option");
  for (const auto& [key, value] : root.items()) {
    if (key != "model" && key != "option" && key != "run") throw ConfigError(fmt::format("{}: unknown field", key));
  }

  config.model.m = as_count(require_field(model, "model", "m"), "model.m");
  config.model.n = as_count(require_field(model, "model", "n"), "model.n");
  config.model.R = as_number(require_field(model, "model", "R"), "model.R");
  config.model.S0 = as_vector(require_field(model, "model", "S0"), "model.S0");
  config.model.D = as_vector(require_field(model, "model", "D"), "model.D");
  config.model.U = as_vector(require_field(model, "model", "U"), "model.U");

  config.option.c = as_vector(require_field(option, "option", "c"), "option.c");
  config.option.K = as_number(require_field(option, "option", "K"), "option.K");

  if (root.contains("run")) read_run(root.at("run"), config.run);
  validate_config(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

json RunConfig::to_json() const {
  json j;
  j["model"] = {{"m", model.m}, {"n", model.n}, {"R", model.R}, {"S0", model.S0}, {"D", model.D}, {"U", model.U}};
  j["option"] = {{"c", option.c}, {"K", option.K}};
  json r = {{"samples", run.samples},
            {"seed", run.seed},
            {"beta", run.beta},
            {"delta", run.delta},
            {"tol", run.tol},
            {"out", run.out_dir},
            {"threads", run.threads},
            {"sweep_points", run.sweep_points},
            {"dump_terms", run.dump_terms},
            {"path_kind", run.path_kind}};
  r["target"] = run.target ? json(*run.target) : json(nullptr);
  if (!run.fault_inject.empty()) r["fault_inject"] = run.fault_inject;
  if (!run.path.empty()) r["path"] = run.path;
  j["run"] = r;
  return j;
}

void write_output(const RunParams& run, const std::string& name, const std::string& content) {
  std::error_code ec;
  const std::filesystem::path dir(run.out_dir);
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", run.out_dir, ec.message()));
  const auto file = dir / name;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", file.string()));
  out << content;
  if (!out) throw IoError(fmt::format("write to '{}' failed", file.string()));
}

}  // namespace cbm::app
