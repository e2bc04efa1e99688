#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cbm/deformation.hpp"
#include "cbm/hedging.hpp"
#include "cbm/measures.hpp"
#include "cbm/pricing.hpp"

namespace py = pybind11;

namespace {

using Path = std::vector<std::vector<double>>;

// A state is given by the jump vectors realised so far; empty means time 0.
cbm::MarketState state_of(const cbm::MarketModel& model, const Path& path) {
  return cbm::state_after(model, path);
}

py::dict interval_dict(const cbm::PriceInterval& interval) {
  py::dict out;
  out["gamma_min"] = interval.gamma_min;
  out["gamma_max"] = interval.gamma_max;
  out["k"] = interval.k;
  return out;
}

cbm::OneStepMeasure measure_of(const std::string& family, const cbm::OrderedModel& model, double beta, double delta,
                               std::uint64_t seed) {
  const std::vector<double> b = cbm::compute_b(model.base());
  if (family == "extremal") return cbm::make_extremal_measure(model, beta, delta);
  if (family == "jensen") return cbm::make_jensen_measure(b, delta, beta);
  if (family == "mixture") {
    cbm::Rng rng = cbm::Rng::stream(seed, ~std::uint64_t{0});
    return cbm::make_mixture_measure(b, beta, 3, rng);
  }
  throw py::value_error("family must be 'extremal', 'jensen' or 'mixture'");
}

}  // namespace

PYBIND11_MODULE(_cbm, m) {
  m.doc() = "Continuous-binomial market: price intervals, maximal hedges, measures and deformation";

  py::register_exception<cbm::ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<cbm::MeasureInfeasible>(m, "MeasureInfeasible", PyExc_ValueError);
  py::register_exception<cbm::DeformationError>(m, "DeformationError", PyExc_RuntimeError);

  py::class_<cbm::MarketModel>(m, "MarketModel")
      .def(py::init([](double R, std::vector<double> S0, std::vector<double> D, std::vector<double> U,
                       std::size_t n) {
             cbm::MarketModel model{D.size(), n, R, std::move(S0), std::move(D), std::move(U)};
             cbm::validate_model(model);
             return model;
           }),
           py::arg("R"), py::arg("S0"), py::arg("D"), py::arg("U"), py::arg("n"))
      .def_readonly("m", &cbm::MarketModel::m)
      .def_readonly("n", &cbm::MarketModel::n)
      .def_readonly("R", &cbm::MarketModel::R)
      .def_readonly("S0", &cbm::MarketModel::S0)
      .def_readonly("D", &cbm::MarketModel::D)
      .def_readonly("U", &cbm::MarketModel::U)
      .def("__repr__", [](const cbm::MarketModel& model) {
        return "MarketModel(m=" + std::to_string(model.m) + ", n=" + std::to_string(model.n) + ")";
      });

  py::class_<cbm::BasketOption>(m, "BasketOption")
      .def(py::init([](std::vector<double> c, double K) { return cbm::BasketOption{std::move(c), K}; }),
           py::arg("c"), py::arg("K"))
      .def_readonly("c", &cbm::BasketOption::c)
      .def_readonly("K", &cbm::BasketOption::K);

  m.def("compute_b", &cbm::compute_b, py::arg("model"));
  m.def(
      "vertex_weights", [](const std::vector<double>& b) { return cbm::vertex_weights(b); }, py::arg("b"));
  m.def(
      "order_assets",
      [](const cbm::MarketModel& model) {
        const cbm::OrderedModel ordered(model);
        py::dict out;
        out["perm"] = ordered.perm();
        out["b"] = ordered.b();
        out["q"] = ordered.q();
        return out;
      },
      py::arg("model"), "Sorted order (1-based user indices), sorted b and vertex weights q.");
  m.def(
      "state_after",
      [](const cbm::MarketModel& model, const Path& path) { return state_of(model, path).prices; },
      py::arg("model"), py::arg("path"));

  m.def(
      "gamma_min",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path) {
        cbm::validate_option(option, model.m);
        return cbm::gamma_min(cbm::OrderedModel(model), option, state_of(model, path));
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{});
  m.def(
      "gamma_max",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path, std::size_t threads) {
        cbm::validate_option(option, model.m);
        const cbm::OrderedModel ordered(model);
        const cbm::MarketState state = state_of(model, path);
        py::gil_scoped_release release;
        return cbm::gamma_max(ordered, option, state, threads);
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{}, py::arg("threads") = 1);
  m.def(
      "gamma_max_naive",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path) {
        cbm::validate_option(option, model.m);
        return cbm::gamma_max_naive(cbm::OrderedModel(model), option, state_of(model, path));
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{});
  m.def(
      "price_interval",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path) {
        cbm::validate_option(option, model.m);
        return interval_dict(cbm::price_interval(cbm::OrderedModel(model), option, state_of(model, path)));
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{});
  m.def(
      "y_values",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path) {
        cbm::validate_option(option, model.m);
        return cbm::y_values(cbm::OrderedModel(model), option, state_of(model, path));
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{});

  m.def(
      "hedge_weights",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path) {
        cbm::validate_option(option, model.m);
        const auto portfolio = cbm::hedge_weights(cbm::OrderedModel(model), option, state_of(model, path));
        py::dict out;
        out["alpha"] = portfolio.alpha;
        out["value"] = portfolio.value;
        out["k"] = portfolio.k;
        return out;
      },
      py::arg("model"), py::arg("option"), py::arg("path") = Path{});
  m.def(
      "backtest_path",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const Path& path, double tol) {
        cbm::validate_option(option, model.m);
        const auto report = cbm::backtest_path(cbm::OrderedModel(model), option, path, tol);
        py::list steps;
        for (const auto& step : report.steps) {
          py::dict row;
          row["k"] = step.k;
          row["v_alpha"] = step.v_alpha;
          row["gamma_max"] = step.gamma_max;
          row["realized_slack"] = step.realized_slack;
          row["alpha"] = step.alpha;
          steps.append(row);
        }
        py::dict out;
        out["steps"] = steps;
        out["max_value_gap"] = report.max_value_gap;
        out["min_slack"] = report.min_slack;
        out["passed"] = report.passed;
        return out;
      },
      py::arg("model"), py::arg("option"), py::arg("path"), py::arg("tol") = cbm::kSlackTolerance);

  m.def(
      "phi", [](const cbm::MarketModel& model, const cbm::BasketOption& option, double s) {
        cbm::validate_option(option, model.m);
        return cbm::phi(model, option, s);
      },
      py::arg("model"), py::arg("option"), py::arg("s"));
  m.def(
      "solve_deformation",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, double target, double tol) {
        cbm::validate_option(option, model.m);
        cbm::DeformationSolveOptions options;
        options.tolerance = tol;
        const auto solution = cbm::solve_deformation(model, option, target, options);
        const auto params = cbm::deformed_params(model, solution.s);
        py::dict out;
        out["s"] = solution.s;
        out["phi"] = solution.phi;
        out["d"] = params.d;
        out["u"] = params.u;
        return out;
      },
      py::arg("model"), py::arg("option"), py::arg("target"), py::arg("tol") = 1e-9);

  m.def(
      "mc_price",
      [](const cbm::MarketModel& model, const cbm::BasketOption& option, const std::string& family,
         std::size_t samples, std::uint64_t seed, double beta, double delta, std::size_t threads) {
        cbm::validate_option(option, model.m);
        const cbm::OrderedModel ordered(model);
        const cbm::OneStepMeasure step = measure_of(family, ordered, beta, delta, seed);
        cbm::McConfig config;
        config.samples = samples;
        config.seed = seed;
        config.threads = threads;
        cbm::McEstimate estimate;
        {
          py::gil_scoped_release release;
          estimate = cbm::mc_price(ordered, option, cbm::PathMeasure::homogeneous(step, model.n), config);
        }
        py::dict out;
        out["estimate"] = estimate.estimate;
        out["std_error"] = estimate.std_error;
        out["samples"] = estimate.samples;
        out["seed"] = estimate.seed;
        out["measure_kind"] = cbm::to_string(step.kind);
        return out;
      },
      py::arg("model"), py::arg("option"), py::arg("family") = "mixture", py::arg("samples") = 100000,
      py::arg("seed") = 42, py::arg("beta") = cbm::kDefaultBeta, py::arg("delta") = 1e-3, py::arg("threads") = 1);
}
