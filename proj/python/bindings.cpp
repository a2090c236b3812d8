#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "localsgd_lab/io.hpp"
#include "localsgd_lab/oracle.hpp"
#include "localsgd_lab/simulator.hpp"
#include "localsgd_lab/verify.hpp"

namespace py = pybind11;
using namespace localsgd_lab;

namespace {

using Rows = std::vector<std::vector<double>>;

std::vector<ModelVector> to_models(const Rows& rows) {
  std::vector<ModelVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

std::vector<double> values(const ModelVector& v) { return {v.values().begin(), v.values().end()}; }

RunOptions options_for(std::size_t threads) {
  RunOptions o;
  o.threads = threads;
  return o;
}

py::dict trace_columns(const MetricTrace& trace) {
  std::vector<std::uint64_t> t;
  std::vector<double> epoch, loss, gns, drift, vvar, resid;
  std::vector<std::optional<double>> dist;
  for (const auto& r : trace) {
    t.push_back(r.t);
    epoch.push_back(r.epoch);
    loss.push_back(r.loss);
    gns.push_back(r.grad_norm_sq);
    drift.push_back(r.drift);
    vvar.push_back(r.v_variance);
    resid.push_back(r.delta_residual);
    dist.push_back(r.dist_to_opt);
  }
  py::dict d;
  d["t"] = t;
  d["epoch"] = epoch;
  d["loss"] = loss;
  d["grad_norm_sq"] = gns;
  d["drift"] = drift;
  d["v_variance"] = vvar;
  d["delta_residual"] = resid;
  d["dist_to_opt"] = dist;
  return d;
}

py::dict result_dict(const ExperimentConfig& cfg, const RunResult& r) {
  const auto problem = make_problem(cfg.problem, cfg.run.workers, cfg.run.partition);
  py::dict d = py::module_::import("json").attr("loads")(summary_to_json(r, *problem));
  d["x_hat"] = values(r.final_state.x_hat);
  d["trace"] = trace_columns(r.trace);
  d["trace_csv"] = trace_to_csv(r.trace);
  d["config_json"] = config_to_json(cfg);
  return d;
}

py::dict run_json(const std::string& config_json, std::size_t threads) {
  const ExperimentConfig cfg = config_from_json(config_json);
  RunResult r;
  {
    py::gil_scoped_release release;
    r = run_experiment(cfg, options_for(threads));
  }
  return result_dict(cfg, r);
}

py::list sweep_json(const std::string& config_json, const std::string& axis, const std::vector<std::string>& vals,
                    std::size_t threads) {
  const ExperimentConfig base = config_from_json(config_json);
  std::vector<SweepPoint> points;
  {
    py::gil_scoped_release release;
    points = sweep(base, parse_sweep_axis(axis), vals, options_for(threads));
  }
  py::list out;
  for (const auto& p : points) {
    py::dict d = result_dict(p.config, p.result);
    d["value"] = p.value;
    out.append(d);
  }
  return out;
}

py::dict hyperparams_json(const std::string& config_json) {
  const ExperimentConfig cfg = config_from_json(config_json);
  const std::size_t problem_workers = cfg.problem.kind == "quad" ? 2 : cfg.run.workers;
  const auto problem = make_problem(cfg.problem, problem_workers, cfg.run.partition);
  const HyperparamReport r = check_hyperparams(cfg.run, *problem);
  py::list conditions;
  for (const auto& c : r.conditions) {
    py::dict cd;
    cd["name"] = c.name;
    cd["lhs"] = c.lhs;
    cd["rhs"] = c.rhs;
    cd["pass"] = c.pass;
    conditions.append(cd);
  }
  py::dict d;
  d["L"] = r.smoothness.value;
  d["L_estimated"] = r.smoothness.estimated;
  d["sigma"] = r.sigma;
  d["conditions"] = conditions;
  d["suggested_gamma"] = r.suggested_gamma;
  d["suggested_k"] = r.suggested_k;
  d["local_sgd_k_bound"] = r.local_sgd_k_bound;
  d["all_pass"] = r.all_pass();
  d["text"] = r.render();
  return d;
}

py::dict oracle_json(const std::string& config_json) {
  const ExperimentConfig cfg = config_from_json(config_json);
  const auto problem = make_problem(cfg.problem, cfg.run.workers, cfg.run.partition);
  const OracleTrajectory tr = oracle_run(cfg.run, *problem);
  std::vector<Rows> x;
  Rows x_hat;
  for (std::size_t t = 0; t < tr.x.size(); ++t) {
    Rows step;
    for (const auto& m : tr.x[t]) step.push_back(values(m));
    x.push_back(std::move(step));
    x_hat.push_back(values(tr.x_hat[t]));
  }
  py::dict d;
  d["x"] = x;
  d["x_hat"] = x_hat;
  return d;
}

py::list checks_list(const std::vector<IdentityCheck>& checks) {
  py::list out;
  for (const auto& c : checks) {
    py::dict d;
    d["name"] = c.name;
    d["worst"] = c.worst;
    d["tolerance"] = c.tolerance;
    d["pass"] = c.pass;
    d["detail"] = c.detail;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deterministic simulator of VRL-SGD, Local SGD, EASGD and S-SGD";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.attr("TRACE_HEADER") = std::string(kTraceHeader);

  m.def(
      "vec_mean", [](const Rows& vs) { return values(vec_mean(to_models(vs))); }, py::arg("vs"),
      "Element-wise mean, ascending order.");
  m.def(
      "vec_axpy",
      [](double a, const std::vector<double>& x, const std::vector<double>& y) {
        return values(vec_axpy(a, ModelVector(x), ModelVector(y)));
      },
      py::arg("a"), py::arg("x"), py::arg("y"), "a * x + y.");

  m.def("run", &run_json, py::arg("config_json"), py::arg("threads") = 1,
        "Run one experiment from a JSON config; returns summary, trace columns and trace_csv.");
  m.def("sweep", &sweep_json, py::arg("config_json"), py::arg("axis"), py::arg("values"), py::arg("threads") = 1);
  m.def("check_hyperparams", &hyperparams_json, py::arg("config_json"));
  m.def("oracle_run", &oracle_json, py::arg("config_json"));
  m.def("localsgd_fixed_point", &localsgd_fixed_point, py::arg("b_param"), py::arg("k"), py::arg("gamma"));
  m.def("localsgd_limit_v_variance", &localsgd_limit_v_variance, py::arg("b_param"), py::arg("k"), py::arg("gamma"));
  m.def(
      "verify",
      [](bool quick) {
        py::dict d;
        std::vector<IdentityCheck> ids;
        std::vector<IdentityCheck> oracle;
        {
          py::gil_scoped_release release;
          ids = run_identity_checks(quick);
          oracle = run_oracle_checks(quick);
        }
        d["identities"] = checks_list(ids);
        d["oracle"] = checks_list(oracle);
        return d;
      },
      py::arg("quick") = true);
}
