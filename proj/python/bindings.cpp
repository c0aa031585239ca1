#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "fairreg/estimators.hpp"
#include "fairreg/evaluation.hpp"
#include "fairreg/fairness_metrics.hpp"
#include "fairreg/qp_core.hpp"
#include "fairreg/synthgen.hpp"

namespace py = pybind11;
using namespace fairreg;

namespace {

Mask to_mask(const std::vector<int>& flags) {
  Mask m(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] != 0 && flags[i] != 1) fail(ErrorKind::schema, "mask entries must be 0 or 1");
    m[i] = static_cast<std::uint8_t>(flags[i]);
  }
  return m;
}

py::object measure(const Measure& m) { return m.defined() ? py::object(py::float_(*m)) : py::object(py::none()); }

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["R2"] = measure(r.r2);
  d["PR_g"] = measure(r.pred_ratio_g);
  d["PR_c"] = measure(r.pred_ratio_c);
  d["NC_g"] = measure(r.net_comp_g);
  d["NC_c"] = measure(r.net_comp_c);
  d["MRD"] = measure(r.mean_resid_diff);
  d["FairCov"] = measure(r.fair_cov);
  d["FairCovScaled"] = measure(r.fair_cov_scaled);
  d["n_g"] = r.n_g;
  d["n_c"] = r.n_c;
  return d;
}

py::dict kkt_dict(const KktSolution& s) {
  py::dict d;
  d["theta"] = s.theta;
  d["multiplier"] = s.multiplier;
  d["residual_norm"] = s.residual_norm;
  d["constraint_active"] = s.constraint_active;
  d["rank"] = s.rank;
  d["sse"] = s.sse;
  d["diagnostics"] = s.diagnostics;
  return d;
}

Dataset make_dataset(const Vector& y, const Matrix& x, std::vector<std::string> names,
                     const std::map<std::string, std::vector<int>>& groups) {
  std::vector<Group> gs;
  for (const auto& [name, flags] : groups) gs.push_back({name, to_mask(flags)});
  return Dataset(y, x, std::move(names), std::move(gs));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fair regression estimators, metrics and generators";
  m.attr("__version__") = FAIRREG_VERSION;

  static py::exception<Error> error_type(m, "FairregError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), msg.c_str());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("y"), py::arg("x"), py::arg("feature_names"),
           py::arg("groups") = std::map<std::string, std::vector<int>>{})
      .def_property_readonly("y", &Dataset::y)
      .def_property_readonly("x", &Dataset::x)
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("ids", &Dataset::ids)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def("group", [](const Dataset& ds, const std::string& label) {
        const Group& g = ds.group(label);
        return std::vector<int>(g.mask.begin(), g.mask.end());
      })
      .def("group_names", [](const Dataset& ds) {
        std::vector<std::string> names;
        for (const auto& g : ds.groups()) names.push_back(g.name);
        return names;
      })
      .def("to_csv", [](const Dataset& ds) { return to_csv(ds); });

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& outcome, const std::vector<std::string>& groups,
         const std::vector<std::string>& features, bool add_intercept) {
        CsvLoadOptions opts;
        opts.outcome_col = outcome;
        opts.group_cols = groups;
        opts.feature_cols = features;
        opts.add_intercept = add_intercept;
        return load_csv(path, opts);
      },
      py::arg("path"), py::arg("outcome"), py::arg("groups"), py::arg("features") = std::vector<std::string>{},
      py::arg("add_intercept") = true);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("theta", &FitResult::theta)
      .def_readonly("feature_names", &FitResult::feature_names)
      .def_readonly("constraint_active", &FitResult::constraint_active)
      .def_readonly("multiplier", &FitResult::multiplier)
      .def_readonly("kkt_residual", &FitResult::kkt_residual)
      .def_readonly("objective_value", &FitResult::objective_value)
      .def_readonly("penalty_value", &FitResult::penalty_value)
      .def_readonly("rank", &FitResult::rank)
      .def_readonly("diagnostics", &FitResult::diagnostics)
      .def_property_readonly("label", [](const FitResult& r) { return r.spec.label(); })
      .def_property_readonly("spec", [](const FitResult& r) { return r.spec.to_text(); })
      .def("predict", &FitResult::predict);

  m.def(
      "fit", [](const Dataset& ds, const std::string& spec, const std::string& group) {
        return fit(ds, FitSpec::parse(spec, group));
      },
      py::arg("dataset"), py::arg("spec"), py::arg("group") = "",
      "Fit one estimator; spec is e.g. 'netcomp_penalized:lambda=1000'.");

  m.def("solve_ls", [](const Matrix& x, const Vector& y) { return kkt_dict(solve_ls(x, y)); });
  m.def("solve_ls_eq", [](const Matrix& x, const Vector& y, const Vector& a, double b) {
    return kkt_dict(solve_ls_eq(x, y, {a, b, ConstraintSense::equality}));
  });
  m.def("solve_ls_ineq", [](const Matrix& x, const Vector& y, const Vector& a, double b) {
    return kkt_dict(solve_ls_ineq(x, y, {a, b, ConstraintSense::le}));
  });
  m.def("solve_ls_rank1_penalty", [](const Matrix& x, const Vector& y, const Vector& d, double r0, double lambda) {
    return kkt_dict(solve_ls_rank1_penalty(x, y, d, r0, lambda));
  });
  m.def("solve_ls_linear_penalty", [](const Matrix& x, const Vector& y, const Vector& a, double lambda) {
    return kkt_dict(solve_ls_linear_penalty(x, y, a, lambda));
  });

  m.def(
      "metrics_report",
      [](const std::vector<double>& yhat, const std::vector<double>& y, const std::vector<int>& mask,
         std::optional<double> cstar) { return report_dict(metrics_report(yhat, y, to_mask(mask), cstar)); },
      py::arg("yhat"), py::arg("y"), py::arg("mask"), py::arg("cstar") = std::nullopt);
  m.def("net_compensation", [](const std::vector<double>& yhat, const std::vector<double>& y,
                               const std::vector<int>& mask) { return net_compensation(yhat, y, to_mask(mask)); });
  m.def("predictive_ratio", [](const std::vector<double>& yhat, const std::vector<double>& y,
                               const std::vector<int>& mask) { return measure(predictive_ratio(yhat, y, to_mask(mask))); });
  m.def("r_squared", [](const std::vector<double>& yhat, const std::vector<double>& y) {
    return measure(r_squared(yhat, y));
  });
  m.def("group_residual_difference", [](const std::vector<double>& yhat, const std::vector<double>& y,
                                        const std::vector<int>& mask) {
    return group_residual_difference(yhat, y, to_mask(mask));
  });

  m.def(
      "make_folds", [](Index n, int k, std::uint64_t seed) { return make_folds(n, k, seed).assignment; },
      py::arg("n"), py::arg("k") = 5, py::arg("seed") = 0);
  m.def(
      "cross_validate",
      [](const Dataset& ds, const std::string& spec, const std::string& group, int k, std::uint64_t seed) {
        return cross_validate(ds, FitSpec::parse(spec, group), make_folds(ds.n(), k, seed)).pooled_yhat;
      },
      py::arg("dataset"), py::arg("spec"), py::arg("group") = "", py::arg("k") = 5, py::arg("seed") = 0);

  m.def(
      "generate_population",
      [](Index size, std::uint64_t seed) {
        const SimPopulation pop = generate_population(size, seed);
        py::dict d;
        for (std::size_t k = 0; k < 9; ++k) d[py::str("X" + std::to_string(k + 1))] = pop.x[k];
        d["A1"] = std::vector<int>(pop.a1.begin(), pop.a1.end());
        d["A2"] = std::vector<int>(pop.a2.begin(), pop.a2.end());
        d["Y1"] = pop.y1;
        d["Y2"] = pop.y2;
        return d;
      },
      py::arg("size") = kDefaultPopulationSize, py::arg("seed") = 1);
  m.def(
      "scenario_design",
      [](Index size, std::uint64_t seed, int scenario) {
        return scenario_design(generate_population(size, seed), ScenarioSpec::get(scenario));
      },
      py::arg("size"), py::arg("seed"), py::arg("scenario"));
  m.def(
      "generate_analysis_data",
      [](Index n, std::uint64_t seed) {
        AnalysisSynthConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        AnalysisData data = generate_analysis_data(cfg);
        py::dict s;
        s["zero_spend_share"] = data.summary.zero_spend_share;
        s["group_prevalence"] = data.summary.group_prevalence;
        s["mean_y"] = data.summary.mean_y;
        s["median_y"] = data.summary.median_y;
        s["mean_y_group"] = data.summary.mean_y_group;
        s["mean_y_complement"] = data.summary.mean_y_complement;
        return py::make_tuple(std::move(data.dataset), s);
      },
      py::arg("n") = 100'000, py::arg("seed") = 1);
  m.def("truncated_normal", py::overload_cast<double, double, double, double, double>(&truncated_normal),
        py::arg("mean"), py::arg("sd"), py::arg("lo"), py::arg("hi"), py::arg("u"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"fairreg"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        const int code = cli::run(full, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a CLI subcommand; returns (exit_code, stdout, stderr).");
}
