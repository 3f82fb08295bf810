#include "shortpanel/baselines.hpp"
#include "shortpanel/errors.hpp"
#include "shortpanel/factor_att.hpp"
#include "shortpanel/linalg.hpp"
#include "shortpanel/monte_carlo.hpp"
#include "shortpanel/panel.hpp"
#include "shortpanel/report.hpp"
#include "shortpanel/tuning.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace shortpanel;

namespace {

EstimatorConfig make_config(const std::string& variant, Eigen::Index r, const py::object& delta,
                            std::optional<Eigen::MatrixXd> weighting, std::optional<double> rank_tol) {
    EstimatorConfig c;
    if (variant == "pinv")
        c.variant = Variant::pinv;
    else if (variant == "ridge")
        c.variant = Variant::ridge;
    else
        throw ValidationError("variant must be 'pinv' or 'ridge'");
    c.r_weights = r;
    if (!delta.is_none()) {
        if (py::isinstance<py::str>(delta)) {
            const auto s = delta.cast<std::string>();
            if (s == "cv")
                c.delta_rule = CrossValidation{};
            else if (s == "gcv")
                c.delta_rule = GeneralizedCrossValidation{};
            else
                throw ValidationError("delta must be a positive number, 'cv' or 'gcv'");
        } else {
            c.delta_rule = FixedDelta{delta.cast<double>()};
        }
    }
    c.weighting = std::move(weighting);
    c.rank_tol = rank_tol;
    validate_config(c);
    return c;
}

PredictorSpec predictor_spec(const std::string& kind) {
    PredictorSpec s;
    if (kind == "I")
        s.kind = PredictorKind::all_lags;
    else if (kind == "II")
        s.kind = PredictorKind::half_lags_and_covariates;
    else
        throw ValidationError("predictors must be 'I' or 'II'");
    return s;
}

}  // namespace

PYBIND11_MODULE(_shortpanel, m) {
    m.doc() = "Factor-model ATT estimation for short panels";

    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation_error, e.what());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        }
    });

    py::class_<PanelData>(m, "Panel")
        .def(py::init([](Eigen::MatrixXd y, std::vector<bool> treated, Eigen::MatrixXd z, int t0) {
                 return PanelData(std::move(y), std::move(treated), std::move(z), t0);
             }),
             py::arg("outcomes"), py::arg("treated"), py::arg("covariates"), py::arg("t0"))
        .def_property_readonly("outcomes", &PanelData::outcomes)
        .def_property_readonly("covariates", &PanelData::covariates)
        .def_property_readonly("t0", &PanelData::t0)
        .def_property_readonly("t1", &PanelData::t1)
        .def_property_readonly("n_units", &PanelData::n_units)
        .def_property_readonly("n_controls", &PanelData::n_controls)
        .def_property_readonly("unit_labels", &PanelData::unit_labels);

    m.def("load_panel_csv", py::overload_cast<const std::filesystem::path&>(&load_panel_csv), py::arg("path"));

    py::class_<EstimateResult>(m, "EstimateResult")
        .def_readonly("periods", &EstimateResult::periods)
        .def_readonly("observed", &EstimateResult::observed)
        .def_readonly("counterfactual", &EstimateResult::counterfactual)
        .def_readonly("att", &EstimateResult::att)
        .def_readonly("f_star", &EstimateResult::f_star)
        .def_readonly("delta", &EstimateResult::delta_used)
        .def_property_readonly("singular_values",
                               [](const EstimateResult& r) { return r.diagnostics.singular_values; })
        .def_property_readonly("warnings", [](const EstimateResult& r) { return r.diagnostics.warnings; });

    m.def(
        "estimate_att",
        [](const PanelData& panel, const std::string& variant, Eigen::Index r, const py::object& delta,
           std::optional<Eigen::MatrixXd> weighting, std::optional<double> rank_tol) {
            const EstimatorConfig c = make_config(variant, r, delta, std::move(weighting), rank_tol);
            py::gil_scoped_release release;
            return estimate_att(panel, c);
        },
        py::arg("panel"), py::arg("variant") = "pinv", py::arg("R") = 2, py::arg("delta") = py::none(),
        py::arg("weighting") = py::none(), py::arg("rank_tol") = py::none());

    m.def(
        "estimate_json",
        [](const PanelData& panel, const std::string& variant, Eigen::Index r, const py::object& delta) {
            const EstimatorConfig c = make_config(variant, r, delta, std::nullopt, std::nullopt);
            return estimate_to_json(estimate_att(panel, c), c).dump();
        },
        py::arg("panel"), py::arg("variant") = "pinv", py::arg("R") = 2, py::arg("delta") = py::none(),
        "Estimate report as a JSON string (same schema as the command-line tool).");

    m.def("did_att", &did_att, py::arg("panel"));

    py::class_<ScWeights>(m, "ScWeights")
        .def_readonly("weights", &ScWeights::weights)
        .def_readonly("objective", &ScWeights::objective)
        .def_readonly("iterations", &ScWeights::iterations)
        .def_readonly("converged", &ScWeights::converged);
    m.def(
        "sc_weights", [](const PanelData& p, const std::string& kind) { return sc_weights(p, predictor_spec(kind)); },
        py::arg("panel"), py::arg("predictors") = "I");
    m.def(
        "sc_att", [](const PanelData& p, const std::string& kind) { return sc_att(p, predictor_spec(kind)).att; },
        py::arg("panel"), py::arg("predictors") = "I");

    m.def("svd_pinv", [](const Eigen::MatrixXd& b) { return linalg::svd_pinv(b); }, py::arg("b"));
    m.def("tikhonov_inverse", [](const Eigen::MatrixXd& b, double delta) { return linalg::tikhonov_inverse(b, delta); },
          py::arg("b"), py::arg("delta"));

    py::class_<Summary>(m, "Summary")
        .def_readonly("bias", &Summary::bias)
        .def_readonly("sd", &Summary::sd)
        .def_readonly("rmse", &Summary::rmse);
    m.def("summarize", &summarize, py::arg("estimates"), py::arg("truth"));

    py::class_<MethodResult>(m, "MethodResult")
        .def_readonly("label", &MethodResult::label)
        .def_readonly("summary", &MethodResult::summary)
        .def_readonly("estimates", &MethodResult::estimates);
    py::class_<McResult>(m, "StudyResult")
        .def_readonly("methods", &McResult::methods)
        .def_readonly("dropped", &McResult::dropped)
        .def_readonly("unreliable", &McResult::unreliable)
        .def_property_readonly("factor_singular_values", [](const McResult& r) { return r.factors.singular_values; })
        .def("to_json", [](const McResult& r) { return study_to_json(r).dump(); });

    m.def(
        "run_study",
        [](int t0, int n, int reps, std::uint64_t seed, std::vector<std::string> methods, int jobs) {
            McConfig c;
            c.t0 = t0;
            c.n = n;
            c.reps = reps;
            c.base_seed = seed;
            c.methods = std::move(methods);
            c.jobs = jobs;
            py::gil_scoped_release release;
            return run_study(c);
        },
        py::arg("t0") = 5, py::arg("n") = 100, py::arg("reps") = 500, py::arg("seed") = 1,
        py::arg("methods") = std::vector<std::string>{}, py::arg("jobs") = 0);
    m.attr("METHODS") = builtin_method_labels();
}
