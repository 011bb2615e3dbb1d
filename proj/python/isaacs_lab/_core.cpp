#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "isaacs/config.hpp"
#include "isaacs/dpp.hpp"
#include "isaacs/error.hpp"
#include "isaacs/experiment.hpp"
#include "isaacs/games.hpp"
#include "isaacs/pde.hpp"
#include "isaacs/value_field.hpp"

namespace py = pybind11;
using namespace isaacs;

namespace {

ValueTag parse_tag(const std::string& s) {
    if (s == "lower") return ValueTag::lower;
    if (s == "upper") return ValueTag::upper;
    throw std::invalid_argument("tag must be 'lower' or 'upper', got '" + s + "'");
}

StateGrid make_grid(int dim, double x_min, double x_max, int nodes, const std::string& boundary) {
    BoundaryPolicy p;
    if (boundary == "clamp")
        p = BoundaryPolicy::clamp;
    else if (boundary == "extrapolate")
        p = BoundaryPolicy::extrapolate;
    else
        throw std::invalid_argument("boundary must be 'clamp' or 'extrapolate', got '" + boundary + "'");
    return StateGrid::uniform(dim, x_min, x_max, nodes, p);
}

/// Slices as a (steps + 1, nodes) array.
Mat field_matrix(const ValueField& f) {
    Mat m(f.steps() + 1, f.sgrid.size());
    for (int k = 0; k <= f.steps(); ++k) m.row(k) = f.slice(k).transpose();
    return m;
}

Mat grid_points(const StateGrid& g) {
    Mat m(g.size(), g.dim());
    for (int j = 0; j < g.size(); ++j) m.row(j) = g.point(j).transpose();
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lower and upper values of stochastic differential games with BSDE payoffs";

    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<MonotonicityError>(m, "MonotonicityError", numerical);
    py::register_exception<BudgetError>(m, "BudgetError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init([](double t0, double t1, int steps) { return TimeGrid{t0, t1, steps}; }), py::arg("t0"),
             py::arg("t1"), py::arg("steps"))
        .def_readonly("t0", &TimeGrid::t0)
        .def_readonly("t1", &TimeGrid::t1)
        .def_readonly("steps", &TimeGrid::steps)
        .def_property_readonly("dt", &TimeGrid::dt)
        .def("time", &TimeGrid::time, py::arg("k"));

    py::class_<StateGrid>(m, "StateGrid")
        .def(py::init(&make_grid), py::arg("dim"), py::arg("x_min"), py::arg("x_max"), py::arg("nodes"),
             py::arg("boundary") = "clamp")
        .def_property_readonly("dim", &StateGrid::dim)
        .def_property_readonly("size", &StateGrid::size)
        .def("step", &StateGrid::step, py::arg("axis"))
        .def("points", &grid_points)
        .def("nearest", &StateGrid::nearest, py::arg("x"))
        .def("window_nodes", &StateGrid::window_nodes, py::arg("fraction"))
        .def("interpolate", &StateGrid::interpolate, py::arg("values"), py::arg("x"))
        .def("refine", &refine);

    py::class_<ControlGrid>(m, "ControlGrid")
        .def(py::init([](std::vector<double> u, std::vector<double> v) {
                 ControlGrid c{std::move(u), std::move(v)};
                 c.validate();
                 return c;
             }),
             py::arg("u_points"), py::arg("v_points"))
        .def_readonly("u_points", &ControlGrid::u_points)
        .def_readonly("v_points", &ControlGrid::v_points);

    py::class_<GameInstance>(m, "Game")
        .def_readonly("family", &GameInstance::family)
        .def_readonly("params", &GameInstance::params)
        .def_readonly("controls", &GameInstance::controls)
        .def_property_readonly("dim_state", [](const GameInstance& g) { return g.spec.dim_state; })
        .def_property_readonly("dim_noise", [](const GameInstance& g) { return g.spec.dim_noise; })
        .def_property_readonly("horizon", [](const GameInstance& g) { return g.spec.horizon; })
        .def_property_readonly("lipschitz_const", [](const GameInstance& g) { return g.spec.lipschitz_const; })
        .def("terminal", [](const GameInstance& g, const Vec& x) { return g.spec.eval_terminal(x); }, py::arg("x"))
        .def("drift", [](const GameInstance& g, double t, const Vec& x, double u,
                         double v) { return g.spec.eval_drift(t, x, u, v); },
             py::arg("t"), py::arg("x"), py::arg("u"), py::arg("v"))
        .def("diffusion", [](const GameInstance& g, double t, const Vec& x, double u,
                             double v) { return g.spec.eval_diffusion(t, x, u, v); },
             py::arg("t"), py::arg("x"), py::arg("u"), py::arg("v"))
        .def("__repr__", [](const GameInstance& g) { return "<isaacs_lab.Game " + g.family + ">"; });

    m.def("list_games", [] {
        py::list out;
        for (const auto& info : list_games()) {
            py::dict params;
            for (const auto& p : info.params) params[py::str(p.name)] = p.default_value;
            py::dict d;
            d["name"] = info.name;
            d["summary"] = info.summary;
            d["params"] = params;
            out.append(d);
        }
        return out;
    });
    m.def("make_game", &make_game, py::arg("family"), py::arg("params") = std::map<std::string, double>{});

    py::class_<ValueField>(m, "ValueField")
        .def_property_readonly("tag", [](const ValueField& f) { return std::string(to_string(f.tag)); })
        .def_readonly("tgrid", &ValueField::tgrid)
        .def_readonly("sgrid", &ValueField::sgrid)
        .def_property_readonly("steps", &ValueField::steps)
        .def_property_readonly("values", &field_matrix)
        .def("slice", &ValueField::slice, py::arg("k"))
        .def("at", &ValueField::at, py::arg("k"), py::arg("x"))
        .def("root", &ValueField::root, py::arg("x"))
        .def("to_csv", [](const ValueField& f) {
            std::ostringstream os;
            write_field_csv(f, os);
            return os.str();
        })
        .def("to_bytes", [](const ValueField& f) {
            std::ostringstream os;
            write_field_binary(f, os);
            return py::bytes(os.str());
        })
        .def_static("from_bytes", [](const py::bytes& b) {
            std::istringstream is(std::string(b), std::ios::binary);
            return read_field_binary(is);
        }, py::arg("data"));

    m.def(
        "value_iteration",
        [](const GameInstance& g, const StateGrid& s, const TimeGrid& t, const std::string& tag,
           std::optional<ControlGrid> controls) {
            py::gil_scoped_release release;
            return value_iteration(g.spec, controls ? *controls : g.controls, s, t, parse_tag(tag));
        },
        py::arg("game"), py::arg("sgrid"), py::arg("tgrid"), py::arg("tag") = "lower",
        py::arg("controls") = py::none());

    m.def(
        "solve_isaacs",
        [](const GameInstance& g, const StateGrid& s, const TimeGrid& t, const std::string& tag,
           std::optional<ControlGrid> controls) {
            py::gil_scoped_release release;
            return solve_isaacs(g.spec, controls ? *controls : g.controls, s, t, parse_tag(tag));
        },
        py::arg("game"), py::arg("sgrid"), py::arg("tgrid"), py::arg("tag") = "lower",
        py::arg("controls") = py::none());

    m.def(
        "stable_steps",
        [](const GameInstance& g, const StateGrid& s, double t0, double t1) {
            return stable_steps(g.spec, g.controls, s, t0, t1);
        },
        py::arg("game"), py::arg("sgrid"), py::arg("t0"), py::arg("t1"));

    m.def("field_discrepancy", &field_discrepancy, py::arg("a"), py::arg("b"), py::arg("window"));

    py::class_<AgreementReport>(m, "AgreementReport")
        .def_readonly("base", &AgreementReport::base)
        .def_readonly("refined", &AgreementReport::refined)
        .def_readonly("ratio", &AgreementReport::ratio)
        .def_readonly("exact", &AgreementReport::exact)
        .def_readonly("passed", &AgreementReport::passed);

    m.def(
        "cross_method_agreement",
        [](const GameInstance& g, const StateGrid& s, const TimeGrid& t, const std::string& tag, double tolerance,
           double window) {
            AgreementOptions o;
            o.tolerance = tolerance;
            o.window = window;
            py::gil_scoped_release release;
            return cross_method_agreement(g.spec, g.controls, s, t, parse_tag(tag), o);
        },
        py::arg("game"), py::arg("sgrid"), py::arg("tgrid"), py::arg("tag") = "lower",
        py::arg("tolerance") = 5e-2, py::arg("window") = 0.25);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_readonly("path", &ExperimentConfig::path)
        .def_readonly("family", &ExperimentConfig::family)
        .def_readonly("params", &ExperimentConfig::params)
        .def_readonly("x_min", &ExperimentConfig::x_min)
        .def_readonly("x_max", &ExperimentConfig::x_max)
        .def_readonly("nodes", &ExperimentConfig::nodes)
        .def_readonly("steps", &ExperimentConfig::steps)
        .def_readonly("seed", &ExperimentConfig::seed)
        .def_readonly("out_dir", &ExperimentConfig::out_dir);

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"), py::arg("path") = "<string>");

    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("id", &CheckResult::id)
        .def_readonly("passed", &CheckResult::passed)
        .def_readonly("metric", &CheckResult::metric)
        .def_readonly("tolerance", &CheckResult::tolerance)
        .def_readonly("note", &CheckResult::note)
        .def("__repr__", [](const CheckResult& c) {
            return "<CheckResult " + c.id + (c.passed ? " PASS>" : " FAIL>");
        });

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("out_dir", &RunSummary::out_dir)
        .def_readonly("checks", &RunSummary::checks)
        .def("all_passed", &RunSummary::all_passed);

    m.def(
        "run_experiment",
        [](const ExperimentConfig& cfg, const std::string& subcommand, std::optional<int> threads,
           std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
            RunOverrides o{threads, seed, std::move(out_dir)};
            std::ostringstream log;
            RunSummary s;
            {
                py::gil_scoped_release release;
                s = run_experiment(cfg, subcommand, o, log);
            }
            return py::make_tuple(s, log.str());
        },
        py::arg("config"), py::arg("subcommand") = "all", py::arg("threads") = py::none(),
        py::arg("seed") = py::none(), py::arg("out_dir") = py::none());

    m.attr("subcommands") = experiment_subcommands();
}
