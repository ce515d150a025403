#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "catsketch/config.hpp"
#include "catsketch/data.hpp"
#include "catsketch/eval.hpp"
#include "catsketch/gaussian.hpp"
#include "catsketch/learner.hpp"
#include "catsketch/models.hpp"
#include "catsketch/pipeline.hpp"
#include "catsketch/sketch.hpp"

namespace py = pybind11;
using namespace catsketch;

namespace {

// T x D array with NaN marking a missing entry.
Stream stream_from_dense(const Mat& y) {
    Stream s;
    s.dimension = static_cast<int>(y.cols());
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        PartialDatum d{static_cast<long>(t) + 1, {}};
        for (Eigen::Index i = 0; i < y.cols(); ++i) {
            if (!std::isnan(y(t, i))) d.entries.push_back({static_cast<int>(i), y(t, i)});
        }
        s.data.push_back(std::move(d));
    }
    return s;
}

Mat dense_from_stream(const Stream& s) {
    Mat y = Mat::Constant(static_cast<Eigen::Index>(s.size()), s.dimension, std::nan(""));
    for (std::size_t t = 0; t < s.size(); ++t) {
        for (const Entry& e : s.data[t].entries) y(static_cast<Eigen::Index>(t), e.row) = e.value;
    }
    return y;
}

PartialDatum datum_from_vector(const Vec& y) {
    PartialDatum d{0, {}};
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isnan(y[i])) d.entries.push_back({static_cast<int>(i), y[i]});
    }
    return d;
}

Subspace subspace_from(const Mat& u) {
    Subspace U(static_cast<int>(u.rows()), static_cast<int>(u.cols()));
    U.matrix() = u;
    return U;
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict trace_dict(const RunTrace& trace) {
    const auto column = [&](auto member) {
        std::vector<double> v;
        v.reserve(trace.records.size());
        for (const TraceRecord& r : trace.records) v.push_back(static_cast<double>(r.*member));
        return v;
    };
    py::dict d;
    d["t"] = column(&TraceRecord::t);
    d["pass"] = column(&TraceRecord::pass);
    d["datum"] = column(&TraceRecord::datum);
    d["cost"] = column(&TraceRecord::cost);
    d["grad_norm_inst"] = column(&TraceRecord::grad_norm_inst);
    d["grad_norm_p3"] = column(&TraceRecord::grad_norm_p3);
    d["delta_u"] = column(&TraceRecord::delta_u);
    d["eta"] = column(&TraceRecord::eta);
    d["inner_iters"] = column(&TraceRecord::inner_iters);
    return d;
}

LearnerConfig learner_config(int dim, double lambda, double mu, const std::string& schedule, int passes,
                             std::uint64_t seed, bool adapt_threshold, double gamma, int grad_trace_every) {
    LearnerConfig c;
    c.dim = dim;
    c.lambda = lambda;
    c.inner.lambda = lambda;
    if (schedule == "constant") {
        c.mu = StepSchedule::constant(mu);
    } else if (schedule == "inverse") {
        c.mu = StepSchedule::inverse_time(mu);
    } else {
        throw std::invalid_argument("schedule must be 'constant' or 'inverse'");
    }
    c.passes = passes;
    c.init_seed = seed;
    c.adapt_threshold = adapt_threshold;
    c.gamma = StepSchedule::constant(gamma);
    c.grad_trace_every = grad_trace_every;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Online sketching of incomplete categorical data streams";

    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("log_tail", &gaussian::log_tail, py::arg("z"), "log P(N(0,1) > z)");
    m.def("log_tail_diff", &gaussian::log_tail_diff, py::arg("a"), py::arg("b"), "log(Q(a) - Q(b)) for a < b");

    py::class_<ModelSpec>(m, "Model")
        .def_static(
            "probit",
            [](std::vector<double> levels, std::vector<double> thresholds, double sigma) {
                return ModelSpec(Probit{QuantizerSpec::from_interior(std::move(levels), thresholds, sigma)});
            },
            py::arg("levels"), py::arg("thresholds"), py::arg("sigma") = 1.0,
            "Ordinal Probit; `thresholds` are the J - 1 interior cut points.")
        .def_static("binary_probit", &ModelSpec::binary_probit, py::arg("eta") = 0.0, py::arg("sigma") = 1.0)
        .def_static(
            "tobit1", [](double lo, double hi, double sigma) { return ModelSpec(TobitI{lo, hi, sigma}); },
            py::arg("lower"), py::arg("upper"), py::arg("sigma") = 1.0)
        .def_static(
            "tobit2",
            [](double lo, double hi, double eta, double sigma) { return ModelSpec(TobitII{lo, hi, eta, sigma}); },
            py::arg("lower"), py::arg("upper"), py::arg("collapsed"), py::arg("sigma") = 1.0)
        .def_static("logit", [] { return ModelSpec(LogitBinary{}); })
        .def_static(
            "logit_multi", [](std::vector<double> levels) { return ModelSpec(LogitMulti{std::move(levels)}); },
            py::arg("levels"))
        .def_property_readonly("tag", &ModelSpec::tag)
        .def_property_readonly("score_count", &ModelSpec::score_count)
        .def("log_lik", &entry_log_lik, py::arg("y"), py::arg("x"))
        .def(
            "derivs",
            [](const ModelSpec& self, double y, double x) {
                const EntryDerivs d = entry_derivs(self, y, x);
                return py::make_tuple(d.loglik, d.d1, d.d2);
            },
            py::arg("y"), py::arg("x"), "(log-likelihood, d/dx, d2/dx2)")
        .def("forward", &forward_map, py::arg("x"))
        .def("__repr__", [](const ModelSpec& self) { return "<Model " + self.tag() + ">"; });

    m.def(
        "solve_sketch",
        [](const ModelSpec& model, const Vec& y, const Mat& U, double lambda, int max_iters) {
            InnerSolverConfig cfg;
            cfg.lambda = lambda;
            cfg.max_iters = max_iters;
            const Subspace S = subspace_from(U);
            return solve_sketch(model, datum_from_vector(y), S, cfg, Vec::Zero(S.dim())).psi;
        },
        py::arg("model"), py::arg("y"), py::arg("U"), py::arg("lam") = 0.1, py::arg("max_iters") = 50,
        "Sketch of one D-vector (NaN = missing) against a D x d subspace.");

    m.def(
        "impute",
        [](const ModelSpec& model, const Vec& y, const Mat& U, const Vec& psi) {
            return impute(model, datum_from_vector(y), subspace_from(U), psi);
        },
        py::arg("model"), py::arg("y"), py::arg("U"), py::arg("psi"));

    m.def(
        "gen_synthetic",
        [](int rows, long length, int dim, int levels, double p, double sigma, std::uint64_t seed, bool binary,
           double eta) {
            SyntheticSpec s;
            s.rows = rows;
            s.length = length;
            s.dim = dim;
            s.levels = levels;
            s.p = p;
            s.sigma = sigma;
            s.seed = seed;
            const Generated g = binary ? gen_binary_sign(s, eta) : gen_synthetic(s);
            py::dict out;
            out["y"] = dense_from_stream(g.stream);
            out["labels"] = g.truth.labels;
            out["basis"] = g.truth.basis;
            out["sketches"] = g.truth.sketches;
            out["classes"] = g.truth.classes;
            out["thresholds"] = g.truth.quantizer.interior_thresholds();
            out["levels"] = g.truth.quantizer.levels;
            return out;
        },
        py::arg("rows") = 25, py::arg("length") = 5000, py::arg("dim") = 8, py::arg("levels") = 5, py::arg("p") = 1.0,
        py::arg("sigma") = 1.0, py::arg("seed") = 1, py::arg("binary") = false, py::arg("eta") = 0.0,
        "Synthetic stream as a dict; `y` is T x D with NaN for missing entries.");

    py::class_<OnlineLearner>(m, "OnlineLearner")
        .def(py::init([](const ModelSpec& model, int rows, int dim, double lam, double mu, const std::string& schedule,
                         int passes, std::uint64_t seed, bool adapt_threshold, double gamma, int grad_trace_every) {
                 return OnlineLearner(model, rows,
                                      learner_config(dim, lam, mu, schedule, passes, seed, adapt_threshold, gamma,
                                                     grad_trace_every));
             }),
             py::arg("model"), py::arg("rows"), py::arg("dim") = 8, py::arg("lam") = 0.1, py::arg("mu") = 0.01,
             py::arg("schedule") = "constant", py::arg("passes") = 1, py::arg("seed") = 1,
             py::arg("adapt_threshold") = false, py::arg("gamma") = 0.01, py::arg("grad_trace_every") = 0)
        .def(
            "step",
            [](OnlineLearner& self, const Vec& y) {
                const TraceRecord& r = self.step(datum_from_vector(y));
                return r.cost;
            },
            py::arg("y"), "Processes one D-vector (NaN = missing); returns g_t at U[t-1].")
        .def(
            "run", [](OnlineLearner& self, const Mat& y) { self.run(stream_from_dense(y)); }, py::arg("y"),
            "All passes over a T x D array.")
        .def_property_readonly("U", [](const OnlineLearner& self) { return Mat(self.subspace().matrix()); })
        .def_property_readonly("t", &OnlineLearner::t)
        .def_property_readonly("eta", &OnlineLearner::eta)
        .def_property_readonly("model", &OnlineLearner::model)
        .def_property_readonly("sketches",
                               [](const OnlineLearner& self) {
                                   const auto& h = self.sketch_history();
                                   Mat out(static_cast<Eigen::Index>(h.size()), self.subspace().dim());
                                   for (std::size_t k = 0; k < h.size(); ++k) {
                                       out.row(static_cast<Eigen::Index>(k)) = h[k].transpose();
                                   }
                                   return out;
                               })
        .def_property_readonly("trace", [](const OnlineLearner& self) { return trace_dict(self.trace()); })
        .def(
            "regret",
            [](const OnlineLearner& self) {
                const RegretReport r = cumulative_costs(self);
                py::dict d;
                d["c_bar"] = r.c_bar;
                d["c_hat"] = r.c_hat;
                d["regret"] = r.regret;
                d["b_hat"] = r.b_hat;
                d["bound"] = r.bound;
                return d;
            },
            "Cumulative online costs and regret of the run so far.");

    m.def(
        "run_config",
        [](const std::string& ini, const std::vector<std::string>& overrides) {
            std::istringstream in(ini);
            RunConfig cfg = RunConfig::parse(in);
            for (const std::string& s : overrides) cfg.set(s);
            cfg.validate();
            const Dataset ds = prepare_dataset(cfg);
            const RunOutput out = train_and_evaluate(cfg, ds);
            py::dict d;
            d["metrics"] = json_loads(out.metrics.to_json());
            d["seconds"] = out.seconds;
            d["U"] = Mat(out.learner.subspace().matrix());
            d["trace"] = trace_dict(out.learner.trace());
            return d;
        },
        py::arg("ini") = "", py::arg("overrides") = std::vector<std::string>{},
        "Prepares data, trains and evaluates from an INI configuration string.");

    m.def(
        "default_config",
        [] {
            std::ostringstream out;
            RunConfig{}.write(out);
            return out.str();
        },
        "Default configuration as INI text.");
}
