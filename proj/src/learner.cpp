#include "catsketch/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

namespace catsketch {

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::micro>(b - a).count();
}

void put(std::ostream& out, double v) {
    if (std::isnan(v)) {
        out << "nan";
    } else {
        out << v;
    }
}

}  // namespace

const char* RunTrace::header() {
    return "t,pass,datum,cost,grad_norm_inst,grad_norm_p3,delta_u,eta,eta_grad,inner_iters,fallbacks,sketch_us,"
           "subspace_us,bound_violations";
}

void RunTrace::write_csv(std::ostream& out) const {
    out << header() << '\n' << std::setprecision(17);
    for (const TraceRecord& r : records) {
        out << r.t << ',' << r.pass << ',' << r.datum << ',';
        for (const double v : {r.cost, r.grad_norm_inst, r.grad_norm_p3, r.delta_u, r.eta, r.eta_grad}) {
            put(out, v);
            out << ',';
        }
        out << r.inner_iters << ',' << r.fallbacks << ',' << r.sketch_us << ',' << r.subspace_us << ','
            << r.bound_violations << '\n';
    }
}

void RunTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out);
}

OnlineLearner::OnlineLearner(ModelSpec model, int rows, LearnerConfig cfg)
    : OnlineLearner(model, init_subspace(rows, cfg.dim, cfg.init_seed, model.score_count()), cfg) {}

OnlineLearner::OnlineLearner(ModelSpec model, Subspace initial, LearnerConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)), U_(std::move(initial)) {
    cfg_.inner.lambda = cfg_.lambda;
    cfg_.inner.validate();
    if (U_.blocks() != model_.score_count()) throw std::invalid_argument("learner: subspace blocks != model scores");
    if (cfg_.adapt_threshold) {
        const QuantizerSpec* q = model_.quantizer();
        if (q == nullptr || q->label_count() != 2) {
            throw std::invalid_argument("learner: threshold adaptation needs a binary Probit model");
        }
    }
    cfg_.dim = U_.dim();
    psi_ = Vec::Zero(U_.dim());
}

double OnlineLearner::eta() const {
    const QuantizerSpec* q = model_.quantizer();
    if (q == nullptr || q->label_count() != 2) return TraceRecord::kNaN;
    return q->thresholds[1];
}

const TraceRecord& OnlineLearner::step(const PartialDatum& datum, long datum_index, int pass) {
    const long t = ++t_;
    TraceRecord rec;
    rec.t = t;
    rec.pass = pass;
    rec.datum = datum_index >= 0 ? datum_index : datum.t;

    const auto t0 = Clock::now();
    const SketchResult sk = solve_sketch(model_, datum, U_, cfg_.inner, psi_);
    const auto t1 = Clock::now();
    psi_ = sk.psi;
    rec.inner_iters = sk.iterations;
    rec.fallbacks = sk.fallbacks;
    rec.sketch_us = micros(t0, t1);

    rec.cost = instantaneous_cost(model_, datum, U_, psi_, t, cfg_.lambda);
    if (cfg_.check_bounds) {
        rec.bound_violations = count_gradient_bound_violations(model_, U_, datum, psi_, t, cfg_.lambda);
    }

    const auto t2 = Clock::now();
    const double mu = cfg_.mu.at(t);
    Subspace next = sgd_step(U_, datum, psi_, t, cfg_.lambda, mu, model_);
    if (cfg_.ball > 0.0) next = project_ball(next, cfg_.ball);
    const auto t3 = Clock::now();
    rec.subspace_us = micros(t2, t3);

    Subspace diff = next - U_;
    rec.delta_u = diff.frobenius();
    rec.grad_norm_inst = mu > 0.0 && cfg_.ball <= 0.0 ? rec.delta_u / mu
                                                       : subspace_grad(model_, U_, datum, psi_, t, cfg_.lambda).frobenius();
    U_ = std::move(next);

    if (cfg_.adapt_threshold) {
        const double sigma = model_.quantizer()->sigma;
        rec.eta_grad = threshold_grad(datum, U_, psi_, eta(), sigma, cfg_.threshold_form);
        const ThresholdState s = threshold_step({eta()}, datum, U_, psi_, cfg_.gamma.at(t), sigma, cfg_.threshold_form);
        model_ = model_.with_binary_threshold(s.eta);
    }
    rec.eta = eta();

    data_.push_back(datum);
    sketches_.push_back(psi_);
    costs_.push_back(rec.cost);

    if (cfg_.grad_trace_every > 0 && (t % cfg_.grad_trace_every == 0 || t == 1)) {
        rec.grad_norm_p3 = grad_norm_P3(model_, data_, sketches_, U_, cfg_.lambda);
    }
    trace_.records.push_back(rec);
    return trace_.records.back();
}

void OnlineLearner::run(const Stream& stream) {
    if (stream.dimension != U_.rows()) throw std::invalid_argument("learner: stream dimension != subspace rows");
    std::vector<std::size_t> order(stream.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg_.shuffle_seed);
    for (int pass = 1; pass <= cfg_.passes; ++pass) {
        if (pass > 1) std::shuffle(order.begin(), order.end(), rng);
        for (const std::size_t k : order) step(stream.data[k], static_cast<long>(k) + 1, pass);
    }
}

double instantaneous_cost(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi,
                          long t, double lambda) {
    return sketch_cost(model, datum, U, psi, lambda) + 0.5 * lambda / static_cast<double>(t) * U.frobenius_sq();
}

std::vector<Vec> resketch(const ModelSpec& model, const Stream& stream, const Subspace& U, double lambda,
                          int max_iters) {
    InnerSolverConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = max_iters;
    cfg.tol = 1e-9;
    std::vector<Vec> out;
    out.reserve(stream.size());
    for (const PartialDatum& d : stream.data) {
        out.push_back(solve_sketch_newton(model, d, U, cfg, Vec::Zero(U.dim())).psi);
    }
    return out;
}

}  // namespace catsketch
