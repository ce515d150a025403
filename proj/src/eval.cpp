#include "catsketch/eval.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "catsketch/sketch.hpp"

namespace catsketch {

namespace {

// Row-major view of the transposed problem: one pseudo-datum per row i
// holding (datum index, y) pairs.
std::vector<PartialDatum> transpose_stream(const Stream& stream) {
    std::vector<PartialDatum> rows(static_cast<std::size_t>(stream.dimension));
    for (int i = 0; i < stream.dimension; ++i) rows[static_cast<std::size_t>(i)].t = i + 1;
    for (std::size_t k = 0; k < stream.size(); ++k) {
        for (const Entry& e : stream.data[k].entries) {
            rows[static_cast<std::size_t>(e.row)].entries.push_back({static_cast<int>(k), e.value});
        }
    }
    return rows;
}

Subspace as_subspace(std::span<const Vec> sketches, int dim) {
    Subspace S(static_cast<int>(sketches.size()), dim);
    for (std::size_t k = 0; k < sketches.size(); ++k) S.matrix().row(static_cast<Eigen::Index>(k)) = sketches[k];
    return S;
}

}  // namespace

double regret_bound(double b_hat, double mu, long length) {
    if (!(mu > 0.0) || length < 1) return std::numeric_limits<double>::quiet_NaN();
    const double T = static_cast<double>(length);
    const double l = std::log(T) + 1.0;
    return b_hat * b_hat * l * l / (2.0 * mu * T) + 5.0 * b_hat * b_hat / (6.0 * mu * T);
}

RegretReport cumulative_costs(const ModelSpec& model, std::span<const PartialDatum> data,
                              std::span<const Vec> sketches, std::span<const double> online_costs,
                              const Subspace& final_U, double lambda) {
    if (data.size() != sketches.size() || data.size() != online_costs.size()) {
        throw std::invalid_argument("cumulative_costs: histories not aligned");
    }
    if (data.empty()) throw std::invalid_argument("cumulative_costs: empty history");
    RegretReport r;
    r.length = static_cast<long>(data.size());
    double bar = 0.0;
    double hat = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        bar += online_costs[k];
        hat += instantaneous_cost(model, data[k], final_U, sketches[k], static_cast<long>(k) + 1, lambda);
    }
    r.c_bar = bar / static_cast<double>(r.length);
    r.c_hat = hat / static_cast<double>(r.length);
    r.regret = r.c_hat - r.c_bar;
    return r;
}

RegretReport cumulative_costs(const OnlineLearner& learner) {
    RegretReport r = cumulative_costs(learner.model(), learner.data_history(), learner.sketch_history(),
                                      learner.online_costs(), learner.subspace(), learner.config().lambda);
    for (const TraceRecord& rec : learner.trace().records) {
        r.b_hat = std::max(r.b_hat, static_cast<double>(rec.t) * rec.delta_u);
    }
    const StepSchedule& mu = learner.config().mu;
    r.mu = mu.kind == StepSchedule::Kind::Constant ? mu.value : std::numeric_limits<double>::quiet_NaN();
    r.bound = regret_bound(r.b_hat, r.mu, r.length);
    return r;
}

RmseReport rmse(const Stream& heldout, const std::vector<std::vector<double>>& predictions) {
    if (predictions.size() != heldout.size()) throw std::invalid_argument("rmse: prediction count != stream length");
    RmseReport r;
    double sq = 0.0;
    for (std::size_t k = 0; k < heldout.size(); ++k) {
        for (const Entry& e : heldout.data[k].entries) {
            const double diff = e.value - predictions[k].at(static_cast<std::size_t>(e.row));
            sq += diff * diff;
            ++r.entries;
        }
    }
    if (r.entries == 0) throw std::invalid_argument("rmse: no held-out entries");
    r.length = heldout.size();
    r.paper = std::sqrt(sq / static_cast<double>(r.length));
    r.per_entry = std::sqrt(sq / static_cast<double>(r.entries));
    return r;
}

Mat stack(std::span<const Vec> sketches) {
    if (sketches.empty()) return Mat();
    Mat m(static_cast<Eigen::Index>(sketches.size()), sketches.front().size());
    for (std::size_t k = 0; k < sketches.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = sketches[k];
    return m;
}

Classification ls_classify(const Mat& train, std::span<const int> train_labels, const Mat& test,
                           std::span<const int> test_labels, double ridge) {
    if (static_cast<std::size_t>(train.rows()) != train_labels.size() ||
        static_cast<std::size_t>(test.rows()) != test_labels.size()) {
        throw std::invalid_argument("ls_classify: label count mismatch");
    }
    const bool has0 = std::find(train_labels.begin(), train_labels.end(), 0) != train_labels.end();
    const bool has1 = std::find(train_labels.begin(), train_labels.end(), 1) != train_labels.end();
    if (!has0 || !has1) throw std::invalid_argument("ls_classify: training set has a single class");

    const Eigen::Index n = train.rows();
    const Eigen::Index d = train.cols();
    Eigen::MatrixXd X(n, d + 1);
    X.leftCols(d) = train;
    X.col(d).setOnes();
    Vec y(n);
    for (Eigen::Index k = 0; k < n; ++k) y[k] = train_labels[static_cast<std::size_t>(k)] == 1 ? 1.0 : -1.0;
    Eigen::MatrixXd G = X.transpose() * X;
    G.diagonal().head(d).array() += ridge * static_cast<double>(n);
    Classification c;
    c.weights = G.ldlt().solve(X.transpose() * y);

    std::size_t wrong = 0;
    c.predicted.resize(static_cast<std::size_t>(test.rows()));
    for (Eigen::Index k = 0; k < test.rows(); ++k) {
        const double s = test.row(k).dot(c.weights.head(d)) + c.weights[d];
        const int label = s > 0.0 ? 1 : 0;
        c.predicted[static_cast<std::size_t>(k)] = label;
        if (label != test_labels[static_cast<std::size_t>(k)]) ++wrong;
    }
    c.error = test.rows() > 0 ? static_cast<double>(wrong) / static_cast<double>(test.rows()) : 0.0;
    return c;
}

double batch_cost(const ModelSpec& model, const Stream& stream, const Subspace& U, std::span<const Vec> sketches,
                  double lambda) {
    if (sketches.size() != stream.size()) throw std::invalid_argument("batch_cost: sketch count != stream length");
    double c = 0.0;
    for (std::size_t k = 0; k < stream.size(); ++k) c += sketch_cost(model, stream.data[k], U, sketches[k], lambda);
    const double T = static_cast<double>(stream.size());
    return c / T + 0.5 * lambda / T * U.frobenius_sq();
}

double batch_grad_norm(const ModelSpec& model, const Stream& stream, const Subspace& U,
                       std::span<const Vec> sketches, double lambda) {
    P3Gradient acc;
    for (std::size_t k = 0; k < stream.size(); ++k) acc.accumulate(model, U, stream.data[k], sketches[k]);
    return acc.norm(U, lambda);
}

OracleResult batch_oracle(const ModelSpec& model, const Stream& stream, int dim, double lambda, int max_iters,
                          std::uint64_t seed, double tol) {
    if (model.score_count() != 1) throw std::invalid_argument("batch_oracle: scalar-score models only");
    if (!(lambda > 0.0)) throw std::invalid_argument("batch_oracle: lambda must be positive");
    const std::vector<PartialDatum> rows = transpose_stream(stream);
    InnerSolverConfig cfg;
    cfg.lambda = lambda;
    cfg.max_iters = 50;
    cfg.tol = 1e-9;

    OracleResult r;
    r.U = init_subspace(stream.dimension, dim, seed);
    r.sketches.assign(stream.size(), Vec::Zero(dim));
    const auto solve_sketches = [&] {
        for (std::size_t k = 0; k < stream.size(); ++k) {
            r.sketches[k] = solve_sketch_newton(model, stream.data[k], r.U, cfg, r.sketches[k]).psi;
        }
    };
    solve_sketches();
    double best = std::numeric_limits<double>::infinity();
    OracleResult best_r;
    for (int it = 1; it <= max_iters; ++it) {
        const Subspace S = as_subspace(r.sketches, dim);
        for (int i = 0; i < stream.dimension; ++i) {
            const Vec u0 = r.U.matrix().row(i).transpose();
            r.U.matrix().row(i) = solve_sketch_newton(model, rows[static_cast<std::size_t>(i)], S, cfg, u0).psi;
        }
        // Stationarity is judged with the sketches optimal for the new U.
        solve_sketches();
        r.iterations = it;
        r.grad_norm = batch_grad_norm(model, stream, r.U, r.sketches, lambda);
        r.cost = batch_cost(model, stream, r.U, r.sketches, lambda);
        if (r.cost < best) {
            best = r.cost;
            best_r = r;
        }
        if (r.grad_norm <= tol) {
            r.converged = true;
            return r;
        }
    }
    return best_r;
}

double surrogate_cost(const ModelSpec& model, std::span<const PartialDatum> data, std::span<const Vec> sketches,
                      std::span<const Subspace> before, const Subspace& U, double lambda) {
    const QuantizerSpec* q = model.quantizer();
    if (q == nullptr) throw std::invalid_argument("surrogate_cost: Probit only");
    if (data.size() != sketches.size() || data.size() != before.size() || data.empty()) {
        throw std::invalid_argument("surrogate_cost: histories not aligned");
    }
    const double delta2 = probit_smoothness(*q).delta2;
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const long t = static_cast<long>(k) + 1;
        const Subspace& prev = before[k];
        const Subspace grad = subspace_grad(model, prev, data[k], sketches[k], t, lambda);
        const Subspace diff = U - prev;
        const double alpha = delta2 * sketches[k].squaredNorm() + lambda / static_cast<double>(t);
        double inner = 0.0;
        for (int b = 0; b < U.blocks(); ++b) inner += grad.block(b).cwiseProduct(diff.block(b)).sum();
        total += instantaneous_cost(model, data[k], prev, sketches[k], t, lambda) + inner +
                 0.5 * alpha * diff.frobenius_sq();
    }
    return total / static_cast<double>(data.size());
}

}  // namespace catsketch
