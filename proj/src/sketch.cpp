#include "catsketch/sketch.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace catsketch {

namespace {

constexpr double kArmijo = 1e-4;

void require_finite(const Vec& psi, long t) {
    if (!psi.allFinite()) throw NumericalError("sketch", t, "non-finite iterate");
}

void check_shapes(const Subspace& U, const Vec& psi) {
    if (psi.size() != U.dim()) throw std::invalid_argument("sketch: psi length does not match subspace");
}

// Backtracking along `dir` from psi starting at `step`. Returns false if no
// step with sufficient decrease was found (psi and obj unchanged).
bool line_search(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, double lambda,
                 const InnerSolverConfig& cfg, const Vec& dir, double step, Vec& psi, SketchObjective& obj,
                 bool with_hessian) {
    const double slope = obj.grad.dot(dir);
    if (!(slope < 0.0)) return false;
    for (int h = 0; h <= cfg.max_backtracks; ++h, step *= 0.5) {
        Vec trial = psi + step * dir;
        const double c = sketch_cost(model, datum, U, trial, lambda);
        if (std::isfinite(c) && c <= obj.cost + kArmijo * step * slope) {
            psi = std::move(trial);
            obj = sketch_objective(model, datum, U, psi, lambda, with_hessian);
            return true;
        }
    }
    return false;
}

SketchResult finish(Vec psi, const SketchObjective& obj, int iters, int fallbacks, double tol) {
    SketchResult r;
    r.psi = std::move(psi);
    r.iterations = iters;
    r.cost = obj.cost;
    r.grad_norm = obj.grad.norm();
    r.fallbacks = fallbacks;
    r.converged = r.grad_norm <= tol;
    return r;
}

}  // namespace

double InnerSolverConfig::beta(int k) const {
    if (betas.empty()) return 1.0;
    return betas[std::min<std::size_t>(static_cast<std::size_t>(k), betas.size() - 1)];
}

void InnerSolverConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("inner solver: K must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("inner solver: lambda must be >= 0");
    if (!(tol >= 0.0)) throw std::invalid_argument("inner solver: tol must be >= 0");
    for (const double b : betas) {
        if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("inner solver: betas must lie in (0, 1]");
    }
    if (method == Method::Newton && !(lambda > 0.0)) {
        throw std::invalid_argument("inner solver: Newton needs lambda > 0");
    }
}

double sketch_cost(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi,
                   double lambda) {
    check_shapes(U, psi);
    double c = 0.5 * lambda * psi.squaredNorm();
    if (U.blocks() == 1) {
        for (const Entry& e : datum.entries) {
            if (e.row < 0 || e.row >= U.rows()) throw std::out_of_range("sketch_cost: row out of range");
            c -= entry_log_lik(model, e.value, U.matrix().row(e.row).dot(psi));
        }
        return c;
    }
    for (const Entry& e : datum.entries) c -= entry_score_derivs(model, U, e, psi).loglik;
    return c;
}

SketchObjective sketch_objective(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                                 const Vec& psi, double lambda, bool with_hessian) {
    check_shapes(U, psi);
    const int d = U.dim();
    SketchObjective obj;
    obj.cost = 0.5 * lambda * psi.squaredNorm();
    obj.grad = lambda * psi;
    if (with_hessian) obj.hess = lambda * Eigen::MatrixXd::Identity(d, d);

    if (U.blocks() == 1) {
        for (const Entry& e : datum.entries) {
            if (e.row < 0 || e.row >= U.rows()) throw std::out_of_range("sketch: row out of range");
            const auto u = U.matrix().row(e.row);
            const EntryDerivs ed = entry_derivs(model, e.value, u.dot(psi));
            obj.cost -= ed.loglik;
            obj.grad -= ed.d1 * u.transpose();
            if (with_hessian) obj.hess.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose(), -ed.d2);
        }
    } else {
        const int k = U.blocks();
        Eigen::MatrixXd rows(k, d);
        for (const Entry& e : datum.entries) {
            const ScoreDerivs sd = entry_score_derivs(model, U, e, psi);
            for (int j = 0; j < k; ++j) rows.row(j) = U.block(j).row(e.row);
            obj.cost -= sd.loglik;
            obj.grad -= rows.transpose() * sd.grad;
            if (with_hessian) obj.hess.noalias() -= rows.transpose() * sd.hess * rows;
        }
    }
    if (with_hessian) obj.hess.triangularView<Eigen::StrictlyUpper>() = obj.hess.transpose();
    return obj;
}

SketchResult solve_sketch_gd(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                             const InnerSolverConfig& cfg, const Vec& psi0) {
    cfg.validate();
    Vec psi = psi0;
    SketchObjective obj = sketch_objective(model, datum, U, psi, cfg.lambda, false);
    const double scale = cfg.lambda > 0.0 ? 1.0 / cfg.lambda : 1.0;
    int k = 0;
    while (k < cfg.max_iters && obj.grad.norm() > cfg.tol) {
        const Vec dir = -obj.grad;
        const bool moved = line_search(model, datum, U, cfg.lambda, cfg, dir, cfg.beta(k) * scale, psi, obj, false);
        ++k;
        require_finite(psi, datum.t);
        if (!moved) break;
    }
    return finish(std::move(psi), obj, k, 0, cfg.tol);
}

SketchResult solve_sketch_newton(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                                 const InnerSolverConfig& cfg, const Vec& psi0) {
    cfg.validate();
    Vec psi = psi0;
    SketchObjective obj = sketch_objective(model, datum, U, psi, cfg.lambda, true);
    int k = 0;
    int fallbacks = 0;
    while (k < cfg.max_iters && obj.grad.norm() > cfg.tol) {
        Eigen::LLT<Eigen::MatrixXd> llt(obj.hess);
        Vec dir;
        double step = cfg.beta(k);
        if (llt.info() == Eigen::Success) {
            dir = -llt.solve(obj.grad);
        }
        if (llt.info() != Eigen::Success || !dir.allFinite()) {
            ++fallbacks;
            dir = -obj.grad;
            step /= cfg.lambda;
        }
        const bool moved = line_search(model, datum, U, cfg.lambda, cfg, dir, step, psi, obj, true);
        ++k;
        require_finite(psi, datum.t);
        if (!moved) break;
    }
    return finish(std::move(psi), obj, k, fallbacks, cfg.tol);
}

SketchResult solve_sketch(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                          const InnerSolverConfig& cfg, const Vec& psi0) {
    if (cfg.method == InnerSolverConfig::Method::GD) return solve_sketch_gd(model, datum, U, cfg, psi0);
    return solve_sketch_newton(model, datum, U, cfg, psi0);
}

std::vector<double> impute(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi) {
    check_shapes(U, psi);
    std::vector<double> out(static_cast<std::size_t>(U.rows()));
    for (int i = 0; i < U.rows(); ++i) {
        const ScoreVec s = U.scores(i, psi);
        out[static_cast<std::size_t>(i)] = predict(model, {s.data(), static_cast<std::size_t>(s.size())});
    }
    for (const Entry& e : datum.entries) out[static_cast<std::size_t>(e.row)] = e.value;
    return out;
}

}  // namespace catsketch
