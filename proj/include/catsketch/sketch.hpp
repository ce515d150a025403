#pragma once

#include <vector>

#include "catsketch/datum.hpp"
#include "catsketch/models.hpp"
#include "catsketch/subspace.hpp"

namespace catsketch {

struct InnerSolverConfig {
    enum class Method { GD, Newton };
    Method method = Method::Newton;
    int max_iters = 5;
    /// Step weights beta_1..beta_K; the last one repeats if the list is short.
    std::vector<double> betas{1.0};
    double lambda = 0.1;
    double tol = 1e-6;
    /// Halvings allowed per iteration before the step is abandoned.
    int max_backtracks = 20;

    double beta(int k) const;
    void validate() const;
};

struct SketchResult {
    Vec psi;
    int iterations = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    /// Newton steps that fell back to a gradient step.
    int fallbacks = 0;
    bool converged = false;
};

/// -sum log l(y_i; scores_i) + (lambda/2) ||psi||^2.
double sketch_cost(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi,
                   double lambda);

/// Cost, gradient and (optionally) Hessian of the psi-subproblem.
struct SketchObjective {
    double cost = 0.0;
    Vec grad;
    Eigen::MatrixXd hess;
};
SketchObjective sketch_objective(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                                 const Vec& psi, double lambda, bool with_hessian);

/// Gradient iteration psi <- (1 - beta) psi + (beta / lambda) sum_i grad_i u_i,
/// i.e. a step of beta / lambda along -grad (beta alone when lambda = 0),
/// with backtracking so the cost never increases.
SketchResult solve_sketch_gd(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                             const InnerSolverConfig& cfg, const Vec& psi0);

/// Damped Newton with Cholesky solves; falls back to a gradient step if the
/// factorization fails.
SketchResult solve_sketch_newton(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                                 const InnerSolverConfig& cfg, const Vec& psi0);

/// Dispatches on cfg.method.
SketchResult solve_sketch(const ModelSpec& model, const PartialDatum& datum, const Subspace& U,
                          const InnerSolverConfig& cfg, const Vec& psi0);

/// Full D-vector: observed entries pass through, the rest are predicted from U psi.
std::vector<double> impute(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi);

}  // namespace catsketch
