#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "catsketch/datum.hpp"
#include "catsketch/learner.hpp"
#include "catsketch/models.hpp"
#include "catsketch/subspace.hpp"

namespace catsketch {

struct RegretReport {
    double c_bar = 0.0;  // mean of g_t(psi_t, U[t-1])
    double c_hat = 0.0;  // mean of g_t(psi_t, U[T])
    double regret = 0.0;  // c_hat - c_bar
    long length = 0;
    double b_hat = 0.0;  // max_t t ||U[t] - U[t-1]||_F
    double mu = 0.0;
    /// b^2 (ln T + 1)^2 / (2 mu T) + 5 b^2 / (6 mu T); NaN when mu = 0.
    double bound = 0.0;
};

/// Costs use the per-step weight lambda / (2t) on ||U||^2, with t the step index.
RegretReport cumulative_costs(const ModelSpec& model, std::span<const PartialDatum> data,
                              std::span<const Vec> sketches, std::span<const double> online_costs,
                              const Subspace& final_U, double lambda);
/// Same from a finished learner; b_hat and mu come from its trace and schedule.
RegretReport cumulative_costs(const OnlineLearner& learner);

double regret_bound(double b_hat, double mu, long length);

struct RmseReport {
    /// sqrt(sum of squared errors / T), T the number of data.
    double paper = 0.0;
    /// sqrt(sum of squared errors / number of scored entries).
    double per_entry = 0.0;
    std::size_t entries = 0;
    std::size_t length = 0;
};

/// Scores the entries of `heldout` against full predictions (one D-vector per datum).
/// Throws std::invalid_argument if heldout has no entries.
RmseReport rmse(const Stream& heldout, const std::vector<std::vector<double>>& predictions);

struct Classification {
    std::vector<int> predicted;
    double error = 0.0;
    Vec weights;  // last entry is the bias
};

/// Ridge least-squares hyperplane on +-1 targets. Throws if the training
/// labels contain a single class.
Classification ls_classify(const Mat& train, std::span<const int> train_labels, const Mat& test,
                           std::span<const int> test_labels, double ridge = 1e-3);

/// Stacks sketches into a matrix.
Mat stack(std::span<const Vec> sketches);

/// (P2) objective (1/T) sum_t [-log l + (lambda/2)||psi_t||^2] + (lambda / 2T) ||U||_F^2.
double batch_cost(const ModelSpec& model, const Stream& stream, const Subspace& U, std::span<const Vec> sketches,
                  double lambda);
/// Frobenius norm of the U-gradient of batch_cost.
double batch_grad_norm(const ModelSpec& model, const Stream& stream, const Subspace& U,
                       std::span<const Vec> sketches, double lambda);

struct OracleResult {
    Subspace U;
    std::vector<Vec> sketches;
    double cost = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Alternating exact minimization of batch_cost: Newton solves for every
/// sketch, then for every row (the row problem has the same form with the
/// roles of U and the sketches exchanged). Scalar-score models only.
OracleResult batch_oracle(const ModelSpec& model, const Stream& stream, int dim, double lambda, int max_iters,
                          std::uint64_t seed, double tol = 1e-6);

/// Surrogate cost (1/T) sum_t [g_t(U[t-1]) + <grad, U - U[t-1]> + (alpha_t/2)||U - U[t-1]||^2]
/// evaluated at U = final U, with alpha_t = delta2 ||psi_t||^2 + lambda / t.
/// Needs the subspace before every step; Probit only.
double surrogate_cost(const ModelSpec& model, std::span<const PartialDatum> data, std::span<const Vec> sketches,
                      std::span<const Subspace> before, const Subspace& U, double lambda);

}  // namespace catsketch
