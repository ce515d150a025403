#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "catsketch/datum.hpp"
#include "catsketch/models.hpp"

namespace catsketch {

/// D x d latent factor. LogitMulti keeps one block per non-reference class;
/// every other model uses a single block.
class Subspace {
public:
    Subspace() = default;
    Subspace(int rows, int dim, int blocks = 1);

    int rows() const { return rows_; }
    int dim() const { return dim_; }
    int blocks() const { return static_cast<int>(blocks_.size()); }

    Mat& block(int k) { return blocks_[static_cast<std::size_t>(k)]; }
    const Mat& block(int k) const { return blocks_[static_cast<std::size_t>(k)]; }
    Mat& matrix() { return blocks_.front(); }
    const Mat& matrix() const { return blocks_.front(); }

    /// Scores u_i^(k)' psi for all blocks k.
    ScoreVec scores(int row, const Vec& psi) const;
    double frobenius_sq() const;
    double frobenius() const;
    bool all_finite() const;

    Subspace& operator-=(const Subspace& other);
    friend Subspace operator-(Subspace a, const Subspace& b) { return a -= b; }

private:
    int rows_ = 0;
    int dim_ = 0;
    std::vector<Mat> blocks_;
};

/// I.i.d. standard normal entries from mt19937_64(seed).
Subspace init_subspace(int rows, int dim, std::uint64_t seed, int blocks = 1);

struct StepSchedule {
    enum class Kind { Constant, InverseTime };
    Kind kind = Kind::Constant;
    /// Step for Constant (0 freezes U), c for InverseTime (mu_t = 1 / (c t)).
    double value = 0.01;

    double at(long t) const;
    static StepSchedule constant(double mu) { return {Kind::Constant, mu}; }
    static StepSchedule inverse_time(double c) { return {Kind::InverseTime, c}; }
};

/// Per-entry derivatives of the score vector at the current rows.
ScoreDerivs entry_score_derivs(const ModelSpec& model, const Subspace& U, const Entry& e, const Vec& psi);

/// Gradient of g_t with respect to U (same shape as U):
/// -grad_k psi on observed rows plus (lambda / t) U everywhere.
Subspace subspace_grad(const ModelSpec& model, const Subspace& U, const PartialDatum& datum, const Vec& psi,
                       long t, double lambda);

/// One Jacobi SGD step from the frozen U[t-1]:
/// observed rows  u <- (1 - lambda mu / t) u + mu grad_k psi,
/// other rows     u <- (1 - lambda mu / t) u.
/// Throws NumericalError naming the first non-finite row.
Subspace sgd_step(const Subspace& U, const PartialDatum& datum, const Vec& psi, long t, double lambda, double mu,
                  const ModelSpec& model);

/// Scales U onto the Frobenius ball of radius bound when outside it.
Subspace project_ball(const Subspace& U, double bound);

/// Running sum of the data part of grad_U C_t(U) over a history with frozen
/// sketches. Sums from disjoint histories add.
struct P3Gradient {
    Subspace data_grad;
    long count = 0;

    void accumulate(const ModelSpec& model, const Subspace& U, const PartialDatum& datum, const Vec& psi);
    void merge(const P3Gradient& other);
    /// || (data_grad + lambda U) / count ||_F.
    double norm(const Subspace& U, double lambda) const;
};

/// ||grad_U C_t(U)||_F with C_t(U) = (1/t) sum_tau g_tau(psi_tau, U), where
/// each g_tau carries (lambda / 2t) ||U||^2.
double grad_norm_P3(const ModelSpec& model, std::span<const PartialDatum> data, std::span<const Vec> sketches,
                    const Subspace& U, double lambda);

/// Per-row bound check: ||grad_{u_i} g_t|| <= delta1 ||psi|| + (lambda/t) ||u_i|| (Probit only).
/// Returns the number of violating observed rows.
int count_gradient_bound_violations(const ModelSpec& model, const Subspace& U, const PartialDatum& datum,
                                    const Vec& psi, long t, double lambda);

/// Checkpoint text format, version 1:
///   catsketch-subspace 1
///   model <tag>
///   rows <D> dim <d> blocks <K> t <t> eta <eta|nan>
/// followed by K * D lines of d values (block-major, then row).
struct Checkpoint {
    Subspace U;
    std::string model_tag;
    long t = 0;
    double eta = 0.0;
    bool has_eta = false;
};

void write_checkpoint(std::ostream& out, const Checkpoint& cp);
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace catsketch
