#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "catsketch/datum.hpp"
#include "catsketch/models.hpp"
#include "catsketch/sketch.hpp"
#include "catsketch/subspace.hpp"
#include "catsketch/threshold.hpp"

namespace catsketch {

struct LearnerConfig {
    int dim = 8;
    double lambda = 0.1;
    StepSchedule mu = StepSchedule::constant(0.01);
    InnerSolverConfig inner;
    int passes = 1;
    /// Seed for U[0]; later passes reshuffle with shuffle_seed.
    std::uint64_t init_seed = 1;
    std::uint64_t shuffle_seed = 2;
    /// Frobenius ball radius; 0 disables the projection.
    double ball = 0.0;

    bool adapt_threshold = false;
    StepSchedule gamma = StepSchedule::constant(0.01);
    ThresholdGradForm threshold_form = ThresholdGradForm::Exact;

    /// Stride for the full empirical-cost gradient norm (0: never).
    int grad_trace_every = 0;
    /// Count per-row gradient-bound violations every step (Probit only).
    bool check_bounds = false;
};

/// One row of the run trace. NaN marks a column not computed at this step.
struct TraceRecord {
    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    long t = 0;
    int pass = 0;
    long datum = 0;
    double cost = 0.0;
    double grad_norm_inst = 0.0;
    double grad_norm_p3 = kNaN;
    double delta_u = 0.0;
    double eta = kNaN;
    double eta_grad = kNaN;
    int inner_iters = 0;
    int fallbacks = 0;
    double sketch_us = 0.0;
    double subspace_us = 0.0;
    int bound_violations = 0;
};

struct RunTrace {
    std::vector<TraceRecord> records;

    void write_csv(std::ostream& out) const;
    void write_csv(const std::string& path) const;
    static const char* header();
};

/// Online rank-regularized ML sketching: per datum, solve the sketch against
/// U[t-1], take the subspace step, then (optionally) the threshold step.
class OnlineLearner {
public:
    OnlineLearner(ModelSpec model, int rows, LearnerConfig cfg);
    OnlineLearner(ModelSpec model, Subspace initial, LearnerConfig cfg);

    /// Processes one datum at global time t() + 1.
    const TraceRecord& step(const PartialDatum& datum, long datum_index = -1, int pass = 0);

    /// Runs cfg.passes passes over the stream (pass 1 in stream order).
    void run(const Stream& stream);

    const ModelSpec& model() const { return model_; }
    const Subspace& subspace() const { return U_; }
    const LearnerConfig& config() const { return cfg_; }
    long t() const { return t_; }
    double eta() const;
    const RunTrace& trace() const { return trace_; }

    /// Per-step history: datum position, sketch and g_t(psi_t, U[t-1]).
    const std::vector<PartialDatum>& data_history() const { return data_; }
    const std::vector<Vec>& sketch_history() const { return sketches_; }
    const std::vector<double>& online_costs() const { return costs_; }

private:
    ModelSpec model_;
    LearnerConfig cfg_;
    Subspace U_;
    Vec psi_;
    long t_ = 0;
    RunTrace trace_;
    std::vector<PartialDatum> data_;
    std::vector<Vec> sketches_;
    std::vector<double> costs_;
};

/// g_t(psi, U) = -sum log l + (lambda/2)||psi||^2 + (lambda / 2t)||U||_F^2.
double instantaneous_cost(const ModelSpec& model, const PartialDatum& datum, const Subspace& U, const Vec& psi,
                          long t, double lambda);

/// Re-solves every datum's sketch against a fixed U (Newton, tight tolerance).
std::vector<Vec> resketch(const ModelSpec& model, const Stream& stream, const Subspace& U, double lambda,
                          int max_iters = 50);

}  // namespace catsketch
