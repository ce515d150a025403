#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catsketch/config.hpp"
#include "catsketch/data.hpp"
#include "catsketch/eval.hpp"
#include "catsketch/learner.hpp"

namespace catsketch {

/// What a run trains on and is scored against.
struct Dataset {
    Stream train;
    /// Masked or held-out entries with their true values; may be empty.
    Stream heldout;
    /// Per-datum class labels (0/1); empty when the source has none.
    std::vector<int> classes;
    std::optional<GroundTruth> truth;
    StreamMeta meta;
    /// Quantizer implied by the source, if any (synthetic generators).
    std::optional<QuantizerSpec> source_quantizer;
};

Dataset prepare_dataset(const RunConfig& cfg);

/// Model from [model], falling back to the source quantizer or the
/// source's natural alphabet when thresholds are not given.
ModelSpec build_model(const RunConfig& cfg, const Dataset& data);

/// Online history needed for regret; rebuilt from a trace when evaluating a
/// saved run.
struct History {
    std::vector<PartialDatum> data;
    std::vector<Vec> sketches;
    std::vector<double> costs;
    std::vector<double> delta_u;
};

History history_of(const OnlineLearner& learner);

struct Metrics {
    std::optional<RegretReport> regret;
    std::optional<RmseReport> rmse;
    /// Fraction of held-out entries imputed exactly (discrete models).
    std::optional<double> impute_accuracy;
    std::optional<double> classification_error;
    std::optional<double> eta;
    std::optional<double> grad_norm_p3;
    double final_frobenius = 0.0;

    std::string to_json() const;
};

/// Re-sketches the training stream against U, imputes held-out entries and
/// classifies the sketches (seeded 50/50 split) when labels exist.
Metrics evaluate(const RunConfig& cfg, const Dataset& data, const ModelSpec& model, const Subspace& U,
                 const History* history, double ridge = 1e-3);

struct RunOutput {
    OnlineLearner learner;
    Metrics metrics;
    double seconds = 0.0;
};

/// Trains on the prepared dataset and evaluates.
RunOutput train_and_evaluate(const RunConfig& cfg, const Dataset& data);

}  // namespace catsketch
