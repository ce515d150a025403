#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace catsketch {

/// Upper bound on the number of scores per entry (J - 1 for multiclass Logit).
inline constexpr int kMaxScores = 15;

using ScoreVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxScores, 1>;
using ScoreMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxScores, kMaxScores>;

/// Ordered quantizer: label levels[j] is emitted for x in (thresholds[j], thresholds[j+1]].
///
/// Holds J levels and J + 1 thresholds; the outer thresholds are normally the
/// -inf / +inf sentinels so that every real x maps to a label.
struct QuantizerSpec {
    std::vector<double> levels;
    std::vector<double> thresholds;
    double sigma = 1.0;

    /// Builds a quantizer from the J - 1 interior cut points, adding sentinels.
    static QuantizerSpec from_interior(std::vector<double> levels, std::span<const double> interior,
                                       double sigma);

    std::size_t label_count() const { return levels.size(); }
    std::vector<double> interior_thresholds() const;
    /// Largest minus smallest finite threshold.
    double finite_span() const;

    void validate() const;
};

struct Probit {
    QuantizerSpec quantizer;
};

/// Clips to [lower, upper].
struct TobitI {
    double lower = -1.0;
    double upper = 1.0;
    double sigma = 1.0;
};

/// Collapses (lower, upper) to the single value `collapsed`.
struct TobitII {
    double lower = -1.0;
    double upper = 1.0;
    double collapsed = 0.0;
    double sigma = 1.0;
};

/// Bernoulli with success probability 1 / (1 + exp(-x)); labels are 0 and 1.
struct LogitBinary {};

/// Softmax over J classes with levels[0] as the zero-score reference class.
struct LogitMulti {
    std::vector<double> levels;
};

/// One of the observation models, validated on construction.
class ModelSpec {
public:
    using Variant = std::variant<Probit, TobitI, TobitII, LogitBinary, LogitMulti>;

    ModelSpec(Probit m);
    ModelSpec(TobitI m);
    ModelSpec(TobitII m);
    ModelSpec(LogitBinary m);
    ModelSpec(LogitMulti m);

    /// Binary Probit with labels -1 / +1 split at eta.
    static ModelSpec binary_probit(double eta, double sigma);

    const Variant& variant() const { return variant_; }

    /// Number of inner products per entry: J - 1 for LogitMulti, 1 otherwise.
    int score_count() const;
    bool is_probit() const { return std::holds_alternative<Probit>(variant_); }
    const QuantizerSpec* quantizer() const;
    /// Copy with the single interior threshold of a binary Probit replaced.
    ModelSpec with_binary_threshold(double eta) const;

    std::string tag() const;

private:
    Variant variant_;
};

/// Log-likelihood and its first two derivatives with respect to x = u'psi.
struct EntryDerivs {
    double loglik = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Vector-score analogue of EntryDerivs, used uniformly by the solvers.
struct ScoreDerivs {
    double loglik = 0.0;
    ScoreVec grad;
    ScoreMat hess;
};

/// Index of y in the model alphabet; throws std::domain_error if absent.
/// Only meaningful for the discrete models (Probit, LogitBinary, LogitMulti).
std::size_t label_index(const ModelSpec& model, double y);

/// Noiseless observation map. Probit returns the label of the bin holding x,
/// the Tobit variants censor x, LogitBinary returns the success probability.
/// LogitMulti needs a score vector; use predict().
double forward_map(const ModelSpec& model, double x);

/// Prediction from a full score vector. Equals forward_map for scalar models;
/// for LogitMulti returns the level with the largest probability.
double predict(const ModelSpec& model, std::span<const double> scores);

double entry_log_lik(const ModelSpec& model, double y, double x);
EntryDerivs entry_derivs(const ModelSpec& model, double y, double x);

/// Entry log-likelihood with all J - 1 scores (size must be score_count()).
double score_log_lik(const ModelSpec& model, double y, std::span<const double> scores);
ScoreDerivs score_derivs(const ModelSpec& model, double y, std::span<const double> scores);

/// log(Q(a) - Q(b)) with a < b; see gaussian::log_tail_diff.
double stable_log_tail_diff(double a, double b);

/// Smoothness constants of the Probit per-entry loss:
/// delta1 = span / sigma^2 and delta2 = (span^2 / sigma^2 + 1) / sigma^2.
struct SmoothnessBounds {
    double delta1 = 0.0;
    double delta2 = 0.0;
};
SmoothnessBounds probit_smoothness(const QuantizerSpec& q);

/// Parses "probit", "tobit1", "tobit2", "logit", "logit_multi" as produced by tag().
bool is_known_model_tag(std::string_view tag);

}  // namespace catsketch
