#include "catsketch/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "catsketch/gaussian.hpp"

namespace catsketch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("model: sigma must be positive and finite");
    }
}

// Log-mass of N(x, sigma^2) over (lo, hi] with derivatives in x. With z the
// standardized variable truncated to the interval,
//   d1 = E[z] / sigma and d2 = (Var[z] - 1) / sigma^2, so d2 is in [-1/sigma^2, 0].
EntryDerivs interval_derivs(double lo, double hi, double x, double sigma) {
    double zl = lo == -kInf ? -kInf : (lo - x) / sigma;
    double zu = hi == kInf ? kInf : (hi - x) / sigma;
    if (!(zl < zu)) {
        // x so far out that both ends round together; keep the nearer tail.
        if (zl > 0.0) {
            zu = kInf;
        } else {
            zl = -kInf;
        }
    }
    const gaussian::Truncated m = gaussian::truncated_moments(zl, zu);
    return {m.log_mass, m.mean / sigma, (m.variance - 1.0) / (sigma * sigma)};
}

EntryDerivs gaussian_derivs(double y, double x, double sigma) {
    const double r = (y - x) / sigma;
    return {gaussian::log_pdf(r), r / sigma, -1.0 / (sigma * sigma)};
}

std::size_t level_index(const std::vector<double>& levels, double y) {
    const auto it = std::find(levels.begin(), levels.end(), y);
    if (it == levels.end()) {
        throw std::domain_error("label " + std::to_string(y) + " is not in the model alphabet");
    }
    return static_cast<std::size_t>(it - levels.begin());
}

double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

EntryDerivs probit_derivs(const Probit& m, double y, double x) {
    const auto& q = m.quantizer;
    const std::size_t j = level_index(q.levels, y);
    return interval_derivs(q.thresholds[j], q.thresholds[j + 1], x, q.sigma);
}

EntryDerivs tobit1_derivs(const TobitI& m, double y, double x) {
    if (y == m.upper) return interval_derivs(m.upper, kInf, x, m.sigma);
    if (y == m.lower) return interval_derivs(-kInf, m.lower, x, m.sigma);
    if (y > m.lower && y < m.upper) return gaussian_derivs(y, x, m.sigma);
    throw std::domain_error("tobit-I: observation outside [lower, upper]");
}

EntryDerivs tobit2_derivs(const TobitII& m, double y, double x) {
    if (y == m.collapsed) return interval_derivs(m.lower, m.upper, x, m.sigma);
    if (y >= m.upper || y <= m.lower) return gaussian_derivs(y, x, m.sigma);
    throw std::domain_error("tobit-II: interior observation must equal the collapsed value");
}

EntryDerivs logit_derivs(double y, double x) {
    if (y != 0.0 && y != 1.0) throw std::domain_error("logit: label must be 0 or 1");
    const double s = 2.0 * y - 1.0;
    const double p = sigmoid(x);
    return {-softplus(-s * x), s * sigmoid(-s * x), -p * (1.0 - p)};
}

ScoreDerivs multi_derivs(const LogitMulti& m, double y, std::span<const double> scores) {
    const std::size_t label = level_index(m.levels, y);
    const int k = static_cast<int>(scores.size());
    double top = 0.0;
    for (const double s : scores) top = std::max(top, s);
    double total = std::exp(-top);
    ScoreVec prob(k);
    for (int j = 0; j < k; ++j) {
        prob[j] = std::exp(scores[j] - top);
        total += prob[j];
    }
    prob /= total;
    const double lse = top + std::log(total);

    ScoreDerivs out;
    out.loglik = (label == 0 ? 0.0 : scores[label - 1]) - lse;
    out.grad = -prob;
    if (label > 0) out.grad[static_cast<int>(label) - 1] += 1.0;
    out.hess = prob * prob.transpose();
    out.hess.diagonal() -= prob;
    return out;
}

void check_scores(const ModelSpec& model, std::span<const double> scores) {
    if (static_cast<int>(scores.size()) != model.score_count()) {
        throw std::invalid_argument("score vector size does not match the model");
    }
}

}  // namespace

QuantizerSpec QuantizerSpec::from_interior(std::vector<double> levels, std::span<const double> interior,
                                           double sigma) {
    QuantizerSpec q;
    q.levels = std::move(levels);
    q.thresholds.reserve(interior.size() + 2);
    q.thresholds.push_back(-kInf);
    q.thresholds.insert(q.thresholds.end(), interior.begin(), interior.end());
    q.thresholds.push_back(kInf);
    q.sigma = sigma;
    q.validate();
    return q;
}

std::vector<double> QuantizerSpec::interior_thresholds() const {
    if (thresholds.size() < 2) return {};
    return {thresholds.begin() + 1, thresholds.end() - 1};
}

double QuantizerSpec::finite_span() const {
    double lo = kInf;
    double hi = -kInf;
    for (const double t : thresholds) {
        if (std::isfinite(t)) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    return hi >= lo ? hi - lo : 0.0;
}

void QuantizerSpec::validate() const {
    require_sigma(sigma);
    if (levels.size() < 2) throw std::invalid_argument("quantizer: need at least two labels");
    if (thresholds.size() != levels.size() + 1) {
        throw std::invalid_argument("quantizer: need exactly J + 1 thresholds for J labels");
    }
    for (std::size_t j = 0; j + 1 < thresholds.size(); ++j) {
        if (std::isnan(thresholds[j]) || !(thresholds[j] < thresholds[j + 1])) {
            throw std::invalid_argument("quantizer: thresholds must be strictly increasing");
        }
    }
    for (std::size_t j = 0; j < levels.size(); ++j) {
        if (std::find(levels.begin() + static_cast<std::ptrdiff_t>(j) + 1, levels.end(), levels[j]) !=
            levels.end()) {
            throw std::invalid_argument("quantizer: duplicate label");
        }
    }
}

ModelSpec::ModelSpec(Probit m) : variant_(std::move(m)) {
    std::get<Probit>(variant_).quantizer.validate();
}

ModelSpec::ModelSpec(TobitI m) : variant_(m) {
    require_sigma(m.sigma);
    if (!(m.lower < m.upper)) throw std::invalid_argument("tobit-I: need lower < upper");
}

ModelSpec::ModelSpec(TobitII m) : variant_(m) {
    require_sigma(m.sigma);
    if (!(m.lower < m.collapsed && m.collapsed < m.upper)) {
        throw std::invalid_argument("tobit-II: need lower < collapsed < upper");
    }
}

ModelSpec::ModelSpec(LogitBinary m) : variant_(m) {}

ModelSpec::ModelSpec(LogitMulti m) : variant_(std::move(m)) {
    const auto& levels = std::get<LogitMulti>(variant_).levels;
    if (levels.size() < 2 || static_cast<int>(levels.size()) > kMaxScores + 1) {
        throw std::invalid_argument("logit-multi: need 2 <= J <= 16 classes");
    }
}

ModelSpec ModelSpec::binary_probit(double eta, double sigma) {
    const double cut[] = {eta};
    return ModelSpec(Probit{QuantizerSpec::from_interior({-1.0, 1.0}, cut, sigma)});
}

int ModelSpec::score_count() const {
    if (const auto* m = std::get_if<LogitMulti>(&variant_)) return static_cast<int>(m->levels.size()) - 1;
    return 1;
}

const QuantizerSpec* ModelSpec::quantizer() const {
    if (const auto* p = std::get_if<Probit>(&variant_)) return &p->quantizer;
    return nullptr;
}

ModelSpec ModelSpec::with_binary_threshold(double eta) const {
    const QuantizerSpec* q = quantizer();
    if (q == nullptr || q->label_count() != 2) {
        throw std::logic_error("with_binary_threshold: model is not a binary Probit");
    }
    const double cut[] = {eta};
    return ModelSpec(Probit{QuantizerSpec::from_interior(q->levels, cut, q->sigma)});
}

std::string ModelSpec::tag() const {
    return std::visit(overloaded{[](const Probit&) { return std::string("probit"); },
                                 [](const TobitI&) { return std::string("tobit1"); },
                                 [](const TobitII&) { return std::string("tobit2"); },
                                 [](const LogitBinary&) { return std::string("logit"); },
                                 [](const LogitMulti&) { return std::string("logit_multi"); }},
                      variant_);
}

bool is_known_model_tag(std::string_view tag) {
    return tag == "probit" || tag == "tobit1" || tag == "tobit2" || tag == "logit" || tag == "logit_multi";
}

std::size_t label_index(const ModelSpec& model, double y) {
    return std::visit(
        overloaded{[&](const Probit& m) { return level_index(m.quantizer.levels, y); },
                   [&](const LogitMulti& m) { return level_index(m.levels, y); },
                   [&](const LogitBinary&) {
                       if (y != 0.0 && y != 1.0) throw std::domain_error("logit: label must be 0 or 1");
                       return static_cast<std::size_t>(y);
                   },
                   [](const auto&) -> std::size_t {
                       throw std::domain_error("label_index: model has a continuous output");
                   }},
        model.variant());
}

double forward_map(const ModelSpec& model, double x) {
    return std::visit(overloaded{[&](const Probit& m) {
                                     const auto& th = m.quantizer.thresholds;
                                     // first j with x <= thresholds[j + 1]
                                     const auto it = std::lower_bound(th.begin() + 1, th.end(), x);
                                     const auto j = std::min<std::ptrdiff_t>(it - th.begin() - 1,
                                                                             static_cast<std::ptrdiff_t>(
                                                                                 m.quantizer.levels.size()) -
                                                                                 1);
                                     return m.quantizer.levels[static_cast<std::size_t>(j)];
                                 },
                                 [&](const TobitI& m) { return std::clamp(x, m.lower, m.upper); },
                                 [&](const TobitII& m) {
                                     return (x > m.lower && x < m.upper) ? m.collapsed : x;
                                 },
                                 [&](const LogitBinary&) { return sigmoid(x); },
                                 [](const LogitMulti&) -> double {
                                     throw std::domain_error("forward_map: logit-multi needs a score vector");
                                 }},
                      model.variant());
}

double predict(const ModelSpec& model, std::span<const double> scores) {
    check_scores(model, scores);
    if (const auto* m = std::get_if<LogitMulti>(&model.variant())) {
        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (scores[j] > best_score) {
                best_score = scores[j];
                best = j + 1;
            }
        }
        return m->levels[best];
    }
    return forward_map(model, scores[0]);
}

EntryDerivs entry_derivs(const ModelSpec& model, double y, double x) {
    return std::visit(overloaded{[&](const Probit& m) { return probit_derivs(m, y, x); },
                                 [&](const TobitI& m) { return tobit1_derivs(m, y, x); },
                                 [&](const TobitII& m) { return tobit2_derivs(m, y, x); },
                                 [&](const LogitBinary&) { return logit_derivs(y, x); },
                                 [&](const LogitMulti& m) -> EntryDerivs {
                                     if (m.levels.size() != 2) {
                                         throw std::domain_error("entry_derivs: logit-multi needs score_derivs");
                                     }
                                     const ScoreDerivs sd = multi_derivs(m, y, {&x, 1});
                                     return {sd.loglik, sd.grad[0], sd.hess(0, 0)};
                                 }},
                      model.variant());
}

double entry_log_lik(const ModelSpec& model, double y, double x) { return entry_derivs(model, y, x).loglik; }

double score_log_lik(const ModelSpec& model, double y, std::span<const double> scores) {
    return score_derivs(model, y, scores).loglik;
}

ScoreDerivs score_derivs(const ModelSpec& model, double y, std::span<const double> scores) {
    check_scores(model, scores);
    if (const auto* m = std::get_if<LogitMulti>(&model.variant())) return multi_derivs(*m, y, scores);
    const EntryDerivs e = entry_derivs(model, y, scores[0]);
    ScoreDerivs out;
    out.loglik = e.loglik;
    out.grad.setConstant(1, e.d1);
    out.hess.setConstant(1, 1, e.d2);
    return out;
}

double stable_log_tail_diff(double a, double b) { return gaussian::log_tail_diff(a, b); }

SmoothnessBounds probit_smoothness(const QuantizerSpec& q) {
    const double span = q.finite_span();
    const double s2 = q.sigma * q.sigma;
    return {span / s2, (span * span / s2 + 1.0) / s2};
}

}  // namespace catsketch
