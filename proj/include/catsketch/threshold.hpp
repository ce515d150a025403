#pragma once

#include "catsketch/datum.hpp"
#include "catsketch/subspace.hpp"

namespace catsketch {

/// Binary Probit threshold learning; labels are -1 / +1.
struct ThresholdState {
    double eta = 0.0;
};

enum class ThresholdGradForm {
    /// Exact derivative: zeta_i = -y_i h(b_i) / sigma.
    Exact,
    /// Literal printed variant with b_i in place of y_i: zeta_i = -b_i h(b_i) / sigma.
    Literal,
};

/// d g_t / d eta = -sum_i zeta_i with b_i = y_i (eta - u_i' psi) / sigma and
/// h the inverse Mills ratio. Throws std::domain_error for labels other than +-1.
double threshold_grad(const PartialDatum& datum, const Subspace& U, const Vec& psi, double eta, double sigma,
                      ThresholdGradForm form = ThresholdGradForm::Exact);

/// Negative log-likelihood of the datum as a function of eta alone.
double threshold_cost(const PartialDatum& datum, const Subspace& U, const Vec& psi, double eta, double sigma);

/// eta <- eta - gamma * threshold_grad(...). Call with U[t], after the subspace step.
ThresholdState threshold_step(const ThresholdState& state, const PartialDatum& datum, const Subspace& U,
                              const Vec& psi, double gamma, double sigma,
                              ThresholdGradForm form = ThresholdGradForm::Exact);

}  // namespace catsketch
