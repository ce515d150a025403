#include "catsketch/threshold.hpp"

#include <cmath>
#include <stdexcept>

#include "catsketch/gaussian.hpp"

namespace catsketch {

namespace {

double binary_label(double y) {
    if (y != 1.0 && y != -1.0) throw std::domain_error("threshold: labels must be -1 or +1");
    return y;
}

}  // namespace

double threshold_grad(const PartialDatum& datum, const Subspace& U, const Vec& psi, double eta, double sigma,
                      ThresholdGradForm form) {
    if (!(sigma > 0.0)) throw std::invalid_argument("threshold: sigma must be positive");
    double g = 0.0;
    for (const Entry& e : datum.entries) {
        const double y = binary_label(e.value);
        const double b = y * (eta - U.matrix().row(e.row).dot(psi)) / sigma;
        const double lead = form == ThresholdGradForm::Exact ? y : b;
        g += lead * gaussian::hazard(b) / sigma;
    }
    return g;
}

double threshold_cost(const PartialDatum& datum, const Subspace& U, const Vec& psi, double eta, double sigma) {
    double c = 0.0;
    for (const Entry& e : datum.entries) {
        const double y = binary_label(e.value);
        c -= gaussian::log_tail(y * (eta - U.matrix().row(e.row).dot(psi)) / sigma);
    }
    return c;
}

ThresholdState threshold_step(const ThresholdState& state, const PartialDatum& datum, const Subspace& U,
                              const Vec& psi, double gamma, double sigma, ThresholdGradForm form) {
    const double next = state.eta - gamma * threshold_grad(datum, U, psi, state.eta, sigma, form);
    if (!std::isfinite(next)) throw NumericalError("threshold_step", datum.t, "non-finite eta");
    return {next};
}

}  // namespace catsketch
