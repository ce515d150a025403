#pragma once

// Standard normal density and tail arithmetic in the log domain.
//
// Q(z) denotes the upper tail P(N(0,1) > z). Everything here is evaluated so
// that ratios of near-equal tails stay finite: log Q uses erfc in the body and
// a continued fraction for the Mills ratio once erfc would underflow.

namespace catsketch::gaussian {

/// Arguments are clamped to [-kZLimit, kZLimit] before squaring.
inline constexpr double kZLimit = 1e150;

double pdf(double z);
double log_pdf(double z);

/// Q(z) = P(N(0,1) > z).
double tail(double z);

/// log Q(z); finite for every finite z, 0 at -inf, -inf at +inf.
double log_tail(double z);

/// Hazard (inverse Mills ratio) phi(z) / Q(z).
double hazard(double z);

/// hazard(z) - z, evaluated without cancellation for large positive z.
/// Always in (0, 1/z) for z > 0.
double hazard_excess(double z);

/// log(Q(a) - Q(b)) for a < b, either end possibly infinite.
///
/// Narrow intervals (width times scale below 1) are integrated directly with
/// an 8-point Gauss-Legendre rule taken relative to the midpoint density,
/// which keeps full relative precision when the two tails nearly cancel.
/// Otherwise the result is log Q(a) + log1p(-exp(log Q(b) - log Q(a))) on the
/// side of zero where both tails are small, and log1p(-Q(-a) - Q(b)) when the
/// interval straddles zero. The result never saturates for finite a < b.
///
/// Throws std::domain_error unless a < b.
double log_tail_diff(double a, double b);

/// Moments of N(0,1) truncated to (a, b], either end possibly infinite.
struct Truncated {
    double log_mass;
    double mean;
    double variance;
};

/// Same regimes as log_tail_diff; narrow intervals use the quadrature for
/// the moments as well, so mean and variance keep relative precision.
Truncated truncated_moments(double a, double b);

}  // namespace catsketch::gaussian
