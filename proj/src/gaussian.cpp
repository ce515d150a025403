#include "catsketch/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace catsketch::gaussian {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// erfc(z / sqrt 2) underflows near z = 37.5; switch well before that.
constexpr double kErfcLimit = 30.0;
// Below this the continued fraction converges too slowly to be worth it.
constexpr double kFractionLimit = 5.0;

double clamp_z(double z) { return std::clamp(z, -kZLimit, kZLimit); }

// 1 / (z + 2 / (z + 3 / (z + ...))) by the modified Lentz method.
// Q(z) = phi(z) / (z + fraction_tail(z)) for z > 0.
double fraction_tail(double z) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double f = tiny;
    double c = tiny;
    double d = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = static_cast<double>(n);
        d = z + a * d;
        if (d == 0.0) d = tiny;
        c = z + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return f;
}

// log(1 - exp(x)) for x < 0.
double log1mexp(double x) {
    return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

constexpr std::array<double, 4> kNodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                          0.9602898564975363};
constexpr std::array<double, 4> kWeights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                            0.1012285362903763};

// Gauss-Legendre on (a, b] relative to the midpoint density.
Truncated interval_quadrature(double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
        for (const double s : {-1.0, 1.0}) {
            const double off = s * half * kNodes[k];
            const double w = kWeights[k] * std::exp(-mid * off - 0.5 * off * off);
            m0 += w;
            m1 += w * off;
            m2 += w * off * off;
        }
    }
    const double shift = m1 / m0;
    return {std::log(half) + log_pdf(mid) + std::log(m0), mid + shift, std::max(0.0, m2 / m0 - shift * shift)};
}

bool is_narrow(double a, double b) { return (b - a) * std::max({1.0, std::abs(a), std::abs(b)}) < 1.0; }

Truncated upper_moments(double a) {
    const double h = hazard(a);
    return {log_tail(a), h, std::clamp(1.0 - h * hazard_excess(a), 0.0, 1.0)};
}

}  // namespace

double pdf(double z) { return std::exp(log_pdf(z)); }

double log_pdf(double z) {
    if (std::isinf(z)) return -kInf;
    z = clamp_z(z);
    return -0.5 * z * z - kLogSqrt2Pi;
}

double tail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double log_tail(double z) {
    if (std::isnan(z)) return z;
    if (z == kInf) return -kInf;
    if (z == -kInf) return 0.0;
    z = clamp_z(z);
    if (z < 0.0) return std::log1p(-tail(-z));
    if (z <= kErfcLimit) return std::log(tail(z));
    return log_pdf(z) - std::log(z + fraction_tail(z));
}

double hazard(double z) {
    if (z == -kInf) return 0.0;
    if (z == kInf) return kInf;
    z = clamp_z(z);
    if (z >= kFractionLimit) return z + fraction_tail(z);
    return std::exp(log_pdf(z) - log_tail(z));
}

double hazard_excess(double z) {
    z = clamp_z(z);
    if (z >= kFractionLimit) return fraction_tail(z);
    return hazard(z) - z;
}

double log_tail_diff(double a, double b) {
    if (!(a < b)) {
        throw std::domain_error("log_tail_diff: requires a < b");
    }
    if (a == -kInf && b == kInf) return 0.0;
    if (b == kInf) return log_tail(a);
    if (a == -kInf) return log_tail(-b);

    a = clamp_z(a);
    b = clamp_z(b);
    if (!(a < b)) {
        // Both ends clamped to the same side; the interval is beyond any
        // representable mass difference. Keep the nearer tail.
        return a > 0.0 ? log_tail(a) : log_tail(-b);
    }

    if (is_narrow(a, b)) return interval_quadrature(a, b).log_mass;

    if (a >= 0.0) {
        const double la = log_tail(a);
        return la + log1mexp(log_tail(b) - la);
    }
    if (b <= 0.0) {
        const double la = log_tail(-b);
        return la + log1mexp(log_tail(-a) - la);
    }
    return std::log1p(-(tail(-a) + tail(b)));
}

Truncated truncated_moments(double a, double b) {
    if (!(a < b)) {
        throw std::domain_error("truncated_moments: requires a < b");
    }
    if (a == -kInf && b == kInf) return {0.0, 0.0, 1.0};
    if (b == kInf) return upper_moments(clamp_z(a));
    if (a == -kInf) {
        const Truncated m = upper_moments(clamp_z(-b));
        return {m.log_mass, -m.mean, m.variance};
    }
    a = clamp_z(a);
    b = clamp_z(b);
    if (!(a < b)) {
        if (a > 0.0) return upper_moments(a);
        const Truncated m = upper_moments(-b);
        return {m.log_mass, -m.mean, m.variance};
    }
    if (is_narrow(a, b)) return interval_quadrature(a, b);

    const double lw = log_tail_diff(a, b);
    const double ra = std::exp(log_pdf(a) - lw);
    const double rb = std::exp(log_pdf(b) - lw);
    const double mean = ra - rb;
    const double var = 1.0 + (a * ra - b * rb) - mean * mean;
    return {lw, mean, std::clamp(var, 0.0, 1.0)};
}

}  // namespace catsketch::gaussian
