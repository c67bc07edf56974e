#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace fleet {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

inline double normal_logpdf(double x, double mean, double sd)
{
    if (!(sd > 0.0)) return kNegInf;
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

// Inverse-gamma with shape a and scale b.
inline double inv_gamma_logpdf(double x, double a, double b)
{
    if (!(x > 0.0)) return kNegInf;
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

// log(mean(exp(v))) without overflow or underflow.
template <typename Derived>
double log_mean_exp(const Eigen::MatrixBase<Derived>& v)
{
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().mean());
}

} // namespace fleet
