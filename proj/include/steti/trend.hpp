#pragma once

#include <utility>
#include <vector>

#include "steti/common.hpp"

namespace steti::trend {

// Exponential growth-curve parameters: lifetime at the epoch year and the
// doubling time in years.
struct MooresLawParams {
    double l_epoch = 1.0;   // lifetime predicted at the epoch
    double d = 10.0;        // doubling time, > 0 for growth
    double epoch = 1959.0;
};

struct FailurePoint {
    double failure_time = 0.0;  // decimal year
    double lifetime = 0.0;      // observed, years
};

// l(t_launch) = l_epoch * 2^((t_launch - epoch) / d)
double launch_curve(double launch_time, const MooresLawParams& p);

// Solves the implicit failure-time form l = l_epoch * 2^((t_failure - l - epoch) / d)
// by bisection. The left side is increasing and the right side decreasing in l,
// so the root is unique; residual below 1e-9 on success.
double solve_failure_lifetime(double failure_time, const MooresLawParams& p);

inline constexpr double kImplicitSolveTolerance = 1e-9;
inline constexpr int kImplicitSolveMaxIterations = 200;

// Callable launch-time curve with fitted parameters plugged back in.
struct LaunchCurve {
    MooresLawParams params;
    double operator()(double launch_time) const { return launch_curve(launch_time, params); }
};

inline LaunchCurve plug_back(const MooresLawParams& p) { return LaunchCurve{p}; }

// Least squares in log2 space over (l_epoch, d): minimizes
//   sum (log2 l_observed - log2 solve_failure_lifetime(t_failure))^2
// via a coarse grid over (log2 l_epoch, 1/d) refined by Nelder-Mead.
MooresLawParams fit_closed_form(const std::vector<FailurePoint>& points, double epoch = 1959.0);

// Ordinary least squares of log2(lifetime) on launch date. Returns
// (intercept, slope); the slope estimates the growth rate 1/d and is biased
// low when recent long-lived records are censored out.
std::pair<double, double> naive_launch_fit(const std::vector<FailurePoint>& points);

double mse(const std::vector<double>& y, const std::vector<double>& y_hat);
double rmse(const std::vector<double>& y, const std::vector<double>& y_hat);

}  // namespace steti::trend
