#include "steti/trend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace steti::trend {

double launch_curve(double launch_time, const MooresLawParams& p) {
    if (!(p.l_epoch > 0.0)) throw ValidationError("launch curve: l_epoch must be > 0");
    if (p.d == 0.0) throw ValidationError("launch curve: doubling time must be nonzero");
    return p.l_epoch * std::exp2((launch_time - p.epoch) / p.d);
}

double solve_failure_lifetime(double failure_time, const MooresLawParams& p) {
    if (!(p.l_epoch > 0.0) || !(p.d > 0.0))
        throw ValidationError("failure-lifetime solve requires l_epoch > 0 and d > 0");
    auto rhs = [&](double l) { return p.l_epoch * std::exp2((failure_time - l - p.epoch) / p.d); };
    // rhs is strictly decreasing in l, so g(l) = rhs(l) - l has a unique root;
    // g(0) > 0 and g(rhs(0)) < 0 bracket it.
    double lo = 0.0;
    double hi = std::max({failure_time - p.epoch + 64.0 * p.d, rhs(0.0), 1e-9});
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kImplicitSolveMaxIterations; ++it) {
        mid = 0.5 * (lo + hi);
        double g = rhs(mid) - mid;
        if (std::abs(g) < kImplicitSolveTolerance) return mid;
        if (g > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(rhs(mid) - mid) < kImplicitSolveTolerance) return mid;
    throw RuntimeError("failure-lifetime solve did not converge for t=" + format_double(failure_time) +
                       ", d=" + format_double(p.d) + ", l_epoch=" + format_double(p.l_epoch));
}

namespace {

double fit_objective(const std::vector<FailurePoint>& points, double epoch, double log2_l, double inv_d) {
    MooresLawParams p{std::exp2(log2_l), 1.0 / inv_d, epoch};
    double sum = 0.0;
    for (const auto& pt : points) {
        double predicted = solve_failure_lifetime(pt.failure_time, p);
        double r = std::log2(pt.lifetime) - std::log2(predicted);
        sum += r * r;
    }
    return sum;
}

// Deterministic Nelder-Mead on a 2-D objective.
std::array<double, 2> nelder_mead(const std::function<double(double, double)>& f,
                                  std::array<double, 2> start, std::array<double, 2> step,
                                  int max_iter, double tol) {
    struct Vertex {
        std::array<double, 2> x;
        double value;
    };
    std::array<Vertex, 3> simplex;
    simplex[0] = {start, f(start[0], start[1])};
    simplex[1] = {{start[0] + step[0], start[1]}, 0.0};
    simplex[1].value = f(simplex[1].x[0], simplex[1].x[1]);
    simplex[2] = {{start[0], start[1] + step[1]}, 0.0};
    simplex[2].value = f(simplex[2].x[0], simplex[2].x[1]);

    for (int it = 0; it < max_iter; ++it) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
        double spread = 0.0;
        for (int d = 0; d < 2; ++d)
            spread = std::max(spread, std::abs(simplex[2].x[d] - simplex[0].x[d]));
        if (spread < tol) break;

        std::array<double, 2> centroid{(simplex[0].x[0] + simplex[1].x[0]) / 2.0,
                                       (simplex[0].x[1] + simplex[1].x[1]) / 2.0};
        auto point_at = [&](double coef) {
            return std::array<double, 2>{centroid[0] + coef * (simplex[2].x[0] - centroid[0]),
                                         centroid[1] + coef * (simplex[2].x[1] - centroid[1])};
        };
        auto reflect = point_at(-1.0);
        double fr = f(reflect[0], reflect[1]);
        if (fr < simplex[0].value) {
            auto expand = point_at(-2.0);
            double fe = f(expand[0], expand[1]);
            simplex[2] = fe < fr ? Vertex{expand, fe} : Vertex{reflect, fr};
        } else if (fr < simplex[1].value) {
            simplex[2] = {reflect, fr};
        } else {
            auto contract = point_at(0.5);
            double fc = f(contract[0], contract[1]);
            if (fc < simplex[2].value) {
                simplex[2] = {contract, fc};
            } else {
                for (int v = 1; v < 3; ++v) {
                    for (int d = 0; d < 2; ++d)
                        simplex[v].x[d] = simplex[0].x[d] + 0.5 * (simplex[v].x[d] - simplex[0].x[d]);
                    simplex[v].value = f(simplex[v].x[0], simplex[v].x[1]);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
    return simplex[0].x;
}

}  // namespace

MooresLawParams fit_closed_form(const std::vector<FailurePoint>& points, double epoch) {
    if (points.empty()) throw ValidationError("closed-form fit: no data points");
    for (const auto& pt : points)
        if (!(pt.lifetime > 0.0))
            throw ValidationError("closed-form fit: lifetimes must be positive");
    bool degenerate = std::all_of(points.begin(), points.end(), [&](const FailurePoint& pt) {
        return std::abs(pt.failure_time - points.front().failure_time) < 1e-12;
    });
    if (degenerate)
        throw ValidationError("closed-form fit: all failure times identical (degenerate data)");
    if (points.size() < 3)
        throw ValidationError("closed-form fit: need at least 3 points, got " +
                              std::to_string(points.size()));

    double lo_l = std::numeric_limits<double>::infinity(), hi_l = -lo_l;
    for (const auto& pt : points) {
        lo_l = std::min(lo_l, std::log2(pt.lifetime));
        hi_l = std::max(hi_l, std::log2(pt.lifetime));
    }
    lo_l -= 2.0;
    hi_l += 2.0;
    const double lo_inv_d = 1.0 / 200.0, hi_inv_d = 1.0;

    auto objective = [&](double log2_l, double inv_d) {
        double clamped_inv_d = std::clamp(inv_d, 1e-4, 2.0);
        return fit_objective(points, epoch, log2_l, clamped_inv_d);
    };

    const int grid = 33;
    double best_val = std::numeric_limits<double>::infinity();
    double best_l = lo_l, best_inv_d = lo_inv_d;
    for (int i = 0; i < grid; ++i) {
        double log2_l = lo_l + (hi_l - lo_l) * i / (grid - 1);
        for (int j = 0; j < grid; ++j) {
            double inv_d = lo_inv_d + (hi_inv_d - lo_inv_d) * j / (grid - 1);
            double v = objective(log2_l, inv_d);
            if (v < best_val) {
                best_val = v;
                best_l = log2_l;
                best_inv_d = inv_d;
            }
        }
    }
    std::array<double, 2> step{(hi_l - lo_l) / (grid - 1), (hi_inv_d - lo_inv_d) / (grid - 1)};
    auto refined = nelder_mead(objective, {best_l, best_inv_d}, step, 600, 1e-11);

    MooresLawParams out;
    out.l_epoch = std::exp2(refined[0]);
    out.d = 1.0 / std::clamp(refined[1], 1e-4, 2.0);
    out.epoch = epoch;
    return out;
}

std::pair<double, double> naive_launch_fit(const std::vector<FailurePoint>& points) {
    if (points.size() < 2) throw ValidationError("naive launch fit: need at least 2 points");
    double sx = 0.0, sy = 0.0;
    for (const auto& pt : points) {
        sx += pt.failure_time - pt.lifetime;
        sy += std::log2(pt.lifetime);
    }
    double mx = sx / points.size(), my = sy / points.size();
    double sxx = 0.0, sxy = 0.0;
    for (const auto& pt : points) {
        double x = pt.failure_time - pt.lifetime - mx;
        sxx += x * x;
        sxy += x * (std::log2(pt.lifetime) - my);
    }
    if (sxx == 0.0) throw ValidationError("naive launch fit: all launch dates identical");
    double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

double mse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size() || y.empty()) throw ValidationError("mse: size mismatch or empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double r = y[i] - y_hat[i];
        sum += r * r;
    }
    return sum / static_cast<double>(y.size());
}

double rmse(const std::vector<double>& y, const std::vector<double>& y_hat) { return std::sqrt(mse(y, y_hat)); }

}  // namespace steti::trend
