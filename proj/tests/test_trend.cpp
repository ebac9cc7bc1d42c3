#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steti/trend.hpp"
#include "support/synthetic.hpp"

using namespace steti;
using namespace steti::trend;

namespace {

// Independent oracle: plain interval halving on g(l) = rhs(l) - l, written
// without reference to the implementation under test.
double oracle_solve(double t_f, double l_epoch, double d, double epoch) {
    double lo = 0.0, hi = 1e9;
    for (int i = 0; i < 300; ++i) {
        double mid = 0.5 * (lo + hi);
        double g = l_epoch * std::pow(2.0, (t_f - mid - epoch) / d) - mid;
        (g > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("launch curve") {
    CHECK(launch_curve(1959.0, {1.0, 10.0, 1959.0}) == doctest::Approx(1.0));
    CHECK(launch_curve(1969.0, {1.0, 10.0, 1959.0}) == doctest::Approx(2.0));
    CHECK(launch_curve(1991.0, {0.5, 16.0, 1959.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(launch_curve(1970.0, {0.0, 10.0, 1959.0}), ValidationError);

    SUBCASE("strictly increasing for d > 0") {
        MooresLawParams p{0.3, 12.0, 1959.0};
        double prev = launch_curve(1959.0, p);
        for (double t = 1960.0; t < 2030.0; t += 1.0) {
            double v = launch_curve(t, p);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("implicit failure-lifetime solve") {
    SUBCASE("frozen oracle values") {
        // l = 2^(-l/10) and l = 2^((20-l)/10), solved by the independent oracle
        CHECK(solve_failure_lifetime(1959.0, {1.0, 10.0, 1959.0}) ==
              doctest::Approx(0.9371092012255342).epsilon(1e-9));
        CHECK(solve_failure_lifetime(1979.0, {1.0, 10.0, 1959.0}) ==
              doctest::Approx(3.203501834284986).epsilon(1e-9));
    }
    SUBCASE("agrees with the oracle across parameter space") {
        for (double d : {1.0, 5.0, 30.0, 100.0})
            for (double l0 : {0.01, 0.5, 10.0})
                for (double t = 1959.0; t <= 2039.0; t += 8.0) {
                    double got = solve_failure_lifetime(t, {l0, d, 1959.0});
                    double want = oracle_solve(t, l0, d, 1959.0);
                    CHECK(got == doctest::Approx(want).epsilon(1e-8));
                    double residual = std::abs(l0 * std::exp2((t - got - 1959.0) / d) - got);
                    CHECK(residual < 1e-9);
                }
    }
    SUBCASE("huge doubling time degenerates to the epoch lifetime") {
        CHECK(solve_failure_lifetime(1990.0, {0.7, 1e12, 1959.0}) == doctest::Approx(0.7).epsilon(1e-9));
    }
    SUBCASE("strictly increasing in failure time") {
        Rng rng(11);
        for (int c = 0; c < 50; ++c) {
            MooresLawParams p{std::exp2(rng.uniform(-5.0, 3.0)), rng.uniform(1.0, 100.0), 1959.0};
            double prev = solve_failure_lifetime(1959.0, p);
            for (double t = 1961.0; t < 2040.0; t += 2.0) {
                double v = solve_failure_lifetime(t, p);
                CHECK(v > prev);
                prev = v;
            }
        }
    }
    SUBCASE("interconversion identity with the launch curve") {
        MooresLawParams p{0.3, 12.0, 1959.0};
        auto curve = plug_back(p);
        for (double t = 1960.0; t <= 2030.0; t += 3.5) {
            double l = solve_failure_lifetime(t, p);
            CHECK(curve(t - l) == doctest::Approx(l).epsilon(1e-9));
        }
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(solve_failure_lifetime(1990.0, {1.0, -3.0, 1959.0}), ValidationError);
        CHECK_THROWS_AS(solve_failure_lifetime(1990.0, {-1.0, 3.0, 1959.0}), ValidationError);
    }
}

TEST_CASE("closed-form fit recovers noiseless parameters") {
    MooresLawParams truth{0.3, 12.0, 1959.0};
    std::vector<FailurePoint> pts;
    for (double t_l = 1959.0; t_l <= 2005.0; t_l += 1.0) {
        double l = launch_curve(t_l, truth);
        pts.push_back({t_l + l, l});
    }
    auto fit = fit_closed_form(pts, 1959.0);
    CHECK(std::abs(fit.l_epoch - truth.l_epoch) / truth.l_epoch < 1e-6);
    CHECK(std::abs(fit.d - truth.d) / truth.d < 1e-6);
}

TEST_CASE("closed-form fit degenerate inputs") {
    CHECK_THROWS_WITH_AS(fit_closed_form({{1980.0, 2.0}, {1980.0, 2.0}}, 1959.0),
                         doctest::Contains("degenerate"), ValidationError);
    CHECK_THROWS_AS(fit_closed_form({{1980.0, 2.0}, {1990.0, 3.0}}, 1959.0), ValidationError);
    CHECK_THROWS_AS(fit_closed_form({{1980.0, -2.0}, {1990.0, 3.0}, {1995.0, 4.0}}, 1959.0),
                    ValidationError);
    CHECK_THROWS_AS(fit_closed_form({}, 1959.0), ValidationError);
}

TEST_CASE("censored cohort: corrected fit beats the naive launch-date fit") {
    testsupport::CohortConfig cfg;  // l_epoch 0.3, d 12, sigma 0.3, cutoff 2023
    const int seeds = 10;
    int steti_ok = 0;
    double slope_sum = 0.0, naive_err_sum = 0.0, steti_err_sum = 0.0;
    const double true_slope = 1.0 / cfg.d;
    for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(1000 + static_cast<std::uint64_t>(seed));
        auto events = testsupport::make_cohort(cfg, rng);
        auto pts = testsupport::failed_points(events);
        REQUIRE(pts.size() >= 50);

        auto fit = fit_closed_form(pts, cfg.epoch);
        if (std::abs(fit.d - cfg.d) / cfg.d <= 0.15) ++steti_ok;

        auto [icept, slope] = naive_launch_fit(pts);
        (void)icept;
        slope_sum += slope;
        naive_err_sum += std::abs(slope - true_slope);
        steti_err_sum += std::abs(1.0 / fit.d - true_slope);
    }
    // failure-time fitting recovers the doubling time per seed
    CHECK(steti_ok >= 8);
    // censoring depresses the launch-date growth rate (statistical, 10 seeds)
    CHECK(slope_sum / seeds < true_slope);
    // and leaves the corrected estimate closer to truth on average
    CHECK(steti_err_sum < naive_err_sum);
}

TEST_CASE("mse and rmse") {
    CHECK(mse({1.0, 2.0}, {1.0, 2.0}) == doctest::Approx(0.0));
    CHECK(mse({0.0, 2.0}, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(rmse({0.0, 2.0}, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(mse({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
    CHECK(rmse({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(2.160246899469287).epsilon(1e-12));
    CHECK_THROWS_AS(mse({1.0}, {1.0, 2.0}), ValidationError);
}
