#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pamtomo/sampler.hpp"
#include "testutil.hpp"

#include <cmath>
#include <random>

using namespace pamtomo;
using testutil::make_params;
using testutil::stats_of;

namespace {

constexpr double pi = 3.14159265358979323846;

double gaussian2(double x, double y, double x0, double y0, double s2x, double s2y)
{
    const double n = 1.0 / (2.0 * pi * std::sqrt(s2x * s2y));
    return n * std::exp(-0.5 * (x - x0) * (x - x0) / s2x - 0.5 * (y - y0) * (y - y0) / s2y);
}

} // namespace

TEST_CASE("density of a coherent truth is the closed-form Gaussian")
{
    const cx a0(0.8, -0.6);
    const double x0 = std::sqrt(2.0) * a0.real(), y0 = std::sqrt(2.0) * a0.imag();
    for (auto [s2x, s2y] : {std::pair{1.0, 1.0}, {2.3, 0.8}, {5.0, 0.62}}) {
        const PovmSampler smp(coherent_state(a0, 40), s2x, s2y);
        for (double x : {-1.0, 0.4, 1.8})
            for (double y : {-2.0, 0.0, 1.1}) {
                const double expect = gaussian2(x, y, x0, y0, s2x, s2y);
                CHECK(smp.density(x, y) == doctest::Approx(expect).epsilon(1e-8));
            }
    }
}

TEST_CASE("density of a cat truth normalizes and shows fringes")
{
    const FockState cat = cat_state(cx(2.0, 0.0), 48);
    const PovmSampler smp(cat, 2.3, 0.65);
    const int n = 161;
    const double l = 9.0;
    double acc = 0.0, min_d = 1e9;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -l + 2.0 * l * i / (n - 1);
            const double y = -l + 2.0 * l * j / (n - 1);
            const double d = smp.density(x, y);
            min_d = std::min(min_d, d);
            acc += d;
        }
    acc *= (2.0 * l / (n - 1)) * (2.0 * l / (n - 1));
    CHECK(acc == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(min_d >= 0.0);
    // interference beats along y at x = 0 for a near-homodyne element
    const PovmSampler sharp(cat, 8.0, 0.55);
    const double peak = sharp.density(0.0, 0.0);
    bool dips = false;
    for (double y = 0.1; y < 1.2; y += 0.05)
        dips = dips || sharp.density(0.0, y) < 0.25 * peak;
    CHECK(peak > 0.0);
    CHECK(dips);
}

TEST_CASE("sample moments match the element statistics")
{
    const cx a0(1.0, 0.5);
    const double x0 = std::sqrt(2.0) * a0.real(), y0 = std::sqrt(2.0) * a0.imag();
    const double s2x = 2.04, s2y = 0.70;
    const PovmSampler smp(coherent_state(a0, 40), s2x, s2y);
    std::mt19937_64 rng(7);
    std::vector<double> xs, ys;
    for (int i = 0; i < 3000; ++i) {
        const auto [x, y] = smp.sample(rng);
        xs.push_back(x);
        ys.push_back(y);
    }
    const auto sx = stats_of(xs), sy = stats_of(ys);
    CHECK(std::abs(sx.mean - x0) < 3.0 * sx.se_mean);
    CHECK(std::abs(sy.mean - y0) < 3.0 * sy.se_mean);
    CHECK(std::abs(sx.var - s2x) < 3.0 * sx.se_var);
    CHECK(std::abs(sy.var - s2y) < 3.0 * sy.se_var);
}

TEST_CASE("trial bookkeeping of sample_povm_elements")
{
    const auto p = make_params(0.25, 0.3, 50.0, 0.9, 40.0);
    ProtocolSchedule sched{0.0, 0.0, true, 0.0};
    const double ct = characteristic_time(p);
    sched.tau = 2.0 * ct;
    sched.T = 2.0 * ct;
    const FockState truth = coherent_state(cx(1.0, 0.0), 32);

    const auto a = sample_povm_elements(truth, p, sched, 100, 50, 99);
    REQUIRE(a.elements.size() == 100);
    const EstimateStats st = estimate_stats(p, sched);
    for (int k = 0; k < 100; ++k) {
        CHECK(a.elements[k].frame_angle == doctest::Approx(pi * (k % 50) / 50.0));
        CHECK(a.elements[k].sigma2_y == doctest::Approx(st.sigma2_y));
        CHECK(a.elements[k].rho_c == 0.0);
    }
    // deterministic with respect to the base seed
    const auto b = sample_povm_elements(truth, p, sched, 100, 50, 99);
    for (int k = 0; k < 100; ++k) {
        CHECK(a.elements[k].x_est == b.elements[k].x_est);
        CHECK(a.elements[k].y_est == b.elements[k].y_est);
    }
    const auto c = sample_povm_elements(truth, p, sched, 100, 50, 100);
    CHECK(a.elements[0].x_est != c.elements[0].x_est);
}

TEST_CASE("rotationally covariant sampling of a displaced truth")
{
    // sampling a rotated frame must see the rotated mean
    const auto p = make_params(0.5, 0.3, 2.0, 0.9, 0.0);
    const ProtocolSchedule sched{0.0, 4.0, true, 0.0};
    const FockState truth = coherent_state(cx(1.2, 0.0), 32);
    const auto s = sample_povm_elements(truth, p, sched, 4000, 4, 1717);
    // phase k=2 -> theta = pi -> frame angle pi/2: trial x axis along lab y,
    // so the trial-frame mean of x_est is <Y>_lab = 0 and y_est sees -x0
    std::vector<double> xs, ys;
    for (int k = 2; k < 4000; k += 4) {
        xs.push_back(s.elements[k].x_est);
        ys.push_back(s.elements[k].y_est);
    }
    const auto sx = stats_of(xs), sy = stats_of(ys);
    const double x0 = std::sqrt(2.0) * 1.2;
    CHECK(std::abs(sx.mean) < 3.0 * sx.se_mean);
    CHECK(std::abs(sy.mean + x0) < 3.0 * sy.se_mean);
}
