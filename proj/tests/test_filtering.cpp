#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pamtomo/filtering.hpp"
#include "testutil.hpp"

#include <cmath>
#include <random>

using namespace pamtomo;
using testutil::make_params;
using testutil::stats_of;

namespace {

constexpr double pi = 3.14159265358979323846;

MeasurementRecord blank_record(const SystemParams& p, const ProtocolSchedule& s, double dt)
{
    MeasurementRecord r;
    r.params = p;
    r.schedule = s;
    r.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(s.T / dt));
    r.dq_x.assign(n, 0.0);
    r.dq_y.assign(n, 0.0);
    return r;
}

// classical oracle for the variance of the exponential-kernel estimate:
// quadratic form w^T C w on a discretized grid, where C is the covariance of
// the record increments of the equivalent linear filtering model
double kernel_variance_oracle(const SystemParams& p, const ProtocolSchedule& s, int n)
{
    const bool blue = p.regime == Regime::BlueDetuned;
    const double g = p.gamma, nth = p.n_th, eta = p.eta, mu = p.mu, chi = p.chi;
    const double r = blue ? (chi + mu - g) / 2.0 : (chi - g) / 2.0;
    const double signal = blue ? std::sqrt(eta * mu) : 2.0 * std::sqrt(eta * mu);
    const double dt = s.T / n;

    std::vector<double> kgain(n), varm(n);
    double v = 0.5, acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = blue ? std::sqrt(eta * mu) * (v + 0.5) : 2.0 * std::sqrt(eta * mu) * v;
        kgain[i] = k;
        varm[i] = acc;
        const double pump = blue ? (g * (1.0 + 2.0 * nth) + mu) / 2.0
                                 : g * (1.0 + 2.0 * nth) / 2.0 + mu;
        v += (2.0 * r * v + pump - k * k) * dt;
        acc = (acc + k * k * dt) * std::exp(2.0 * r * dt);
    }
    const FilterKernel ky = filter_kernel_y(p, s);
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = ky.at(i * dt);

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += w[i] * w[i] * (dt + signal * signal * dt * dt * varm[i]);
        double ex = 1.0;
        for (int j = i + 1; j < n; ++j) {
            ex *= std::exp(r * dt);
            const double cross =
                signal * dt * ex * kgain[i] * dt + signal * signal * dt * dt * ex * varm[i];
            total += 2.0 * w[i] * w[j] * cross;
        }
    }
    return total;
}

} // namespace

TEST_CASE("all-zero record maps to the zero estimate")
{
    const auto p = make_params(0.5, 0.3, 2.0, 0.9, 1.0);
    const ProtocolSchedule s{0.1, 0.5, true, 0.0};
    const auto r = blank_record(p, s, 1e-4);
    const auto [x, y] = estimate_quadratures(r, filter_kernel_x(p, s), filter_kernel_y(p, s));
    CHECK(x == 0.0);
    CHECK(y == 0.0);
}

TEST_CASE("kernel mismatch is a contract error")
{
    const auto p = make_params(0.5, 0.3, 2.0, 0.9, 1.0);
    const ProtocolSchedule s{0.1, 0.5, true, 0.0};
    const auto r = blank_record(p, s, 1e-4);
    const auto other = make_params(0.5, 0.3, 2.0, 0.9, 1.5);
    CHECK_THROWS_AS(
        (void)estimate_quadratures(r, filter_kernel_x(other, s), filter_kernel_y(other, s)),
        ContractError);
}

TEST_CASE("the filter inverts the noiseless mean dynamics")
{
    // deterministic record carrying the ensemble-mean signal of a coherent state
    const double g = 0.5, nth = 0.3, eta = 0.9, mu = 2.0, chi = 1.2, tau = 0.4, T = 2.0;
    const double x0 = 1.3, y0 = -0.8;
    const auto p = make_params(g, nth, mu, eta, chi);
    const ProtocolSchedule s{tau, T, true, 0.0};

    double err_prev = 0.0;
    for (const double dt : {2e-4, 1e-4}) {
        auto r = blank_record(p, s, dt);
        const double my0 = y0 * std::exp((chi - g) * tau / 2.0);
        const double mx0 = x0 * std::exp(-(chi + g) * tau / 2.0);
        for (std::size_t i = 0; i < r.dq_y.size(); ++i) {
            const double t = i * dt;
            r.dq_y[i] = 2.0 * std::sqrt(eta * mu) * my0 * std::exp((chi - g) * t / 2.0) * dt;
            r.dq_x[i] = 2.0 * std::sqrt(eta * mu) * mx0 * std::exp(-(chi + g) * t / 2.0) * dt;
        }
        const auto [xe, ye] =
            estimate_quadratures(r, filter_kernel_x(p, s), filter_kernel_y(p, s));
        const double err = std::max(std::abs(xe - x0), std::abs(ye - y0));
        CHECK(err < 2e-3 * (dt / 1e-4));
        if (err_prev != 0.0) CHECK(err < 0.7 * err_prev); // first order in dt
        err_prev = err;
    }
}

TEST_CASE("ito isometry of the discrete kernel sum")
{
    const auto p = make_params(0.5, 0.3, 2.0, 0.8, 2.0);
    const ProtocolSchedule s{0.0, 1.5, true, 0.0};
    const FilterKernel ky = filter_kernel_y(p, s);
    const double dt = 5e-4;
    const double expect = ky.sum_h2(dt);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd(0.0, std::sqrt(dt));
    const int n_records = 4000;
    std::vector<double> vals(n_records);
    auto r = blank_record(p, s, dt);
    for (int k = 0; k < n_records; ++k) {
        for (auto& q : r.dq_y) q = nd(rng);
        const auto [xe, ye] = estimate_quadratures(r, filter_kernel_x(p, s), ky);
        (void)xe;
        vals[k] = ye;
    }
    const auto st = stats_of(vals);
    CHECK(std::abs(st.mean) < 3.0 * st.se_mean);
    CHECK(std::abs(st.var - expect) < 3.0 * st.se_var);
}

TEST_CASE("estimates reproduce the coherent-state statistics (zero detuning)")
{
    const double g = 0.5, nth = 0.3, eta = 0.8, mu = 2.0, chi = 2.0;
    const auto p = make_params(g, nth, mu, eta, chi);
    const cx a0(1.0, 0.5);
    const double x0 = std::sqrt(2.0) * a0.real(), y0 = std::sqrt(2.0) * a0.imag();

    SUBCASE("one-step")
    {
        const double T = 2.0 * characteristic_time(p);
        const ProtocolSchedule s{0.0, T, true, 0.0};
        const auto recs = simulate_ensemble(coherent_state(a0, 28), p, {s}, 2.5e-4, 800, 2024);
        std::vector<double> xs, ys;
        for (const auto& r : recs) {
            const GaussianPovmElement e = povm_element(r);
            xs.push_back(e.x_est);
            ys.push_back(e.y_est);
        }
        const auto sx = stats_of(xs), sy = stats_of(ys);
        CHECK(std::abs(sx.mean - x0) < 3.0 * sx.se_mean);
        CHECK(std::abs(sy.mean - y0) < 3.0 * sy.se_mean);
        // sample variance against the classical oracle for this kernel
        const double oracle = kernel_variance_oracle(p, s, 500);
        CHECK(std::abs(sy.var - oracle) < 3.0 * sy.se_var);
        // and the oracle itself sits within a few percent of the closed form
        const EstimateStats st = estimate_stats(p, s);
        CHECK(oracle == doctest::Approx(st.sigma2_y).epsilon(0.03));
    }
    SUBCASE("two-step maintained")
    {
        const double ct = characteristic_time(p);
        const ProtocolSchedule s{1.0 * ct, 2.0 * ct, true, 0.0};
        const auto recs = simulate_ensemble(coherent_state(a0, 28), p, {s}, 2.5e-4, 800, 4048);
        std::vector<double> ys;
        for (const auto& r : recs) ys.push_back(povm_element(r).y_est);
        const auto sy = stats_of(ys);
        CHECK(std::abs(sy.mean - y0) < 3.0 * sy.se_mean);
        const EstimateStats st = estimate_stats(p, s);
        CHECK(std::abs(sy.var - st.sigma2_y) < 3.0 * sy.se_var + 0.03 * st.sigma2_y);
    }
}

TEST_CASE("estimates reproduce the coherent-state statistics (blue detuning)")
{
    const double g = 0.5, nth = 0.2, eta = 0.8, mu = 1.5, chi = 1.5;
    const auto p = make_params(g, nth, mu, eta, chi, Regime::BlueDetuned);
    const cx a0(1.0, 0.5);
    const double y0 = std::sqrt(2.0) * a0.imag();
    const double T = 1.0 * characteristic_time(p);
    const ProtocolSchedule s{0.0, T, true, 0.0};
    const auto recs = simulate_ensemble(coherent_state(a0, 30), p, {s}, 2e-4, 500, 31337);
    std::vector<double> ys;
    for (const auto& r : recs) ys.push_back(povm_element(r).y_est);
    const auto sy = stats_of(ys);
    CHECK(std::abs(sy.mean - y0) < 3.0 * sy.se_mean);
    const double oracle = kernel_variance_oracle(p, s, 500);
    CHECK(std::abs(sy.var - oracle) < 3.0 * sy.se_var);
}

TEST_CASE("frame covariance")
{
    // rotating the drive phase by 2*delta and the initial state by delta gives
    // the identical trial-frame experiment (bitwise, same seed)
    const auto p = make_params(0.5, 0.3, 2.0, 0.9, 1.5);
    const cx a0(0.9, -0.4);
    const double delta = 0.8;
    ProtocolSchedule s1{0.05, 0.2, true, 0.6};
    ProtocolSchedule s2{0.05, 0.2, true, 0.6 + 2.0 * delta};
    const FockState psi1 = coherent_state(a0, 24);
    const FockState psi2 = rotate_state(psi1, delta);
    const auto r1 = simulate_trajectory(psi1, p, s1, 1e-4, 99);
    const auto r2 = simulate_trajectory(psi2, p, s2, 1e-4, 99);
    REQUIRE(r1.dq_y.size() == r2.dq_y.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < r1.dq_y.size(); ++i) {
        worst = std::max(worst, std::abs(r1.dq_x[i] - r2.dq_x[i]));
        worst = std::max(worst, std::abs(r1.dq_y[i] - r2.dq_y[i]));
    }
    CHECK(worst < 1e-11); // identical up to phase-rotation rounding
    const GaussianPovmElement e1 = povm_element(r1);
    const GaussianPovmElement e2 = povm_element(r2);
    CHECK(e1.x_est == doctest::Approx(e2.x_est).epsilon(1e-9));
    CHECK(e1.y_est == doctest::Approx(e2.y_est).epsilon(1e-9));
    CHECK(e1.frame_angle == doctest::Approx(0.3));
    CHECK(e2.frame_angle == doctest::Approx(0.3 + delta));
}

TEST_CASE("povm element packaging and normalization")
{
    const auto p = make_params(0.5, 0.3, 2.0, 0.9, 1.5);
    const ProtocolSchedule s{0.05, 0.4, true, 1.1};
    auto r = blank_record(p, s, 1e-4);
    r.seed = 4242;
    const GaussianPovmElement e = povm_element(r);
    const EstimateStats st = estimate_stats(p, s);
    CHECK(e.sigma2_x == doctest::Approx(st.sigma2_x));
    CHECK(e.sigma2_y == doctest::Approx(st.sigma2_y));
    CHECK(e.frame_angle == doctest::Approx(0.55));
    CHECK(e.trial_seed == 4242);

    // the element's Gaussian integrates to one over the estimate plane
    const double sx = std::sqrt(e.sigma2_x), sy = std::sqrt(e.sigma2_y), rho = 0.3;
    const int n = 400;
    const double lx = 7.0 * sx, ly = 7.0 * sy;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -lx + 2.0 * lx * (i + 0.5) / n;
            const double y = -ly + 2.0 * ly * (j + 0.5) / n;
            const double q = (x * x / (sx * sx) + y * y / (sy * sy) -
                              2.0 * rho * x * y / (sx * sy)) /
                             (2.0 * (1.0 - rho * rho));
            acc += std::exp(-q) * (2.0 * lx / n) * (2.0 * ly / n);
        }
    acc /= 2.0 * pi * sx * sy * std::sqrt(1.0 - rho * rho);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("povm file round trip")
{
    std::vector<GaussianPovmElement> elems;
    for (int k = 0; k < 5; ++k) {
        GaussianPovmElement e;
        e.x_est = 0.1 * k;
        e.y_est = -0.2 * k;
        e.sigma2_x = 1.0 + 0.1 * k;
        e.sigma2_y = 0.8;
        e.rho_c = 0.0;
        e.frame_angle = 0.3 * k;
        e.trial_seed = 100 + k;
        elems.push_back(e);
    }
    write_povm_elements("io_test_povm.tsv", elems, {"deadbeef", "test"});
    PovmFileMeta meta;
    const auto back = read_povm_elements("io_test_povm.tsv", &meta);
    CHECK(meta.config_hash == "deadbeef");
    REQUIRE(back.size() == elems.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].x_est == elems[k].x_est);
        CHECK(back[k].sigma2_x == elems[k].sigma2_x);
        CHECK(back[k].frame_angle == elems[k].frame_angle);
        CHECK(back[k].trial_seed == elems[k].trial_seed);
    }
}
