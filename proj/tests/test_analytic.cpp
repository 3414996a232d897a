#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pamtomo/analytic.hpp"
#include "testutil.hpp"

#include <cmath>
#include <random>

using namespace pamtomo;
using testutil::make_params;

namespace {

double coth(double x) { return 1.0 / std::tanh(x); }

// Literal transcriptions of the closed forms, used as oracles against the
// numerically hardened implementations.  chi is signed.
double rate_minus_zero_lit(double g, double n, double eta, double mu, double chi)
{
    return std::sqrt((g - chi) * (g - chi) + 8.0 * mu * eta * (g + 2.0 * g * n + 2.0 * mu));
}

double sigma_zero_maint_lit(double g, double n, double eta, double mu, double chi, double tau,
                            double T)
{
    const double G = rate_minus_zero_lit(g, n, eta, mu, chi);
    const double first = (chi + 2.0 * g * n) / (2.0 * (chi - g));
    const double br = (G * coth(G * T / 2.0) + g - chi) / (8.0 * eta * mu) -
                      g * (1.0 + 2.0 * n) / (2.0 * (chi - g));
    return first + std::exp(-(chi - g) * tau) * br;
}

double sigma_zero_onestep_lit(double g, double n, double eta, double mu, double chi, double T)
{
    const double G = rate_minus_zero_lit(g, n, eta, mu, chi);
    return 0.5 + (g - chi + G * coth(G * T / 2.0)) / (8.0 * mu * eta);
}

double eta_het_zero_lit(double g, double n, double eta, double mu, double T)
{
    const double G = rate_minus_zero_lit(g, n, eta, mu, 0.0);
    return 8.0 * eta * mu / (g + 4.0 * eta * mu + G * coth(G * T / 2.0));
}

double sigma_zero_off_lit(double g, double n, double eta, double mu, double chi, double tau,
                          double T)
{
    const double eh = eta_het_zero_lit(g, n, eta, mu, T);
    const double first = (chi + 2.0 * g * n) / (2.0 * (chi - g));
    const double br =
        (2.0 - eh) / (2.0 * eh) - g * (1.0 + 2.0 * n) / (2.0 * (chi - g));
    return first + std::exp(-(chi - g) * tau) * br;
}

double rate_minus_blue_lit(double g, double n, double eta, double mu, double chi)
{
    return std::sqrt((g - chi) * (g - chi) + 2.0 * mu * chi * (1.0 - eta) + mu * mu +
                     2.0 * g * mu * (2.0 * eta * (n + 1.0) - 1.0));
}

double sigma_blue_maint_lit(double g, double n, double eta, double mu, double chi, double tau,
                            double T)
{
    const double G = rate_minus_blue_lit(g, n, eta, mu, chi);
    const double first = (chi + 2.0 * g * n) / (2.0 * (chi - g));
    const double br = (G * coth(G * T / 2.0) + g - chi + mu * (eta - 1.0)) / (2.0 * eta * mu) -
                      g * (1.0 + 2.0 * n) / (2.0 * (chi - g));
    return first + std::exp(-(chi - g) * tau) * br;
}

double sigma_blue_onestep_lit(double g, double n, double eta, double mu, double chi, double T)
{
    const double G = rate_minus_blue_lit(g, n, eta, mu, chi);
    return 0.5 + (g - chi + mu * (eta - 1.0) + G * coth(G * T / 2.0)) / (2.0 * eta * mu);
}

} // namespace

TEST_CASE("free squeeze evolution")
{
    SUBCASE("tau = 0 is the identity")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 1.0, 3.0);
        const auto [m, v] = evolve_free_squeeze(p, 1.7, 0.4, 0.0);
        CHECK(m == doctest::Approx(1.7));
        CHECK(v == doctest::Approx(0.4));
    }
    SUBCASE("removable singularity at chi = gamma")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 1.0, 0.5);
        const auto [m, v] = evolve_free_squeeze(p, 2.0, 0.5, 2.0);
        CHECK(m == doctest::Approx(2.0));
        CHECK(v == doctest::Approx(1.3).epsilon(1e-12));
        // cross-check against evaluation just off the singular point
        for (double off : {1e-6, -1e-6}) {
            const auto q = make_params(0.5, 0.3, 0.0, 1.0, 0.5 * (1.0 + off));
            const auto [m2, v2] = evolve_free_squeeze(q, 2.0, 0.5, 2.0);
            CHECK(v2 == doctest::Approx(v).epsilon(1e-5));
            CHECK(m2 == doctest::Approx(m).epsilon(1e-5));
        }
    }
    SUBCASE("undamped amplification")
    {
        const auto p = make_params(0.0, 0.0, 0.0, 1.0, 2.0);
        const auto [m, v] = evolve_free_squeeze(p, 1.0, 0.5, 1.0);
        CHECK(m == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
        CHECK(v == doctest::Approx(0.5 * std::exp(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("generic two-step estimate variance")
{
    SUBCASE("tau = 0 returns the bare heterodyne variance")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 1.0, 4.0);
        const EstimateStats st = sigma_two_step_generic(p, 0.3, 0.0);
        CHECK(st.sigma2_y == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
        CHECK(st.sigma2_x == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
        CHECK(st.rho_c == 0.0);
    }
    SUBCASE("long-squeeze limit value")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 1.0, 2.0);
        const EstimateStats st = sigma_two_step_generic(p, 0.3, infinite_time);
        CHECK(st.sigma2_y == doctest::Approx(2.3 / 3.0).epsilon(1e-12));
    }
    SUBCASE("homodyne limit at large chi and tau")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 1.0, 1e7);
        const EstimateStats st = sigma_two_step_generic(p, 0.3, infinite_time);
        CHECK(st.sigma2_y == doctest::Approx(0.5).epsilon(1e-5));
    }
}

TEST_CASE("misaligned drive")
{
    const auto p = make_params(0.5, 0.3, 0.0, 1.0, 5.0);
    SUBCASE("theta = 0 reduces to the aligned form")
    {
        CHECK(sigma_misaligned(p, 0.3, 0.7, 0.0) ==
              doctest::Approx(sigma_two_step_generic(p, 0.3, 0.7).sigma2_y).epsilon(1e-14));
    }
    SUBCASE("theta = pi swaps the squeezed and anti-squeezed roles")
    {
        CHECK(sigma_misaligned(p, 0.3, 0.7, 3.14159265358979323846) ==
              doctest::Approx(sigma_two_step_generic(p, 0.3, 0.7).sigma2_x).epsilon(1e-12));
    }
    SUBCASE("any finite misalignment diverges at long squeezing")
    {
        CHECK(std::isinf(sigma_misaligned(p, 0.3, infinite_time, 0.01)));
    }
}

TEST_CASE("optimal squeezing duration")
{
    const auto p = make_params(0.5, 0.3, 0.0, 1.0, 5.0);
    SUBCASE("stationary point of the misaligned variance")
    {
        for (double theta : {0.03, 0.01, 0.003}) {
            const double t0 = tau_opt(p, 0.3, theta);
            const double h = 1e-6;
            const double d = (sigma_misaligned(p, 0.3, t0 + h, theta) -
                              sigma_misaligned(p, 0.3, t0 - h, theta)) /
                             (2.0 * h);
            const double d0 = std::abs((sigma_misaligned(p, 0.3, h, theta) -
                                        sigma_misaligned(p, 0.3, 0.0, theta)) /
                                       h);
            CHECK(std::abs(d) < 1e-6 * std::max(1.0, d0));
            // numerical argmin by golden-section agrees within 1e-6 relative
            double lo = 0.0, hi = 3.0;
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + 0.381966 * (hi - lo);
                const double m2 = hi - 0.381966 * (hi - lo);
                if (sigma_misaligned(p, 0.3, m1, theta) < sigma_misaligned(p, 0.3, m2, theta))
                    hi = m2;
                else lo = m1;
            }
            CHECK(t0 == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
        }
    }
    SUBCASE("asymptotic form at strong drive and small misalignment")
    {
        const auto q = make_params(0.5, 0.3, 0.0, 1.0, 1e4);
        const double theta = 1e-5;
        CHECK(tau_opt(q, 0.3, theta) ==
              doctest::Approx(std::log(2.0 / theta) / q.chi).epsilon(1e-4));
    }
    SUBCASE("zero when immediate measurement is optimal")
    {
        // log argument exactly 1: cot^2(theta/2) = 1/C
        const double chi_del = 2.0 * 0.5 * (1.0 + 0.3 * 0.3) / (2.0 - 0.3);
        const double c = (5.0 - chi_del) / (5.0 + chi_del);
        const double theta = 2.0 * std::atan(std::sqrt(c));
        CHECK(tau_opt(p, 0.3, theta) == 0.0);
        CHECK(tau_opt(p, 0.3, theta * 1.01) == 0.0);
        CHECK(tau_opt(p, 0.3, theta * 0.99) > 0.0);
        const auto weak = make_params(0.5, 0.3, 0.0, 1.0, 0.1);
        CHECK(tau_opt(weak, 0.3, 0.01) == 0.0);
    }
}

TEST_CASE("effective heterodyne efficiency, zero detuning")
{
    SUBCASE("lossless-bath closed form")
    {
        for (double eta : {0.1, 0.3, 0.9, 1.0}) {
            const auto p = make_params(0.0, 0.0, 2.0, eta, 0.0);
            CHECK(eta_het_zero(p, infinite_time) ==
                  doctest::Approx(2.0 * eta / (eta + std::sqrt(eta))).epsilon(1e-12));
        }
    }
    SUBCASE("ideal detection and strong measurement approach unity")
    {
        const auto p = make_params(1e-6, 1e-6, 1e6, 1.0, 0.0);
        CHECK(eta_het_zero(p, infinite_time) == doctest::Approx(1.0).epsilon(1e-5));
    }
    SUBCASE("no information in zero time")
    {
        const auto p = make_params(0.5, 0.3, 2.0, 0.9, 0.0);
        CHECK(eta_het_zero(p, 1e-12) < 1e-10);
        CHECK(eta_het_zero(make_params(0.5, 0.3, 0.0, 0.9, 0.0), 1.0) == 0.0);
    }
    SUBCASE("monotone in eta, mu, T; nonincreasing in n_th")
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ug(0.05, 2.0), un(0.0, 5.0), umu(0.01, 20.0),
            ue(0.05, 1.0), ut(0.05, 20.0);
        for (int i = 0; i < 300; ++i) {
            const double g = ug(rng), n = un(rng), mu = umu(rng), eta = ue(rng), T = ut(rng);
            const auto base = eta_het_zero(make_params(g, n, mu, eta, 0.0), T);
            CHECK(eta_het_zero(make_params(g, n, mu, std::min(1.0, eta * 1.1), 0.0), T) >=
                  base - 1e-12);
            CHECK(eta_het_zero(make_params(g, n, mu * 1.1, eta, 0.0), T) >= base - 1e-12);
            CHECK(eta_het_zero(make_params(g, n, mu, eta, 0.0), T * 1.1) >= base - 1e-12);
            CHECK(eta_het_zero(make_params(g, n * 1.1 + 0.01, mu, eta, 0.0), T) <= base + 1e-12);
        }
    }
}

TEST_CASE("effective homodyne efficiency")
{
    CHECK(eta_hom(make_params(0.5, 0.3, 0.0, 1.0, 1e9)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(eta_hom(make_params(0.5, 0.3, 0.0, 1.0, 1.3)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eta_hom(make_params(0.5, 0.0, 0.0, 1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(eta_hom(make_params(0.5, 0.0, 0.0, 1.0, 0.4)), NumericalError);
}

TEST_CASE("effective heterodyne efficiency, blue detuning")
{
    SUBCASE("intrinsic amplification overcomes detector loss")
    {
        for (double eta : {0.1, 0.5, 0.9}) {
            const auto p = make_params(0.0, 0.0, 2.0, eta, 0.0, Regime::BlueDetuned);
            CHECK(eta_het_blue(p, infinite_time) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("matches the lossless finite-T closed form")
    {
        for (double t : {0.05, 0.3, 2.0, 11.0}) {
            const auto p = make_params(0.0, 0.0, 1.7, 0.35, 0.0, Regime::BlueDetuned);
            const double expect = 2.0 * 0.35 / (2.0 * 0.35 + coth(1.7 * t / 2.0) - 1.0);
            CHECK(eta_het_blue(p, t) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("weak-measurement series eta*mu*T")
    {
        const auto p = make_params(0.0, 0.0, 0.5, 0.4, 0.0, Regime::BlueDetuned);
        const double T = 1e-4;
        CHECK(eta_het_blue(p, T) == doctest::Approx(p.eta * p.mu * T).epsilon(1e-3));
    }
    SUBCASE("completed-measurement general form")
    {
        const double g = 0.5, n = 0.3, eta = 0.9, mu = 2.0;
        const auto p = make_params(g, n, mu, eta, 0.0, Regime::BlueDetuned);
        const double expect =
            2.0 * eta * mu /
            (g + mu * (2.0 * eta - 1.0) +
             std::sqrt((mu - g) * (mu - g) + 4.0 * eta * mu * g * (n + 1.0)));
        CHECK(eta_het_blue(p, infinite_time) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("protocol dispatch matches the literal closed forms")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ug(0.05, 2.0), un(0.0, 5.0), umu(0.05, 30.0),
        ue(0.05, 1.0), uc(0.0, 10.0), ut(0.01, 3.0), uT(0.05, 10.0);
    int tested = 0;
    for (int i = 0; i < 2000; ++i) {
        const double g = ug(rng), n = un(rng), mu = umu(rng), eta = ue(rng), chi = uc(rng);
        if (std::abs(chi - g) < 0.05 * g) continue; // literal forms are singular there
        const double tau = ut(rng), T = uT(rng);
        ++tested;
        const auto pz = make_params(g, n, mu, eta, chi);
        const auto pb = make_params(g, n, mu, eta, chi, Regime::BlueDetuned);

        const EstimateStats zm = sigma_zero_detuned(pz, {tau, T, true, 0.0});
        CHECK(zm.sigma2_y ==
              doctest::Approx(sigma_zero_maint_lit(g, n, eta, mu, chi, tau, T)).epsilon(1e-10));
        CHECK(zm.sigma2_x ==
              doctest::Approx(sigma_zero_maint_lit(g, n, eta, mu, -chi, tau, T)).epsilon(1e-10));

        const EstimateStats z1 = sigma_zero_detuned(pz, {0.0, T, true, 0.0});
        CHECK(z1.sigma2_y ==
              doctest::Approx(sigma_zero_onestep_lit(g, n, eta, mu, chi, T)).epsilon(1e-10));

        const EstimateStats zo = sigma_zero_detuned(pz, {tau, T, false, 0.0});
        CHECK(zo.sigma2_y ==
              doctest::Approx(sigma_zero_off_lit(g, n, eta, mu, chi, tau, T)).epsilon(1e-10));

        const EstimateStats bm = sigma_blue_detuned(pb, {tau, T, true, 0.0});
        CHECK(bm.sigma2_y ==
              doctest::Approx(sigma_blue_maint_lit(g, n, eta, mu, chi, tau, T)).epsilon(1e-10));
        CHECK(bm.sigma2_x ==
              doctest::Approx(sigma_blue_maint_lit(g, n, eta, mu, -chi, tau, T)).epsilon(1e-10));

        const EstimateStats b1 = sigma_blue_detuned(pb, {0.0, T, true, 0.0});
        CHECK(b1.sigma2_y ==
              doctest::Approx(sigma_blue_onestep_lit(g, n, eta, mu, chi, T)).epsilon(1e-10));
    }
    CHECK(tested > 1500);
}

TEST_CASE("protocol limits and identities")
{
    SUBCASE("maintained squeezing with chi = 0 equals the squeezing-off protocol")
    {
        const auto p = make_params(0.5, 0.3, 2.0, 0.9, 0.0);
        for (double T : {0.3, 2.0, 50.0}) {
            const EstimateStats a = sigma_zero_detuned(p, {0.4, T, true, 0.0});
            const EstimateStats b = sigma_zero_detuned(p, {0.4, T, false, 0.0});
            CHECK(a.sigma2_y == doctest::Approx(b.sigma2_y).epsilon(1e-12));
            CHECK(a.sigma2_x == doctest::Approx(b.sigma2_x).epsilon(1e-12));
        }
    }
    SUBCASE("one-step homodyne limit at huge drive")
    {
        const auto p = make_params(0.5, 0.3, 50.0, 0.9, 1e6);
        const EstimateStats st = sigma_zero_detuned(p, {0.0, infinite_time, true, 0.0});
        CHECK(std::abs(st.sigma2_y - 0.5) < 1e-4);
        const auto pb = make_params(0.5, 0.3, 50.0, 0.9, 1e6, Regime::BlueDetuned);
        const EstimateStats stb = sigma_blue_detuned(pb, {0.0, infinite_time, true, 0.0});
        CHECK(std::abs(stb.sigma2_y - 0.5) < 1e-4);
    }
    SUBCASE("weak-measurement saturation")
    {
        const auto p = make_params(0.5, 0.3, 1e-9, 0.9, 8.0);
        const double expect = (8.0 + 2.0 * 0.5 * 0.3) / (2.0 * (8.0 - 0.5));
        const EstimateStats one = sigma_zero_detuned(p, {0.0, infinite_time, true, 0.0});
        CHECK(one.sigma2_y == doctest::Approx(expect).epsilon(1e-6));
        const EstimateStats two = sigma_zero_detuned(p, {0.3, infinite_time, true, 0.0});
        CHECK(two.sigma2_y == doctest::Approx(expect).epsilon(1e-6));
    }
    SUBCASE("tau -> 0 of the maintained two-step form is the one-step form")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ug(0.05, 2.0), un(0.0, 5.0), umu(0.05, 30.0),
            ue(0.05, 1.0), uc(0.0, 10.0), uT(0.05, 10.0);
        for (int i = 0; i < 1000; ++i) {
            const double g = ug(rng), n = un(rng), mu = umu(rng), eta = ue(rng), chi = uc(rng);
            if (std::abs(chi - g) < 0.05 * g) continue;
            const double T = uT(rng);
            CHECK(sigma_zero_maint_lit(g, n, eta, mu, chi, 0.0, T) ==
                  doctest::Approx(sigma_zero_onestep_lit(g, n, eta, mu, chi, T)).epsilon(1e-12));
            CHECK(sigma_blue_maint_lit(g, n, eta, mu, chi, 0.0, T) ==
                  doctest::Approx(sigma_blue_onestep_lit(g, n, eta, mu, chi, T)).epsilon(1e-12));
        }
    }
    SUBCASE("maintaining squeezing never hurts (long measurement)")
    {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> ug(0.05, 2.0), un(0.0, 5.0), umu(0.05, 30.0),
            ue(0.05, 1.0), uc(0.0, 10.0), ut(0.01, 3.0);
        for (int i = 0; i < 1000; ++i) {
            const auto p = make_params(ug(rng), un(rng), umu(rng), ue(rng), uc(rng));
            const double tau = ut(rng);
            const EstimateStats maint = sigma_zero_detuned(p, {tau, infinite_time, true, 0.0});
            const EstimateStats off = sigma_zero_detuned(p, {tau, infinite_time, false, 0.0});
            CHECK(maint.sigma2_y <= off.sigma2_y * (1.0 + 1e-12) + 1e-12);
        }
    }
    SUBCASE("variance floor of one half")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ug(0.05, 2.0), un(0.0, 5.0), umu(0.05, 30.0),
            ue(0.05, 1.0), uc(0.0, 20.0), ut(0.0, 3.0), uT(0.05, 10.0);
        for (int i = 0; i < 2000; ++i) {
            const auto p = make_params(ug(rng), un(rng), umu(rng), ue(rng), uc(rng));
            const ProtocolSchedule s{ut(rng), uT(rng), rng() % 2 == 0, 0.0};
            const EstimateStats z = sigma_zero_detuned(p, s);
            CHECK(z.sigma2_y >= 0.5 - 1e-12);
            CHECK(z.sigma2_x >= 0.5 - 1e-12);
            const auto pb = make_params(p.gamma, p.n_th, p.mu, p.eta, p.chi, Regime::BlueDetuned);
            const ProtocolSchedule sm{s.tau, s.T, true, 0.0};
            const EstimateStats b = sigma_blue_detuned(pb, sm);
            CHECK(b.sigma2_y >= 0.5 - 1e-12);
            CHECK(b.sigma2_x >= 0.5 - 1e-12);
        }
    }
    SUBCASE("one-step variance is monotone in mu on either side of chi_del")
    {
        const double g = 0.5, n = 0.3, eta = 0.7;
        const double chi_del = 2.0 * g * (1.0 + n) + g * (std::sqrt(eta) - 1.0);
        for (double chi : {1.3 * chi_del, 0.7 * chi_del}) {
            double prev = sigma_zero_detuned(make_params(g, n, 1e-3, eta, chi),
                                             {0.0, infinite_time, true, 0.0})
                              .sigma2_y;
            bool increasing = true, decreasing = true;
            for (double mu = 2e-3; mu < 1e3; mu *= 1.6) {
                const double cur = sigma_zero_detuned(make_params(g, n, mu, eta, chi),
                                                      {0.0, infinite_time, true, 0.0})
                                       .sigma2_y;
                increasing = increasing && cur >= prev - 1e-12;
                decreasing = decreasing && cur <= prev + 1e-12;
                prev = cur;
            }
            if (chi > chi_del) CHECK(increasing);
            else CHECK(decreasing);
        }
    }
    SUBCASE("blue outperforms zero detuning above chi_het")
    {
        // two-step maintained, gamma=0.5 eta=0.9 n_th=0.3 mu=1 tau=0.2 T=5
        for (double chi : {1.5, 2.0, 4.0, 8.0, 20.0}) {
            const auto pz = make_params(0.5, 0.3, 1.0, 0.9, chi);
            const auto pb = make_params(0.5, 0.3, 1.0, 0.9, chi, Regime::BlueDetuned);
            const double z = sigma_zero_detuned(pz, {0.2, 5.0, true, 0.0}).sigma2_y;
            const double b = sigma_blue_detuned(pb, {0.2, 5.0, true, 0.0}).sigma2_y;
            CHECK(b < z);
        }
    }
}

TEST_CASE("filter kernels")
{
    SUBCASE("frozen two-step constants")
    {
        const auto p = make_params(0.5, 0.3, 50.0, 0.9, 8.0);
        const ProtocolSchedule s{0.3, infinite_time, false, 0.0};
        const FilterKernel k = filter_kernel_y(p, s);
        CHECK(k.decay_rate == doctest::Approx(190.49475058384155).epsilon(1e-12));
        CHECK(k.prefactor == doctest::Approx(7.117954094184789).epsilon(1e-12));
        CHECK(k.preimage_factor == doctest::Approx(std::exp(-7.5 * 0.3 / 2.0)).epsilon(1e-12));
    }
    SUBCASE("one-step kernel with chi = 0 equals the two-step kernel at tau = 0")
    {
        const auto p = make_params(0.5, 0.3, 2.0, 0.9, 0.0);
        const FilterKernel a = filter_kernel_y(p, {0.0, 4.0, true, 0.0});
        const FilterKernel b = filter_kernel_y(p, {0.0, 4.0, false, 0.0});
        CHECK(a.decay_rate == doctest::Approx(b.decay_rate).epsilon(1e-14));
        CHECK(a.prefactor == doctest::Approx(b.prefactor).epsilon(1e-14));
    }
    SUBCASE("left-point square sum matches the closed form")
    {
        const auto p = make_params(0.5, 0.3, 2.0, 0.8, 2.0);
        const ProtocolSchedule s{0.0, 1.5, true, 0.0};
        const FilterKernel k = filter_kernel_y(p, s);
        const double dt = 1e-5;
        const double direct = k.sum_h2(dt);
        const double pre = k.prefactor * k.preimage_factor;
        const double closed =
            pre * pre * -std::expm1(-k.decay_rate * s.T) / k.decay_rate;
        CHECK(direct == doctest::Approx(closed).epsilon(1e-4));
    }
    SUBCASE("x kernel uses the plus rate and the inverse preimage")
    {
        const auto p = make_params(0.5, 0.3, 2.0, 0.9, 3.0);
        const ProtocolSchedule s{0.4, 2.0, true, 0.0};
        const FilterKernel ky = filter_kernel_y(p, s);
        const FilterKernel kx = filter_kernel_x(p, s);
        CHECK(kx.decay_rate > ky.decay_rate);
        CHECK(kx.preimage_factor == doctest::Approx(std::exp((3.0 + 0.5) * 0.4 / 2.0)));
        CHECK(ky.preimage_factor == doctest::Approx(std::exp(-(3.0 - 0.5) * 0.4 / 2.0)));
    }
    SUBCASE("undefined without a measurement")
    {
        const auto p = make_params(0.5, 0.3, 0.0, 0.9, 3.0);
        CHECK_THROWS_AS(filter_kernel_y(p, {0.0, 1.0, true, 0.0}), NumericalError);
    }
}

TEST_CASE("covariance rotation")
{
    EstimateStats st{};
    st.sigma2_x = 3.0;
    st.sigma2_y = 0.7;
    st.rho_c = 0.0;
    const LabCovariance id = rotate_covariance(st, 0.0);
    CHECK(id.sigma2_x == doctest::Approx(3.0));
    CHECK(id.rho_c == doctest::Approx(0.0));
    const LabCovariance quarter = rotate_covariance(st, 1.5707963267948966);
    CHECK(quarter.sigma2_x == doctest::Approx(0.7));
    CHECK(quarter.sigma2_y == doctest::Approx(3.0));
    CHECK(std::abs(quarter.rho_c) < 1e-12);
    const LabCovariance mid = rotate_covariance(st, 0.5);
    CHECK(mid.rho_c != doctest::Approx(0.0));
    CHECK(mid.sigma2_x + mid.sigma2_y == doctest::Approx(3.7).epsilon(1e-12));
}
