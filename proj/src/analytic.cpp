#include "pamtomo/analytic.hpp"

#include <cmath>
#include <cstring>

namespace pamtomo {

namespace {

void check_analytic(const SystemParams& p)
{
    if (!(p.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(p.n_th >= 0.0)) throw ConfigError("n_th must be >= 0");
    if (!(p.mu >= 0.0)) throw ConfigError("mu must be >= 0");
    if (!(p.eta > 0.0 && p.eta <= 1.0)) throw ConfigError("eta must be in (0, 1]");
    if (!(p.chi >= 0.0)) throw ConfigError("chi must be >= 0");
}

void check_eta(double eta_het)
{
    if (!(eta_het > 0.0 && eta_het <= 1.0))
        throw ConfigError("eta_het must be in (0, 1]");
}

// (1 - e^{-z}) / z, positive for all real z, 1 at z = 0
double em1_over(double z)
{
    if (z == 0.0) return 1.0;
    return -std::expm1(-z) / z;
}

// Gamma(chi) for the zero-detuned regime, with signed chi
double rate_zero(const SystemParams& p, double chi)
{
    const double d = p.gamma - chi;
    return std::sqrt(d * d + 8.0 * p.eta * p.mu * (p.gamma + 2.0 * p.gamma * p.n_th + 2.0 * p.mu));
}

// B = gamma - chi + Gamma(chi); rationalized for chi > gamma to avoid cancellation
double bee_zero(const SystemParams& p, double chi)
{
    const double G = rate_zero(p, chi);
    if (chi > p.gamma)
        return 8.0 * p.eta * p.mu * (p.gamma + 2.0 * p.gamma * p.n_th + 2.0 * p.mu) /
               (G + chi - p.gamma);
    return p.gamma - chi + G;
}

// Gamma(chi) for the blue-detuned regime, written as a sum of squares
double rate_blue(const SystemParams& p, double chi)
{
    const double e = chi - p.gamma + p.mu * (1.0 - p.eta);
    return std::sqrt(e * e + p.eta * p.mu *
                                 (2.0 * p.gamma * (1.0 + 2.0 * p.n_th) + p.mu * (2.0 - p.eta)));
}

// B = Gamma(chi) - (chi + mu - gamma); rationalized form, exact zero at chi = chi_het
double bee_blue(const SystemParams& p, double chi)
{
    const double G = rate_blue(p, chi);
    const double e = chi + p.mu - p.gamma;
    const double num = 2.0 * p.eta * p.mu * (2.0 * p.gamma * (1.0 + p.n_th) - chi);
    if (G + e > 0.0) return num / (G + e);
    return G - e;
}

// Gamma*(coth(Gamma*T/2) - 1) = 2*Gamma/(e^{Gamma*T} - 1); zero at T -> inf
double coth_tail(double G, double T)
{
    if (is_infinite(T)) return 0.0;
    const double x = G * T;
    if (x > 700.0) return 0.0;
    return 2.0 * G / std::expm1(x);
}

// Measurement-step excess noise above the intrinsic 1/2, anti-squeezed
// quadrature, signed chi.  Infinite when mu = 0.
double excess_zero(const SystemParams& p, double chi, double T, bool squeezing_on)
{
    if (p.mu == 0.0) return std::numeric_limits<double>::infinity();
    const double c = squeezing_on ? chi : 0.0;
    const double G = rate_zero(p, c);
    return (bee_zero(p, c) + coth_tail(G, T)) / (8.0 * p.eta * p.mu);
}

double excess_blue(const SystemParams& p, double chi, double T, bool squeezing_on)
{
    if (p.mu == 0.0) return std::numeric_limits<double>::infinity();
    const double c = squeezing_on ? chi : 0.0;
    const double G = rate_blue(p, c);
    return 0.5 + (bee_blue(p, c) + coth_tail(G, T)) / (2.0 * p.eta * p.mu);
}

// sigma^2 for a squeeze step of duration tau followed by a measurement step
// of excess noise `excess`:
//   1/2 + gamma(1+2 n_th) (tau/2) (1-e^{-z})/z + e^{-z} excess,  z = (chi-gamma) tau
double sigma_protocol(const SystemParams& p, double chi, double tau, double excess)
{
    const double heat = p.gamma * (1.0 + 2.0 * p.n_th);
    if (is_infinite(tau)) {
        if (chi > p.gamma) return 0.5 + heat / (2.0 * (chi - p.gamma));
        return std::numeric_limits<double>::infinity();
    }
    const double z = (chi - p.gamma) * tau;
    return 0.5 + heat * (tau / 2.0) * em1_over(z) + std::exp(-z) * excess;
}

// generic two-step sigma^2 with an externally supplied heterodyne efficiency
double sigma_generic(const SystemParams& p, double chi, double eta_het, double tau)
{
    const double excess = (2.0 - eta_het) / (2.0 * eta_het);
    return sigma_protocol(p, chi, tau, excess);
}

double eta_hom_or_nan(const SystemParams& p)
{
    if (p.chi > p.gamma) return (p.chi - p.gamma) / (p.chi + 2.0 * p.gamma * p.n_th);
    return std::numeric_limits<double>::quiet_NaN();
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h)
{
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t kernel_hash(const SystemParams& p, const ProtocolSchedule& s)
{
    double fields[9] = {p.gamma, p.n_th,  p.mu, p.eta, p.chi,
                        double(p.regime == Regime::BlueDetuned), s.tau, s.T,
                        double(s.maintain_squeezing)};
    return fnv1a(fields, sizeof(fields), 0xcbf29ce484222325ull);
}

FilterKernel make_kernel(const SystemParams& p, const ProtocolSchedule& s, double chi)
{
    check_analytic(p);
    s.validate();
    if (p.mu == 0.0) throw NumericalError("filter undefined for mu = 0 (no record)");
    const bool blue = p.regime == Regime::BlueDetuned;
    const bool on = s.maintain_squeezing;
    const double c = on ? chi : 0.0;
    const double G = blue ? rate_blue(p, c) : rate_zero(p, c);
    const double B = blue ? bee_blue(p, c) : bee_zero(p, c);
    const double scale = (blue ? 2.0 : 4.0) * std::sqrt(p.eta * p.mu);

    double norm; // B / (1 - e^{-B T / 2})
    if (is_infinite(s.T)) {
        if (!(B > 0.0))
            throw NumericalError("filter normalization does not converge for T -> inf");
        norm = B;
    } else if (B == 0.0) {
        norm = 2.0 / s.T;
    } else {
        norm = B / -std::expm1(-B * s.T / 2.0);
    }

    FilterKernel k;
    k.prefactor = norm / scale;
    k.decay_rate = G;
    k.preimage_factor = std::exp(-(chi - p.gamma) * s.tau / 2.0);
    k.horizon = s.T;
    k.params_hash = kernel_hash(p, s);
    return k;
}

} // namespace

double FilterKernel::at(double t) const
{
    if (t < 0.0 || t > horizon) return 0.0;
    return prefactor * preimage_factor * std::exp(-decay_rate * t / 2.0);
}

double FilterKernel::sum_h2(double dt) const
{
    if (is_infinite(horizon)) throw NumericalError("sum_h2 requires a finite horizon");
    const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = at(static_cast<double>(i) * dt);
        s += h * h * dt;
    }
    return s;
}

std::pair<double, double> evolve_free_squeeze(const SystemParams& p, double y0,
                                              double v0, double tau)
{
    check_analytic(p);
    if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
    const double z = (p.chi - p.gamma) * tau;
    const double mean = y0 * std::exp(z / 2.0);
    // V = V0 e^z + gamma(1+2n_th)/2 * tau * (e^z - 1)/z
    double pump;
    if (z == 0.0) pump = tau;
    else pump = tau * std::expm1(z) / z;
    const double var = v0 * std::exp(z) + 0.5 * p.gamma * (1.0 + 2.0 * p.n_th) * pump;
    return {mean, var};
}

EstimateStats sigma_two_step_generic(const SystemParams& p, double eta_het, double tau)
{
    check_analytic(p);
    check_eta(eta_het);
    EstimateStats st;
    st.sigma2_y = sigma_generic(p, p.chi, eta_het, tau);
    st.sigma2_x = sigma_generic(p, -p.chi, eta_het, tau);
    st.rho_c = 0.0;
    st.eta_het = eta_het;
    st.eta_hom = eta_hom_or_nan(p);
    return st;
}

double sigma_misaligned(const SystemParams& p, double eta_het, double tau, double theta)
{
    check_analytic(p);
    check_eta(eta_het);
    const double c2 = std::cos(theta / 2.0) * std::cos(theta / 2.0);
    const double s2 = std::sin(theta / 2.0) * std::sin(theta / 2.0);
    return c2 * sigma_generic(p, p.chi, eta_het, tau) +
           s2 * sigma_generic(p, -p.chi, eta_het, tau);
}

double tau_opt(const SystemParams& p, double eta_het, double theta)
{
    check_analytic(p);
    check_eta(eta_het);
    if (theta == 0.0) throw ConfigError("tau_opt requires theta != 0");
    if (p.chi == 0.0) return 0.0;
    const double chi_del = 2.0 * p.gamma * (1.0 + p.n_th * eta_het) / (2.0 - eta_het);
    const double c = (p.chi - chi_del) / (p.chi + chi_del);
    if (c <= 0.0) return 0.0;
    const double t = std::tan(theta / 2.0);
    const double arg = c / (t * t);
    if (arg <= 1.0) return 0.0;
    return std::log(arg) / (2.0 * p.chi);
}

double eta_het_zero(const SystemParams& p, double T)
{
    check_analytic(p);
    if (p.mu == 0.0) return 0.0;
    if (!(T > 0.0)) return 0.0;
    const double G = rate_zero(p, 0.0);
    const double denom = p.gamma + 4.0 * p.eta * p.mu + G + coth_tail(G, T);
    return 8.0 * p.eta * p.mu / denom;
}

double eta_het_blue(const SystemParams& p, double T)
{
    check_analytic(p);
    if (p.mu == 0.0) return 0.0;
    if (!(T > 0.0)) return 0.0;
    // 1/eta_het equals the chi = 0 one-step estimate variance; reduces to the
    // closed gamma = n_th = 0 form and to the completed-measurement form.
    const double G = rate_blue(p, 0.0);
    const double sigma =
        1.0 + (bee_blue(p, 0.0) + coth_tail(G, T)) / (2.0 * p.eta * p.mu);
    return 1.0 / sigma;
}

double eta_hom(const SystemParams& p)
{
    check_analytic(p);
    if (!(p.chi > p.gamma))
        throw NumericalError("eta_hom undefined below the oscillation threshold chi <= gamma");
    return (p.chi - p.gamma) / (p.chi + 2.0 * p.gamma * p.n_th);
}

EstimateStats sigma_zero_detuned(const SystemParams& p, const ProtocolSchedule& s)
{
    check_analytic(p);
    s.validate();
    EstimateStats st;
    st.sigma2_y = sigma_protocol(p, p.chi, s.tau, excess_zero(p, p.chi, s.T, s.maintain_squeezing));
    st.sigma2_x =
        sigma_protocol(p, -p.chi, s.tau, excess_zero(p, -p.chi, s.T, s.maintain_squeezing));
    st.rho_c = 0.0;
    st.eta_het = eta_het_zero(p, s.T);
    st.eta_hom = eta_hom_or_nan(p);
    return st;
}

EstimateStats sigma_blue_detuned(const SystemParams& p, const ProtocolSchedule& s)
{
    check_analytic(p);
    s.validate();
    EstimateStats st;
    st.sigma2_y = sigma_protocol(p, p.chi, s.tau, excess_blue(p, p.chi, s.T, s.maintain_squeezing));
    st.sigma2_x =
        sigma_protocol(p, -p.chi, s.tau, excess_blue(p, -p.chi, s.T, s.maintain_squeezing));
    st.rho_c = 0.0;
    st.eta_het = eta_het_blue(p, s.T);
    st.eta_hom = eta_hom_or_nan(p);
    return st;
}

EstimateStats estimate_stats(const SystemParams& p, const ProtocolSchedule& s)
{
    return p.regime == Regime::BlueDetuned ? sigma_blue_detuned(p, s)
                                           : sigma_zero_detuned(p, s);
}

double rate_gamma_minus(const SystemParams& p)
{
    check_analytic(p);
    return p.regime == Regime::BlueDetuned ? rate_blue(p, p.chi) : rate_zero(p, p.chi);
}

double rate_gamma_plus(const SystemParams& p)
{
    check_analytic(p);
    return p.regime == Regime::BlueDetuned ? rate_blue(p, -p.chi) : rate_zero(p, -p.chi);
}

double characteristic_time(const SystemParams& p)
{
    return 2.0 / rate_gamma_minus(p);
}

FilterKernel filter_kernel_y(const SystemParams& p, const ProtocolSchedule& s)
{
    return make_kernel(p, s, p.chi);
}

FilterKernel filter_kernel_x(const SystemParams& p, const ProtocolSchedule& s)
{
    return make_kernel(p, s, -p.chi);
}

LabCovariance rotate_covariance(const EstimateStats& stats, double angle)
{
    const double c = std::cos(angle), s = std::sin(angle);
    const double vx = stats.sigma2_x, vy = stats.sigma2_y;
    const double cxy = stats.rho_c * std::sqrt(vx * vy);
    LabCovariance out;
    out.sigma2_x = c * c * vx + s * s * vy - 2.0 * c * s * cxy;
    out.sigma2_y = s * s * vx + c * c * vy + 2.0 * c * s * cxy;
    const double lab_cxy = c * s * (vx - vy) + (c * c - s * s) * cxy;
    out.rho_c = lab_cxy / std::sqrt(out.sigma2_x * out.sigma2_y);
    return out;
}

} // namespace pamtomo
