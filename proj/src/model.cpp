#include "pamtomo/model.hpp"

#include <sstream>

namespace pamtomo {

const char* regime_name(Regime r)
{
    return r == Regime::ZeroDetuned ? "zero" : "blue";
}

Regime regime_from_name(const std::string& name)
{
    if (name == "zero" || name == "zero_detuned") return Regime::ZeroDetuned;
    if (name == "blue" || name == "blue_detuned") return Regime::BlueDetuned;
    throw ConfigError("unknown regime '" + name + "' (expected 'zero' or 'blue')");
}

void SystemParams::validate() const
{
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (!(n_th >= 0.0)) throw ConfigError("n_th must be >= 0");
    if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must be in (0, 1]");
    if (!(chi >= 0.0)) throw ConfigError("chi must be >= 0");
    if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
    if (cavity) {
        if (!(cavity->g > 0.0) || !(cavity->kappa > 0.0))
            throw ConfigError("cavity g and kappa must be > 0");
        const double mu_expected = 4.0 * cavity->g * cavity->g / cavity->kappa;
        if (std::abs(mu - mu_expected) > 1e-12 * std::max(1.0, mu_expected)) {
            std::ostringstream os;
            os << "mu=" << mu << " inconsistent with 4 g^2/kappa=" << mu_expected;
            throw ConfigError(os.str());
        }
    }
}

std::optional<double> SystemParams::cooperativity() const
{
    if (!cavity) return std::nullopt;
    return cavity->g * cavity->g / (cavity->kappa * gamma);
}

namespace {
void warn_if(std::vector<std::string>& out, bool bad, const std::string& msg)
{
    if (bad) out.push_back(msg);
}
} // namespace

std::vector<std::string> SystemParams::regime_warnings() const
{
    std::vector<std::string> out;
    if (!cavity) return out;
    const double sep = 10.0; // factor treated as "much greater than"
    const CavityParams& c = *cavity;
    if (regime == Regime::ZeroDetuned) {
        warn_if(out, c.kappa < sep * c.omega_m,
                "zero-detuned regime expects kappa >> omega_m");
        warn_if(out, c.omega_m < sep * mu, "zero-detuned regime expects omega_m >> mu");
        warn_if(out, c.omega_m < sep * gamma * (n_th + 1.0),
                "zero-detuned regime expects omega_m >> gamma (n_th + 1)");
        warn_if(out, c.omega_m < sep * chi, "zero-detuned regime expects omega_m >> chi");
        warn_if(out, std::abs(c.delta) > 1e-9 * std::max(1.0, c.omega_m),
                "zero-detuned regime expects Delta = 0");
    } else {
        warn_if(out, c.omega_m < sep * c.kappa,
                "blue-detuned regime expects omega_m >> kappa");
        warn_if(out, c.kappa < sep * c.g, "blue-detuned regime expects kappa >> g");
        warn_if(out, c.kappa < sep * chi, "blue-detuned regime expects kappa >> chi");
        warn_if(out, std::abs(c.delta - c.omega_m) > 0.1 * c.omega_m,
                "blue-detuned regime expects Delta close to omega_m");
    }
    return out;
}

SystemParams params_from_cavity(double gamma, double n_th, double eta, double chi,
                                double theta, const CavityParams& cavity)
{
    SystemParams p;
    p.gamma = gamma;
    p.n_th = n_th;
    p.eta = eta;
    p.chi = chi;
    p.theta = theta;
    p.cavity = cavity;
    p.mu = 4.0 * cavity.g * cavity.g / cavity.kappa;
    p.regime = std::abs(cavity.delta) < 0.5 * cavity.omega_m ? Regime::ZeroDetuned
                                                             : Regime::BlueDetuned;
    p.validate();
    return p;
}

void ProtocolSchedule::validate() const
{
    if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
    if (!(T > 0.0)) throw ConfigError("T must be > 0 (may be infinite)");
}

Thresholds thresholds_two_step(const SystemParams& p, double eta_het)
{
    p.validate();
    if (!(eta_het > 0.0 && eta_het <= 1.0))
        throw ConfigError("two-step chi_del needs eta_het in (0, 1]");
    Thresholds t;
    t.chi_osc = p.gamma;
    t.chi_het = 2.0 * p.gamma * (1.0 + p.n_th);
    t.chi_del = 2.0 * p.gamma * (1.0 + p.n_th * eta_het) / (2.0 - eta_het);
    return t;
}

Thresholds thresholds_one_step(const SystemParams& p)
{
    p.validate();
    Thresholds t;
    t.chi_osc = p.gamma;
    t.chi_het = 2.0 * p.gamma * (1.0 + p.n_th);
    t.chi_del = t.chi_het + p.gamma * (std::sqrt(p.eta) - 1.0);
    return t;
}

DerivedParams derived_params(const SystemParams& p)
{
    p.validate();
    return DerivedParams{p.mu_tilde(), p.n_eff_bath(), p.cooperativity()};
}

} // namespace pamtomo
