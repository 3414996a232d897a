#pragma once

#include "pamtomo/errors.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pamtomo {

// Sentinel for an unbounded measurement window.  Every T-dependent formula
// carries an explicit branch for it instead of evaluating coth/exp at huge
// arguments.
inline constexpr double infinite_time = std::numeric_limits<double>::infinity();
inline bool is_infinite(double t) { return std::isinf(t); }

enum class Regime { ZeroDetuned, BlueDetuned };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Raw cavity parameters; only used to derive the measurement rate and to
// sanity-check the regime assumptions.
struct CavityParams {
    double g = 0.0;       // optomechanical coupling
    double kappa = 0.0;   // cavity decay
    double omega_m = 0.0; // mechanical frequency
    double delta = 0.0;   // laser-cavity detuning
};

struct SystemParams {
    double gamma = 1.0; // mechanical damping rate
    double n_th = 0.0;  // thermal phonon occupancy
    double mu = 0.0;    // measurement rate
    double eta = 1.0;   // detector efficiency
    double chi = 0.0;   // parametric drive strength
    double theta = 0.0; // parametric drive phase
    Regime regime = Regime::ZeroDetuned;
    std::optional<CavityParams> cavity;

    // Throws ConfigError on invariant violations.  When cavity parameters are
    // present, mu is required to equal 4 g^2 / kappa.
    void validate() const;

    double mu_tilde() const { return eta * mu; }
    double n_eff_bath() const { return n_th + mu * (1.0 - eta) / gamma; }
    std::optional<double> cooperativity() const;

    // Soft checks of the adiabatic-elimination assumptions; returns
    // human-readable warnings, never throws.
    std::vector<std::string> regime_warnings() const;
};

// Builds SystemParams from raw cavity parameters (mu = 4 g^2 / kappa).
SystemParams params_from_cavity(double gamma, double n_th, double eta, double chi,
                                double theta, const CavityParams& cavity);

struct ProtocolSchedule {
    double tau = 0.0;               // squeeze-only duration
    double T = infinite_time;       // measurement duration
    bool maintain_squeezing = true; // squeezing active during the measurement step
    double squeeze_phase = 0.0;     // per-trial drive phase theta_k

    bool one_step() const { return tau == 0.0 && maintain_squeezing; }
    void validate() const;
};

struct Thresholds {
    double chi_osc;
    double chi_del;
    double chi_het;
};

// Two-step form: chi_del depends on the effective heterodyne efficiency of
// the measurement step.  Throws ConfigError unless eta_het is in (0, 1].
Thresholds thresholds_two_step(const SystemParams& p, double eta_het);

// One-step zero-detuned form: chi_del = 2 gamma (1 + n_th) + gamma (sqrt(eta) - 1).
Thresholds thresholds_one_step(const SystemParams& p);

struct DerivedParams {
    double mu_tilde;
    double n_eff_bath;
    std::optional<double> cooperativity;
};

DerivedParams derived_params(const SystemParams& p);

} // namespace pamtomo
