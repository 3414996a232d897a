#pragma once

#include "pamtomo/model.hpp"

#include <cstdint>
#include <utility>

namespace pamtomo {

struct QuadratureMoments {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double var_x = 0.5;
    double var_y = 0.5;
    double cov_xy = 0.0;
};

// Statistics of the initial-quadrature estimates for a coherent input, i.e.
// the parameters of the Gaussian POVM.  Quantities that are undefined for the
// given parameters (eta_hom below the oscillation threshold) are NaN.
struct EstimateStats {
    double sigma2_x;
    double sigma2_y;
    double rho_c;
    double eta_het;
    double eta_hom;
};

// Exponential estimate filter h(t) = prefactor * preimage_factor * exp(-decay_rate*t/2)
// on [0, horizon], zero outside.  The prefactor is normalized so that the
// estimator is unbiased at the kernel's horizon.
struct FilterKernel {
    double prefactor;
    double decay_rate;
    double preimage_factor;
    double horizon;
    std::uint64_t params_hash = 0; // guards kernel/record pairing

    double at(double t) const;
    // sum of h(t_i)^2 * dt over the left-point grid, used by noise diagnostics
    double sum_h2(double dt) const;
};

// Free evolution under squeezing and the thermal bath (no measurement),
// anti-squeezed quadrature convention.  Returns the propagated mean and
// variance after time tau.  chi = gamma is a removable singularity and is
// evaluated in closed limit form.
std::pair<double, double> evolve_free_squeeze(const SystemParams& p, double y0,
                                              double v0, double tau);

// Two-step protocol with the measurement step modelled as heterodyne
// detection of efficiency eta_het.  tau = infinite_time selects the
// long-squeezing limit.
EstimateStats sigma_two_step_generic(const SystemParams& p, double eta_het, double tau);

// Estimate variance of the initial Y quadrature when the drive phase is
// misaligned by theta from the measurement axes.
double sigma_misaligned(const SystemParams& p, double eta_het, double tau, double theta);

// Optimal squeezing duration under misalignment; returns 0 when immediate
// measurement is optimal.
double tau_opt(const SystemParams& p, double eta_het, double theta);

// Effective heterodyne efficiency of the bare measurement step.
double eta_het_zero(const SystemParams& p, double T);
double eta_het_blue(const SystemParams& p, double T);

// Effective homodyne efficiency of the long-squeezing protocol; requires
// chi > gamma (throws NumericalError below the oscillation threshold).
double eta_hom(const SystemParams& p);

// Full estimate statistics for the three protocol shapes in each regime.
EstimateStats sigma_zero_detuned(const SystemParams& p, const ProtocolSchedule& s);
EstimateStats sigma_blue_detuned(const SystemParams& p, const ProtocolSchedule& s);
EstimateStats estimate_stats(const SystemParams& p, const ProtocolSchedule& s);

// Decay rates of the conditioned dynamics: Gamma_- governs the anti-squeezed
// quadrature, Gamma_+ the squeezed one.  For chi = 0 both reduce to the
// no-drive rate.
double rate_gamma_minus(const SystemParams& p);
double rate_gamma_plus(const SystemParams& p);

// Characteristic duration 2/Gamma_- used to express schedule times.
double characteristic_time(const SystemParams& p);

// Estimate filters for the measurement step of the given protocol.  The Y
// kernel estimates the anti-squeezed quadrature; the X kernel follows from
// the chi -> -chi substitution.  Requires finite T unless the normalization
// converges.
FilterKernel filter_kernel_y(const SystemParams& p, const ProtocolSchedule& s);
FilterKernel filter_kernel_x(const SystemParams& p, const ProtocolSchedule& s);

// Lab-frame covariance of an aligned-frame estimate pair rotated by `angle`:
// returns {sigma2_x, sigma2_y, rho_c}.
struct LabCovariance {
    double sigma2_x, sigma2_y, rho_c;
};
LabCovariance rotate_covariance(const EstimateStats& stats, double angle);

} // namespace pamtomo
