#pragma once

#include "pamtomo/analytic.hpp"
#include "pamtomo/model.hpp"
#include "pamtomo/povm.hpp"
#include "pamtomo/states.hpp"

#include <random>
#include <utility>
#include <vector>

namespace pamtomo {

// Draws (X_est, Y_est) pairs directly from the measurement-outcome
// distribution P(X_est, Y_est | rho0) = Tr[W rho0] of an aligned Gaussian
// POVM, by rejection sampling against the exact density.  This bypasses the
// trajectory integration entirely.
class PovmSampler {
public:
    // truth state expressed in the trial frame; aligned element variances
    PovmSampler(const FockState& truth_trial, double sigma2_x, double sigma2_y);

    // exact outcome density (normalized over the estimate plane)
    double density(double x_est, double y_est) const;

    std::pair<double, double> sample(std::mt19937_64& rng) const;

    double acceptance_estimate() const { return acceptance_; }
    double envelope() const { return p_max_; }

private:
    Eigen::VectorXcd phi_; // S(r)^dag |truth>
    std::vector<double> pn_;
    double cosh_r_, sinh_r_;
    double x_lo_, x_hi_, y_lo_, y_hi_;
    double p_max_;
    double acceptance_;
};

struct SampledTrials {
    std::vector<GaussianPovmElement> elements;
    double mean_acceptance = 0.0;
};

// n_trials spread over n_phases uniformly spaced squeeze phases in [0, 2pi);
// trial k uses a deterministic seed derived from base_seed.
SampledTrials sample_povm_elements(const FockState& truth_lab, const SystemParams& p,
                                   const ProtocolSchedule& schedule_template, int n_trials,
                                   int n_phases, std::uint64_t base_seed);

} // namespace pamtomo
