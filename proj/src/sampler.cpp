#include "pamtomo/sampler.hpp"

#include "pamtomo/sim.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace pamtomo {

namespace {
constexpr double two_pi = 6.28318530717958647692;
}

PovmSampler::PovmSampler(const FockState& truth_trial, double sigma2_x, double sigma2_y)
{
    const double vx = sigma2_x - 0.5, vy = sigma2_y - 0.5;
    if (!(vx > 0.0) || !(vy > 0.0))
        throw ConfigError("PovmSampler: variances below the homodyne floor");
    const double det = vx * vy;
    if (det < 0.25 * (1.0 - 1e-9))
        throw ConfigError("PovmSampler: sub-Heisenberg variance pair");
    const double n_eff = std::max(0.0, std::sqrt(det) - 0.5);
    const double r = 0.25 * std::log(vy / vx);
    cosh_r_ = std::cosh(r);
    sinh_r_ = std::sinh(r);

    const double q = n_eff / (n_eff + 1.0);
    int n_max = 0;
    if (q > 0.0) n_max = std::min(512, static_cast<int>(std::ceil(std::log(1e-14) / std::log(q))));
    pn_.resize(n_max + 1);
    double pn = q > 0.0 ? 1.0 - q : 1.0;
    for (int n = 0; n <= n_max; ++n) {
        pn_[n] = pn;
        pn *= q;
    }

    // highest occupied level of the truth state
    int k_top = 0;
    for (int k = 0; k < truth_trial.dim(); ++k)
        if (std::norm(truth_trial.amp[k]) > 1e-16) k_top = k;

    int dim_s = static_cast<int>(std::ceil((k_top + 4) * std::exp(2.0 * std::abs(r)))) + 32;
    dim_s = std::max(dim_s, truth_trial.dim());
    dim_s = ((dim_s + 31) / 32) * 32;

    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(dim_s);
    padded.head(truth_trial.dim()) = truth_trial.amp;
    phi_ = squeeze_columns(r, dim_s, dim_s).adjoint() * padded;

    const double rad = std::sqrt(2.0 * (k_top + 1.0));
    x_lo_ = -rad - 6.0 * std::sqrt(sigma2_x);
    x_hi_ = rad + 6.0 * std::sqrt(sigma2_x);
    y_lo_ = -rad - 6.0 * std::sqrt(sigma2_y);
    y_hi_ = rad + 6.0 * std::sqrt(sigma2_y);

    // envelope scan
    p_max_ = 0.0;
    const int scan = 81;
    for (int iy = 0; iy < scan; ++iy)
        for (int ix = 0; ix < scan; ++ix) {
            const double x = x_lo_ + (x_hi_ - x_lo_) * ix / double(scan - 1);
            const double y = y_lo_ + (y_hi_ - y_lo_) * iy / double(scan - 1);
            p_max_ = std::max(p_max_, density(x, y));
        }
    p_max_ *= 1.5;
    acceptance_ = 1.0 / ((x_hi_ - x_lo_) * (y_hi_ - y_lo_) * p_max_);
}

double PovmSampler::density(double x_est, double y_est) const
{
    const cx alpha = cx(x_est, y_est) / std::sqrt(2.0);
    const cx alpha_t = alpha * cosh_r_ + std::conj(alpha) * sinh_r_;
    const cx beta = -alpha_t;
    const int nc = static_cast<int>(phi_.size());
    thread_local std::vector<cx> rowp, rown;
    rowp.resize(nc);
    rown.resize(nc);
    displacement_row0(beta, nc, rowp.data());
    double acc = 0.0;
    for (std::size_t n = 0; n < pn_.size(); ++n) {
        if (n > 0) {
            displacement_next_row(beta, static_cast<int>(n) - 1, rowp.data(), nc, rown.data());
            rowp.swap(rown);
        }
        cx g = 0.0;
        const cx* row = rowp.data();
        for (int k = 0; k < nc; ++k) g += row[k] * phi_[k];
        acc += pn_[n] * std::norm(g);
    }
    return acc / two_pi;
}

std::pair<double, double> PovmSampler::sample(std::mt19937_64& rng) const
{
    std::uniform_real_distribution<double> ux(x_lo_, x_hi_), uy(y_lo_, y_hi_), u01(0.0, 1.0);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const double x = ux(rng), y = uy(rng);
        const double p = density(x, y);
        if (p > p_max_) {
            std::ostringstream os;
            os << "PovmSampler envelope exceeded (p=" << p << " > " << p_max_ << ")";
            throw NumericalError(os.str());
        }
        if (u01(rng) * p_max_ < p) return {x, y};
    }
    throw NumericalError("PovmSampler: rejection loop failed to accept");
}

SampledTrials sample_povm_elements(const FockState& truth_lab, const SystemParams& p,
                                   const ProtocolSchedule& schedule_template, int n_trials,
                                   int n_phases, std::uint64_t base_seed)
{
    if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
    if (n_phases < 1) throw ConfigError("n_phases must be >= 1");

    ProtocolSchedule sched = schedule_template;
    SampledTrials out;
    out.elements.reserve(n_trials);

    double acc_sum = 0.0;
    std::vector<std::unique_ptr<PovmSampler>> samplers(n_phases);
    std::vector<EstimateStats> stats(n_phases);
    for (int k = 0; k < n_phases; ++k) {
        sched.squeeze_phase = two_pi * k / n_phases;
        stats[k] = estimate_stats(p, sched);
        const FockState truth_trial = rotate_state(truth_lab, -sched.squeeze_phase / 2.0);
        samplers[k] =
            std::make_unique<PovmSampler>(truth_trial, stats[k].sigma2_x, stats[k].sigma2_y);
        acc_sum += samplers[k]->acceptance_estimate();
    }
    out.mean_acceptance = acc_sum / n_phases;

    for (int trial = 0; trial < n_trials; ++trial) {
        const int k = trial % n_phases;
        std::mt19937_64 rng(trial_seed(base_seed, trial));
        const auto [x, y] = samplers[k]->sample(rng);
        GaussianPovmElement e;
        e.x_est = x;
        e.y_est = y;
        e.sigma2_x = stats[k].sigma2_x;
        e.sigma2_y = stats[k].sigma2_y;
        e.rho_c = 0.0;
        e.frame_angle = two_pi * k / n_phases / 2.0;
        e.trial_seed = trial_seed(base_seed, trial);
        out.elements.push_back(e);
    }
    return out;
}

} // namespace pamtomo
