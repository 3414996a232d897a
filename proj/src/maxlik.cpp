#include "pamtomo/maxlik.hpp"

#include "pamtomo/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace pamtomo {

namespace {

double trace_product(const FockOperator& w, const FockOperator& rho)
{
    // Tr[W rho] = sum_ij W_ij conj(rho_ij) for Hermitian factors
    return kernels::dotc(w.data(), rho.data(), static_cast<std::size_t>(w.size())).real();
}

void hermitize_normalize(FockOperator& m)
{
    m = 0.5 * (m + m.adjoint()).eval();
    const double tr = m.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw NumericalError("reconstruction iterate lost positivity of the trace");
    m /= tr;
}

} // namespace

double log_likelihood(const FockOperator& rho, const std::vector<FockOperator>& povm_ops)
{
    double acc = 0.0;
    for (const FockOperator& w : povm_ops) {
        double p = trace_product(w, rho);
        if (p < 1e-300) p = 1e-300;
        acc += std::log(p);
    }
    return acc;
}

double trace_distance(const FockOperator& a, const FockOperator& b)
{
    Eigen::SelfAdjointEigenSolver<FockOperator> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

FockOperator reconstruct(const std::vector<FockOperator>& povm_ops,
                         const ReconstructionConfig& cfg, ReconstructionDiagnostics* diag)
{
    if (povm_ops.empty()) throw ConfigError("reconstruct: need at least one POVM operator");
    const int dim = static_cast<int>(povm_ops.front().rows());
    for (const FockOperator& w : povm_ops)
        if (w.rows() != dim || w.cols() != dim)
            throw ConfigError("reconstruct: POVM operators with mixed dimensions");
    if (!(cfg.tol > 0.0)) throw ConfigError("reconstruct: tol must be > 0");
    if (!(cfg.dilution > 0.0 && cfg.dilution <= 1.0))
        throw ConfigError("reconstruct: dilution must be in (0, 1]");

    const std::size_t m = povm_ops.size();
    const auto nn = static_cast<std::size_t>(dim) * dim;

    FockOperator rho = FockOperator::Identity(dim, dim) / double(dim);
    double d = cfg.dilution;
    double ll = log_likelihood(rho, povm_ops);

    ReconstructionDiagnostics local;
    ReconstructionDiagnostics& dg = diag ? *diag : local;
    dg = ReconstructionDiagnostics{};
    dg.log_likelihood.push_back(ll);

    FockOperator r_op(dim, dim), rrr(dim, dim), cand(dim, dim);
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        r_op.setZero();
        int floored = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double p = trace_product(povm_ops[i], rho);
            if (p < 1e-300) {
                p = 1e-300;
                ++floored;
            }
            kernels::axpy_real(1.0 / (double(m) * p), povm_ops[i].data(), r_op.data(), nn);
        }
        dg.underflow_events += floored;
        if (floored == static_cast<int>(m))
            throw NumericalError("every POVM probability underflowed; reconstruction aborted");

        rrr.noalias() = r_op * rho * r_op;
        hermitize_normalize(rrr);

        double ll_new;
        for (;;) {
            cand = (1.0 - d) * rho + d * rrr;
            hermitize_normalize(cand);
            ll_new = log_likelihood(cand, povm_ops);
            if (ll_new >= ll - 1e-12 * std::abs(ll) || d <= 1.0 / 1024.0) break;
            d *= 0.5;
        }

        const double dist = trace_distance(cand, rho);
        rho = cand;
        ll = ll_new;
        dg.log_likelihood.push_back(ll);
        dg.trace_distance.push_back(dist);
        dg.iterations = iter + 1;
        if (dist < cfg.tol) {
            dg.converged = true;
            break;
        }
    }
    dg.final_dilution = d;
    return rho;
}

std::vector<FockOperator> operators_from_elements(const std::vector<GaussianPovmElement>& elems,
                                                  int dim)
{
    std::vector<FockOperator> ops;
    ops.reserve(elems.size());
    for (const GaussianPovmElement& e : elems) {
        FockOperator w = povm_operator(e, dim);
        if (e.frame_angle != 0.0) w = rotate_operator(w, e.frame_angle);
        ops.push_back(std::move(w));
    }
    return ops;
}

int reconstruction_dim(const std::vector<GaussianPovmElement>& elems, int floor_dim)
{
    if (elems.empty()) return std::max(floor_dim, 2);
    double max_r = 0.0;
    std::vector<double> amp2;
    amp2.reserve(elems.size());
    for (const GaussianPovmElement& e : elems) {
        const double vx = e.sigma2_x - 0.5, vy = e.sigma2_y - 0.5;
        if (vx > 0.0 && vy > 0.0) max_r = std::max(max_r, 0.25 * std::abs(std::log(vy / vx)));
        amp2.push_back(0.5 * (e.x_est * e.x_est + e.y_est * e.y_est));
    }
    const int dim_r = static_cast<int>(std::ceil(std::exp(2.0 * max_r) / 4.0)) + 1;
    // 95th percentile of |alpha_est|^2 as a support proxy
    std::nth_element(amp2.begin(), amp2.begin() + static_cast<std::ptrdiff_t>(0.95 * amp2.size()),
                     amp2.end());
    const double q95 = amp2[static_cast<std::size_t>(0.95 * amp2.size())];
    const int dim_data = static_cast<int>(std::ceil(q95 + 5.0 * std::sqrt(q95 + 1.0))) + 8;
    return std::max({floor_dim, dim_r, dim_data});
}

} // namespace pamtomo
