#include "pamtomo/states.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

namespace pamtomo {

namespace {
constexpr double pi = 3.14159265358979323846;
}

int recommended_dim(cx alpha)
{
    const double a2 = std::norm(alpha);
    return std::max(20, static_cast<int>(std::ceil(4.0 * a2)) + 10);
}

FockState coherent_state(cx alpha, int dim)
{
    if (dim < 1) throw ConfigError("dim must be >= 1");
    FockState s;
    s.amp.resize(dim);
    cx c = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < dim; ++n) {
        s.amp[n] = c;
        c *= alpha / std::sqrt(double(n + 1));
    }
    const double nrm2 = s.amp.squaredNorm();
    if (1.0 - nrm2 > 1e-6)
        std::cerr << "warning: coherent_state(|alpha|=" << std::abs(alpha) << ", dim=" << dim
                  << ") truncation tail " << 1.0 - nrm2 << "\n";
    s.amp /= std::sqrt(nrm2);
    return s;
}

FockState cat_state(cx alpha, int dim)
{
    if (dim < 1) throw ConfigError("dim must be >= 1");
    FockState s;
    s.amp.setZero(dim);
    cx c = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < dim; ++n) {
        if (n % 2 == 0) s.amp[n] = c;
        c *= alpha / std::sqrt(double(n + 1));
    }
    const double nrm2 = s.amp.squaredNorm();
    if (nrm2 <= 0.0) throw NumericalError("cat_state: vanishing norm on truncation");
    s.amp /= std::sqrt(nrm2);
    return s;
}

FockState fock_basis_state(int n, int dim)
{
    if (n < 0 || n >= dim) throw ConfigError("fock_basis_state: n out of range");
    FockState s;
    s.amp.setZero(dim);
    s.amp[n] = 1.0;
    return s;
}

cx expect_annihilation(const FockState& s)
{
    cx acc = 0.0;
    for (int n = 0; n + 1 < s.dim(); ++n)
        acc += std::conj(s.amp[n]) * std::sqrt(double(n + 1)) * s.amp[n + 1];
    return acc;
}

double expect_number(const FockState& s)
{
    double acc = 0.0;
    for (int n = 0; n < s.dim(); ++n) acc += n * std::norm(s.amp[n]);
    return acc;
}

double tail_mass(const FockState& s, int levels)
{
    double acc = 0.0;
    for (int n = std::max(0, s.dim() - levels); n < s.dim(); ++n) acc += std::norm(s.amp[n]);
    return acc;
}

FockState rotate_state(const FockState& s, double angle)
{
    FockState out = s;
    for (int n = 0; n < s.dim(); ++n)
        out.amp[n] *= std::polar(1.0, angle * n);
    return out;
}

FockOperator rotate_operator(const FockOperator& op, double angle)
{
    const int n = static_cast<int>(op.rows());
    FockOperator out(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            out(i, j) = std::polar(1.0, angle * (i - j)) * op(i, j);
    return out;
}

double squeeze_cap(int dim)
{
    return 0.5 * std::log(4.0 * double(dim));
}

void displacement_row0(cx beta, int ncols, cx* out)
{
    out[0] = std::exp(-0.5 * std::norm(beta));
    const cx f = -std::conj(beta);
    for (int k = 1; k < ncols; ++k)
        out[k] = out[k - 1] * f / std::sqrt(double(k));
}

void displacement_next_row(cx beta, int row_n, const cx* prev, int ncols, cx* out)
{
    const double inv = 1.0 / std::sqrt(double(row_n + 1));
    out[0] = beta * prev[0] * inv;
    for (int k = 1; k < ncols; ++k)
        out[k] = (std::sqrt(double(k)) * prev[k - 1] + beta * prev[k]) * inv;
}

Eigen::MatrixXcd squeeze_columns(double r, int n, int ncols)
{
    struct Key {
        double r;
        int n;
        bool operator<(const Key& o) const { return r < o.r || (r == o.r && n < o.n); }
    };
    static std::map<Key, Eigen::MatrixXcd> cache;
    static std::mutex mtx;

    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(Key{r, n});
    if (it == cache.end()) {
        Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(n, n);
        for (int k = 0; k + 2 < n; ++k) {
            const double w = std::sqrt(double(k + 1)) * std::sqrt(double(k + 2));
            gen(k, k + 2) = 0.5 * r * w;  // (r/2) a^2
            gen(k + 2, k) = -0.5 * r * w; // -(r/2) adag^2
        }
        it = cache.emplace(Key{r, n}, gen.exp()).first;
        if (cache.size() > 64) {
            // keep the cache bounded; synthesis keys are few per run
            auto victim = cache.begin();
            if (victim == it) ++victim;
            if (victim != cache.end() && victim != it) cache.erase(victim);
        }
    }
    return it->second.leftCols(ncols);
}

FockOperator povm_operator(const GaussianPovmElement& e, int dim)
{
    if (dim < 2) throw ConfigError("povm_operator: dim must be >= 2");
    const double vx = e.sigma2_x - 0.5;
    const double vy = e.sigma2_y - 0.5;
    if (!(vx > 0.0) || !(vy > 0.0)) {
        std::ostringstream os;
        os << "invalid POVM element: sigma2 below the homodyne floor (sigma2_x=" << e.sigma2_x
           << ", sigma2_y=" << e.sigma2_y << ")";
        throw ConfigError(os.str());
    }
    if (!(std::abs(e.rho_c) < 1.0)) throw ConfigError("invalid POVM element: |rho_c| >= 1");

    // covariance of the underlying Gaussian state, diagonalized
    const double cxy = e.rho_c * std::sqrt(e.sigma2_x * e.sigma2_y);
    double psi = 0.0, lx = vx, ly = vy;
    if (cxy != 0.0) {
        // eigenframe of the covariance; lx sits on the axis at angle psi
        psi = 0.5 * std::atan2(2.0 * cxy, vx - vy);
        const double m = 0.5 * (vx + vy);
        const double d = std::hypot(0.5 * (vx - vy), cxy);
        lx = m + d;
        ly = m - d;
    }
    const double det = lx * ly;
    if (!(ly > 0.0) || det < 0.25 * (1.0 - 1e-9)) {
        std::ostringstream os;
        os << "invalid POVM element: sub-Heisenberg covariance (det=" << det << ")";
        throw ConfigError(os.str());
    }

    const double n_eff = std::max(0.0, std::sqrt(det) - 0.5);
    const double r = 0.25 * std::log(ly / lx);
    if (std::abs(r) > squeeze_cap(dim)) {
        const int needed = static_cast<int>(std::ceil(std::exp(2.0 * std::abs(r)) / 4.0)) + 1;
        std::ostringstream os;
        os << "povm_operator: squeeze parameter " << r << " beyond cap for dim " << dim
           << " (need dim >= " << needed << ")";
        throw TruncationError(os.str());
    }

    const cx alpha = cx(e.x_est, e.y_est) / std::sqrt(2.0);

    // thermal mixture cutoff
    const double q = n_eff / (n_eff + 1.0);
    int n_max = 0;
    if (q > 0.0) n_max = std::min(512, static_cast<int>(std::ceil(std::log(1e-14) / std::log(q))));

    // enlarged synthesis truncation covering the displaced squeezed support
    const double nbar = std::norm(alpha) + std::sinh(r) * std::sinh(r) * (2.0 * n_eff + 1.0) +
                        n_eff + double(n_max);
    int dim_c =
        std::max(dim, static_cast<int>(std::ceil(nbar + 8.0 * std::sqrt(nbar + 1.0))) + 12);
    dim_c = ((dim_c + 31) / 32) * 32; // batch sizes so the squeeze cache is shared

    const Eigen::MatrixXcd sq = squeeze_columns(r, dim_c, n_max + 1);

    // rows of D(alpha) on the dim x dim_c rectangle
    std::vector<cx> rowp(dim_c), rown(dim_c);
    std::vector<cx> drows(static_cast<std::size_t>(dim) * dim_c);
    displacement_row0(alpha, dim_c, rowp.data());
    std::copy(rowp.begin(), rowp.end(), drows.begin());
    for (int nrow = 1; nrow < dim; ++nrow) {
        displacement_next_row(alpha, nrow - 1, rowp.data(), dim_c, rown.data());
        std::copy(rown.begin(), rown.end(), drows.begin() + static_cast<std::size_t>(nrow) * dim_c);
        std::swap(rowp, rown);
    }

    FockOperator w = FockOperator::Zero(dim, dim);
    Eigen::VectorXcd col(dim_c), wvec(dim);
    double pn = 1.0 - q;
    if (q == 0.0) pn = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        col = sq.col(n);
        if (psi != 0.0)
            for (int k = 0; k < dim_c; ++k) col[k] *= std::polar(1.0, psi * k);
        for (int i = 0; i < dim; ++i) {
            cx acc = 0.0;
            const cx* row = drows.data() + static_cast<std::size_t>(i) * dim_c;
            for (int k = 0; k < dim_c; ++k) acc += row[k] * col[k];
            wvec[i] = acc;
        }
        w.noalias() += (pn / (2.0 * pi)) * wvec * wvec.adjoint();
        pn *= q;
    }
    return w;
}

double WignerGrid::integral() const
{
    if (xs.size() < 2 || ys.size() < 2) return 0.0;
    const double dx = xs[1] - xs[0];
    const double dy = ys[1] - ys[0];
    double acc = 0.0;
    for (int iy = 0; iy < values.rows(); ++iy)
        for (int ix = 0; ix < values.cols(); ++ix) {
            double wgt = 1.0;
            if (ix == 0 || ix + 1 == values.cols()) wgt *= 0.5;
            if (iy == 0 || iy + 1 == values.rows()) wgt *= 0.5;
            acc += wgt * values(iy, ix);
        }
    return acc * dx * dy;
}

WignerGrid wigner(const FockOperator& rho, const GridSpec& g)
{
    const int dim = static_cast<int>(rho.rows());
    if (rho.cols() != dim) throw ConfigError("wigner: operator must be square");
    WignerGrid out;
    out.xs.resize(g.nx);
    out.ys.resize(g.ny);
    for (int i = 0; i < g.nx; ++i)
        out.xs[i] = g.x_min + (g.x_max - g.x_min) * i / double(g.nx - 1);
    for (int i = 0; i < g.ny; ++i)
        out.ys[i] = g.y_min + (g.y_max - g.y_min) * i / double(g.ny - 1);
    out.values.resize(g.ny, g.nx);

    // rho with parity signs folded in: rho'(m, n) = (-1)^m rho(m, n)
    FockOperator rp = rho;
    for (int m = 1; m < dim; m += 2) rp.row(m) *= -1.0;

    std::vector<cx> rowp(dim), rown(dim);
    for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const cx beta = std::sqrt(2.0) * cx(out.xs[ix], out.ys[iy]);
            displacement_row0(beta, dim, rowp.data());
            cx acc = 0.0;
            for (int n = 0; n < dim; ++n) {
                if (n > 0) {
                    displacement_next_row(beta, n - 1, rowp.data(), dim, rown.data());
                    std::swap(rowp, rown);
                }
                const cx* row = rowp.data();
                cx dot = 0.0;
                for (int m = 0; m < dim; ++m) dot += row[m] * rp(m, n);
                acc += dot;
            }
            out.values(iy, ix) = acc.real() / pi;
        }
    }
    return out;
}

double fidelity(const FockOperator& rho, const FockState& target)
{
    const int dr = static_cast<int>(rho.rows());
    const int n = std::min(dr, target.dim());
    cx acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            acc += std::conj(target.amp[i]) * rho(i, j) * target.amp[j];
    return std::max(0.0, std::min(1.0, acc.real()));
}

} // namespace pamtomo
