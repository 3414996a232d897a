#pragma once

#include "pamtomo/errors.hpp"
#include "pamtomo/povm.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace pamtomo {

using cx = std::complex<double>;

// Pure state on a truncated Fock basis.  log_norm accumulates the running
// log-norm during trajectory integration (the amplitude vector itself is
// kept at unit norm).
struct FockState {
    Eigen::VectorXcd amp;
    double log_norm = 0.0;

    int dim() const { return static_cast<int>(amp.size()); }
};

using FockOperator = Eigen::MatrixXcd;

int recommended_dim(cx alpha);

FockState coherent_state(cx alpha, int dim);

// Even superposition (|alpha> + |-alpha>), normalized on the truncation.
FockState cat_state(cx alpha, int dim);

FockState fock_basis_state(int n, int dim);

cx expect_annihilation(const FockState& s);
double expect_number(const FockState& s);

// Probability in the topmost `levels` Fock levels.
double tail_mass(const FockState& s, int levels = 5);

// Phase-space rotation by `angle`: mean alpha -> alpha e^{i angle}.
FockState rotate_state(const FockState& s, double angle);
FockOperator rotate_operator(const FockOperator& op, double angle);

// Largest squeeze parameter representable on a truncation of size dim.
double squeeze_cap(int dim);

// Fock-basis operator of one POVM element: a displaced, rotated, squeezed
// thermal Gaussian scaled by 1/(2 pi), so that integrating the element over
// the estimate plane yields the identity.  The low block returned is exact:
// synthesis happens on an internally enlarged truncation.  Throws on
// sub-Heisenberg variance pairs and on squeeze parameters beyond the cap.
FockOperator povm_operator(const GaussianPovmElement& e, int dim);

struct GridSpec {
    double x_min = -6.0, x_max = 6.0;
    double y_min = -6.0, y_max = 6.0;
    int nx = 121, ny = 121;
};

struct WignerGrid {
    std::vector<double> xs, ys;
    Eigen::MatrixXd values; // values(iy, ix)

    double min_value() const { return values.minCoeff(); }
    double integral() const; // trapezoid over the grid
};

WignerGrid wigner(const FockOperator& rho, const GridSpec& g);

// <psi| rho |psi> for a pure target.
double fidelity(const FockOperator& rho, const FockState& target);

// Exact matrix elements <n|D(beta)|k>.  row0 fills d_{0,k}; next_row advances
// d_{n,.} -> d_{n+1,.} in place-compatible fashion (prev and out may not alias).
void displacement_row0(cx beta, int ncols, cx* out);
void displacement_next_row(cx beta, int row_n, const cx* prev, int ncols, cx* out);

// Columns 0..ncols-1 of the squeeze operator exp[(r/2)(a^2 - adag^2)] on an
// n x n truncation (cached internally; thread-safe).
Eigen::MatrixXcd squeeze_columns(double r, int n, int ncols);

} // namespace pamtomo
