#pragma once

#include <complex>
#include <cstddef>

// Data-parallel inner loops shared by the trajectory integrator, the filter
// sums and the MaxLik trace accumulation.  A scalar reference implementation
// always exists; an AVX2 variant is selected at runtime when the CPU supports
// it.  The two are equivalence-tested against each other.
//
// Conventions for the ladder kernels: `psi` is a Fock-basis amplitude vector
// of length n, weight tables are real arrays of length n, and out-of-range
// amplitudes (psi[-1], psi[n], ...) are treated as zero.

namespace pamtomo::kernels {

using cx = std::complex<double>;

enum class Backend { Scalar, Avx2 };

Backend active_backend();
const char* backend_name(Backend b);

// Returns false if the requested backend is not available on this machine.
// The PAMTOMO_SIMD environment variable ("scalar" or "avx2") selects the
// initial backend; tests use force_backend to exercise both paths.
bool force_backend(Backend b);

// y[i] += a * x[i]
void axpy(cx a, const cx* x, cx* y, std::size_t n);

// y[i] += a * x[i] with a real coefficient
void axpy_real(double a, const cx* x, cx* y, std::size_t n);

// sum_i |x[i]|^2
double nrm2sq(const cx* x, std::size_t n);

// sum_i conj(x[i]) * y[i]
cx dotc(const cx* x, const cx* y, std::size_t n);

// x[i] *= a
void scal(double a, cx* x, std::size_t n);

// out[i] = u * wlo[i] * psi[i+1] + v * whi[i] * psi[i-1]
// With wlo[i] = sqrt(i+1) and whi[i] = sqrt(i) this applies u*a + v*adag.
void ladder_apply(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                  cx* out, std::size_t n);

// Coefficients of a quadratic drift generator  a_aa*a^2 + a_cc*adag^2 + a_n*n + a_1.
struct QuadCoef {
    cx a_aa{0.0, 0.0};
    cx a_cc{0.0, 0.0};
    cx a_n{0.0, 0.0};
    cx a_1{0.0, 0.0};
};

// Fused integrator update:
//   out[i] = psi[i] + dt*((a_n*i + a_1)*psi[i] + a_aa*wup[i]*psi[i+2]
//                         + a_cc*wdn[i]*psi[i-2]) + t1[i] + 0.5*t2[i]
// with wup[i] = sqrt(i+1)*sqrt(i+2) and wdn[i] = sqrt(i)*sqrt(i-1).
void drift_combine(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                   const cx* t2, const double* wup, const double* wdn,
                   cx* out, std::size_t n);

// sum_i wlo[i] * conj(psi[i]) * psi[i+1]   (expectation of the lowering operator)
cx expect_lower(const cx* psi, const double* wlo, std::size_t n);

} // namespace pamtomo::kernels
