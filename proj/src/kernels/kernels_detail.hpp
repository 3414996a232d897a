#pragma once

#include "pamtomo/kernels.hpp"

// Per-backend entry points. The scalar versions are the reference
// implementation; kernels_avx2.cpp provides the vectorized variants and is
// only compiled on x86-64 with an AVX2-capable compiler.

namespace pamtomo::kernels::detail {

void axpy_scalar(cx a, const cx* x, cx* y, std::size_t n);
void axpy_real_scalar(double a, const cx* x, cx* y, std::size_t n);
double nrm2sq_scalar(const cx* x, std::size_t n);
cx dotc_scalar(const cx* x, const cx* y, std::size_t n);
void scal_scalar(double a, cx* x, std::size_t n);
void ladder_apply_scalar(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                         cx* out, std::size_t n);
void drift_combine_scalar(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                          const cx* t2, const double* wup, const double* wdn,
                          cx* out, std::size_t n);
cx expect_lower_scalar(const cx* psi, const double* wlo, std::size_t n);

#if defined(PAMTOMO_HAVE_AVX2)
void axpy_avx2(cx a, const cx* x, cx* y, std::size_t n);
void axpy_real_avx2(double a, const cx* x, cx* y, std::size_t n);
double nrm2sq_avx2(const cx* x, std::size_t n);
cx dotc_avx2(const cx* x, const cx* y, std::size_t n);
void scal_avx2(double a, cx* x, std::size_t n);
void ladder_apply_avx2(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                       cx* out, std::size_t n);
void drift_combine_avx2(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                        const cx* t2, const double* wup, const double* wdn,
                        cx* out, std::size_t n);
cx expect_lower_avx2(const cx* psi, const double* wlo, std::size_t n);
#endif

} // namespace pamtomo::kernels::detail
