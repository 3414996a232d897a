#include "kernels_detail.hpp"

#if defined(PAMTOMO_HAVE_AVX2)

#include <immintrin.h>

// Layout: interleaved complex doubles, two complex numbers per __m256d.
// All loads are unaligned; boundary elements of the ladder kernels fall back
// to the scalar path.

namespace pamtomo::kernels::detail {

namespace {

// a*b for interleaved complex pairs
inline __m256d cmul(__m256d a, __m256d b)
{
    __m256d are = _mm256_movedup_pd(a);                 // [ar, ar, ar2, ar2]
    __m256d aim = _mm256_permute_pd(a, 0xF);            // [ai, ai, ai2, ai2]
    __m256d bsw = _mm256_permute_pd(b, 0x5);            // [bi, br, bi2, br2]
    return _mm256_fmaddsub_pd(are, b, _mm256_mul_pd(aim, bsw));
}

// broadcast one complex scalar into both lanes
inline __m256d cbroadcast(cx a)
{
    return _mm256_setr_pd(a.real(), a.imag(), a.real(), a.imag());
}

// expand two consecutive doubles w[0], w[1] to [w0, w0, w1, w1]
inline __m256d wexpand(const double* w)
{
    __m128d lo = _mm_loadu_pd(w);
    __m256d v = _mm256_castpd128_pd256(lo);
    return _mm256_permute4x64_pd(v, 0x50); // [w0, w0, w1, w1]
}

inline double hsum(__m256d v)
{
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

} // namespace

void axpy_avx2(cx a, const cx* x, cx* y, std::size_t n)
{
    const double* xp = reinterpret_cast<const double*>(x);
    double* yp = reinterpret_cast<double*>(y);
    const __m256d av = cbroadcast(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(yv, cmul(av, xv)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_real_avx2(double a, const cx* x, cx* y, std::size_t n)
{
    const double* xp = reinterpret_cast<const double*>(x);
    double* yp = reinterpret_cast<double*>(y);
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        _mm256_storeu_pd(yp + 2 * i, _mm256_fmadd_pd(av, xv, yv));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double nrm2sq_avx2(const cx* x, std::size_t n)
{
    const double* xp = reinterpret_cast<const double*>(x);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        acc = _mm256_fmadd_pd(xv, xv, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i)
        s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return s;
}

cx dotc_avx2(const cx* x, const cx* y, std::size_t n)
{
    const double* xp = reinterpret_cast<const double*>(x);
    const double* yp = reinterpret_cast<const double*>(y);
    __m256d accp = _mm256_setzero_pd(); // xr*yr, xi*yi pairs
    __m256d accq = _mm256_setzero_pd(); // xi*yr, xr*yi pairs
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d xv = _mm256_loadu_pd(xp + 2 * i);
        __m256d yv = _mm256_loadu_pd(yp + 2 * i);
        accp = _mm256_fmadd_pd(xv, yv, accp);
        accq = _mm256_fmadd_pd(_mm256_permute_pd(xv, 0x5), yv, accq);
    }
    alignas(32) double p[4], q[4];
    _mm256_store_pd(p, accp);
    _mm256_store_pd(q, accq);
    double re = p[0] + p[1] + p[2] + p[3];
    double im = (q[1] - q[0]) + (q[3] - q[2]);
    for (; i < n; ++i) {
        re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
        im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
    }
    return {re, im};
}

void scal_avx2(double a, cx* x, std::size_t n)
{
    double* xp = reinterpret_cast<double*>(x);
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        _mm256_storeu_pd(xp + 2 * i, _mm256_mul_pd(av, _mm256_loadu_pd(xp + 2 * i)));
    for (; i < n; ++i) x[i] *= a;
}

void ladder_apply_avx2(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                       cx* out, std::size_t n)
{
    if (n < 6) {
        ladder_apply_scalar(u, v, psi, wlo, whi, out, n);
        return;
    }
    const double* pp = reinterpret_cast<const double*>(psi);
    double* op = reinterpret_cast<double*>(out);
    const __m256d uv = cbroadcast(u);
    const __m256d vv = cbroadcast(v);

    out[0] = u * (wlo[0] * psi[1]);
    std::size_t i = 1;
    for (; i + 2 <= n - 1; i += 2) {
        __m256d plo = _mm256_loadu_pd(pp + 2 * (i + 1));
        __m256d phi = _mm256_loadu_pd(pp + 2 * (i - 1));
        __m256d acc = cmul(uv, _mm256_mul_pd(wexpand(wlo + i), plo));
        acc = _mm256_add_pd(acc, cmul(vv, _mm256_mul_pd(wexpand(whi + i), phi)));
        _mm256_storeu_pd(op + 2 * i, acc);
    }
    for (; i + 1 < n; ++i)
        out[i] = u * (wlo[i] * psi[i + 1]) + v * (whi[i] * psi[i - 1]);
    out[n - 1] = v * (whi[n - 1] * psi[n - 2]);
}

void drift_combine_avx2(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                        const cx* t2, const double* wup, const double* wdn,
                        cx* out, std::size_t n)
{
    if (n < 8) {
        drift_combine_scalar(c, dt, psi, t1, t2, wup, wdn, out, n);
        return;
    }
    const double* pp = reinterpret_cast<const double*>(psi);
    const double* t1p = reinterpret_cast<const double*>(t1);
    const double* t2p = reinterpret_cast<const double*>(t2);
    double* op = reinterpret_cast<double*>(out);

    const __m256d aav = cbroadcast(c.a_aa);
    const __m256d ccv = cbroadcast(c.a_cc);
    const __m256d anv = cbroadcast(c.a_n);
    const __m256d a1v = cbroadcast(c.a_1);
    const __m256d dtv = _mm256_set1_pd(dt);
    const __m256d half = _mm256_set1_pd(0.5);

    // leading/trailing edge handled scalar
    for (std::size_t j = 0; j < 2; ++j) {
        cx acc = (c.a_n * static_cast<double>(j) + c.a_1) * psi[j];
        acc += c.a_aa * (wup[j] * psi[j + 2]);
        out[j] = psi[j] + dt * acc + t1[j] + 0.5 * t2[j];
    }
    std::size_t i = 2;
    __m256d idx = _mm256_setr_pd(double(i), double(i), double(i + 1), double(i + 1));
    const __m256d two = _mm256_set1_pd(2.0);
    for (; i + 2 <= n - 2; i += 2) {
        __m256d pv = _mm256_loadu_pd(pp + 2 * i);
        // diag = (a_n * i + a_1) * psi
        __m256d diag_re = _mm256_fmadd_pd(_mm256_movedup_pd(anv), idx, _mm256_movedup_pd(a1v));
        __m256d diag_im = _mm256_fmadd_pd(_mm256_permute_pd(anv, 0xF), idx, _mm256_permute_pd(a1v, 0xF));
        __m256d psw = _mm256_permute_pd(pv, 0x5);
        __m256d acc = _mm256_fmaddsub_pd(diag_re, pv, _mm256_mul_pd(diag_im, psw));
        // + a_aa * wup * psi[i+2]
        __m256d pup = _mm256_mul_pd(wexpand(wup + i), _mm256_loadu_pd(pp + 2 * (i + 2)));
        acc = _mm256_add_pd(acc, cmul(aav, pup));
        // + a_cc * wdn * psi[i-2]
        __m256d pdn = _mm256_mul_pd(wexpand(wdn + i), _mm256_loadu_pd(pp + 2 * (i - 2)));
        acc = _mm256_add_pd(acc, cmul(ccv, pdn));
        // out = psi + dt*acc + t1 + 0.5*t2
        __m256d res = _mm256_fmadd_pd(dtv, acc, pv);
        res = _mm256_add_pd(res, _mm256_loadu_pd(t1p + 2 * i));
        res = _mm256_fmadd_pd(half, _mm256_loadu_pd(t2p + 2 * i), res);
        _mm256_storeu_pd(op + 2 * i, res);
        idx = _mm256_add_pd(idx, two);
    }
    for (; i < n; ++i) {
        cx acc = (c.a_n * static_cast<double>(i) + c.a_1) * psi[i];
        if (i + 2 < n) acc += c.a_aa * (wup[i] * psi[i + 2]);
        acc += c.a_cc * (wdn[i] * psi[i - 2]);
        out[i] = psi[i] + dt * acc + t1[i] + 0.5 * t2[i];
    }
}

cx expect_lower_avx2(const cx* psi, const double* wlo, std::size_t n)
{
    if (n < 4) return expect_lower_scalar(psi, wlo, n);
    const double* pp = reinterpret_cast<const double*>(psi);
    __m256d accp = _mm256_setzero_pd();
    __m256d accq = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n - 1; i += 2) {
        __m256d xv = _mm256_loadu_pd(pp + 2 * i);       // psi[i]
        __m256d yv = _mm256_loadu_pd(pp + 2 * (i + 1)); // psi[i+1]
        yv = _mm256_mul_pd(yv, wexpand(wlo + i));
        accp = _mm256_fmadd_pd(xv, yv, accp);
        accq = _mm256_fmadd_pd(_mm256_permute_pd(xv, 0x5), yv, accq);
    }
    alignas(32) double p[4], q[4];
    _mm256_store_pd(p, accp);
    _mm256_store_pd(q, accq);
    double re = p[0] + p[1] + p[2] + p[3];
    double im = (q[1] - q[0]) + (q[3] - q[2]);
    for (; i + 1 < n; ++i) {
        const cx a = psi[i], b = psi[i + 1];
        re += wlo[i] * (a.real() * b.real() + a.imag() * b.imag());
        im += wlo[i] * (a.real() * b.imag() - a.imag() * b.real());
    }
    return {re, im};
}

} // namespace pamtomo::kernels::detail

#endif // PAMTOMO_HAVE_AVX2
