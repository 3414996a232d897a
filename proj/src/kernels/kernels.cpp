#include "pamtomo/kernels.hpp"

#include "kernels_detail.hpp"

#include <cstdlib>
#include <cstring>

namespace pamtomo::kernels {

namespace detail {

void axpy_scalar(cx a, const cx* x, cx* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy_real_scalar(double a, const cx* x, cx* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double nrm2sq_scalar(const cx* x, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return s;
}

cx dotc_scalar(const cx* x, const cx* y, std::size_t n)
{
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
        im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
    }
    return {re, im};
}

void scal_scalar(double a, cx* x, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void ladder_apply_scalar(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                         cx* out, std::size_t n)
{
    if (n == 0) return;
    for (std::size_t i = 0; i + 1 < n; ++i)
        out[i] = u * (wlo[i] * psi[i + 1]);
    out[n - 1] = cx{0.0, 0.0};
    for (std::size_t i = 1; i < n; ++i)
        out[i] += v * (whi[i] * psi[i - 1]);
}

void drift_combine_scalar(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                          const cx* t2, const double* wup, const double* wdn,
                          cx* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        cx acc = (c.a_n * static_cast<double>(i) + c.a_1) * psi[i];
        if (i + 2 < n) acc += c.a_aa * (wup[i] * psi[i + 2]);
        if (i >= 2) acc += c.a_cc * (wdn[i] * psi[i - 2]);
        out[i] = psi[i] + dt * acc + t1[i] + 0.5 * t2[i];
    }
}

cx expect_lower_scalar(const cx* psi, const double* wlo, std::size_t n)
{
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const cx p = psi[i + 1];
        re += wlo[i] * (psi[i].real() * p.real() + psi[i].imag() * p.imag());
        im += wlo[i] * (psi[i].real() * p.imag() - psi[i].imag() * p.real());
    }
    return {re, im};
}

} // namespace detail

namespace {

struct Dispatch {
    void (*axpy)(cx, const cx*, cx*, std::size_t) = detail::axpy_scalar;
    void (*axpy_real)(double, const cx*, cx*, std::size_t) = detail::axpy_real_scalar;
    double (*nrm2sq)(const cx*, std::size_t) = detail::nrm2sq_scalar;
    cx (*dotc)(const cx*, const cx*, std::size_t) = detail::dotc_scalar;
    void (*scal)(double, cx*, std::size_t) = detail::scal_scalar;
    void (*ladder_apply)(cx, cx, const cx*, const double*, const double*, cx*, std::size_t) =
        detail::ladder_apply_scalar;
    void (*drift_combine)(const QuadCoef&, double, const cx*, const cx*, const cx*,
                          const double*, const double*, cx*, std::size_t) =
        detail::drift_combine_scalar;
    cx (*expect_lower)(const cx*, const double*, std::size_t) = detail::expect_lower_scalar;
    Backend backend = Backend::Scalar;
};

bool avx2_available()
{
#if defined(PAMTOMO_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void load_backend(Dispatch& d, Backend b)
{
    d = Dispatch{};
#if defined(PAMTOMO_HAVE_AVX2)
    if (b == Backend::Avx2) {
        d.axpy = detail::axpy_avx2;
        d.axpy_real = detail::axpy_real_avx2;
        d.nrm2sq = detail::nrm2sq_avx2;
        d.dotc = detail::dotc_avx2;
        d.scal = detail::scal_avx2;
        d.ladder_apply = detail::ladder_apply_avx2;
        d.drift_combine = detail::drift_combine_avx2;
        d.expect_lower = detail::expect_lower_avx2;
        d.backend = Backend::Avx2;
    }
#else
    (void)b;
#endif
}

Dispatch make_default()
{
    Dispatch d;
    Backend want = avx2_available() ? Backend::Avx2 : Backend::Scalar;
    if (const char* env = std::getenv("PAMTOMO_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) want = Backend::Scalar;
        else if (std::strcmp(env, "avx2") == 0 && avx2_available()) want = Backend::Avx2;
    }
    load_backend(d, want);
    return d;
}

Dispatch& dispatch()
{
    static Dispatch d = make_default();
    return d;
}

} // namespace

Backend active_backend() { return dispatch().backend; }

const char* backend_name(Backend b)
{
    switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

bool force_backend(Backend b)
{
    if (b == Backend::Avx2 && !avx2_available()) return false;
    load_backend(dispatch(), b);
    return true;
}

void axpy(cx a, const cx* x, cx* y, std::size_t n) { dispatch().axpy(a, x, y, n); }
void axpy_real(double a, const cx* x, cx* y, std::size_t n) { dispatch().axpy_real(a, x, y, n); }
double nrm2sq(const cx* x, std::size_t n) { return dispatch().nrm2sq(x, n); }
cx dotc(const cx* x, const cx* y, std::size_t n) { return dispatch().dotc(x, y, n); }
void scal(double a, cx* x, std::size_t n) { dispatch().scal(a, x, n); }

void ladder_apply(cx u, cx v, const cx* psi, const double* wlo, const double* whi,
                  cx* out, std::size_t n)
{
    dispatch().ladder_apply(u, v, psi, wlo, whi, out, n);
}

void drift_combine(const QuadCoef& c, double dt, const cx* psi, const cx* t1,
                   const cx* t2, const double* wup, const double* wdn,
                   cx* out, std::size_t n)
{
    dispatch().drift_combine(c, dt, psi, t1, t2, wup, wdn, out, n);
}

cx expect_lower(const cx* psi, const double* wlo, std::size_t n)
{
    return dispatch().expect_lower(psi, wlo, n);
}

} // namespace pamtomo::kernels
