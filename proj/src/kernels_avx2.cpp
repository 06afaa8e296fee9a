#include "seda/kernels.hpp"

#if defined(SEDA_HAVE_AVX2_TU) && defined(__AVX2__)
#include <immintrin.h>

namespace seda::kernels::avx2 {

bool available() {
#if defined(__GNUC__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {
inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}
}  // namespace

double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam) {
    const __m256d va = _mm256_set1_pd(A);
    const __m256d vl = _mm256_set1_pd(lam);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vs = _mm256_loadu_pd(s + i);
        __m256d vw = _mm256_loadu_pd(w + i);
        __m256d d = _mm256_add_pd(_mm256_mul_pd(va, vs), vl);
        acc = _mm256_add_pd(acc, _mm256_div_pd(vw, d));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += w[i] / (A * s[i] + lam);
    return total;
}

ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam) {
    const __m256d va = _mm256_set1_pd(A);
    const __m256d vl = _mm256_set1_pd(lam);
    __m256d a1 = _mm256_setzero_pd(), a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd(), a4 = _mm256_setzero_pd();
    __m256d a5 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vs = _mm256_loadu_pd(s + i);
        __m256d vw = _mm256_loadu_pd(w + i);
        __m256d d = _mm256_add_pd(_mm256_mul_pd(va, vs), vl);
        __m256d wd = _mm256_div_pd(vw, d);
        __m256d wd2 = _mm256_div_pd(wd, d);
        __m256d swd2 = _mm256_mul_pd(vs, wd2);
        a1 = _mm256_add_pd(a1, wd);
        a2 = _mm256_add_pd(a2, _mm256_mul_pd(vs, wd));
        a3 = _mm256_add_pd(a3, wd2);
        a4 = _mm256_add_pd(a4, swd2);
        a5 = _mm256_add_pd(a5, _mm256_mul_pd(vs, swd2));
    }
    ResolventMoments m;
    m.inv = hsum(a1);
    m.s_inv = hsum(a2);
    m.inv2 = hsum(a3);
    m.s_inv2 = hsum(a4);
    m.s2_inv2 = hsum(a5);
    for (; i < n; ++i) {
        const double d = A * s[i] + lam;
        const double wd = w[i] / d;
        const double wd2 = wd / d;
        m.inv += wd;
        m.s_inv += s[i] * wd;
        m.inv2 += wd2;
        m.s_inv2 += s[i] * wd2;
        m.s2_inv2 += s[i] * s[i] * wd2;
    }
    return m;
}

double shifted_ratio_sum(const double* s, std::size_t n, double omega) {
    const __m256d vo = _mm256_set1_pd(omega);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vs = _mm256_loadu_pd(s + i);
        acc = _mm256_add_pd(acc, _mm256_div_pd(vs, _mm256_sub_pd(vs, vo)));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += s[i] / (s[i] - omega);
    return total;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(
            acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

}  // namespace seda::kernels::avx2

#else

namespace seda::kernels::avx2 {
bool available() { return false; }
double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam) {
    return scalar::resolvent_sum(s, w, n, A, lam);
}
ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam) {
    return scalar::resolvent_moments(s, w, n, A, lam);
}
double shifted_ratio_sum(const double* s, std::size_t n, double omega) {
    return scalar::shifted_ratio_sum(s, n, omega);
}
double dot(const double* a, const double* b, std::size_t n) {
    return scalar::dot(a, b, n);
}
}  // namespace seda::kernels::avx2

#endif
