#include "seda/kernels.hpp"

#include <atomic>
#include <cstring>

namespace seda::kernels {

namespace scalar {

double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += w[i] / (A * s[i] + lam);
    return total;
}

ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam) {
    ResolventMoments m;
    for (std::size_t i = 0; i < n; ++i) {
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
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += s[i] / (s[i] - omega);
    return total;
}

double dot(const double* a, const double* b, std::size_t n) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += a[i] * b[i];
    return total;
}

}  // namespace scalar

namespace {

enum class Backend { Auto, Scalar, Avx2 };

std::atomic<Backend> g_forced{Backend::Auto};

bool use_avx2() {
    static const bool detected = avx2::available();
    switch (g_forced.load(std::memory_order_relaxed)) {
        case Backend::Scalar: return false;
        case Backend::Avx2: return detected;
        default: return detected;
    }
}

}  // namespace

void force_backend(const char* name) {
    if (name && std::strcmp(name, "scalar") == 0)
        g_forced.store(Backend::Scalar);
    else if (name && std::strcmp(name, "avx2") == 0)
        g_forced.store(Backend::Avx2);
    else
        g_forced.store(Backend::Auto);
}

const char* active_backend() { return use_avx2() ? "avx2" : "scalar"; }

double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam) {
    return use_avx2() ? avx2::resolvent_sum(s, w, n, A, lam)
                      : scalar::resolvent_sum(s, w, n, A, lam);
}

ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam) {
    return use_avx2() ? avx2::resolvent_moments(s, w, n, A, lam)
                      : scalar::resolvent_moments(s, w, n, A, lam);
}

double shifted_ratio_sum(const double* s, std::size_t n, double omega) {
    return use_avx2() ? avx2::shifted_ratio_sum(s, n, omega)
                      : scalar::shifted_ratio_sum(s, n, omega);
}

double dot(const double* a, const double* b, std::size_t n) {
    return use_avx2() ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

}  // namespace seda::kernels
