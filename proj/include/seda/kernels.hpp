#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the spectral-measure and trace
// machinery. Each kernel has a scalar reference implementation and an
// AVX2 variant; the dispatched entry points pick one at runtime.
namespace seda::kernels {

// The five weighted sums over atoms (s_i, w_i) that every functional
// evaluation needs, with D_i = A*s_i + lam:
//   inv      = sum w/D        s_inv   = sum w*s/D
//   inv2     = sum w/D^2      s_inv2  = sum w*s/D^2
//   s2_inv2  = sum w*s^2/D^2
struct ResolventMoments {
    double inv = 0, s_inv = 0, inv2 = 0, s_inv2 = 0, s2_inv2 = 0;
};

// sum_i w[i] / (A*s[i] + lam)  -- the Marchenko-Pastur fixed-point integrand
double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam);

ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam);

// sum_i s[i] / (s[i] - omega)  -- the omega-equation rational sum
double shifted_ratio_sum(const double* s, std::size_t n, double omega);

double dot(const double* a, const double* b, std::size_t n);

namespace scalar {
double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam);
ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam);
double shifted_ratio_sum(const double* s, std::size_t n, double omega);
double dot(const double* a, const double* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
// Defined only when the TU is compiled with AVX2 support; available()
// reports both compile- and run-time support.
bool available();
double resolvent_sum(const double* s, const double* w, std::size_t n,
                     double A, double lam);
ResolventMoments resolvent_moments(const double* s, const double* w,
                                   std::size_t n, double A, double lam);
double shifted_ratio_sum(const double* s, std::size_t n, double omega);
double dot(const double* a, const double* b, std::size_t n);
}  // namespace avx2

// "scalar", "avx2", or "auto" (default). Unknown names fall back to auto.
void force_backend(const char* name);
const char* active_backend();

}  // namespace seda::kernels
