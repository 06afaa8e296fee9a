#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "seda/kernels.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                  double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree") {
    using namespace seda::kernels;
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 257u}) {
        const auto s = random_vector(n, 17 + n, 0.01, 10.0);
        const auto w = random_vector(n, 31 + n, 0.0, 1.0);
        const double A = 0.7, lam = 0.3;

        CHECK(scalar::resolvent_sum(s.data(), w.data(), n, A, lam) ==
              doctest::Approx(avx2::resolvent_sum(s.data(), w.data(), n, A,
                                                  lam))
                  .epsilon(1e-12));
        const auto ms = scalar::resolvent_moments(s.data(), w.data(), n, A,
                                                  lam);
        const auto mv = avx2::resolvent_moments(s.data(), w.data(), n, A,
                                                lam);
        CHECK(ms.inv == doctest::Approx(mv.inv).epsilon(1e-12));
        CHECK(ms.s_inv == doctest::Approx(mv.s_inv).epsilon(1e-12));
        CHECK(ms.inv2 == doctest::Approx(mv.inv2).epsilon(1e-12));
        CHECK(ms.s_inv2 == doctest::Approx(mv.s_inv2).epsilon(1e-12));
        CHECK(ms.s2_inv2 == doctest::Approx(mv.s2_inv2).epsilon(1e-12));

        CHECK(scalar::shifted_ratio_sum(s.data(), n, -0.5) ==
              doctest::Approx(avx2::shifted_ratio_sum(s.data(), n, -0.5))
                  .epsilon(1e-12));
        CHECK(scalar::dot(s.data(), w.data(), n) ==
              doctest::Approx(avx2::dot(s.data(), w.data(), n))
                  .epsilon(1e-12));
    }
}

TEST_CASE("backend forcing") {
    using namespace seda::kernels;
    force_backend("scalar");
    CHECK(std::string(active_backend()) == "scalar");
    force_backend("avx2");
    if (avx2::available()) CHECK(std::string(active_backend()) == "avx2");
    force_backend("auto");
    const auto s = random_vector(33, 5, 0.01, 10.0);
    const auto w = random_vector(33, 6, 0.0, 1.0);
    const double dispatched = resolvent_sum(s.data(), w.data(), 33, 0.9, 0.2);
    CHECK(dispatched ==
          doctest::Approx(scalar::resolvent_sum(s.data(), w.data(), 33, 0.9,
                                                0.2))
              .epsilon(1e-12));
}
