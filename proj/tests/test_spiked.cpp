#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "seda/spiked.hpp"

using seda::SpikeConfig;

TEST_CASE("is_supercritical") {
    const auto bulk = seda::build_spectral_measure({1.0});
    // int s^2/(s_j-s)^2 dH = 1/(s_j-1)^2 must be < 1/y.
    CHECK(seda::is_supercritical(bulk, 4.0, 0.5));        // 1/9 < 2
    CHECK_FALSE(seda::is_supercritical(bulk, 1.5, 0.5));  // 4 > 2
    CHECK(seda::is_supercritical(bulk, 0.2, 0.5));        // 1/0.64 < 2
    CHECK_THROWS(seda::is_supercritical(bulk, 1.0, 0.5));
}

TEST_CASE("solve_omegas frozen quadratic") {
    // Spectrum {4, 1} at y = 0.5: the equation
    // (1/2)[4/(4-w) + 1/(1-w)] = 2 reduces to 4w^2 - 15w + 8 = 0 with
    // roots (15 +- sqrt(97))/8.
    const std::vector<double> eig{4, 1};
    const auto omegas = seda::solve_omegas(eig, 0.5, {0, 1});
    REQUIRE(omegas.size() == 2);
    const double hi = (15.0 + std::sqrt(97.0)) / 8.0;
    const double lo = (15.0 - std::sqrt(97.0)) / 8.0;
    CHECK(omegas.at(0) == doctest::Approx(hi).epsilon(1e-10));
    CHECK(omegas.at(1) == doctest::Approx(lo).epsilon(1e-10));
    // Interlacing: root for a value sits strictly below it.
    CHECK(omegas.at(0) < 4.0);
    CHECK(omegas.at(0) > 1.0);
    CHECK(omegas.at(1) < 1.0);
    CHECK(omegas.at(1) > 0.0);
}

TEST_CASE("solve_omegas all-equal spectrum") {
    // All eigenvalues equal s: equation is s/(s-w) = 1/y, so w = s(1-y).
    const std::vector<double> eig(8, 2.0);
    for (double y : {0.25, 0.5, 0.9}) {
        const auto omegas = seda::solve_omegas(eig, y, {0});
        CHECK(omegas.at(0) == doctest::Approx(2.0 * (1 - y)).epsilon(1e-9));
    }
}

TEST_CASE("solve_omegas small-y continuation") {
    // As y -> 0 the root for eigenvalue s approaches s from below.
    const std::vector<double> eig{5, 3, 1};
    const auto omegas = seda::solve_omegas(eig, 1e-4, {0, 1, 2});
    CHECK(omegas.at(0) == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(omegas.at(1) == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(omegas.at(2) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(omegas.at(0) < 5.0);
    CHECK(omegas.at(1) < 3.0);
    CHECK(omegas.at(2) < 1.0);
}

TEST_CASE("solve_omegas residual and ties") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(0.5, 12.0);
    std::vector<double> eig(40);
    for (auto& s : eig) s = dist(rng);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    const auto omegas = seda::solve_omegas(eig, 0.7, {0, 5, 39});
    const double p = static_cast<double>(eig.size());
    for (const auto& [j, w] : omegas) {
        double res = 0;
        for (double s : eig) res += s / (s - w);
        res = res / p - 1.0 / 0.7;
        CHECK(std::abs(res) <= 1e-8);
    }
    // Tied spike indices share the root of their distinct value.
    const std::vector<double> tied{4, 1, 1, 1};
    const auto dup = seda::solve_omegas(tied, 2.0, {1, 2});
    CHECK(dup.at(1) == doctest::Approx(dup.at(2)).epsilon(1e-12));

    CHECK_THROWS(seda::solve_omegas({4, 1, -1, 1}, 2.0, {0}));
    CHECK_THROWS(seda::solve_omegas({4, 1}, 2.0, {5}));
}

TEST_CASE("chi_weights") {
    const std::vector<double> eig{4, 1, 1, 1};
    const auto omegas = seda::solve_omegas(eig, 2.0, {0});
    const auto chi = seda::chi_weights(eig, 0, omegas.at(0));
    REQUIRE(chi.chi.size() == eig.size());
    const double total =
        std::accumulate(chi.chi.begin(), chi.chi.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // Off-spike weights: chi_0(i) = s_0/(s_i-s_0) - w_0/(s_i-w_0).
    const double w0 = omegas.at(0);
    for (int i = 1; i < 4; ++i) {
        const double expect = 4.0 / (1.0 - 4.0) - w0 / (1.0 - w0);
        CHECK(chi.chi[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    // Degenerate omega_j == s_j: the j-th weight collapses to 1.
    const auto point = seda::chi_weights(eig, 0, 4.0);
    CHECK(point.chi[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 1; i < 4; ++i)
        CHECK(point.chi[i] == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS(seda::chi_weights(eig, 0, 1.0));  // pole at a bulk atom
}

TEST_CASE("predicted_overlap") {
    const std::vector<double> eig{4, 1, 1, 1};
    const auto omegas = seda::solve_omegas(eig, 0.5, {0});
    const auto chi = seda::chi_weights(eig, 0, omegas.at(0));
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(4);
    xi(0) = 1.0;
    CHECK(seda::predicted_overlap(xi, V, chi) ==
          doctest::Approx(chi.chi[0]).epsilon(1e-14));
    xi.setConstant(0.5);  // unit vector spread across all coordinates
    const double expect = 0.25 * (chi.chi[0] + chi.chi[1] + chi.chi[2] +
                                  chi.chi[3]);
    CHECK(seda::predicted_overlap(xi, V, chi) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("f_transform") {
    const std::vector<double> eig{4, 1, 1, 1};
    SpikeConfig config;
    config.large_indices = {0};
    config.levels = {{0, -1.0}};

    const auto omegas = seda::solve_omegas(eig, 0.5, {0});
    std::map<int, seda::ChiWeights> chis{
        {0, seda::chi_weights(eig, 0, omegas.at(0))}};

    SUBCASE("zero level is the identity") {
        SpikeConfig zero = config;
        zero.levels = {{0, 0.0}};
        const auto f = seda::f_transform(eig, zero, chis);
        for (std::size_t i = 0; i < eig.size(); ++i)
            CHECK(f[i] == doctest::Approx(eig[i]).epsilon(1e-14));
    }
    SUBCASE("shrink level scales through chi") {
        const auto f = seda::f_transform(eig, config, chis);
        // l/(1-l) = -1/2 at l = -1.
        for (std::size_t i = 0; i < eig.size(); ++i) {
            const double expect =
                (1.0 - 0.5 * chis.at(0).chi[i]) * eig[i];
            CHECK(f[i] == doctest::Approx(expect).epsilon(1e-12));
        }
        CHECK(f[0] < eig[0]);  // spike is shrunk
    }
    SUBCASE("level at the pole is rejected") {
        SpikeConfig bad = config;
        bad.small_indices = config.large_indices;
        bad.large_indices.clear();
        bad.levels = {{0, 1.0}};
        CHECK_THROWS(bad.validate());
    }
}

TEST_CASE("SpikeConfig validation") {
    SpikeConfig c;
    c.large_indices = {0};
    c.small_indices = {0};
    CHECK_THROWS(c.validate());
    c.small_indices = {3};
    c.levels = {{0, 0.5}};  // positive level on a large spike
    CHECK_THROWS(c.validate());
    c.levels = {{0, -1.0}, {3, 0.5}};
    CHECK_NOTHROW(c.validate());
    CHECK(c.level(0) == -1.0);
    CHECK(c.level(1) == 0.0);
    CHECK(c.all_indices() == std::vector<int>{0, 3});
}

TEST_CASE("estimate_spike_counts") {
    SUBCASE("spiked spectrum") {
        // One large spike, two small ones, unit bulk, y = 0.25: the MP
        // bulk support is [(1-0.5)^2, (1+0.5)^2] = [0.25, 2.25].
        std::vector<double> eig;
        eig.push_back(9.0);
        for (int i = 0; i < 97; ++i)
            eig.push_back(2.0 - 1.6 * i / 96.0);  // inside [0.4, 2.0]
        eig.push_back(0.05);
        eig.push_back(0.02);
        const auto counts = seda::estimate_spike_counts(eig, 0.25);
        CHECK(counts.r1 == 1);
        CHECK(counts.r2 == 2);
        CHECK(counts.sigma2 > 0.8);
        CHECK(counts.sigma2 < 1.5);
    }
    SUBCASE("pure bulk") {
        std::vector<double> eig;
        for (int i = 0; i < 100; ++i)
            eig.push_back(2.0 - 1.6 * i / 99.0);
        const auto counts = seda::estimate_spike_counts(eig, 0.25);
        CHECK(counts.r1 == 0);
        CHECK(counts.r2 == 0);
        CHECK(counts.sigma2 == doctest::Approx(1.2).epsilon(0.15));
    }
    SUBCASE("no small spikes when y >= 1") {
        std::vector<double> eig{9.0, 2.0, 1.5, 1.0, 0.5, 0.0, 0.0, 0.0};
        const auto counts = seda::estimate_spike_counts(eig, 2.0);
        CHECK(counts.r2 == 0);
    }
}
