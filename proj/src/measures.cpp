#include "seda/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "seda/kernels.hpp"

namespace seda {

namespace {

constexpr double kMergeRelTol = 1e-10;
constexpr double kMpTol = 1e-12;
constexpr int kMpMaxIter = 10000;

// Sorts by location and merges atoms whose locations agree to relative
// tolerance (absolute near zero).
SpectralMeasure merge_atoms(std::vector<std::pair<double, double>> atoms) {
    std::sort(atoms.begin(), atoms.end());
    SpectralMeasure out;
    out.locations.reserve(atoms.size());
    out.masses.reserve(atoms.size());
    for (const auto& [loc, mass] : atoms) {
        if (!out.locations.empty()) {
            const double prev = out.locations.back();
            const double scale = std::max({std::abs(prev), std::abs(loc), 1.0});
            if (loc - prev <= kMergeRelTol * scale) {
                out.masses.back() += mass;
                continue;
            }
        }
        out.locations.push_back(loc);
        out.masses.push_back(mass);
    }
    return out;
}

void check_entries(const std::vector<double>& xs, const char* what) {
    if (xs.empty())
        throw std::invalid_argument(std::string(what) + ": empty list");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || xs[i] < 0) {
            std::ostringstream os;
            os << what << ": entry " << i << " = " << xs[i]
               << " is negative or non-finite";
            throw std::invalid_argument(os.str());
        }
    }
}

}  // namespace

double SpectralMeasure::total_mass() const {
    return std::accumulate(masses.begin(), masses.end(), 0.0);
}

SpectralMeasure build_spectral_measure(const std::vector<double>& eigenvalues) {
    check_entries(eigenvalues, "build_spectral_measure");
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(eigenvalues.size());
    const double mass = 1.0 / static_cast<double>(eigenvalues.size());
    for (double s : eigenvalues) atoms.emplace_back(s, mass);
    return merge_atoms(std::move(atoms));
}

SpectralMeasure build_weighted_measure(const std::vector<double>& locations,
                                       const std::vector<double>& weights) {
    check_entries(locations, "build_weighted_measure locations");
    check_entries(weights, "build_weighted_measure weights");
    if (locations.size() != weights.size())
        throw std::invalid_argument(
            "build_weighted_measure: locations/weights size mismatch");
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i)
        atoms.emplace_back(locations[i], weights[i]);
    return merge_atoms(std::move(atoms));
}

std::pair<SpectralMeasure, double> build_projected_measure(
    const std::vector<double>& eigenvalues, const Eigen::MatrixXd& eigenvectors,
    const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2) {
    const auto p = static_cast<Eigen::Index>(eigenvalues.size());
    if (eigenvectors.cols() != p || eigenvectors.rows() != p ||
        mu1.size() != p || mu2.size() != p)
        throw std::invalid_argument(
            "build_projected_measure: dimension mismatch");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
        if (!(eigenvalues[i] > 0))
            throw std::invalid_argument(
                "build_projected_measure: eigenvalue " + std::to_string(i) +
                " is not strictly positive");
    const Eigen::VectorXd diff = mu1 - mu2;
    const Eigen::VectorXd proj = eigenvectors.transpose() * diff;
    double mu_norm_sq = 0;
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(eigenvalues.size());
    for (Eigen::Index i = 0; i < p; ++i) {
        const double w = proj(i) * proj(i) / eigenvalues[i];
        mu_norm_sq += w;
        atoms.emplace_back(eigenvalues[i], w);
    }
    if (!(mu_norm_sq > 0))
        throw std::invalid_argument(
            "build_projected_measure: mu1 == mu2 (zero-mass measure)");
    for (auto& a : atoms) a.second /= mu_norm_sq;
    return {merge_atoms(std::move(atoms)), mu_norm_sq};
}

MpSolution solve_mp(const SpectralMeasure& H, double y, double lambda) {
    if (!(lambda > 0) || !(y > 0))
        throw std::invalid_argument("solve_mp: require lambda > 0 and y > 0");
    if (H.size() == 0) throw std::invalid_argument("solve_mp: empty measure");
    const double* s = H.locations.data();
    const double* w = H.masses.data();
    const std::size_t n = H.size();

    const double lo = std::max(0.0, (y - 1.0) / (y * lambda));
    const double hi = 1.0 / lambda;
    auto g = [&](double m) {
        const double A = 1.0 - y + y * lambda * m;
        return kernels::resolvent_sum(s, w, n, A, lambda);
    };

    double m = 0.5 * (lo + hi);
    double resid = g(m) - m;
    for (int it = 0; it < kMpMaxIter && std::abs(resid) > kMpTol; ++it) {
        m = std::clamp(m + 0.5 * resid, lo, hi);
        resid = g(m) - m;
    }
    if (std::abs(resid) > kMpTol) {
        // g(m)-m is >= 0 at lo and <= 0 at hi, so bisection always closes in.
        double a = lo, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            (g(mid) - mid > 0 ? a : b) = mid;
        }
        m = 0.5 * (a + b);
        resid = g(m) - m;
        // Bisection pins m to machine precision, but the representable
        // residual floor grows with the local slope of g (large when lambda
        // is tiny and A nearly vanishes). Accept anything at that floor.
        const double A = 1.0 - y + y * lambda * m;
        const double slope =
            y * lambda *
            kernels::resolvent_moments(s, w, n, A, lambda).s_inv2;
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             (1.0 + slope) * std::max(1.0, std::abs(m));
        if (std::abs(resid) > std::max(kMpTol, floor))
            throw std::runtime_error(
                "solve_mp: no convergence, last residual " +
                std::to_string(resid));
    }

    MpSolution sol;
    sol.m = m;
    sol.lambda = lambda;
    sol.y = y;
    sol.residual = resid;
    // Implicit differentiation of the fixed point at z = -lambda:
    //   m' (1 + y*lambda*J) = I2 + y*m*J,  I2 = int dH/D^2, J = int s dH/D^2.
    const auto mom = kernels::resolvent_moments(s, w, n, sol.a(), lambda);
    sol.m_prime = (mom.inv2 + y * m * mom.s_inv2) /
                  (1.0 + y * lambda * mom.s_inv2);
    return sol;
}

Functionals compute_functionals(const SpectralMeasure& H,
                                const SpectralMeasure& G, double mu_norm_sq,
                                double y, double lambda) {
    if (!(mu_norm_sq >= 0))
        throw std::invalid_argument(
            "compute_functionals: mu_norm_sq must be nonnegative");
    Functionals f;
    f.mp = solve_mp(H, y, lambda);
    const double m = f.mp.m, mprime = f.mp.m_prime, A = f.mp.a();

    const auto h =
        kernels::resolvent_moments(H.locations.data(), H.masses.data(),
                                   H.size(), A, lambda);
    const auto g =
        kernels::resolvent_moments(G.locations.data(), G.masses.data(),
                                   G.size(), A, lambda);

    f.t1 = h.s_inv;
    f.m1 = (A * h.s2_inv2) / (1.0 + y * lambda * h.s_inv2);
    f.t2 = (1.0 + y * f.m1) * h.s2_inv2;
    f.u1 = mu_norm_sq * g.s_inv;
    f.u2 = mu_norm_sq * (1.0 + y * f.m1) * g.s2_inv2;

    // Closed forms in terms of (m, m'); integral and closed form must agree.
    const double lm = lambda * m;
    const double t1c = (1.0 - lm) / A;
    const double t2c = (1.0 - lm) / (A * A * A) -
                       (lm - lambda * lambda * mprime) / (A * A * A * A);
    const double m1c =
        1.0 / (y * A) - lambda * (m - lambda * mprime) / (A * A) - 1.0 / y;
    if (std::abs(f.t1 - t1c) > 1e-8 || std::abs(f.t2 - t2c) > 1e-8 ||
        std::abs(f.m1 - m1c) > 1e-8)
        throw std::runtime_error(
            "compute_functionals: integral/closed-form cross-check failed");
    return f;
}

}  // namespace seda
