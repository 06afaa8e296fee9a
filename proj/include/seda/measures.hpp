#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace seda {

// Discrete measure on the nonnegative reals. Atoms are stored in ascending
// location order; near-duplicate locations (relative gap below 1e-10) are
// merged with summed mass. For spectral measures the total mass is 1; the
// struct itself only requires nonnegative masses so callers can carry
// unnormalized projection weights through the same code paths.
struct SpectralMeasure {
    std::vector<double> locations;
    std::vector<double> masses;

    std::size_t size() const { return locations.size(); }
    double total_mass() const;
};

// Solution of the Marchenko-Pastur fixed point
//   m = integral dH(s) / (s(1-y+y*lambda*m) + lambda)
// at z = -lambda, together with m' = dm/dz there (so m' >= 0).
struct MpSolution {
    double m = 0;
    double m_prime = 0;
    double lambda = 0;
    double y = 0;
    double residual = 0;

    // 1 - y + y*lambda*m, the factor the fixed point keeps nonnegative.
    double a() const { return 1.0 - y + y * lambda * m; }
};

struct Functionals {
    double t1 = 0;
    double t2 = 0;
    double u1 = 0;
    double u2 = 0;
    double m1 = 0;
    MpSolution mp;
};

// Empirical spectral measure: each distinct eigenvalue gets mass
// multiplicity/p. Throws std::invalid_argument on empty input or a
// negative/non-finite entry.
SpectralMeasure build_spectral_measure(const std::vector<double>& eigenvalues);

// As above but with caller-supplied weights (used for the mean-projection
// measure and for plug-in spectra). Weights must be nonnegative; they are
// not normalized here.
SpectralMeasure build_weighted_measure(const std::vector<double>& locations,
                                       const std::vector<double>& weights);

// Mean-projection measure: mass at s_i proportional to
// <mu1-mu2, v_i>^2 / s_i, normalized to 1. Also returns
// mu_norm_sq = sum_i <mu1-mu2, v_i>^2 / s_i = |Sigma^{-1/2}(mu1-mu2)|^2.
// eigenvectors holds v_i as columns, aligned with eigenvalues. Throws if
// any eigenvalue is nonpositive or mu1 == mu2.
std::pair<SpectralMeasure, double> build_projected_measure(
    const std::vector<double>& eigenvalues, const Eigen::MatrixXd& eigenvectors,
    const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2);

// Solves the fixed point by damped iteration with a bisection fallback on
// the bracket [max(0,(y-1)/(y*lambda)), 1/lambda]; tolerance 1e-12 on the
// residual, at most 10,000 iterations. m' comes from implicit
// differentiation of the fixed point. Throws std::runtime_error carrying
// the last residual if the solve does not converge.
MpSolution solve_mp(const SpectralMeasure& H, double y, double lambda);

// The four error-rate functionals and the auxiliary m1, with
//   D(s) = s*(1-y+y*lambda*m) + lambda:
//   T1 = int s/D dH                T2 = (1+y*m1) int s^2/D^2 dH
//   U1 = mu_norm_sq int s/D dG     U2 = mu_norm_sq (1+y*m1) int s^2/D^2 dG
//   m1 = [int s^2 A/D^2 dH] / [1 + y int lambda*s/D^2 dH]
// T1, T2 and m1 are cross-checked against their closed forms in terms of
// (m, m'); disagreement beyond 1e-8 throws.
Functionals compute_functionals(const SpectralMeasure& H,
                                const SpectralMeasure& G, double mu_norm_sq,
                                double y, double lambda);

}  // namespace seda
