#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "seda/measures.hpp"

namespace seda {

// Bookkeeping for a spiked spectrum. Indices are 0-based positions into the
// eigenvalue list sorted descending: large_indices are spikes above the
// bulk (shrink levels, l <= 0), small_indices spikes below it (amplify
// levels, 0 <= l < 1). bulk_variance is the common bulk eigenvalue in the
// simple spiked model.
struct SpikeConfig {
    std::vector<int> large_indices;
    std::vector<int> small_indices;
    std::map<int, double> levels;
    double bulk_variance = 1.0;

    int r1() const { return static_cast<int>(large_indices.size()); }
    int r2() const { return static_cast<int>(small_indices.size()); }
    // All spike indices, large then small.
    std::vector<int> all_indices() const;
    double level(int j) const;  // 0 when unset
    // Throws std::invalid_argument on overlapping index sets or a level
    // violating its sign constraint (l <= 0 on large, 0 <= l < 1 on small).
    void validate() const;
};

// Detachment weights for spike j: chi[i] is the limiting squared overlap
// between the j-th sample eigenvector and the i-th population one. The
// weights sum to 1.
struct ChiWeights {
    int j = 0;
    double omega = 0;
    std::vector<double> chi;
};

// Supercriticality test: int s^2 dH_bulk(s) / (s_j - s)^2 < 1/y. Throws if
// s_j coincides with a bulk atom (the integral diverges).
bool is_supercritical(const SpectralMeasure& H_bulk, double s_j, double y);

// Roots of (1/p) sum_i s_i/(s_i - omega) = 1/y associated with the given
// spike positions. Eigenvalues must be strictly positive and sorted
// descending; each distinct eigenvalue owns one root (in the gap below it),
// and a spike index resolves to the root of its distinct value. Residuals
// are at or below 1e-10 scaled by max(1, 1/y).
std::map<int, double> solve_omegas(const std::vector<double>& eigenvalues,
                                   double y,
                                   const std::vector<int>& spike_indices);

// chi_j(i) = s_j/(s_i - s_j) - omega_j/(s_i - omega_j) for i != j and
// chi_j(j) = 1 - sum of the rest. Throws on a division by zero from
// coincident values.
ChiWeights chi_weights(const std::vector<double>& eigenvalues, int j,
                       double omega_j);

// sum_i chi_j(i) <xi, v_i>^2, the predicted squared overlap of a unit
// vector xi with the j-th sample eigenvector. eigenvectors holds v_i as
// columns aligned with the eigenvalue order used for chi.
double predicted_overlap(const Eigen::VectorXd& xi,
                         const Eigen::MatrixXd& eigenvectors,
                         const ChiWeights& chi);

// f(s_i) = [1 + sum_j (l_j/(1-l_j)) chi_j(i)] s_i over the spikes in
// config (levels from config.levels). chis must contain a ChiWeights entry
// for every spike with a nonzero level.
std::vector<double> f_transform(const std::vector<double>& eigenvalues,
                                const SpikeConfig& config,
                                const std::map<int, ChiWeights>& chis);

struct SpikeCounts {
    int r1 = 0;
    int r2 = 0;
    double sigma2 = 0;
};

// Heuristic spike-count estimate from a descending sample spectrum:
// thresholds at the Marchenko-Pastur bulk edges sigma^2 (1 +- sqrt(y))^2
// with a 5% guard band, sigma^2 initialized by the central-80% trimmed
// mean and then refined to the mean of the non-spike eigenvalues (the
// trimmed mean of bulk sample eigenvalues is biased low). Small-spike
// count is 0 when y >= 1.
SpikeCounts estimate_spike_counts(const std::vector<double>& eigenvalues,
                                  double y);

}  // namespace seda
