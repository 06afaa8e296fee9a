#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "seda/measures.hpp"
#include "seda/spiked.hpp"

namespace seda {

// The full tuning vector: ridge penalty plus one shrink/amplify level per
// spike index (keyed by position in the descending spectrum).
struct ThetaParams {
    double lambda = 0.1;
    std::map<int, double> levels;
};

// Per-spike plug-in quantities recovered from the sample spectrum.
struct SpikeEstimate {
    double s_hat = 0;    // population spike eigenvalue estimate
    double chi_jj = 0;   // chi_j(j) on the plug-in spectrum
};

struct SpikeEstimates {
    std::map<int, SpikeEstimate> per_spike;
    double sigma2 = 1.0;  // bulk variance (mean of non-spike eigenvalues)
};

struct PluginEstimates {
    double t2_hat = 0;
    double u1_hat = 0;
    double u2_hat = 0;
    double m_hat = 0;
    double m_prime_hat = 0;
    double m1_hat = 0;
    double gamma = 0;
    std::map<int, double> beta;
    std::map<int, double> s_tilde;
    double y1_hat = 0;
    double y2_hat = 0;
    double y_hat = 0;
};

// Everything needed to evaluate the plug-in objective at any theta; the
// theta-independent pieces (spike estimates) are computed once.
struct PluginInputs {
    std::vector<double> sample_eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;            // columns aligned with the above
    Eigen::VectorXd mean_diff;               // x-bar_1 - x-bar_2
    int n1 = 0;
    int n2 = 0;
    SpikeConfig config;
    SpikeEstimates spikes;
};

struct SearchConfig {
    int lambda_points = 32;
    double lambda_min = 1e-3;
    double lambda_max = 10.0;
    std::vector<double> large_levels{0.0, -0.25, -0.5, -1.0, -2.0, -4.0};
    std::vector<double> small_levels{0.0, 0.25, 0.5, 0.75, 0.9};
    int polish_sweeps = 3;
};

// Asymptotic misclassification rate of the ridge classifier:
//   (1/2) sum_{i=1,2} Phi(-[U1 + (-1)^i (y1-y2) T1] /
//                          (2 sqrt(U2 + (y1+y2) T2)))
// with the functionals evaluated at the pooled ratio y = y1 y2/(y1+y2).
double rlda_rate(const SpectralMeasure& H, const SpectralMeasure& G,
                 double mu_norm_sq, double y1, double y2, double lambda);

// Same expression on the level-transformed spectrum: eigenvalues (with
// their per-atom G-masses g_masses, summing to 1) are mapped through
// f_transform using theta's levels, then the rate above is evaluated on
// the transformed measures. With all levels zero this equals rlda_rate.
double seda_rate(const std::vector<double>& eigenvalues,
                 const std::vector<double>& g_masses, double mu_norm_sq,
                 const ThetaParams& theta, const SpikeConfig& config,
                 double y1, double y2);

// Bias-corrected variant: Phi(-U1 / (2 sqrt(U2 + (y1+y2) T2))) on the
// transformed measures; coincides with seda_rate when y1 == y2 and is
// strictly smaller otherwise.
double corrected_seda_rate(const std::vector<double>& eigenvalues,
                           const std::vector<double>& g_masses,
                           double mu_norm_sq, const ThetaParams& theta,
                           const SpikeConfig& config, double y1, double y2);

// Recovers population spike eigenvalues from the sample spectrum by
// inverting the forward map psi(s) = s (1 + y int t/(s-t) dH_bulk(t)) on
// its monotone branch (falling back to the sample value when the branch
// does not reach it), and chi_j(j) from the plug-in spectrum
// {s_hat spikes} U {sigma^2 x (p-r)}.
SpikeEstimates estimate_spikes(const std::vector<double>& sample_eigenvalues,
                               const SpikeConfig& config, double y);

// The consistent estimates of (T2, U1, U2) and their ingredients at a
// given theta. m_hat = (1/p) sum 1/(a_i/(1-l_i) + lambda) and m_prime_hat
// its squared-denominator analogue; beta_j = <d,u_j>^2/(s_hat_j chi_jj);
// gamma = sum_j (1 - s_hat_j/sigma^2) beta_j + |d|^2/sigma^2 - y1 - y2.
PluginEstimates plugin_estimates(const PluginInputs& in,
                                 const ThetaParams& theta);

// Intercept correction for unequal sample sizes:
//   alpha = (p/2n1 - p/2n2) (1 - tr) / (1 - p/n + (p/n) tr),
//   tr = (1/p) sum lambda / (a_i/(1-l_i) + lambda),  n = n1 + n2.
// Throws when the denominator is within 1e-12 of zero.
double alpha_hat(const std::vector<double>& sample_eigenvalues,
                 const ThetaParams& theta, const SpikeConfig& config, int n1,
                 int n2, int p);

// Efficacy ratio u1^2 / (u2 + (y1+y2) t2) evaluated from plug-ins; the
// quantity the tuner maximizes (larger ratio = smaller corrected rate).
double plugin_objective(const PluginInputs& in, const ThetaParams& theta);

// Maximizes the plug-in efficacy ratio over a log-spaced lambda grid
// crossed with per-spike level grids, then polishes with a few coordinate-
// descent sweeps. Deterministic; ties broken toward the lexicographically
// smallest theta.
ThetaParams tune_theta(const PluginInputs& in, const SearchConfig& search);

// Multi-class variant: maximizes the sum of pairwise efficacy ratios over
// all class pairs with one shared theta. All pairs must carry the same
// spike structure.
ThetaParams tune_theta_multiclass(const std::vector<PluginInputs>& pairs,
                                  const SearchConfig& search);

}  // namespace seda
