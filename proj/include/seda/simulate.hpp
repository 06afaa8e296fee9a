#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "seda/theory.hpp"

namespace seda {

// Covariance families used by the synthetic studies.
//   case1: diag(0.01, 0.05, 1, ..., 1, 10)
//   case2: diag(0.01, 0.05, 1, ..., 1, 5, ..., 5, 20) with `fives` fives
//   case3: (1 + 1/p) I - (1/p) 11^T
//   ar1:   Sigma_ij = rho^|i-j|
//   diagonal/dense: caller-supplied entries
struct CovarianceSpec {
    std::string kind = "case1";
    int p = 100;
    double rho = 0.5;
    int fives = -1;  // case2 only; -1 = floor(p/10)
    std::vector<double> values;  // diagonal entries or dense row-major
};

struct CovarianceModel {
    Eigen::MatrixXd sigma;
    std::vector<double> eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;     // columns aligned with the above
    Eigen::MatrixXd sqrt_factor;      // symmetric square root
};

// Class-1 mean direction; class 2 sits at the origin.
//   random_normal: i.i.d. standard-normal entries (drawn once per
//     experiment from base_seed), with `pinned` entries overwritten before
//     the Bayes-error rescale
//   eigvec: the k-th population eigenvector (1-based, descending)
//   fixed: caller-supplied entries
struct MeanSpec {
    std::string kind = "random_normal";
    int k = 1;
    std::map<int, double> pinned;
    std::vector<double> values;
};

struct ClassifierSpec {
    std::string name;
    // "bayes" | "rlda" | "seda" | "seda_corrected" |
    // "seda_oracle_intercept" | "seda_tuned"
    std::string kind = "rlda";
    double lambda = 0.1;
    std::map<int, double> levels;
    std::vector<int> large_indices;
    std::vector<int> small_indices;
    bool auto_spikes = false;  // detect spike counts from the sample
};

struct ExperimentConfig {
    CovarianceSpec covariance;
    MeanSpec mean;
    double target_bayes_error = 0.1;
    int n1 = 100, n2 = 100, n_test = 1000;
    int replications = 100;
    std::uint64_t base_seed = 20240101;
    std::vector<ClassifierSpec> classifiers;
};

struct ResultRow {
    int rep = 0;
    std::string classifier;
    double emp_error = 0;
    double theory_error = 0;
    double wall_ms = 0;
    std::string note;  // nonempty when the fit failed
};

struct ResultTable {
    std::vector<ResultRow> rows;

    std::string to_csv() const;
    // Mean over replications of the named classifier's column.
    double mean_emp(const std::string& name) const;
    double mean_theory(const std::string& name) const;
    double sd_emp(const std::string& name) const;
};

CovarianceModel make_covariance(const CovarianceSpec& spec);

// Szego approximation to the k-th (1-based, descending) AR(1) eigenvalue:
// (1 - rho^2) / (1 + rho^2 - 2 rho cos(k pi / (p+1))).
double szego_approx(double rho, int p, int k);

// Scales `direction` so the Bayes error between N(mu1, Sigma) and
// N(0, Sigma) equals `target`.
Eigen::VectorXd calibrate_means(const Eigen::MatrixXd& Sigma,
                                const Eigen::VectorXd& direction,
                                double target);

// n independent rows of N(mu, factor factor^T); deterministic in seed.
Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sqrt_factor, int n,
                                std::uint64_t seed);

// Runs every classifier on every replication (seed base_seed + 1 + rep;
// the class-1 mean is drawn once from base_seed). Rows come back ordered
// by (replication, roster position) regardless of thread count.
ResultTable run_experiment(const ExperimentConfig& config, int threads = 1);

// Theoretical rate for each roster entry under the config's population
// model (NaN for data-dependent entries such as the tuned classifier).
std::vector<std::pair<std::string, double>> theoretical_rates(
    const ExperimentConfig& config);

// JSON round-trip for experiment configs (schema_version 1).
ExperimentConfig experiment_config_from_json(const std::string& text);
std::string to_json(const ExperimentConfig& config);

}  // namespace seda
