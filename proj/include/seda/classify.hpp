#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "seda/spiked.hpp"
#include "seda/theory.hpp"

namespace seda {

// A fitted linear classifier. The decision statistic is
//   g(x) = w.x + intercept + alpha
// with intercept = -w.(mean of class centroids); label 1 is assigned iff
// g(x) > 0 (exact ties go to label 2). alpha is 0 for plain ridge/level
// fits and the bias correction for the corrected variant.
struct SedaModel {
    std::string kind;  // "rlda" | "seda" | "seda_corrected"
    Eigen::VectorXd direction;
    double intercept = 0;
    double alpha = 0;
    ThetaParams theta;
    SpikeConfig config;
    std::vector<double> sample_eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;            // aligned columns
    Eigen::VectorXd mean1, mean2;
    int label1 = 1, label2 = 2;
    int n1 = 0, n2 = 0, p = 0;
};

// Rank-reducing multi-class model: columns of projector span the top K-1
// discriminant directions; classification is nearest centroid in the
// projected space.
struct MulticlassModel {
    Eigen::MatrixXd projector;  // p x (K-1), unit-norm columns
    Eigen::MatrixXd centroids;  // K x (K-1)
    ThetaParams theta;
    std::vector<int> labels;
    int p = 0;
};

// Oracle rule: assigns label 1 iff (x - (mu1+mu2)/2) . Sigma^{-1}(mu1-mu2)
// is strictly positive.
int bayes_classify(const Eigen::VectorXd& x, const Eigen::VectorXd& mu1,
                   const Eigen::VectorXd& mu2, const Eigen::MatrixXd& Sigma);

// Phi(-sqrt((mu1-mu2).Sigma^{-1}(mu1-mu2))/2).
double bayes_error(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2,
                   const Eigen::MatrixXd& Sigma);

// Ridge fit: direction (S_n + lambda I)^{-1}(xbar1 - xbar2) with the
// pooled covariance S_n (divisor n1+n2-2). Rows of X1/X2 are samples.
SedaModel fit_rlda(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                   double lambda);

// Level-enhanced fit: direction (S_n + lambda I_l)^{-1}(xbar1 - xbar2)
// where I_l = I - sum_j l_j u_j u_j^T over theta's levels at the sample
// spiked eigenvectors.
SedaModel fit_seda(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                   const ThetaParams& theta, const SpikeConfig& config);

// As fit_seda plus the alpha_hat intercept correction for n1 != n2.
SedaModel fit_corrected_seda(const Eigen::MatrixXd& X1,
                             const Eigen::MatrixXd& X2,
                             const ThetaParams& theta,
                             const SpikeConfig& config);

// Exact misclassification probability of the fitted rule under known
// Gaussian class distributions N(mu_i, Sigma).
double conditional_error(const SedaModel& model, const Eigen::VectorXd& mu1,
                         const Eigen::VectorXd& mu2,
                         const Eigen::MatrixXd& Sigma);

// Multi-class fit: within-class scatter S_w (divisor n), between-class
// scatter S_b; projector = top K-1 eigenvectors of the symmetrized pencil
// (S_w + lambda I_l)^{-1/2} S_b (S_w + lambda I_l)^{-1/2} mapped back and
// column-normalized.
MulticlassModel fit_multiclass(const std::vector<Eigen::MatrixXd>& Xs,
                               const ThetaParams& theta,
                               const SpikeConfig& config);

std::vector<int> predict(const SedaModel& model, const Eigen::MatrixXd& X);
std::vector<int> predict(const MulticlassModel& model,
                         const Eigen::MatrixXd& X);
Eigen::MatrixXd transform(const MulticlassModel& model,
                          const Eigen::MatrixXd& X);

// Versioned JSON serialization; numeric arrays are base64-encoded 64-bit
// little-endian floats.
std::string to_json(const SedaModel& model);
std::string to_json(const MulticlassModel& model);
SedaModel seda_model_from_json(const std::string& text);
MulticlassModel multiclass_model_from_json(const std::string& text);
// "rlda" | "seda" | "seda_corrected" | "multiclass" from a serialized doc.
std::string model_kind(const std::string& text);

}  // namespace seda
