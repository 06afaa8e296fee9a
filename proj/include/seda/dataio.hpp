#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace seda {

struct Dataset {
    Eigen::MatrixXd features;               // n x p
    std::vector<std::string> labels;        // n entries
    std::vector<std::string> feature_names;

    long n() const { return features.rows(); }
    long p() const { return features.cols(); }
    // Unique labels in first-appearance order.
    std::vector<std::string> classes() const;
    // Row indices belonging to one label.
    Eigen::MatrixXd rows_for(const std::string& label) const;
};

// RFC-4180-style CSV with a required header row; quoted fields and
// escaped quotes are honored. The named column becomes the labels; every
// other column must parse as a finite decimal number. Errors carry
// 1-based row and the column name.
Dataset load_csv(const std::string& path, const std::string& label_column);

// Writes a dataset back out with round-trip (17 significant digit)
// precision, label column last.
void save_csv(const Dataset& data, const std::string& path,
              const std::string& label_column = "label");

// Per-feature affine map to zero mean and unit variance, fit on one set
// and applicable to another.
struct StandardizeParams {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // 1/sd
};
StandardizeParams fit_standardize(const Dataset& data);
Dataset apply_standardize(const StandardizeParams& params,
                          const Dataset& data);
Dataset standardize(const Dataset& data);

// PCA projection keeping ceil(rate*p) top components, fit on training
// features.
struct PcaParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // p x k
};
PcaParams fit_pca(const Dataset& data, double rate);
Dataset apply_pca(const PcaParams& params, const Dataset& data);
Dataset pca_reduce(const Dataset& data, double rate);

// Explicit polynomial feature map: all monomials of total degree <= degree
// including the constant; output dimension C(p+degree, degree).
Dataset poly_kernel_features(const Dataset& data, int degree);

}  // namespace seda
