#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "seda/classify.hpp"
#include "seda/normal.hpp"

using seda::SpikeConfig;
using seda::ThetaParams;

namespace {

struct TwoClassData {
    Eigen::MatrixXd X1, X2;
    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd Sigma;
};

TwoClassData make_data(int p, int n1, int n2, std::uint64_t seed,
                       double spike = 10.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
    scale(0) = std::sqrt(spike);
    scale(p - 1) = std::sqrt(0.05);

    TwoClassData d;
    d.Sigma = scale.array().square().matrix().asDiagonal();
    d.mu1 = Eigen::VectorXd::Zero(p);
    d.mu1(0) = 1.0;
    d.mu1(1) = 1.5;
    d.mu2 = Eigen::VectorXd::Zero(p);

    d.X1.resize(n1, p);
    d.X2.resize(n2, p);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < p; ++j)
            d.X1(i, j) = normal(rng) * scale(j) + d.mu1(j);
    for (int i = 0; i < n2; ++i)
        for (int j = 0; j < p; ++j) d.X2(i, j) = normal(rng) * scale(j);
    return d;
}

}  // namespace

TEST_CASE("bayes rule and error") {
    Eigen::MatrixXd Sigma = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd mu1(2), mu2(2), x(2);
    mu1 << 2, 0;
    mu2 << 0, 0;

    x << 1.5, 3.0;
    CHECK(seda::bayes_classify(x, mu1, mu2, Sigma) == 1);
    x << 0.3, 5.0;
    CHECK(seda::bayes_classify(x, mu1, mu2, Sigma) == 2);
    x << 1.0, -2.0;  // exact midpoint: tie goes to label 2
    CHECK(seda::bayes_classify(x, mu1, mu2, Sigma) == 2);

    // |mu1 - mu2|_Sigma = 2, so the error is Phi(-1).
    CHECK(seda::bayes_error(mu1, mu2, Sigma) ==
          doctest::Approx(seda::normal_cdf(-1.0)).epsilon(1e-12));
    CHECK(seda::normal_cdf(-1.0) == doctest::Approx(0.158655).epsilon(1e-5));
}

TEST_CASE("fit_rlda basic behavior") {
    const auto d = make_data(20, 80, 80, 42);
    const auto model = seda::fit_rlda(d.X1, d.X2, 0.5);
    CHECK(model.kind == "rlda");
    CHECK(model.p == 20);
    CHECK(model.n1 == 80);
    CHECK(model.alpha == 0.0);

    // Training accuracy should be far above chance.
    const auto pred1 = seda::predict(model, d.X1);
    const auto pred2 = seda::predict(model, d.X2);
    int correct = 0;
    for (int v : pred1) correct += (v == 1);
    for (int v : pred2) correct += (v == 2);
    CHECK(correct > 130);

    // Identical classes: every point lands on the tie side, label 2.
    const auto degenerate = seda::fit_rlda(d.X1, d.X1, 0.5);
    for (int v : seda::predict(degenerate, d.X1)) CHECK(v == 2);

    // Huge ridge penalty reduces to the mean-difference direction.
    const auto heavy = seda::fit_rlda(d.X1, d.X2, 1e8);
    const Eigen::VectorXd md = (d.X1.colwise().mean() -
                                d.X2.colwise().mean())
                                   .transpose();
    const double cosine = heavy.direction.dot(md) /
                          (heavy.direction.norm() * md.norm());
    CHECK(cosine == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_seda with zero levels matches fit_rlda") {
    const auto d = make_data(30, 100, 100, 7);
    ThetaParams theta;
    theta.lambda = 0.2;
    theta.levels = {{0, 0.0}, {29, 0.0}};
    SpikeConfig config;
    config.large_indices = {0};
    config.small_indices = {29};

    const auto ridge = seda::fit_rlda(d.X1, d.X2, 0.2);
    const auto level = seda::fit_seda(d.X1, d.X2, theta, config);
    CHECK((ridge.direction - level.direction).norm() <
          1e-10 * ridge.direction.norm());
    CHECK(level.intercept == doctest::Approx(ridge.intercept).epsilon(1e-10));

    // Nonzero levels change the direction.
    theta.levels = {{0, -1.0}, {29, 0.5}};
    const auto shrunk = seda::fit_seda(d.X1, d.X2, theta, config);
    CHECK((shrunk.direction - ridge.direction).norm() >
          1e-6 * ridge.direction.norm());
}

TEST_CASE("corrected fit and conditional error") {
    const auto d = make_data(30, 60, 140, 3);
    ThetaParams theta;
    theta.lambda = 0.2;
    theta.levels = {{0, -1.0}};
    SpikeConfig config;
    config.large_indices = {0};

    const auto plain = seda::fit_seda(d.X1, d.X2, theta, config);
    const auto corrected = seda::fit_corrected_seda(d.X1, d.X2, theta,
                                                    config);
    CHECK(plain.alpha == 0.0);
    CHECK(corrected.alpha != 0.0);
    CHECK((plain.direction - corrected.direction).norm() <
          1e-12 * plain.direction.norm());

    const double err_plain =
        seda::conditional_error(plain, d.mu1, d.mu2, d.Sigma);
    const double err_corr =
        seda::conditional_error(corrected, d.mu1, d.mu2, d.Sigma);
    CHECK(err_plain > 0);
    CHECK(err_plain < 0.5);
    CHECK(err_corr <= err_plain + 1e-12);

    // A direction orthogonal to the mean gap cannot discriminate.
    seda::SedaModel blind = plain;
    blind.direction = Eigen::VectorXd::Zero(30);
    blind.direction(5) = 1.0;  // mu gap lives in coordinates 0 and 1
    blind.intercept = 0.0;
    blind.alpha = 0.0;
    CHECK(seda::conditional_error(blind, d.mu1, d.mu2, d.Sigma) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("scale invariance of predictions") {
    const auto d = make_data(15, 50, 50, 21);
    const auto model = seda::fit_rlda(d.X1, d.X2, 0.3);
    // Scaling features and lambda^ consistently: predictions on original
    // points must be invariant under scaling all inputs by c when the
    // model is refit on scaled data with lambda * c^2.
    const double c = 3.0;
    const auto scaled =
        seda::fit_rlda(c * d.X1, c * d.X2, 0.3 * c * c);
    const auto base = seda::predict(model, d.X2);
    const auto rescaled = seda::predict(scaled, c * d.X2);
    CHECK(base == rescaled);
}

TEST_CASE("multiclass fit") {
    // Three well-separated classes in 10 dims.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    const int p = 10, n = 60;
    std::vector<Eigen::MatrixXd> Xs;
    std::vector<Eigen::VectorXd> mus;
    for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(p);
        mu(k) = 4.0;
        mus.push_back(mu);
        Eigen::MatrixXd X(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = normal(rng) + mu(j);
        Xs.push_back(X);
    }
    ThetaParams theta;
    theta.lambda = 0.5;
    const auto model = seda::fit_multiclass(Xs, theta, SpikeConfig{});
    CHECK(model.projector.rows() == p);
    CHECK(model.projector.cols() == 2);
    CHECK(model.centroids.rows() == 3);
    for (int c = 0; c < 2; ++c)
        CHECK(model.projector.col(c).norm() ==
              doctest::Approx(1.0).epsilon(1e-10));

    int correct = 0;
    for (int k = 0; k < 3; ++k) {
        const auto pred = seda::predict(model, Xs[k]);
        for (int v : pred) correct += (v == model.labels[k]);
    }
    CHECK(correct > 170);  // 180 points total

    const Eigen::MatrixXd proj = seda::transform(model, Xs[0]);
    CHECK(proj.rows() == n);
    CHECK(proj.cols() == 2);

    // K = 2 multiclass direction is collinear with the two-class fit.
    const auto two = seda::fit_multiclass({Xs[0], Xs[1]}, theta,
                                          SpikeConfig{});
    const auto pair = seda::fit_rlda(Xs[0], Xs[1], 0.5);
    // Multiclass within-class scatter uses divisor n, the pairwise fit
    // n1+n2-2; rescale the penalty to compare directions exactly.
    const double rescale = 0.5 * (2.0 * n) / (2.0 * n - 2.0);
    const auto pair_rescaled = seda::fit_rlda(Xs[0], Xs[1], rescale);
    const Eigen::VectorXd a = two.projector.col(0).normalized();
    const Eigen::VectorXd b = pair_rescaled.direction.normalized();
    CHECK(std::abs(a.dot(b)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("model JSON round-trips") {
    const auto d = make_data(12, 40, 40, 9);
    ThetaParams theta;
    theta.lambda = 0.2;
    theta.levels = {{0, -1.0}};
    SpikeConfig config;
    config.large_indices = {0};
    const auto model = seda::fit_corrected_seda(d.X1, d.X2, theta, config);

    const std::string text = seda::to_json(model);
    CHECK(seda::model_kind(text) == "seda_corrected");
    const auto back = seda::seda_model_from_json(text);
    CHECK(back.kind == model.kind);
    CHECK(back.p == model.p);
    CHECK((back.direction - model.direction).norm() == 0.0);
    CHECK(back.intercept == model.intercept);
    CHECK(back.alpha == model.alpha);
    CHECK(back.theta.lambda == model.theta.lambda);
    CHECK(back.theta.levels == model.theta.levels);
    CHECK(seda::predict(back, d.X2) == seda::predict(model, d.X2));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    std::vector<Eigen::MatrixXd> Xs;
    for (int k = 0; k < 3; ++k) {
        Eigen::MatrixXd X(30, 8);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 8; ++j)
                X(i, j) = normal(rng) + (j == k ? 3.0 : 0.0);
        Xs.push_back(X);
    }
    const auto mc = seda::fit_multiclass(Xs, theta, SpikeConfig{});
    const std::string mc_text = seda::to_json(mc);
    CHECK(seda::model_kind(mc_text) == "multiclass");
    const auto mc_back = seda::multiclass_model_from_json(mc_text);
    CHECK((mc_back.projector - mc.projector).norm() == 0.0);
    CHECK((mc_back.centroids - mc.centroids).norm() == 0.0);
    CHECK(mc_back.labels == mc.labels);
    Eigen::MatrixXd q(2, 8);
    q.setRandom();
    CHECK(seda::predict(mc_back, q) == seda::predict(mc, q));

    CHECK_THROWS(seda::seda_model_from_json("{\"schema\": 99}"));
}
