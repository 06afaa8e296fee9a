#include "seda/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "seda/classify.hpp"
#include "seda/normal.hpp"

namespace seda {

namespace {

using json = nlohmann::json;

std::vector<double> covariance_diagonal(const CovarianceSpec& spec) {
    const int p = spec.p;
    std::vector<double> d(static_cast<std::size_t>(p), 1.0);
    if (spec.kind == "case1") {
        if (p < 4) throw std::invalid_argument("case1: need p >= 4");
        d[0] = 0.01;
        d[1] = 0.05;
        d[static_cast<std::size_t>(p - 1)] = 10.0;
    } else if (spec.kind == "case2") {
        if (p < 5) throw std::invalid_argument("case2: need p >= 5");
        const int fives = spec.fives >= 0 ? spec.fives : p / 10;
        if (fives + 4 > p)
            throw std::invalid_argument("case2: too many mid-level entries");
        d[0] = 0.01;
        d[1] = 0.05;
        for (int i = p - 1 - fives; i < p - 1; ++i)
            d[static_cast<std::size_t>(i)] = 5.0;
        d[static_cast<std::size_t>(p - 1)] = 20.0;
    } else if (spec.kind == "diagonal") {
        if (static_cast<int>(spec.values.size()) != p)
            throw std::invalid_argument("diagonal: values size mismatch");
        d = spec.values;
    } else {
        throw std::invalid_argument("covariance_diagonal: not diagonal kind");
    }
    return d;
}

}  // namespace

CovarianceModel make_covariance(const CovarianceSpec& spec) {
    const int p = spec.p;
    if (p < 1) throw std::invalid_argument("make_covariance: p must be >= 1");
    CovarianceModel model;
    model.sigma.setZero(p, p);
    if (spec.kind == "case1" || spec.kind == "case2" ||
        spec.kind == "diagonal") {
        const auto d = covariance_diagonal(spec);
        for (int i = 0; i < p; ++i)
            model.sigma(i, i) = d[static_cast<std::size_t>(i)];
    } else if (spec.kind == "case3") {
        model.sigma.setConstant(p, p, -1.0 / p);
        model.sigma.diagonal().setConstant(1.0);
    } else if (spec.kind == "ar1") {
        if (!(std::abs(spec.rho) < 1))
            throw std::invalid_argument("ar1: require |rho| < 1");
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                model.sigma(i, j) = std::pow(spec.rho, std::abs(i - j));
    } else if (spec.kind == "dense") {
        if (static_cast<int>(spec.values.size()) != p * p)
            throw std::invalid_argument("dense: values size mismatch");
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                model.sigma(i, j) =
                    spec.values[static_cast<std::size_t>(i * p + j)];
        if (!model.sigma.isApprox(model.sigma.transpose(), 1e-12))
            throw std::invalid_argument("dense: matrix not symmetric");
    } else {
        throw std::invalid_argument("make_covariance: unknown kind '" +
                                    spec.kind + "'");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.sigma);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("make_covariance: eigendecomposition failed");
    if (es.eigenvalues()(0) <= 0)
        throw std::invalid_argument(
            "make_covariance: matrix not positive definite");
    model.eigenvalues.resize(static_cast<std::size_t>(p));
    model.eigenvectors.resize(p, p);
    for (int i = 0; i < p; ++i) {
        model.eigenvalues[static_cast<std::size_t>(i)] =
            es.eigenvalues()(p - 1 - i);
        model.eigenvectors.col(i) = es.eigenvectors().col(p - 1 - i);
    }
    model.sqrt_factor = es.eigenvectors() *
                        es.eigenvalues().cwiseSqrt().asDiagonal() *
                        es.eigenvectors().transpose();
    return model;
}

double szego_approx(double rho, int p, int k) {
    if (k < 1 || k > p) throw std::invalid_argument("szego_approx: bad k");
    const double c = std::cos(k * M_PI / (p + 1));
    return (1.0 - rho * rho) / (1.0 + rho * rho - 2.0 * rho * c);
}

Eigen::VectorXd calibrate_means(const Eigen::MatrixXd& Sigma,
                                const Eigen::VectorXd& direction,
                                double target) {
    if (!(target > 0) || !(target < 0.5))
        throw std::invalid_argument(
            "calibrate_means: target must lie in (0, 0.5)");
    if (direction.norm() == 0)
        throw std::invalid_argument("calibrate_means: zero direction");
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument(
            "calibrate_means: Sigma not positive definite");
    const double quad = direction.dot(llt.solve(direction));
    const double delta = -2.0 * normal_quantile(target);  // > 0
    return direction * (delta / std::sqrt(quad));
}

Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sqrt_factor, int n,
                                std::uint64_t seed) {
    const auto p = mu.size();
    if (sqrt_factor.rows() != p || sqrt_factor.cols() != p)
        throw std::invalid_argument("sample_gaussian: factor size mismatch");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Z(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = gauss(rng);
    Eigen::MatrixXd X = Z * sqrt_factor;
    X.rowwise() += mu.transpose();
    return X;
}

std::string ResultTable::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "rep,classifier,emp_error,theory_error,wall_ms\n";
    for (const auto& r : rows)
        os << r.rep << ',' << r.classifier << ',' << r.emp_error << ','
           << r.theory_error << ',' << r.wall_ms << '\n';
    return os.str();
}

double ResultTable::mean_emp(const std::string& name) const {
    double total = 0;
    int count = 0;
    for (const auto& r : rows)
        if (r.classifier == name && r.note.empty()) {
            total += r.emp_error;
            ++count;
        }
    if (count == 0)
        throw std::invalid_argument("ResultTable: no rows for " + name);
    return total / count;
}

double ResultTable::mean_theory(const std::string& name) const {
    double total = 0;
    int count = 0;
    for (const auto& r : rows)
        if (r.classifier == name && r.note.empty()) {
            total += r.theory_error;
            ++count;
        }
    if (count == 0)
        throw std::invalid_argument("ResultTable: no rows for " + name);
    return total / count;
}

double ResultTable::sd_emp(const std::string& name) const {
    const double m = mean_emp(name);
    double ss = 0;
    int count = 0;
    for (const auto& r : rows)
        if (r.classifier == name && r.note.empty()) {
            ss += (r.emp_error - m) * (r.emp_error - m);
            ++count;
        }
    return count > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
}

namespace {

struct Scenario {
    CovarianceModel cov;
    Eigen::VectorXd mu1;
    std::vector<double> g_masses;  // aligned with cov.eigenvalues
    double mu_norm_sq = 0;
    SpectralMeasure H, G;
    double y1 = 0, y2 = 0;
};

Scenario prepare_scenario(const ExperimentConfig& cfg) {
    Scenario sc;
    sc.cov = make_covariance(cfg.covariance);
    const int p = cfg.covariance.p;

    Eigen::VectorXd dir(p);
    if (cfg.mean.kind == "random_normal") {
        std::mt19937_64 rng(cfg.base_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < p; ++i) dir(i) = gauss(rng);
        for (const auto& [idx, val] : cfg.mean.pinned) {
            if (idx < 0 || idx >= p)
                throw std::invalid_argument("mean: pinned index out of range");
            dir(idx) = val;
        }
    } else if (cfg.mean.kind == "eigvec") {
        if (cfg.mean.k < 1 || cfg.mean.k > p)
            throw std::invalid_argument("mean: eigvec index out of range");
        dir = sc.cov.eigenvectors.col(cfg.mean.k - 1);
    } else if (cfg.mean.kind == "fixed") {
        if (static_cast<int>(cfg.mean.values.size()) != p)
            throw std::invalid_argument("mean: fixed values size mismatch");
        dir = Eigen::Map<const Eigen::VectorXd>(cfg.mean.values.data(), p);
    } else {
        throw std::invalid_argument("mean: unknown kind '" + cfg.mean.kind +
                                    "'");
    }
    sc.mu1 = calibrate_means(sc.cov.sigma, dir, cfg.target_bayes_error);

    const Eigen::VectorXd proj = sc.cov.eigenvectors.transpose() * sc.mu1;
    sc.g_masses.resize(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i)
        sc.mu_norm_sq += proj(i) * proj(i) /
                         sc.cov.eigenvalues[static_cast<std::size_t>(i)];
    for (int i = 0; i < p; ++i)
        sc.g_masses[static_cast<std::size_t>(i)] =
            proj(i) * proj(i) /
            sc.cov.eigenvalues[static_cast<std::size_t>(i)] / sc.mu_norm_sq;
    sc.H = build_spectral_measure(sc.cov.eigenvalues);
    sc.G = build_weighted_measure(sc.cov.eigenvalues, sc.g_masses);
    sc.y1 = static_cast<double>(p) / cfg.n1;
    sc.y2 = static_cast<double>(p) / cfg.n2;
    return sc;
}

SpikeConfig spec_config(const ClassifierSpec& spec) {
    SpikeConfig config;
    config.large_indices = spec.large_indices;
    config.small_indices = spec.small_indices;
    config.levels = spec.levels;
    return config;
}

SpikeConfig detect_spikes(const std::vector<double>& eigs, double y) {
    const auto counts = estimate_spike_counts(eigs, y);
    SpikeConfig config;
    for (int j = 0; j < counts.r1; ++j) config.large_indices.push_back(j);
    for (int j = 0; j < counts.r2; ++j)
        config.small_indices.push_back(static_cast<int>(eigs.size()) -
                                       counts.r2 + j);
    config.bulk_variance = counts.sigma2;
    return config;
}

// Theory value for a roster entry whose rate does not depend on the data.
double static_theory(const ClassifierSpec& spec, const Scenario& sc) {
    if (spec.kind == "bayes")
        return normal_cdf(-0.5 * std::sqrt(sc.mu_norm_sq));
    if (spec.kind == "rlda")
        return rlda_rate(sc.H, sc.G, sc.mu_norm_sq, sc.y1, sc.y2,
                         spec.lambda);
    ThetaParams theta{spec.lambda, spec.levels};
    const SpikeConfig config = spec_config(spec);
    if (spec.kind == "seda")
        return seda_rate(sc.cov.eigenvalues, sc.g_masses, sc.mu_norm_sq,
                         theta, config, sc.y1, sc.y2);
    if (spec.kind == "seda_corrected" ||
        spec.kind == "seda_oracle_intercept")
        return corrected_seda_rate(sc.cov.eigenvalues, sc.g_masses,
                                   sc.mu_norm_sq, theta, config, sc.y1,
                                   sc.y2);
    return std::numeric_limits<double>::quiet_NaN();  // data-dependent
}

ResultRow run_one(const ExperimentConfig& cfg, const Scenario& sc,
                  const ClassifierSpec& spec, double static_rate, int rep,
                  const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                  const Eigen::MatrixXd& T1, const Eigen::MatrixXd& T2) {
    ResultRow row;
    row.rep = rep;
    row.classifier = spec.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::vector<int> l1, l2;
        double theory = static_rate;
        if (spec.kind == "bayes") {
            const Eigen::VectorXd mu2 = Eigen::VectorXd::Zero(sc.mu1.size());
            l1.reserve(static_cast<std::size_t>(T1.rows()));
            l2.reserve(static_cast<std::size_t>(T2.rows()));
            for (Eigen::Index i = 0; i < T1.rows(); ++i)
                l1.push_back(bayes_classify(T1.row(i).transpose(), sc.mu1,
                                            mu2, sc.cov.sigma));
            for (Eigen::Index i = 0; i < T2.rows(); ++i)
                l2.push_back(bayes_classify(T2.row(i).transpose(), sc.mu1,
                                            mu2, sc.cov.sigma));
        } else {
            SedaModel model;
            if (spec.kind == "rlda") {
                model = fit_rlda(X1, X2, spec.lambda);
            } else {
                ThetaParams theta{spec.lambda, spec.levels};
                SpikeConfig config = spec_config(spec);
                if (spec.auto_spikes || spec.kind == "seda_tuned") {
                    // Spike positions from the sample spectrum of this rep.
                    const SedaModel probe = fit_rlda(X1, X2, spec.lambda);
                    const double y =
                        static_cast<double>(probe.p) / (cfg.n1 + cfg.n2);
                    SpikeConfig detected =
                        detect_spikes(probe.sample_eigenvalues, y);
                    detected.levels = config.levels;
                    if (!config.large_indices.empty() ||
                        !config.small_indices.empty())
                        detected = config;  // explicit sets take precedence
                    config = detected;
                    if (spec.kind == "seda_tuned") {
                        PluginInputs in;
                        in.sample_eigenvalues = probe.sample_eigenvalues;
                        in.eigenvectors = probe.eigenvectors;
                        in.mean_diff = probe.mean1 - probe.mean2;
                        in.n1 = cfg.n1;
                        in.n2 = cfg.n2;
                        in.config = config;
                        in.spikes =
                            estimate_spikes(probe.sample_eigenvalues,
                                            config, y);
                        theta = tune_theta(in, SearchConfig{});
                    }
                }
                if (spec.kind == "seda") {
                    model = fit_seda(X1, X2, theta, config);
                } else if (spec.kind == "seda_corrected" ||
                           spec.kind == "seda_tuned") {
                    model = fit_corrected_seda(X1, X2, theta, config);
                } else if (spec.kind == "seda_oracle_intercept") {
                    model = fit_seda(X1, X2, theta, config);
                    // Best possible intercept given the fitted direction
                    // and the true class means.
                    model.alpha = -model.intercept -
                                  0.5 * model.direction.dot(sc.mu1);
                } else {
                    throw std::invalid_argument(
                        "run_experiment: unknown classifier kind '" +
                        spec.kind + "'");
                }
                if (spec.kind == "seda_tuned")
                    theory = corrected_seda_rate(
                        sc.cov.eigenvalues, sc.g_masses, sc.mu_norm_sq,
                        theta, config, sc.y1, sc.y2);
            }
            l1 = predict(model, T1);
            l2 = predict(model, T2);
        }
        int wrong = 0;
        for (int l : l1) wrong += (l != 1);
        for (int l : l2) wrong += (l != 2);
        row.emp_error = static_cast<double>(wrong) /
                        static_cast<double>(l1.size() + l2.size());
        row.theory_error = theory;
    } catch (const std::exception& e) {
        row.note = e.what();
        row.emp_error = std::numeric_limits<double>::quiet_NaN();
        row.theory_error = std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return row;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config, int threads) {
    if (config.replications < 1)
        throw std::invalid_argument("run_experiment: replications must be "
                                    ">= 1");
    if (config.classifiers.empty())
        throw std::invalid_argument("run_experiment: empty roster");
    const Scenario sc = prepare_scenario(config);
    const Eigen::VectorXd mu2 = Eigen::VectorXd::Zero(config.covariance.p);

    std::vector<double> static_rates;
    for (const auto& spec : config.classifiers)
        static_rates.push_back(static_theory(spec, sc));

    const std::size_t K = config.classifiers.size();
    ResultTable table;
    table.rows.resize(static_cast<std::size_t>(config.replications) * K);

    auto work = [&](int rep) {
        const std::uint64_t s =
            (config.base_seed + 1 + static_cast<std::uint64_t>(rep)) *
            1000003ULL;
        const Eigen::MatrixXd X1 =
            sample_gaussian(sc.mu1, sc.cov.sqrt_factor, config.n1, s);
        const Eigen::MatrixXd X2 =
            sample_gaussian(mu2, sc.cov.sqrt_factor, config.n2, s + 1);
        const Eigen::MatrixXd T1 =
            sample_gaussian(sc.mu1, sc.cov.sqrt_factor, config.n_test, s + 2);
        const Eigen::MatrixXd T2 =
            sample_gaussian(mu2, sc.cov.sqrt_factor, config.n_test, s + 3);
        for (std::size_t c = 0; c < K; ++c)
            table.rows[static_cast<std::size_t>(rep) * K + c] =
                run_one(config, sc, config.classifiers[c], static_rates[c],
                        rep, X1, X2, T1, T2);
    };

    const int nthreads = std::max(1, threads);
    if (nthreads == 1) {
        for (int rep = 0; rep < config.replications; ++rep) work(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (int rep = next.fetch_add(1);
                     rep < config.replications; rep = next.fetch_add(1))
                    work(rep);
            });
        for (auto& th : pool) th.join();
    }
    return table;
}

std::vector<std::pair<std::string, double>> theoretical_rates(
    const ExperimentConfig& config) {
    const Scenario sc = prepare_scenario(config);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& spec : config.classifiers)
        out.emplace_back(spec.name, static_theory(spec, sc));
    return out;
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != 1)
        throw std::invalid_argument("config: unsupported schema_version");
    ExperimentConfig cfg;
    const json& cov = j.at("covariance");
    cfg.covariance.kind = cov.at("kind").get<std::string>();
    cfg.covariance.p = cov.at("p").get<int>();
    if (cov.contains("rho")) cfg.covariance.rho = cov["rho"].get<double>();
    if (cov.contains("fives")) cfg.covariance.fives = cov["fives"].get<int>();
    if (cov.contains("values"))
        cfg.covariance.values = cov["values"].get<std::vector<double>>();

    if (j.contains("mean")) {
        const json& mean = j.at("mean");
        cfg.mean.kind = mean.value("kind", std::string("random_normal"));
        cfg.mean.k = mean.value("k", 1);
        if (mean.contains("pinned"))
            for (const auto& [key, val] : mean["pinned"].items())
                cfg.mean.pinned[std::stoi(key)] = val.get<double>();
        if (mean.contains("values"))
            cfg.mean.values = mean["values"].get<std::vector<double>>();
    }
    cfg.target_bayes_error = j.value("target_bayes_error", 0.1);
    cfg.n1 = j.at("n1").get<int>();
    cfg.n2 = j.at("n2").get<int>();
    cfg.n_test = j.value("n_test", 1000);
    cfg.replications = j.at("replications").get<int>();
    cfg.base_seed = j.value("base_seed", std::uint64_t{20240101});

    for (const json& c : j.at("classifiers")) {
        ClassifierSpec spec;
        spec.kind = c.at("kind").get<std::string>();
        spec.name = c.value("name", spec.kind);
        spec.lambda = c.value("lambda", 0.1);
        if (c.contains("levels"))
            for (const auto& [key, val] : c["levels"].items())
                spec.levels[std::stoi(key)] = val.get<double>();
        if (c.contains("large_indices"))
            spec.large_indices = c["large_indices"].get<std::vector<int>>();
        if (c.contains("small_indices"))
            spec.small_indices = c["small_indices"].get<std::vector<int>>();
        spec.auto_spikes = c.value("auto_spikes", false);
        cfg.classifiers.push_back(std::move(spec));
    }
    return cfg;
}

std::string to_json(const ExperimentConfig& config) {
    json j;
    j["schema_version"] = 1;
    j["covariance"] = {{"kind", config.covariance.kind},
                       {"p", config.covariance.p},
                       {"rho", config.covariance.rho},
                       {"fives", config.covariance.fives}};
    if (!config.covariance.values.empty())
        j["covariance"]["values"] = config.covariance.values;
    json pinned = json::object();
    for (const auto& [idx, val] : config.mean.pinned)
        pinned[std::to_string(idx)] = val;
    j["mean"] = {{"kind", config.mean.kind},
                 {"k", config.mean.k},
                 {"pinned", pinned}};
    if (!config.mean.values.empty()) j["mean"]["values"] = config.mean.values;
    j["target_bayes_error"] = config.target_bayes_error;
    j["n1"] = config.n1;
    j["n2"] = config.n2;
    j["n_test"] = config.n_test;
    j["replications"] = config.replications;
    j["base_seed"] = config.base_seed;
    j["classifiers"] = json::array();
    for (const auto& spec : config.classifiers) {
        json c = {{"name", spec.name},
                  {"kind", spec.kind},
                  {"lambda", spec.lambda},
                  {"auto_spikes", spec.auto_spikes}};
        json levels = json::object();
        for (const auto& [idx, val] : spec.levels)
            levels[std::to_string(idx)] = val;
        c["levels"] = levels;
        c["large_indices"] = spec.large_indices;
        c["small_indices"] = spec.small_indices;
        j["classifiers"].push_back(std::move(c));
    }
    return j.dump(2);
}

}  // namespace seda
