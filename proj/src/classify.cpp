#include "seda/classify.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "seda/normal.hpp"

namespace seda {

namespace {

using json = nlohmann::json;

constexpr int kModelVersion = 1;

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    static const char tbl[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t v = data[i] << 16;
        if (i + 1 < len) v |= data[i + 1] << 8;
        if (i + 2 < len) v |= data[i + 2];
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? tbl[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? tbl[v & 63] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        if (c == '=') return -1;
        throw std::invalid_argument("base64: invalid character");
    };
    if (text.size() % 4 != 0)
        throw std::invalid_argument("base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        for (int k = 0; k < 4; ++k) v[k] = val(text[i + k]);
        out.push_back(static_cast<std::uint8_t>((v[0] << 2) | (v[1] >> 4)));
        if (v[2] >= 0)
            out.push_back(
                static_cast<std::uint8_t>(((v[1] & 15) << 4) | (v[2] >> 2)));
        if (v[3] >= 0)
            out.push_back(static_cast<std::uint8_t>(((v[2] & 3) << 6) | v[3]));
    }
    return out;
}

std::string encode_doubles(const double* data, std::size_t count) {
    std::vector<std::uint8_t> bytes(count * sizeof(double));
    std::memcpy(bytes.data(), data, bytes.size());
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<double> decode_doubles(const std::string& text) {
    const auto bytes = base64_decode(text);
    if (bytes.size() % sizeof(double) != 0)
        throw std::invalid_argument("model: bad float payload length");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

json theta_to_json(const ThetaParams& theta) {
    json levels = json::object();
    for (const auto& [j, l] : theta.levels) levels[std::to_string(j)] = l;
    return json{{"lambda", theta.lambda}, {"levels", levels}};
}

ThetaParams theta_from_json(const json& j) {
    ThetaParams theta;
    theta.lambda = j.at("lambda").get<double>();
    for (const auto& [key, val] : j.at("levels").items())
        theta.levels[std::stoi(key)] = val.get<double>();
    return theta;
}

struct PooledFit {
    Eigen::VectorXd mean1, mean2, diff;
    std::vector<double> eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors;
    int n1, n2, p;
};

PooledFit pooled_decomposition(const Eigen::MatrixXd& X1,
                               const Eigen::MatrixXd& X2) {
    if (X1.cols() != X2.cols())
        throw std::invalid_argument("fit: feature dimensions differ");
    if (X1.rows() < 2 || X2.rows() < 2)
        throw std::invalid_argument("fit: need at least 2 samples per class");
    PooledFit f;
    f.n1 = static_cast<int>(X1.rows());
    f.n2 = static_cast<int>(X2.rows());
    f.p = static_cast<int>(X1.cols());
    f.mean1 = X1.colwise().mean();
    f.mean2 = X2.colwise().mean();
    f.diff = f.mean1 - f.mean2;
    Eigen::MatrixXd C1 = X1.rowwise() - f.mean1.transpose();
    Eigen::MatrixXd C2 = X2.rowwise() - f.mean2.transpose();
    Eigen::MatrixXd S =
        (C1.transpose() * C1 + C2.transpose() * C2) / (f.n1 + f.n2 - 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("fit: eigendecomposition failed");
    // SelfAdjointEigenSolver returns ascending order; flip to descending.
    f.eigenvalues.resize(static_cast<std::size_t>(f.p));
    f.eigenvectors.resize(f.p, f.p);
    for (int i = 0; i < f.p; ++i) {
        f.eigenvalues[static_cast<std::size_t>(i)] =
            std::max(es.eigenvalues()(f.p - 1 - i), 0.0);
        f.eigenvectors.col(i) = es.eigenvectors().col(f.p - 1 - i);
    }
    return f;
}

// (S_n + lambda I_l)^{-1} d via the shared eigendecomposition: the solve
// reduces to scaling eigen-coefficients by 1/(a_i + lambda (1 - l_i)).
Eigen::VectorXd level_solve(const PooledFit& f, const ThetaParams& theta,
                            const Eigen::VectorXd& rhs) {
    Eigen::VectorXd coeff = f.eigenvectors.transpose() * rhs;
    for (int i = 0; i < f.p; ++i) {
        const auto it = theta.levels.find(i);
        const double l = it == theta.levels.end() ? 0.0 : it->second;
        coeff(i) /= f.eigenvalues[static_cast<std::size_t>(i)] +
                    theta.lambda * (1.0 - l);
    }
    return f.eigenvectors * coeff;
}

SedaModel assemble(const PooledFit& f, const ThetaParams& theta,
                   const SpikeConfig& config, const std::string& kind) {
    SedaModel m;
    m.kind = kind;
    m.theta = theta;
    m.config = config;
    m.n1 = f.n1;
    m.n2 = f.n2;
    m.p = f.p;
    m.mean1 = f.mean1;
    m.mean2 = f.mean2;
    m.sample_eigenvalues = f.eigenvalues;
    m.eigenvectors = f.eigenvectors;
    m.direction = level_solve(f, theta, f.diff);
    m.intercept = -0.5 * m.direction.dot(f.mean1 + f.mean2);
    return m;
}

void check_levels(const ThetaParams& theta, const SpikeConfig& config,
                  int p, int n) {
    SpikeConfig cfg = config;
    cfg.levels = theta.levels;
    cfg.validate();
    const int r = cfg.r1() + cfg.r2();
    if (r >= std::min(p, n) - 1)
        throw std::invalid_argument(
            "fit_seda: too many spikes for the sample size");
    for (const auto& [j, l] : theta.levels) {
        (void)l;
        if (j < 0 || j >= p)
            throw std::invalid_argument("fit_seda: level index " +
                                        std::to_string(j) + " out of range");
    }
}

json vector_to_json(const Eigen::VectorXd& v) {
    return encode_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
    const auto vals = decode_doubles(j.get<std::string>());
    return Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                             static_cast<long>(vals.size()));
}

}  // namespace

int bayes_classify(const Eigen::VectorXd& x, const Eigen::VectorXd& mu1,
                   const Eigen::VectorXd& mu2, const Eigen::MatrixXd& Sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("bayes_classify: Sigma is not positive "
                                    "definite");
    const Eigen::VectorXd w = llt.solve(mu1 - mu2);
    const double stat = (x - 0.5 * (mu1 + mu2)).dot(w);
    return stat > 0 ? 1 : 2;
}

double bayes_error(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2,
                   const Eigen::MatrixXd& Sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("bayes_error: Sigma is not positive "
                                    "definite");
    const Eigen::VectorXd d = mu1 - mu2;
    const double delta2 = d.dot(llt.solve(d));
    return normal_cdf(-0.5 * std::sqrt(std::max(delta2, 0.0)));
}

SedaModel fit_rlda(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                   double lambda) {
    if (!(lambda > 0))
        throw std::invalid_argument("fit_rlda: lambda must be > 0");
    const PooledFit f = pooled_decomposition(X1, X2);
    ThetaParams theta;
    theta.lambda = lambda;
    return assemble(f, theta, SpikeConfig{}, "rlda");
}

SedaModel fit_seda(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                   const ThetaParams& theta, const SpikeConfig& config) {
    if (!(theta.lambda > 0))
        throw std::invalid_argument("fit_seda: lambda must be > 0");
    const PooledFit f = pooled_decomposition(X1, X2);
    check_levels(theta, config, f.p, f.n1 + f.n2);
    return assemble(f, theta, config, "seda");
}

SedaModel fit_corrected_seda(const Eigen::MatrixXd& X1,
                             const Eigen::MatrixXd& X2,
                             const ThetaParams& theta,
                             const SpikeConfig& config) {
    SedaModel m = fit_seda(X1, X2, theta, config);
    m.kind = "seda_corrected";
    m.alpha = alpha_hat(m.sample_eigenvalues, theta, config, m.n1, m.n2, m.p);
    return m;
}

double conditional_error(const SedaModel& model, const Eigen::VectorXd& mu1,
                         const Eigen::VectorXd& mu2,
                         const Eigen::MatrixXd& Sigma) {
    if (model.direction.norm() == 0)
        throw std::invalid_argument("conditional_error: zero direction");
    const double sd =
        std::sqrt(model.direction.dot(Sigma * model.direction));
    if (!(sd > 0))
        throw std::invalid_argument("conditional_error: Sigma is degenerate "
                                    "along the direction");
    const double g1 =
        model.direction.dot(mu1) + model.intercept + model.alpha;
    const double g2 =
        model.direction.dot(mu2) + model.intercept + model.alpha;
    return 0.5 * (normal_cdf(-g1 / sd) + normal_cdf(g2 / sd));
}

MulticlassModel fit_multiclass(const std::vector<Eigen::MatrixXd>& Xs,
                               const ThetaParams& theta,
                               const SpikeConfig& config) {
    const int K = static_cast<int>(Xs.size());
    if (K < 2) throw std::invalid_argument("fit_multiclass: need K >= 2");
    if (!(theta.lambda > 0))
        throw std::invalid_argument("fit_multiclass: lambda must be > 0");
    const int p = static_cast<int>(Xs.front().cols());
    if (K - 1 > p)
        throw std::invalid_argument("fit_multiclass: K-1 exceeds dimension");
    long n = 0;
    std::vector<Eigen::VectorXd> means;
    for (const auto& X : Xs) {
        if (X.cols() != p)
            throw std::invalid_argument("fit_multiclass: dimension mismatch");
        if (X.rows() < 2)
            throw std::invalid_argument(
                "fit_multiclass: need at least 2 samples per class");
        n += X.rows();
        means.push_back(X.colwise().mean());
    }
    Eigen::VectorXd grand = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < K; ++k)
        grand += (static_cast<double>(Xs[static_cast<std::size_t>(k)].rows()) /
                  static_cast<double>(n)) *
                 means[static_cast<std::size_t>(k)];

    Eigen::MatrixXd Sw = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd Sb = Eigen::MatrixXd::Zero(p, p);
    for (int k = 0; k < K; ++k) {
        const auto& X = Xs[static_cast<std::size_t>(k)];
        const auto& mk = means[static_cast<std::size_t>(k)];
        const Eigen::MatrixXd C = X.rowwise() - mk.transpose();
        Sw += C.transpose() * C;
        const Eigen::VectorXd d = mk - grand;
        Sb += (static_cast<double>(X.rows())) * d * d.transpose();
    }
    Sw /= static_cast<double>(n);
    Sb /= static_cast<double>(n);

    // M = S_w + lambda I_l, assembled from S_w's eigendecomposition so the
    // level modification lands on the sample spiked eigenvectors.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esw(Sw);
    if (esw.info() != Eigen::Success)
        throw std::runtime_error("fit_multiclass: eigendecomposition failed");
    check_levels(theta, config, p, static_cast<int>(n));
    Eigen::VectorXd inv_sqrt(p);
    for (int i = 0; i < p; ++i) {
        const int desc = p - 1 - i;  // position in descending order
        const auto it = theta.levels.find(desc);
        const double l = it == theta.levels.end() ? 0.0 : it->second;
        const double m = esw.eigenvalues()(i) + theta.lambda * (1.0 - l);
        if (!(m > 0))
            throw std::runtime_error("fit_multiclass: pencil not positive "
                                     "definite");
        inv_sqrt(i) = 1.0 / std::sqrt(m);
    }
    const Eigen::MatrixXd Mih = esw.eigenvectors() * inv_sqrt.asDiagonal() *
                                esw.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esb(Mih * Sb * Mih);
    if (esb.info() != Eigen::Success)
        throw std::runtime_error("fit_multiclass: eigendecomposition failed");

    MulticlassModel model;
    model.p = p;
    model.theta = theta;
    model.projector.resize(p, K - 1);
    for (int c = 0; c < K - 1; ++c) {
        Eigen::VectorXd col = Mih * esb.eigenvectors().col(p - 1 - c);
        model.projector.col(c) = col / col.norm();
    }
    model.centroids.resize(K, K - 1);
    model.labels.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        model.centroids.row(k) =
            (means[static_cast<std::size_t>(k)].transpose() *
             model.projector);
        model.labels[static_cast<std::size_t>(k)] = k + 1;
    }
    return model;
}

std::vector<int> predict(const SedaModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.p)
        throw std::invalid_argument("predict: dimension mismatch");
    const Eigen::VectorXd g =
        (X * model.direction).array() + model.intercept + model.alpha;
    std::vector<int> labels(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        labels[static_cast<std::size_t>(i)] =
            g(i) > 0 ? model.label1 : model.label2;
    return labels;
}

Eigen::MatrixXd transform(const MulticlassModel& model,
                          const Eigen::MatrixXd& X) {
    if (X.cols() != model.p)
        throw std::invalid_argument("transform: dimension mismatch");
    return X * model.projector;
}

std::vector<int> predict(const MulticlassModel& model,
                         const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd Z = transform(model, X);
    std::vector<int> labels(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < model.centroids.rows(); ++k) {
            const double d =
                (Z.row(i) - model.centroids.row(k)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        labels[static_cast<std::size_t>(i)] =
            model.labels[static_cast<std::size_t>(best)];
    }
    return labels;
}

std::string to_json(const SedaModel& model) {
    json j;
    j["version"] = kModelVersion;
    j["kind"] = model.kind;
    j["p"] = model.p;
    j["labels"] = {model.label1, model.label2};
    j["theta"] = theta_to_json(model.theta);
    j["direction"] = vector_to_json(model.direction);
    j["intercept"] = model.intercept;
    j["alpha"] = model.alpha;
    return j.dump(2);
}

std::string to_json(const MulticlassModel& model) {
    json j;
    j["version"] = kModelVersion;
    j["kind"] = "multiclass";
    j["p"] = model.p;
    j["labels"] = model.labels;
    j["theta"] = theta_to_json(model.theta);
    j["projector"] = encode_doubles(
        model.projector.data(),
        static_cast<std::size_t>(model.projector.size()));
    j["centroids"] = encode_doubles(
        model.centroids.data(),
        static_cast<std::size_t>(model.centroids.size()));
    j["k"] = static_cast<int>(model.labels.size());
    j["intercept"] = 0.0;
    j["alpha"] = 0.0;
    return j.dump(2);
}

std::string model_kind(const std::string& text) {
    return json::parse(text).at("kind").get<std::string>();
}

SedaModel seda_model_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kModelVersion)
        throw std::invalid_argument("model: unsupported version");
    SedaModel m;
    m.kind = j.at("kind").get<std::string>();
    if (m.kind == "multiclass")
        throw std::invalid_argument("model: multiclass document");
    m.p = j.at("p").get<int>();
    m.label1 = j.at("labels")[0].get<int>();
    m.label2 = j.at("labels")[1].get<int>();
    m.theta = theta_from_json(j.at("theta"));
    m.direction = vector_from_json(j.at("direction"));
    if (m.direction.size() != m.p)
        throw std::invalid_argument("model: direction length mismatch");
    m.intercept = j.at("intercept").get<double>();
    m.alpha = j.at("alpha").get<double>();
    return m;
}

MulticlassModel multiclass_model_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kModelVersion)
        throw std::invalid_argument("model: unsupported version");
    if (j.at("kind").get<std::string>() != "multiclass")
        throw std::invalid_argument("model: not a multiclass document");
    MulticlassModel m;
    m.p = j.at("p").get<int>();
    m.labels = j.at("labels").get<std::vector<int>>();
    m.theta = theta_from_json(j.at("theta"));
    const int K = j.at("k").get<int>();
    const auto proj = decode_doubles(j.at("projector").get<std::string>());
    const auto cent = decode_doubles(j.at("centroids").get<std::string>());
    if (proj.size() != static_cast<std::size_t>(m.p) *
                           static_cast<std::size_t>(K - 1) ||
        cent.size() != static_cast<std::size_t>(K) *
                           static_cast<std::size_t>(K - 1))
        throw std::invalid_argument("model: array size mismatch");
    m.projector = Eigen::Map<const Eigen::MatrixXd>(proj.data(), m.p, K - 1);
    m.centroids = Eigen::Map<const Eigen::MatrixXd>(cent.data(), K, K - 1);
    return m;
}

}  // namespace seda
