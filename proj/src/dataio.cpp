#include "seda/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace seda {

namespace {

// Splits one CSV record, honoring double quotes and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, int row) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted)
        throw std::invalid_argument("load_csv: unterminated quote at row " +
                                    std::to_string(row));
    fields.push_back(std::move(cur));
    return fields;
}

double parse_cell(const std::string& text, int row, const std::string& col) {
    std::size_t used = 0;
    double value;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty())
        throw std::invalid_argument("load_csv: cell '" + text + "' at row " +
                                    std::to_string(row) + ", column '" + col +
                                    "' is not numeric");
    if (!std::isfinite(value))
        throw std::invalid_argument("load_csv: non-finite value at row " +
                                    std::to_string(row) + ", column '" + col +
                                    "'");
    return value;
}

}  // namespace

std::vector<std::string> Dataset::classes() const {
    std::vector<std::string> out;
    for (const auto& l : labels)
        if (std::find(out.begin(), out.end(), l) == out.end())
            out.push_back(l);
    return out;
}

Eigen::MatrixXd Dataset::rows_for(const std::string& label) const {
    std::vector<long> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) idx.push_back(static_cast<long>(i));
    Eigen::MatrixXd out(static_cast<long>(idx.size()), features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<long>(i)) = features.row(idx[i]);
    return out;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("load_csv: empty file " + path);
    const auto header = split_csv_line(line, 1);
    long label_idx = -1;
    Dataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column)
            label_idx = static_cast<long>(c);
        else
            data.feature_names.push_back(header[c]);
    }
    if (label_idx < 0)
        throw std::invalid_argument("load_csv: missing label column '" +
                                    label_column + "'");
    const auto p = header.size() - 1;
    std::vector<std::vector<double>> rows;
    int rownum = 1;
    while (std::getline(in, line)) {
        ++rownum;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto fields = split_csv_line(line, rownum);
        if (fields.size() != header.size())
            throw std::invalid_argument(
                "load_csv: row " + std::to_string(rownum) + " has " +
                std::to_string(fields.size()) + " fields, expected " +
                std::to_string(header.size()));
        std::vector<double> vals;
        vals.reserve(p);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (static_cast<long>(c) == label_idx) {
                data.labels.push_back(fields[c]);
            } else {
                vals.push_back(parse_cell(fields[c], rownum, header[c]));
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty())
        throw std::invalid_argument("load_csv: no data rows in " + path);
    data.features.resize(static_cast<long>(rows.size()),
                         static_cast<long>(p));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < p; ++c)
            data.features(static_cast<long>(i), static_cast<long>(c)) =
                rows[i][c];
    return data;
}

void save_csv(const Dataset& data, const std::string& path,
              const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("save_csv: cannot open " + path);
    out.precision(17);
    for (long c = 0; c < data.p(); ++c) {
        const std::string name =
            c < static_cast<long>(data.feature_names.size())
                ? data.feature_names[static_cast<std::size_t>(c)]
                : "f" + std::to_string(c);
        out << name << ',';
    }
    out << label_column << '\n';
    for (long i = 0; i < data.n(); ++i) {
        for (long c = 0; c < data.p(); ++c) out << data.features(i, c) << ',';
        out << data.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

StandardizeParams fit_standardize(const Dataset& data) {
    const long n = data.n();
    if (n < 2)
        throw std::invalid_argument("standardize: need at least 2 rows");
    StandardizeParams params;
    params.mean = data.features.colwise().mean();
    params.scale.resize(data.p());
    for (long c = 0; c < data.p(); ++c) {
        const double var =
            (data.features.col(c).array() - params.mean(c)).square().sum() /
            static_cast<double>(n - 1);
        if (!(var > 0))
            throw std::invalid_argument(
                "standardize: feature " +
                (c < static_cast<long>(data.feature_names.size())
                     ? data.feature_names[static_cast<std::size_t>(c)]
                     : std::to_string(c)) +
                " is constant");
        params.scale(c) = 1.0 / std::sqrt(var);
    }
    return params;
}

Dataset apply_standardize(const StandardizeParams& params,
                          const Dataset& data) {
    if (params.mean.size() != data.p())
        throw std::invalid_argument("standardize: dimension mismatch");
    Dataset out = data;
    out.features = (data.features.rowwise() - params.mean.transpose()) *
                   params.scale.asDiagonal();
    return out;
}

Dataset standardize(const Dataset& data) {
    return apply_standardize(fit_standardize(data), data);
}

PcaParams fit_pca(const Dataset& data, double rate) {
    if (!(rate > 0) || rate > 1)
        throw std::invalid_argument("pca: rate must lie in (0, 1]");
    const long p = data.p();
    const long k = static_cast<long>(
        std::ceil(rate * static_cast<double>(p)));
    PcaParams params;
    params.mean = data.features.colwise().mean();
    const Eigen::MatrixXd C =
        data.features.rowwise() - params.mean.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        C.transpose() * C / std::max<long>(1, data.n() - 1));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("pca: eigendecomposition failed");
    params.components.resize(p, k);
    for (long c = 0; c < k; ++c)
        params.components.col(c) = es.eigenvectors().col(p - 1 - c);
    return params;
}

Dataset apply_pca(const PcaParams& params, const Dataset& data) {
    if (params.mean.size() != data.p())
        throw std::invalid_argument("pca: dimension mismatch");
    Dataset out;
    out.labels = data.labels;
    out.features = (data.features.rowwise() - params.mean.transpose()) *
                   params.components;
    for (long c = 0; c < params.components.cols(); ++c)
        out.feature_names.push_back("pc" + std::to_string(c + 1));
    return out;
}

Dataset pca_reduce(const Dataset& data, double rate) {
    return apply_pca(fit_pca(data, rate), data);
}

Dataset poly_kernel_features(const Dataset& data, int degree) {
    if (degree < 1)
        throw std::invalid_argument("poly_kernel_features: degree must be "
                                    ">= 1");
    const long p = data.p();
    // Enumerate exponent vectors of total degree <= degree in graded
    // lexicographic order, starting with the constant term.
    std::vector<std::vector<int>> monomials;
    std::vector<int> expo(static_cast<std::size_t>(p), 0);
    std::function<void(long, int)> enumerate = [&](long start, int left) {
        monomials.push_back(expo);
        if (left == 0) return;
        for (long c = start; c < p; ++c) {
            ++expo[static_cast<std::size_t>(c)];
            enumerate(c, left - 1);
            --expo[static_cast<std::size_t>(c)];
        }
    };
    enumerate(0, degree);

    Dataset out;
    out.labels = data.labels;
    out.features.resize(data.n(), static_cast<long>(monomials.size()));
    for (std::size_t m = 0; m < monomials.size(); ++m) {
        Eigen::ArrayXd col = Eigen::ArrayXd::Ones(data.n());
        std::string name;
        for (long c = 0; c < p; ++c) {
            const int e = monomials[m][static_cast<std::size_t>(c)];
            for (int k = 0; k < e; ++k) col *= data.features.col(c).array();
            if (e > 0) {
                if (!name.empty()) name += "*";
                name += (c < static_cast<long>(data.feature_names.size())
                             ? data.feature_names[static_cast<std::size_t>(c)]
                             : "x" + std::to_string(c));
                if (e > 1) name += "^" + std::to_string(e);
            }
        }
        if (name.empty()) name = "1";
        out.features.col(static_cast<long>(m)) = col;
        out.feature_names.push_back(name);
    }
    return out;
}

}  // namespace seda
