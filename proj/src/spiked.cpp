#include "seda/spiked.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "seda/kernels.hpp"

namespace seda {

namespace {

void require_descending_positive(const std::vector<double>& s,
                                 const char* where) {
    if (s.empty())
        throw std::invalid_argument(std::string(where) + ": empty spectrum");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0) || !std::isfinite(s[i]))
            throw std::invalid_argument(std::string(where) +
                                        ": eigenvalues must be positive");
        if (i > 0 && s[i] > s[i - 1])
            throw std::invalid_argument(std::string(where) +
                                        ": eigenvalues must be descending");
    }
}

}  // namespace

std::vector<int> SpikeConfig::all_indices() const {
    std::vector<int> idx = large_indices;
    idx.insert(idx.end(), small_indices.begin(), small_indices.end());
    return idx;
}

double SpikeConfig::level(int j) const {
    auto it = levels.find(j);
    return it == levels.end() ? 0.0 : it->second;
}

void SpikeConfig::validate() const {
    for (int j : large_indices)
        if (std::count(small_indices.begin(), small_indices.end(), j))
            throw std::invalid_argument(
                "SpikeConfig: index " + std::to_string(j) +
                " is in both spike sets");
    for (int j : large_indices)
        if (level(j) > 0)
            throw std::invalid_argument(
                "SpikeConfig: large-spike level at index " +
                std::to_string(j) + " must be <= 0");
    for (int j : small_indices) {
        const double l = level(j);
        if (l < 0 || l >= 1)
            throw std::invalid_argument(
                "SpikeConfig: small-spike level at index " +
                std::to_string(j) + " must lie in [0, 1)");
    }
    if (!(bulk_variance > 0))
        throw std::invalid_argument("SpikeConfig: bulk_variance must be > 0");
}

bool is_supercritical(const SpectralMeasure& H_bulk, double s_j, double y) {
    if (!(y > 0)) throw std::invalid_argument("is_supercritical: y must be > 0");
    double integral = 0;
    for (std::size_t i = 0; i < H_bulk.size(); ++i) {
        const double s = H_bulk.locations[i];
        const double gap = s_j - s;
        if (std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(s)))
            throw std::invalid_argument(
                "is_supercritical: s_j coincides with a bulk atom");
        integral += H_bulk.masses[i] * s * s / (gap * gap);
    }
    return integral < 1.0 / y;
}

std::map<int, double> solve_omegas(const std::vector<double>& eigenvalues,
                                   double y,
                                   const std::vector<int>& spike_indices) {
    require_descending_positive(eigenvalues, "solve_omegas");
    if (!(y > 0)) throw std::invalid_argument("solve_omegas: y must be > 0");
    const std::size_t p = eigenvalues.size();

    // Distinct values, descending.
    std::vector<double> distinct;
    for (double s : eigenvalues)
        if (distinct.empty() ||
            distinct.back() - s > 1e-12 * std::max(1.0, distinct.back()))
            distinct.push_back(s);
    const std::size_t k = distinct.size();

    auto phi = [&](double omega) {
        return kernels::shifted_ratio_sum(eigenvalues.data(), p, omega) /
                   static_cast<double>(p) -
               1.0 / y;
    };
    // phi is strictly increasing between poles, diverging to -inf just
    // above a pole and +inf just below one, so each bracket below holds
    // exactly one root.
    auto bisect = [&](double lo, double hi, int rank) {
        double flo = phi(lo);
        if (flo > 0 || phi(hi) < 0) {
            std::ostringstream os;
            os << "solve_omegas: no sign change in (" << lo << ", " << hi
               << ") for root below distinct eigenvalue #" << rank;
            throw std::runtime_error(os.str());
        }
        for (int it = 0; it < 200 && hi - lo > 0; ++it) {
            const double mid = 0.5 * (lo + hi);
            (phi(mid) <= 0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    // Root r for each distinct rank r: in the gap (distinct[r+1],
    // distinct[r]) for interior ranks, below the smallest value for the
    // last rank (expanding the bracket leftward until phi goes negative).
    std::vector<double> roots(k);
    for (std::size_t r = 0; r + 1 < k; ++r) {
        const double gap = distinct[r] - distinct[r + 1];
        roots[r] = bisect(distinct[r + 1] + 1e-9 * gap,
                          distinct[r] - 1e-9 * gap, static_cast<int>(r));
    }
    {
        const double top = distinct[k - 1] * (1.0 - 1e-9);
        double lo = distinct[k - 1] - std::max(distinct[0], 1.0);
        for (int e = 0; e < 200 && phi(lo) > 0; ++e)
            lo = distinct[k - 1] - 2.0 * (distinct[k - 1] - lo);
        roots[k - 1] = bisect(lo, top, static_cast<int>(k - 1));
    }

    std::map<int, double> out;
    for (int j : spike_indices) {
        if (j < 0 || static_cast<std::size_t>(j) >= p)
            throw std::invalid_argument("solve_omegas: spike index " +
                                        std::to_string(j) + " out of range");
        std::size_t rank = 0;
        while (rank + 1 < k &&
               distinct[rank] - eigenvalues[j] >
                   1e-12 * std::max(1.0, distinct[rank]))
            ++rank;
        const double omega = roots[rank];
        // phi carries the 1/y offset, so its representable precision near a
        // steep root scales with 1/y; tolerate that scale.
        if (std::abs(phi(omega)) > 1e-10 * std::max(1.0, 1.0 / y))
            throw std::runtime_error(
                "solve_omegas: residual above tolerance at omega = " +
                std::to_string(omega));
        out[j] = omega;
    }
    return out;
}

ChiWeights chi_weights(const std::vector<double>& eigenvalues, int j,
                       double omega_j) {
    const std::size_t p = eigenvalues.size();
    if (j < 0 || static_cast<std::size_t>(j) >= p)
        throw std::invalid_argument("chi_weights: index out of range");
    ChiWeights cw;
    cw.j = j;
    cw.omega = omega_j;
    cw.chi.assign(p, 0.0);
    const double sj = eigenvalues[j];
    double rest = 0;
    for (std::size_t i = 0; i < p; ++i) {
        if (static_cast<int>(i) == j) continue;
        const double si = eigenvalues[i];
        const double d1 = si - sj;
        const double d2 = si - omega_j;
        if (d1 == 0 || d2 == 0)
            throw std::invalid_argument(
                "chi_weights: coincident eigenvalue at position " +
                std::to_string(i));
        cw.chi[i] = sj / d1 - omega_j / d2;
        rest += cw.chi[i];
    }
    cw.chi[static_cast<std::size_t>(j)] = 1.0 - rest;
    return cw;
}

double predicted_overlap(const Eigen::VectorXd& xi,
                         const Eigen::MatrixXd& eigenvectors,
                         const ChiWeights& chi) {
    if (std::abs(xi.norm() - 1.0) > 1e-8)
        throw std::invalid_argument("predicted_overlap: xi must be unit norm");
    if (eigenvectors.rows() != xi.size() ||
        static_cast<std::size_t>(eigenvectors.cols()) != chi.chi.size())
        throw std::invalid_argument("predicted_overlap: dimension mismatch");
    const Eigen::VectorXd coeff = eigenvectors.transpose() * xi;
    double total = 0;
    for (Eigen::Index i = 0; i < coeff.size(); ++i)
        total += chi.chi[static_cast<std::size_t>(i)] * coeff(i) * coeff(i);
    return total;
}

std::vector<double> f_transform(const std::vector<double>& eigenvalues,
                                const SpikeConfig& config,
                                const std::map<int, ChiWeights>& chis) {
    require_descending_positive(eigenvalues, "f_transform");
    config.validate();
    const std::size_t p = eigenvalues.size();
    std::vector<double> factor(p, 1.0);
    for (int j : config.all_indices()) {
        const double l = config.level(j);
        if (l == 1.0)
            throw std::invalid_argument("f_transform: level 1 at index " +
                                        std::to_string(j) + " is a pole");
        if (l == 0.0) continue;
        const auto it = chis.find(j);
        if (it == chis.end())
            throw std::invalid_argument(
                "f_transform: missing chi weights for spike " +
                std::to_string(j));
        const double c = l / (1.0 - l);
        for (std::size_t i = 0; i < p; ++i) factor[i] += c * it->second.chi[i];
    }
    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = factor[i] * eigenvalues[i];
    return out;
}

SpikeCounts estimate_spike_counts(const std::vector<double>& eigenvalues,
                                  double y) {
    // Zero eigenvalues are legitimate here: rank-deficient sample spectra
    // (p >= n) end in exact zeros.
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] >= 0) || !std::isfinite(eigenvalues[i]))
            throw std::invalid_argument(
                "estimate_spike_counts: eigenvalues must be nonnegative");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
            throw std::invalid_argument(
                "estimate_spike_counts: eigenvalues must be descending");
    }
    if (eigenvalues.size() < 4)
        throw std::invalid_argument("estimate_spike_counts: need p >= 4");
    const std::size_t p = eigenvalues.size();
    const double sqy = std::sqrt(std::max(y, 0.0));
    const double delta = 0.05;

    // Central-80% trimmed mean as the initial bulk-variance guess.
    const auto cut = static_cast<std::size_t>(
        std::floor(0.1 * static_cast<double>(p)));
    double sigma2 = 0;
    for (std::size_t i = cut; i < p - cut; ++i) sigma2 += eigenvalues[i];
    sigma2 /= static_cast<double>(p - 2 * cut);

    auto count_with = [&](double s2, SpikeCounts& c) {
        const double hi = s2 * (1.0 + sqy) * (1.0 + sqy) * (1.0 + delta);
        const double lo = s2 * (1.0 - sqy) * (1.0 - sqy) * (1.0 - delta);
        c.r1 = c.r2 = 0;
        for (double s : eigenvalues) {
            if (s > hi) ++c.r1;
            if (y < 1 && s < lo) ++c.r2;
        }
    };

    SpikeCounts counts;
    count_with(sigma2, counts);
    // Refine sigma^2 to the plain mean of the non-spike eigenvalues (the
    // trimmed mean of bulk sample eigenvalues is biased low) and threshold
    // once more.
    const std::size_t nbulk = p - static_cast<std::size_t>(counts.r1) -
                              static_cast<std::size_t>(counts.r2);
    if (nbulk > 0) {
        double refined = 0;
        for (std::size_t i = static_cast<std::size_t>(counts.r1);
             i < p - static_cast<std::size_t>(counts.r2); ++i)
            refined += eigenvalues[i];
        sigma2 = refined / static_cast<double>(nbulk);
        count_with(sigma2, counts);
    }
    counts.sigma2 = sigma2;
    return counts;
}

}  // namespace seda
