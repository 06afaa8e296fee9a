#include "seda/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seda/kernels.hpp"
#include "seda/normal.hpp"

namespace seda {

namespace {

double pooled_ratio(double y1, double y2) { return y1 * y2 / (y1 + y2); }

double asymptotic_rate(const SpectralMeasure& H, const SpectralMeasure& G,
                    double mu_norm_sq, double y1, double y2, double lambda,
                    bool corrected) {
    const Functionals f =
        compute_functionals(H, G, mu_norm_sq, pooled_ratio(y1, y2), lambda);
    const double denom = 2.0 * std::sqrt(f.u2 + (y1 + y2) * f.t2);
    if (corrected) return normal_cdf(-f.u1 / denom);
    double rate = 0;
    for (int i = 1; i <= 2; ++i) {
        const double sign = (i % 2 == 1) ? -1.0 : 1.0;
        rate += 0.5 * normal_cdf(-(f.u1 + sign * (y1 - y2) * f.t1) / denom);
    }
    return rate;
}

// Transformed (H_f, G_f) for the given levels: each eigenvalue keeps its
// H- and G-mass but moves to f(s_i).
std::pair<SpectralMeasure, SpectralMeasure> transformed_measures(
    const std::vector<double>& eigenvalues,
    const std::vector<double>& g_masses, const ThetaParams& theta,
    const SpikeConfig& config, double y) {
    if (g_masses.size() != eigenvalues.size())
        throw std::invalid_argument("seda_rate: g_masses size mismatch");
    SpikeConfig cfg = config;
    cfg.levels = theta.levels;
    cfg.validate();

    std::vector<int> active;
    for (int j : cfg.all_indices())
        if (cfg.level(j) != 0.0) active.push_back(j);

    std::map<int, ChiWeights> chis;
    if (!active.empty()) {
        const auto omegas = solve_omegas(eigenvalues, y, active);
        for (int j : active)
            chis.emplace(j, chi_weights(eigenvalues, j, omegas.at(j)));
    }
    const std::vector<double> fs = f_transform(eigenvalues, cfg, chis);
    return {build_spectral_measure(fs), build_weighted_measure(fs, g_masses)};
}

// Forward map from a population spike to its sample counterpart over the
// given bulk spectrum: psi(s) = s (1 + y mean_k b_k/(s - b_k)).
double psi_forward(double s, const std::vector<double>& bulk, double y) {
    const double sum =
        -kernels::shifted_ratio_sum(bulk.data(), bulk.size(), s);
    return s * (1.0 + y * sum / static_cast<double>(bulk.size()));
}

// Golden-section minimizer of fn on [lo, hi].
template <typename F>
double golden_min(F fn, double lo, double hi) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int it = 0; it < 100; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

// Inverts psi on its monotone branch toward a_j; returns a_j itself when
// the branch never reaches it (subcritical sample value).
double psi_invert(double a_j, const std::vector<double>& bulk, double y,
                  bool large) {
    auto psi = [&](double s) { return psi_forward(s, bulk, y); };
    double lo, hi;
    if (large) {
        const double edge =
            *std::max_element(bulk.begin(), bulk.end()) * 1.0001;
        const double s0 =
            golden_min(psi, edge, std::max(a_j, 2.0 * edge));
        if (psi(s0) > a_j) return a_j;
        lo = s0;
        hi = 2.0 * std::max(a_j, 2.0 * edge);
    } else {
        const double edge =
            *std::min_element(bulk.begin(), bulk.end()) * 0.9999;
        const double s0 = golden_min([&](double s) { return -psi(s); },
                                     1e-9 * edge, edge);
        if (psi(s0) < a_j) return a_j;
        lo = 1e-12 * edge;
        hi = s0;
    }
    // psi is increasing on [lo, hi]; bisect psi(s) = a_j.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (psi(mid) < a_j ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

bool theta_less(const ThetaParams& a, const ThetaParams& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.levels < b.levels;
}

double total_objective(const std::vector<PluginInputs>& pairs,
                       const ThetaParams& theta) {
    double total = 0;
    for (const auto& in : pairs) {
        const double v = plugin_objective(in, theta);
        if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
        total += v;
    }
    return total;
}

}  // namespace

double rlda_rate(const SpectralMeasure& H, const SpectralMeasure& G,
                 double mu_norm_sq, double y1, double y2, double lambda) {
    return asymptotic_rate(H, G, mu_norm_sq, y1, y2, lambda, false);
}

double seda_rate(const std::vector<double>& eigenvalues,
                 const std::vector<double>& g_masses, double mu_norm_sq,
                 const ThetaParams& theta, const SpikeConfig& config,
                 double y1, double y2) {
    const auto [hf, gf] = transformed_measures(eigenvalues, g_masses, theta,
                                               config, pooled_ratio(y1, y2));
    return asymptotic_rate(hf, gf, mu_norm_sq, y1, y2, theta.lambda, false);
}

double corrected_seda_rate(const std::vector<double>& eigenvalues,
                           const std::vector<double>& g_masses,
                           double mu_norm_sq, const ThetaParams& theta,
                           const SpikeConfig& config, double y1, double y2) {
    const auto [hf, gf] = transformed_measures(eigenvalues, g_masses, theta,
                                               config, pooled_ratio(y1, y2));
    return asymptotic_rate(hf, gf, mu_norm_sq, y1, y2, theta.lambda, true);
}

SpikeEstimates estimate_spikes(const std::vector<double>& sample_eigenvalues,
                               const SpikeConfig& config, double y) {
    const auto p = sample_eigenvalues.size();
    const auto spikes = config.all_indices();
    std::vector<bool> is_spike(p, false);
    for (int j : spikes) {
        if (j < 0 || static_cast<std::size_t>(j) >= p)
            throw std::invalid_argument("estimate_spikes: index out of range");
        is_spike[static_cast<std::size_t>(j)] = true;
    }
    std::vector<double> bulk;
    bulk.reserve(p - spikes.size());
    for (std::size_t i = 0; i < p; ++i)
        if (!is_spike[i]) bulk.push_back(sample_eigenvalues[i]);
    if (bulk.empty())
        throw std::invalid_argument("estimate_spikes: no bulk eigenvalues");

    SpikeEstimates out;
    out.sigma2 = 0;
    for (double b : bulk) out.sigma2 += b;
    out.sigma2 /= static_cast<double>(bulk.size());

    for (int j : config.large_indices)
        out.per_spike[j].s_hat = psi_invert(
            sample_eigenvalues[static_cast<std::size_t>(j)], bulk, y, true);
    for (int j : config.small_indices)
        out.per_spike[j].s_hat = psi_invert(
            sample_eigenvalues[static_cast<std::size_t>(j)], bulk, y, false);

    // chi_j(j) on the plug-in spectrum {s_hat spikes} U {sigma^2 bulk}.
    // Keep spikes clear of the bulk value so the chi denominators stay
    // nonzero.
    for (auto& [j, est] : out.per_spike) {
        if (std::abs(est.s_hat - out.sigma2) < 1e-6 * out.sigma2)
            est.s_hat = out.sigma2 *
                        (est.s_hat >= out.sigma2 ? 1.0 + 1e-6 : 1.0 - 1e-6);
        if (!(est.s_hat > 0))
            throw std::runtime_error(
                "estimate_spikes: nonpositive spike estimate at index " +
                std::to_string(j));
    }
    std::vector<std::pair<double, int>> plug;  // (value, spike id or -1)
    plug.reserve(p);
    for (const auto& [j, est] : out.per_spike) plug.emplace_back(est.s_hat, j);
    for (std::size_t i = out.per_spike.size(); i < p; ++i)
        plug.emplace_back(out.sigma2, -1);
    std::sort(plug.begin(), plug.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    std::vector<double> plug_vals(p);
    std::map<int, int> position;
    for (std::size_t i = 0; i < p; ++i) {
        plug_vals[i] = plug[i].first;
        if (plug[i].second >= 0) position[plug[i].second] = static_cast<int>(i);
    }
    std::vector<int> positions;
    for (const auto& [j, pos] : position) positions.push_back(pos);
    const auto omegas = solve_omegas(plug_vals, y, positions);
    for (auto& [j, est] : out.per_spike) {
        const int pos = position.at(j);
        const ChiWeights cw = chi_weights(plug_vals, pos, omegas.at(pos));
        est.chi_jj = cw.chi[static_cast<std::size_t>(pos)];
    }
    return out;
}

PluginEstimates plugin_estimates(const PluginInputs& in,
                                 const ThetaParams& theta) {
    if (!(theta.lambda > 0))
        throw std::invalid_argument("plugin_estimates: lambda must be > 0");
    const auto p = in.sample_eigenvalues.size();
    const double lambda = theta.lambda;

    PluginEstimates est;
    est.y1_hat = static_cast<double>(p) / in.n1;
    est.y2_hat = static_cast<double>(p) / in.n2;
    est.y_hat = static_cast<double>(p) / (in.n1 + in.n2);

    // Spectrum of S_n I^{-1} (shared eigenvectors): a_i / (1 - l_i).
    std::vector<double> t(in.sample_eigenvalues);
    for (const auto& [j, l] : theta.levels) {
        if (l == 1.0)
            throw std::invalid_argument("plugin_estimates: level 1 is a pole");
        t[static_cast<std::size_t>(j)] /= (1.0 - l);
    }
    const std::vector<double> unit(p, 1.0 / static_cast<double>(p));
    const auto mom =
        kernels::resolvent_moments(t.data(), unit.data(), p, 1.0, lambda);
    est.m_hat = mom.inv;
    est.m_prime_hat = mom.inv2;

    const double y = est.y_hat;
    const double A = 1.0 - y + y * lambda * est.m_hat;
    if (!(A > 1e-12))
        throw std::runtime_error("plugin_estimates: degenerate spectrum scale");
    const double lm = lambda * est.m_hat;
    est.t2_hat = (1.0 - lm) / (A * A * A) -
                 (lm - lambda * lambda * est.m_prime_hat) / (A * A * A * A);
    est.m1_hat = 1.0 / (y * A) -
                 lambda * (est.m_hat - lambda * est.m_prime_hat) / (A * A) -
                 1.0 / y;

    const double sigma2 = in.spikes.sigma2;
    double beta_sum = 0, gamma = 0, u1_spike = 0, u2_spike = 0;
    for (int j : in.config.all_indices()) {
        const auto& sp = in.spikes.per_spike.at(j);
        if (!(sp.s_hat > 0))
            throw std::invalid_argument(
                "plugin_estimates: nonpositive spike estimate");
        const double proj =
            in.mean_diff.dot(in.eigenvectors.col(j));
        const double beta = proj * proj / (sp.s_hat * sp.chi_jj);
        const double l = theta.levels.count(j) ? theta.levels.at(j) : 0.0;
        const double s_tilde =
            (1.0 + l / (1.0 - l) * sp.chi_jj) * sp.s_hat;
        est.beta[j] = beta;
        est.s_tilde[j] = s_tilde;
        beta_sum += beta;
        gamma += (1.0 - sp.s_hat / sigma2) * beta;
        const double ratio = s_tilde / (s_tilde * A + lambda);
        u1_spike += beta * ratio;
        u2_spike += beta * ratio * ratio;
    }
    gamma += in.mean_diff.squaredNorm() / sigma2 - est.y1_hat - est.y2_hat;
    est.gamma = gamma;

    const double bulk_mass = gamma - beta_sum;
    est.u1_hat = u1_spike + bulk_mass * (1.0 - lm) / A;
    est.u2_hat =
        (1.0 + y * est.m1_hat) * u2_spike + bulk_mass * est.t2_hat;
    return est;
}

double alpha_hat(const std::vector<double>& sample_eigenvalues,
                 const ThetaParams& theta, const SpikeConfig& config, int n1,
                 int n2, int p) {
    (void)config;
    if (!(theta.lambda > 0))
        throw std::invalid_argument("alpha_hat: lambda must be > 0");
    std::vector<double> t(sample_eigenvalues);
    for (const auto& [j, l] : theta.levels)
        t[static_cast<std::size_t>(j)] /= (1.0 - l);
    const std::vector<double> unit(t.size(), 1.0 / static_cast<double>(p));
    const double m_hat = kernels::resolvent_sum(t.data(), unit.data(),
                                                t.size(), 1.0, theta.lambda);
    const double tr = theta.lambda * m_hat;  // (1/p) tr((1/l) S I^{-1}+I)^-1
    const double n = n1 + n2;
    const double ratio = static_cast<double>(p) / n;
    const double den = 1.0 - ratio + ratio * tr;
    if (std::abs(den) < 1e-12)
        throw std::runtime_error("alpha_hat: near-singular denominator");
    const double lead = 0.5 * p * (1.0 / n1 - 1.0 / n2);
    return lead * (1.0 - tr) / den;
}

double plugin_objective(const PluginInputs& in, const ThetaParams& theta) {
    try {
        const PluginEstimates e = plugin_estimates(in, theta);
        const double den = e.u2_hat + (e.y1_hat + e.y2_hat) * e.t2_hat;
        if (!(den > 0) || !std::isfinite(e.u1_hat))
            return -std::numeric_limits<double>::infinity();
        return e.u1_hat * e.u1_hat / den;
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
}

ThetaParams tune_theta(const PluginInputs& in, const SearchConfig& search) {
    return tune_theta_multiclass({in}, search);
}

ThetaParams tune_theta_multiclass(const std::vector<PluginInputs>& pairs,
                                  const SearchConfig& search) {
    if (pairs.empty())
        throw std::invalid_argument("tune_theta: no class pairs supplied");
    if (search.lambda_points < 1 || search.large_levels.empty() ||
        search.small_levels.empty())
        throw std::invalid_argument("tune_theta: empty search space");
    const SpikeConfig& cfg = pairs.front().config;

    std::vector<double> lambdas(static_cast<std::size_t>(search.lambda_points));
    const double llo = std::log(search.lambda_min);
    const double lhi = std::log(search.lambda_max);
    for (int i = 0; i < search.lambda_points; ++i)
        lambdas[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * i /
                     std::max(1, search.lambda_points - 1));

    // One grid axis per spike, large spikes first.
    struct Axis {
        int index;
        const std::vector<double>* values;
        bool large;
    };
    std::vector<Axis> axes;
    for (int j : cfg.large_indices)
        axes.push_back({j, &search.large_levels, true});
    for (int j : cfg.small_indices)
        axes.push_back({j, &search.small_levels, false});

    ThetaParams best;
    double best_val = -std::numeric_limits<double>::infinity();
    bool found = false;
    std::vector<std::size_t> pick(axes.size(), 0);
    while (true) {
        ThetaParams theta;
        for (std::size_t a = 0; a < axes.size(); ++a)
            theta.levels[axes[a].index] = (*axes[a].values)[pick[a]];
        for (double lam : lambdas) {
            theta.lambda = lam;
            const double v = total_objective(pairs, theta);
            if (v > best_val ||
                (v == best_val && found && theta_less(theta, best))) {
                best_val = v;
                best = theta;
                found = true;
            }
        }
        // odometer over the level axes
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++pick[a] < axes[a].values->size()) break;
            pick[a] = 0;
        }
        if (a == axes.size()) break;
    }
    if (!found || !std::isfinite(best_val))
        throw std::runtime_error(
            "tune_theta: objective not finite anywhere on the grid");

    // Coordinate-descent polish with a shrinking step.
    for (int sweep = 0; sweep < search.polish_sweeps; ++sweep) {
        const double shrink = std::pow(0.5, sweep);
        const double lam_step = 0.3 * shrink;
        for (double dir : {1.0, -1.0}) {
            ThetaParams cand = best;
            cand.lambda = std::clamp(best.lambda * (1.0 + dir * lam_step),
                                     0.1 * search.lambda_min,
                                     2.0 * search.lambda_max);
            const double v = total_objective(pairs, cand);
            if (v > best_val) {
                best_val = v;
                best = cand;
            }
        }
        for (const Axis& ax : axes) {
            const double step =
                ax.large ? 0.25 * shrink * std::max(1.0, std::abs(best.levels[ax.index]))
                         : 0.1 * shrink;
            for (double dir : {1.0, -1.0}) {
                ThetaParams cand = best;
                double l = best.levels[ax.index] + dir * step;
                l = ax.large ? std::clamp(l, -8.0, 0.0)
                             : std::clamp(l, 0.0, 0.95);
                cand.levels[ax.index] = l;
                const double v = total_objective(pairs, cand);
                if (v > best_val) {
                    best_val = v;
                    best = cand;
                }
            }
        }
    }
    return best;
}

}  // namespace seda
