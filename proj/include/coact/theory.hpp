#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coact/linalg.hpp"
#include "coact/rng.hpp"

namespace coact {

// P(observed label = 1) after symmetric flipping with rate epsilon:
// (1 - 2e) * mu + e. Range shrinks to [e, 1-e].
inline double noisy_label_prob(double mu, double epsilon) {
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("noisy_label_prob: mu outside [0,1]");
    if (epsilon < 0.0 || epsilon >= 0.5) throw std::invalid_argument("noisy_label_prob: epsilon outside [0,1/2)");
    return (1.0 - 2.0 * epsilon) * mu + epsilon;
}

// N_eff = N_o + N_ai * (1-2e)^2.
inline double effective_sample_size(long long n_oracle, long long n_ai, double epsilon) {
    if (n_oracle < 0 || n_ai < 0) throw std::invalid_argument("effective_sample_size: negative count");
    if (n_oracle + n_ai == 0) throw std::invalid_argument("effective_sample_size: both counts zero");
    if (epsilon < 0.0 || epsilon >= 0.5) throw std::invalid_argument("effective_sample_size: epsilon outside [0,1/2)");
    double a = 1.0 - 2.0 * epsilon;
    return static_cast<double>(n_oracle) + static_cast<double>(n_ai) * a * a;
}

// Predicted Gap(oracle)/Gap(mix) lower bound: sqrt(1 + N_ai*(1-2e)^2/N_o).
inline double improvement_ratio(long long n_oracle, long long n_ai, double epsilon) {
    if (n_oracle < 1) throw std::invalid_argument("improvement_ratio: n_oracle must be >= 1");
    if (n_ai < 0) throw std::invalid_argument("improvement_ratio: negative n_ai");
    if (epsilon < 0.0 || epsilon >= 0.5) throw std::invalid_argument("improvement_ratio: epsilon outside [0,1/2)");
    double a = 1.0 - 2.0 * epsilon;
    return std::sqrt(1.0 + static_cast<double>(n_ai) * a * a / static_cast<double>(n_oracle));
}

// Empirical Fisher information of the noisy logistic likelihood, averaged
// over the feature list. Uses the closed-form conditional variance, so no
// label sampling enters:
//   ((1-2e) mu (1-mu))^2 / (mu~ (1-mu~)) * x x^T,  mu = sigma(theta.x).
// At epsilon = 0 this is algebraically the clean Fisher mu(1-mu) x x^T,
// which is used directly so the difference matrix vanishes exactly.
inline Mat empirical_fisher(const std::vector<Vec>& features, const Vec& theta, double epsilon) {
    if (features.empty()) throw std::invalid_argument("empirical_fisher: empty feature list");
    if (epsilon < 0.0 || epsilon >= 0.5) throw std::invalid_argument("empirical_fisher: epsilon outside [0,1/2)");
    const std::size_t d = theta.size();
    Mat fisher(d, d);
    for (const auto& x : features) {
        double mu = logistic(dot(theta, x));
        double v = mu * (1.0 - mu);
        double w;
        if (epsilon == 0.0) {
            w = v;
        } else {
            double mu_t = noisy_label_prob(mu, epsilon);
            double vt = mu_t * (1.0 - mu_t);
            double s = (1.0 - 2.0 * epsilon) * v;
            w = vt > 0.0 ? s * s / vt : 0.0;
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) fisher(i, j) += w * x[i] * x[j];
    }
    for (double& f : fisher.data) f /= static_cast<double>(features.size());
    return fisher;
}

struct AttenuationReport {
    double max_eig_violation = 0.0;  // lambda_max(I_noisy - (1-2e)^2 I_clean); <= 0 predicted
    double clean_max_eig = 0.0;
};

// Checks the Loewner inequality I_noisy <= (1-2e)^2 I_clean by power
// iteration on the difference matrix.
inline AttenuationReport verify_attenuation(const std::vector<Vec>& features, const Vec& theta,
                                            double epsilon) {
    Mat noisy = empirical_fisher(features, theta, epsilon);
    Mat clean = empirical_fisher(features, theta, 0.0);
    double a = 1.0 - 2.0 * epsilon;
    Mat diff(noisy.rows, noisy.cols);
    for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] = noisy.data[i] - a * a * clean.data[i];
    AttenuationReport report;
    report.max_eig_violation = max_eigenvalue_sym(diff);
    report.clean_max_eig = max_eigenvalue_sym(clean);
    return report;
}

struct LogisticFit {
    Vec theta;
    bool converged = false;
    double grad_norm = 0.0;
    int iterations = 0;
};

// Maximizes the mixed log-likelihood by fixed-step gradient ascent: clean
// rows use the logistic link, noisy rows the flipped link (1-2e) sigma + e.
// Each row's log-likelihood has curvature at most 1/4 in its logit, so
// 4 / lambda_max(sum x x^T) is a globally safe step and the ascent is
// monotone without a line search.
inline LogisticFit fit_mixed_logistic(const std::vector<Vec>& features, const std::vector<int>& labels,
                                      const std::vector<bool>& noisy_row, double epsilon,
                                      int max_iterations = 50000, double tol = 1e-7) {
    const std::size_t n = features.size();
    if (n == 0 || labels.size() != n || noisy_row.size() != n)
        throw std::invalid_argument("fit_mixed_logistic: misaligned inputs");
    const std::size_t d = features[0].size();

    Mat second_moment(d, d);
    for (const auto& x : features)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) second_moment(i, j) += x[i] * x[j];
    double smoothness = 0.25 * max_eigenvalue_sym(second_moment);
    const double step = smoothness > 0.0 ? 1.0 / smoothness : 1.0;

    auto gradient = [&](const Vec& theta) {
        Vec g(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double mu = logistic(dot(theta, features[i]));
            double coeff;
            if (noisy_row[i]) {
                double mu_t = noisy_label_prob(mu, epsilon);
                double vt = std::max(mu_t * (1.0 - mu_t), 1e-15);
                coeff = (labels[i] - mu_t) / vt * (1.0 - 2.0 * epsilon) * mu * (1.0 - mu);
            } else {
                coeff = labels[i] - mu;
            }
            for (std::size_t j = 0; j < d; ++j) g[j] += coeff * features[i][j];
        }
        return g;
    };

    LogisticFit fit;
    fit.theta.assign(d, 0.0);
    for (int it = 0; it < max_iterations; ++it) {
        Vec g = gradient(fit.theta);
        fit.grad_norm = norm2(g);
        fit.iterations = it;
        if (fit.grad_norm <= tol * static_cast<double>(n)) {
            fit.converged = true;
            return fit;
        }
        for (std::size_t j = 0; j < d; ++j) fit.theta[j] += step * g[j];
    }
    Vec g = gradient(fit.theta);
    fit.grad_norm = norm2(g);
    fit.converged = fit.grad_norm <= tol * static_cast<double>(n);
    return fit;
}

// One mixed-vs-oracle comparison (the boxed theorem's setting).
struct GapReport {
    long long n_oracle = 0;
    long long n_ai = 0;
    double epsilon = 0.0;
    double predicted_ratio = 1.0;                 // sqrt(1 + n_ai (1-2e)^2 / n_oracle)
    double empirical_oracle_error = 0.0;          // mean ||theta_hat - theta*|| over replications
    double empirical_mixed_error = 0.0;
    int replications = 0;
    double mixed_wins_fraction = 0.0;             // replications where mixed error < oracle error
    int non_converged = 0;                        // optimizer failures (see max_grad_norm)
    double max_grad_norm = 0.0;
};

// Per replication: draw features and BTL labels at theta_star, flip the AI
// portion with probability epsilon, fit the oracle-only and mixed
// estimators, and record the parameter errors.
inline GapReport run_mixed_vs_oracle(int d, const Vec& theta_star, long long n_oracle, long long n_ai,
                                     double epsilon, int replications, std::uint64_t seed) {
    if (d < 1 || static_cast<std::size_t>(d) != theta_star.size())
        throw std::invalid_argument("run_mixed_vs_oracle: bad dimension");
    if (n_oracle < 1) throw std::invalid_argument("run_mixed_vs_oracle: n_oracle must be >= 1");
    if (n_ai < 0) throw std::invalid_argument("run_mixed_vs_oracle: negative n_ai");
    if (replications < 2) throw std::invalid_argument("run_mixed_vs_oracle: replications must be >= 2");

    GapReport report;
    report.n_oracle = n_oracle;
    report.n_ai = n_ai;
    report.epsilon = epsilon;
    report.replications = replications;
    report.predicted_ratio = improvement_ratio(n_oracle, n_ai, epsilon);

    double sum_oracle = 0.0, sum_mixed = 0.0;
    int wins = 0;
    for (int rep = 0; rep < replications; ++rep) {
        Rng rng(derive_seed(seed, "replication", static_cast<std::uint64_t>(rep)));
        const std::size_t n = static_cast<std::size_t>(n_oracle + n_ai);
        std::vector<Vec> x(n, Vec(d));
        std::vector<int> y(n);
        std::vector<bool> noisy(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) x[i][j] = rng.normal();
            y[i] = rng.uniform() < logistic(dot(theta_star, x[i])) ? 1 : 0;
            if (i >= static_cast<std::size_t>(n_oracle)) {
                noisy[i] = true;
                if (rng.uniform() < epsilon) y[i] = 1 - y[i];
            }
        }
        std::vector<Vec> xo(x.begin(), x.begin() + n_oracle);
        std::vector<int> yo(y.begin(), y.begin() + n_oracle);
        std::vector<bool> no(static_cast<std::size_t>(n_oracle), false);

        LogisticFit oracle_fit = fit_mixed_logistic(xo, yo, no, 0.0);
        LogisticFit mixed_fit = fit_mixed_logistic(x, y, noisy, epsilon);
        for (const auto* fit : {&oracle_fit, &mixed_fit}) {
            if (!fit->converged) ++report.non_converged;
            report.max_grad_norm = std::max(report.max_grad_norm, fit->grad_norm);
        }

        Vec diff_o(theta_star), diff_m(theta_star);
        for (int j = 0; j < d; ++j) {
            diff_o[j] -= oracle_fit.theta[j];
            diff_m[j] -= mixed_fit.theta[j];
        }
        double err_o = norm2(diff_o), err_m = norm2(diff_m);
        sum_oracle += err_o;
        sum_mixed += err_m;
        if (err_m < err_o) ++wins;
    }
    report.empirical_oracle_error = sum_oracle / replications;
    report.empirical_mixed_error = sum_mixed / replications;
    report.mixed_wins_fraction = static_cast<double>(wins) / replications;
    return report;
}

}  // namespace coact
