#include "vpq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace vpq {

namespace {

constexpr double kSqrtTwoPi = 2.5066282746310005024;
constexpr double kOneOverSqrtTwo = 0.70710678118654752440;

// Acklam's rational approximation (central branch for p in [0.02425,
// 1-0.02425], tail branches outside); worst-case error ~1.15e-9 before
// refinement.
double acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double lo = 0.02425;
    if (p < lo) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - lo) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ContractError("normal_quantile: p must lie strictly inside (0, 1)");
    }
    double x = acklam(p);
    // One Halley step against the exact CDF residual, expressed through
    // erfc for accuracy in both tails.
    const double err = 0.5 * std::erfc(-x * kOneOverSqrtTwo) - p;
    const double u = err * kSqrtTwoPi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double blom_c0(int n) {
    if (n < 1) throw ContractError("blom_c0: n must be >= 1");
    return normal_quantile((n - 0.375) / (n + 0.25));
}

double blom_expected_max(int n, double mu, double sigma) {
    if (sigma < 0.0) throw ContractError("blom_expected_max: sigma must be >= 0");
    return mu + sigma * blom_c0(n);
}

double expected_penalized(int n, double mu, double sigma, double lambda,
                          PenaltyMode mode) {
    if (sigma < 0.0) throw ContractError("expected_penalized: sigma must be >= 0");
    if (lambda < 0.0) throw ContractError("expected_penalized: lambda must be >= 0");
    const double c0 = blom_c0(n);
    switch (mode) {
    case PenaltyMode::none: return mu + sigma * c0;
    case PenaltyMode::p_sub: return mu + (c0 - lambda) * sigma;
    case PenaltyMode::p_mul: return (mu + sigma * c0) / (1.0 + lambda * sigma);
    }
    throw ContractError("expected_penalized: bad mode");
}

double absorbed_discount(double gamma, double w) {
    const double gw = gamma * w;
    if (gw < 0.0 || gw >= 1.0) {
        throw ContractError("absorbed_discount: gamma*W must lie in [0, 1)");
    }
    const double denom = 1.0 - gw;
    return 2.0 * gw / (denom * denom);
}

std::vector<PenaltyAnalysisRow> penalty_analysis(const std::vector<int>& ns,
                                                 double mu, double sigma,
                                                 const std::vector<double>& lambdas,
                                                 int trials, std::uint64_t seed) {
    if (trials < 2) throw ContractError("penalty_analysis: trials must be >= 2");
    std::vector<PenaltyAnalysisRow> rows;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const int n = ns[ni];
        // Monte-Carlo expected max, one derived stream per n.
        Rng rng(mix64(seed, static_cast<std::uint64_t>(ni)));
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < trials; ++t) {
            double best = -1e300;
            for (int i = 0; i < n; ++i) best = std::max(best, mu + sigma * rng.normal());
            sum += best;
            sumsq += best * best;
        }
        const double mc = sum / trials;
        const double var = (sumsq - sum * sum / trials) / (trials - 1);
        const double se = std::sqrt(std::max(0.0, var) / trials);
        for (double lambda : lambdas) {
            PenaltyAnalysisRow row;
            row.n = n;
            row.mu = mu;
            row.sigma = sigma;
            row.lambda = lambda;
            row.expected_max_blom = blom_expected_max(n, mu, sigma);
            row.expected_psub = expected_penalized(n, mu, sigma, lambda, PenaltyMode::p_sub);
            row.expected_pmul = expected_penalized(n, mu, sigma, lambda, PenaltyMode::p_mul);
            row.monte_carlo_max = mc;
            row.monte_carlo_se = se;
            rows.push_back(row);
        }
    }
    return rows;
}

namespace {

void append_double(std::ostringstream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out << buf;
}

} // namespace

std::string penalty_analysis_csv(const std::vector<PenaltyAnalysisRow>& rows) {
    std::ostringstream out;
    out << "n,mu,sigma,lambda,expected_max_blom,expected_psub,expected_pmul,"
           "monte_carlo_max,monte_carlo_se\n";
    for (const auto& r : rows) {
        out << r.n << ',';
        append_double(out, r.mu);
        out << ',';
        append_double(out, r.sigma);
        out << ',';
        append_double(out, r.lambda);
        out << ',';
        append_double(out, r.expected_max_blom);
        out << ',';
        append_double(out, r.expected_psub);
        out << ',';
        append_double(out, r.expected_pmul);
        out << ',';
        append_double(out, r.monte_carlo_max);
        out << ',';
        append_double(out, r.monte_carlo_se);
        out << '\n';
    }
    return out.str();
}

PenaltyToyTable penalty_toy(int n_points, double mu, double sigma,
                            const std::vector<double>& lambdas, std::uint64_t seed) {
    if (n_points < 2) throw ContractError("penalty_toy: n_points must be >= 2");
    PenaltyToyTable table;
    table.lambdas = lambdas;
    table.x.resize(static_cast<std::size_t>(n_points));
    Rng rng(seed);
    for (double& v : table.x) v = mu + sigma * rng.normal();
    std::sort(table.x.begin(), table.x.end());

    double mean = 0.0;
    for (double v : table.x) mean += v;
    mean /= n_points;
    table.u.resize(table.x.size());
    for (std::size_t i = 0; i < table.x.size(); ++i) table.u[i] = std::fabs(table.x[i] - mean);

    for (double lambda : lambdas) {
        Vec psub(table.x.size()), pmul(table.x.size());
        for (std::size_t i = 0; i < table.x.size(); ++i) {
            psub[i] = table.x[i] - lambda * table.u[i];
            pmul[i] = table.x[i] / (1.0 + lambda * table.u[i]);
        }
        table.psub.push_back(std::move(psub));
        table.pmul.push_back(std::move(pmul));
    }
    return table;
}

std::string penalty_toy_csv(const PenaltyToyTable& table) {
    std::ostringstream out;
    out << "point,x,uncertainty,lambda,p_sub,p_mul\n";
    for (std::size_t j = 0; j < table.lambdas.size(); ++j) {
        for (std::size_t i = 0; i < table.x.size(); ++i) {
            out << i << ',';
            append_double(out, table.x[i]);
            out << ',';
            append_double(out, table.u[i]);
            out << ',';
            append_double(out, table.lambdas[j]);
            out << ',';
            append_double(out, table.psub[j][i]);
            out << ',';
            append_double(out, table.pmul[j][i]);
            out << '\n';
        }
    }
    return out.str();
}

double overestimation_gap(const MicroMDP& mdp, const QEnsemble& ens,
                          const EmbeddingTable& table, const DenseNet& enc_head,
                          const Mat& q_star, const std::vector<int>& states) {
    if (q_star.rows != mdp.n_states() || q_star.cols != mdp.n_items) {
        throw ConfigError("overestimation_gap: Q* shape does not match the MDP");
    }
    if (ens.actions() != mdp.n_items) {
        throw ConfigError("overestimation_gap: ensemble action count does not match the MDP");
    }
    if (states.empty()) throw ContractError("overestimation_gap: no states given");

    double total = 0.0;
    for (int s : states) {
        const StateWindow w = mdp.window_of(s);
        const Vec features = encode(w, table, enc_head);
        Vec mean(static_cast<std::size_t>(ens.actions()), 0.0);
        for (const DenseNet& head : ens.online) {
            const Vec q = forward(head, features);
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += q[i];
        }
        double learned = -1e300, oracle = -1e300;
        for (int a = 0; a < mdp.n_items; ++a) {
            learned = std::max(learned, mean[static_cast<std::size_t>(a)] / ens.heads());
            oracle = std::max(oracle, q_star.at(s, a));
        }
        total += learned - oracle;
    }
    return total / static_cast<double>(states.size());
}

std::vector<int> distinct_states(const MicroMDP& mdp, const TransitionStore& store) {
    std::set<int> seen;
    for (std::size_t i = 0; i < store.size(); ++i) {
        seen.insert(mdp.state_index(store.at(i).state));
    }
    return {seen.begin(), seen.end()};
}

} // namespace vpq
