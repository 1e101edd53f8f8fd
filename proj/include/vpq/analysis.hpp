#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vpq/ensemble.hpp"
#include "vpq/simenv.hpp"
#include "vpq/util.hpp"

namespace vpq {

// Inverse standard-normal CDF on (0, 1): Acklam's three-branch rational
// approximation refined by one Halley step against erfc, giving |error|
// below 1e-8 across (1e-10, 1 - 1e-10).
double normal_quantile(double p);

// Blom's order-statistic constant C0(n) = Phi^-1((n - 0.375) / (n + 0.25)).
double blom_c0(int n);

// Blom approximation of E[max of n iid N(mu, sigma^2)] = mu + sigma * C0(n).
double blom_expected_max(int n, double mu, double sigma);

// Closed-form expectation of the penalized maximum:
//   none:  mu + sigma*C0
//   p_sub: mu + (C0 - lambda)*sigma
//   p_mul: (mu + sigma*C0) / (1 + lambda*sigma)
// sigma enters the multiplicative weight directly (the penalty's uncertainty
// input is the spread of the estimates themselves).
double expected_penalized(int n, double mu, double sigma, double lambda,
                          PenaltyMode mode);

// The effective horizon amplifier 2*gamma*W / (1 - gamma*W)^2 that a
// discount-absorbed penalty weight W produces; domain gamma*W in [0, 1).
double absorbed_discount(double gamma, double w);

// ----- closed-form vs Monte-Carlo table ------------------------------------

struct PenaltyAnalysisRow {
    int n = 0;
    double mu = 0.0;
    double sigma = 0.0;
    double lambda = 0.0;
    double expected_max_blom = 0.0;
    double expected_psub = 0.0;
    double expected_pmul = 0.0;
    double monte_carlo_max = 0.0; // raw (unpenalized) expected max
    double monte_carlo_se = 0.0;
};

// One row per (n, lambda) pair; the Monte-Carlo column averages the max of n
// normal draws over `trials` repetitions on a seed-derived stream.
std::vector<PenaltyAnalysisRow> penalty_analysis(const std::vector<int>& ns,
                                                 double mu, double sigma,
                                                 const std::vector<double>& lambdas,
                                                 int trials, std::uint64_t seed);

std::string penalty_analysis_csv(const std::vector<PenaltyAnalysisRow>& rows);

// ----- toy figure ----------------------------------------------------------

// n_points Gaussian draws sorted ascending, with per-point uncertainty
// u_i = |x_i - sample mean| standing in for the spread of an estimator
// ensemble; psub[j][i] and pmul[j][i] penalize point i at lambdas[j].
struct PenaltyToyTable {
    Vec x;
    Vec u;
    std::vector<double> lambdas;
    std::vector<Vec> psub;
    std::vector<Vec> pmul;
};

PenaltyToyTable penalty_toy(int n_points, double mu, double sigma,
                            const std::vector<double>& lambdas, std::uint64_t seed);

// Long-format CSV: point,x,uncertainty,lambda,p_sub,p_mul.
std::string penalty_toy_csv(const PenaltyToyTable& table);

// ----- overestimation against the tabular oracle ---------------------------

// Mean over `states` (micro state indices) of
//   max_a meanQ(s, a) - max_a Q*(s, a)
// where meanQ is the equal-weight online-head mean through the shared
// encoder. Positive = the learned values overshoot the oracle.
double overestimation_gap(const MicroMDP& mdp, const QEnsemble& ens,
                          const EmbeddingTable& table, const DenseNet& enc_head,
                          const Mat& q_star, const std::vector<int>& states);

// Distinct state indices visited by the store, ascending.
std::vector<int> distinct_states(const MicroMDP& mdp, const TransitionStore& store);

} // namespace vpq
