#pragma once

#include <cmath>

#include "radius/error.hpp"
#include "radius/stats.hpp"

namespace radius::thresholds {

// Two-class Gaussian RSSI model: good and weak links share sigma.
struct LinkProfile {
    double mu_g = -70.0;  // dBm
    double mu_w = -88.0;  // dBm, grey-zone border
    double sigma = 2.0;   // dB

    void validate() const {
        detail::require(std::isfinite(mu_g) && std::isfinite(mu_w), "mu_g", "means must be finite");
        detail::require(mu_g > mu_w, "mu_g", "good-link mean must exceed weak-link mean");
        detail::require(std::isfinite(sigma) && sigma > 0.0, "sigma", "must be > 0");
    }
};

// A-priori probability of a good link with its refinement ceiling. The weak
// prior is always 1 - p_good.
struct BayesPrior {
    double p_good = 0.8;
    double p_max = 0.99;

    double p_weak() const noexcept { return 1.0 - p_good; }

    void validate() const {
        detail::require(p_good > 0.0 && p_good < 1.0, "p_good", "must lie in (0, 1)");
        detail::require(p_max < 1.0, "p_max", "must be < 1");
        detail::require(p_good <= p_max, "p_good", "must not exceed p_max");
    }
};

// Bayes-optimal cut between the good and weak densities:
//   (mu_g + mu_w)/2 + sigma^2 ln(P_w / P_g) / (mu_g - mu_w)
// sigma = 0 is accepted here (degenerate training set); it yields the midpoint.
inline double bayes_threshold(const LinkProfile& profile, const BayesPrior& prior) {
    prior.validate();
    detail::require(profile.mu_g > profile.mu_w, "mu_g", "good-link mean must exceed weak-link mean");
    detail::require(std::isfinite(profile.sigma) && profile.sigma >= 0.0, "sigma", "must be >= 0");
    const double log_ratio = std::log(prior.p_weak() / prior.p_good);
    return 0.5 * (profile.mu_g + profile.mu_w) +
           profile.sigma * profile.sigma * log_ratio / (profile.mu_g - profile.mu_w);
}

// Class separation in units of sigma: (mu_g - mu_w) / (2 sigma).
inline double alpha(const LinkProfile& profile) {
    profile.validate();
    return (profile.mu_g - profile.mu_w) / (2.0 * profile.sigma);
}

// Minimum achievable error as a function of separation a and the prior.
inline double bayes_error(double a, const BayesPrior& prior) {
    prior.validate();
    detail::require(std::isfinite(a) && a > 0.0, "alpha", "must be > 0");
    const double half_log = 0.5 * std::log(prior.p_weak() / prior.p_good) / a;
    return stats::q_function(a - half_log) * prior.p_good + stats::q_function(a + half_log) * prior.p_weak();
}

// Prior-weighted misclassification at an arbitrary cut tau: good samples
// below tau are false positives, weak samples above are misses.
inline double empirical_error(double tau, const LinkProfile& profile, const BayesPrior& prior) {
    profile.validate();
    prior.validate();
    if (std::isinf(tau)) return tau < 0 ? prior.p_weak() : prior.p_good;
    const double good_below = stats::normal_cdf((tau - profile.mu_g) / profile.sigma);
    const double weak_above = stats::q_function((tau - profile.mu_w) / profile.sigma);
    return good_below * prior.p_good + weak_above * prior.p_weak();
}

// One-sided Chebyshev (Cantelli) bound placed on the lower tail, so that at
// most p_target of good samples fall below it whatever the distribution.
inline double chebyshev_threshold(double mean, double std, double p_target) {
    detail::require(p_target > 0.0 && p_target < 1.0, "p_target", "must lie in (0, 1)");
    detail::require(std::isfinite(std) && std >= 0.0, "std", "must be >= 0");
    return mean - std * std::sqrt((1.0 - p_target) / p_target);
}

// x-th percentile of N(mean, std), x in percent.
inline double percentile_threshold(double mean, double std, double x) {
    detail::require(x > 0.0 && x < 100.0, "percentile", "must lie in (0, 100)");
    detail::require(std::isfinite(std) && std >= 0.0, "std", "must be >= 0");
    return mean + stats::normal_quantile(x / 100.0) * std;
}

}  // namespace radius::thresholds
