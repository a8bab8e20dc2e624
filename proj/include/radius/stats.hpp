#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <optional>
#include <span>

#include "radius/error.hpp"

namespace radius::stats {

// Single-pass mean/std accumulator keeping only the counters n, s = sum(x)
// and q = sum(x^2). Samples are accumulated relative to `shift` (the first
// sample seen) in extended precision, so the q - s^2/n cancellation stays
// benign even for streams sitting near -100 dBm.
class RunningStats {
public:
    using Wide = long double;

    RunningStats() = default;

    template <typename Range>
    static RunningStats of(const Range& samples) {
        RunningStats rs;
        for (double x : samples) rs.push(x);
        return rs;
    }

    void push(double x) {
        detail::require(std::isfinite(x), "rssi", "non-finite sample");
        if (n_ == 0) shift_ = x;
        const Wide d = static_cast<Wide>(x) - static_cast<Wide>(shift_);
        ++n_;
        s_ += d;
        q_ += d * d;
    }

    // Counter-additive merge. `other` is re-expressed on this accumulator's
    // shift before its counters are added.
    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const Wide d = static_cast<Wide>(other.shift_) - static_cast<Wide>(shift_);
        const Wide nb = static_cast<Wide>(other.n_);
        s_ += other.s_ + nb * d;
        q_ += other.q_ + 2 * d * other.s_ + nb * d * d;
        n_ += other.n_;
    }

    std::size_t count() const noexcept { return n_; }
    bool empty() const noexcept { return n_ == 0; }
    double shift() const noexcept { return shift_; }
    Wide shifted_sum() const noexcept { return s_; }
    Wide shifted_sum_sq() const noexcept { return q_; }

    double mean() const noexcept {
        if (n_ == 0) return 0.0;
        return static_cast<double>(static_cast<Wide>(shift_) + s_ / static_cast<Wide>(n_));
    }

    // Sample variance, (q - s^2/n)/(n-1), clamped at zero. Zero for n < 2.
    double variance() const noexcept {
        if (n_ < 2) return 0.0;
        const Wide n = static_cast<Wide>(n_);
        const Wide centered = q_ - s_ * s_ / n;
        return static_cast<double>(std::max<Wide>(centered, 0) / (n - 1));
    }

    double stddev() const noexcept { return std::sqrt(variance()); }

    friend bool operator==(const RunningStats&, const RunningStats&) = default;

private:
    std::size_t n_ = 0;
    Wide s_ = 0;
    Wide q_ = 0;
    double shift_ = 0.0;
};

inline RunningStats merged(RunningStats a, const RunningStats& b) {
    a.merge(b);
    return a;
}

// Flat moving average over the last `capacity` samples. Nothing is emitted
// until the window has filled once.
class SlidingWindow {
public:
    explicit SlidingWindow(std::size_t capacity) : capacity_(capacity) {
        detail::require(capacity >= 1, "window_l", "must be >= 1");
    }

    std::optional<double> push(double x) {
        buffer_.push_back(x);
        if (buffer_.size() > capacity_) buffer_.pop_front();
        if (buffer_.size() < capacity_) return std::nullopt;
        double sum = 0.0;
        for (double v : buffer_) sum += v;
        const double avg = sum / static_cast<double>(capacity_);
        // Rounding can nudge the mean a hair outside the sample range when all
        // samples are (nearly) equal.
        const auto [lo, hi] = std::minmax_element(buffer_.begin(), buffer_.end());
        return std::clamp(avg, *lo, *hi);
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return buffer_.size(); }
    bool full() const noexcept { return buffer_.size() == capacity_; }
    const std::deque<double>& contents() const noexcept { return buffer_; }

private:
    std::size_t capacity_;
    std::deque<double> buffer_;
};

// Standard normal upper tail, Q(x) = P(Z > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Inverse standard normal CDF. Acklam's rational approximation followed by
// one Halley step against erfc, which takes it to ~1e-15.
inline double normal_quantile(double p) {
    detail::require(p > 0.0 && p < 1.0, "p", "must lie in (0, 1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549671010496465e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

struct TrainingSizeConfig {
    std::size_t n_s = 250;  // bootstrap samples used for sigma_s
    double e_mu = 1.0;      // max error of the estimated mean, dBm
    double z = 2.58;        // 99% confidence

    void validate() const {
        detail::require(n_s >= 30, "n_s", "bootstrap sample count must be at least 30");
        detail::require(e_mu > 0.0 && std::isfinite(e_mu), "e_mu", "must be > 0");
        detail::require(z > 0.0 && std::isfinite(z), "z", "must be > 0");
    }
};

// Confidence-interval training size, (z * sigma_s / e_mu)^2 rounded up,
// never below the bootstrap count.
inline std::size_t min_training_size(double sigma_s, const TrainingSizeConfig& cfg) {
    cfg.validate();
    detail::require(sigma_s >= 0.0 && std::isfinite(sigma_s), "sigma_s", "must be finite and >= 0");
    const double ratio = cfg.z * sigma_s / cfg.e_mu;
    const double needed = std::ceil(ratio * ratio);
    if (needed <= static_cast<double>(cfg.n_s)) return cfg.n_s;
    return static_cast<std::size_t>(needed);
}

}  // namespace radius::stats
