#pragma once

// Interval type-2 fuzzy inference over (e, de) with Gaussian antecedents of
// uncertain width, a full 3x3 product rule base with singleton consequents,
// and the closed-form m-weighted type reduction
//
//   F(x | theta) = theta^T (m * zeta_U(x) + (1 - m) * zeta_L(x)).
//
// Type-1 inference is the degenerate case sigma_lower == sigma_upper.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "gearsync/error.hpp"
#include "gearsync/gains.hpp"

namespace gearsync {

inline constexpr std::size_t kMfsPerInput = 3;
inline constexpr std::size_t kRuleCount = kMfsPerInput * kMfsPerInput;

using RuleVector = std::array<double, kRuleCount>;

/// Gaussian set whose width lies in [sigma_lower, sigma_lower + widening].
/// Storing the widening keeps the upper width >= the lower width for any
/// nonnegative sample.
struct IT2GaussianMF {
    double center = 0.0;
    double sigma_lower = 1.0;
    double widening = 0.0;

    static IT2GaussianMF from_bounds(double center, double sigma_lower, double sigma_upper) {
        return {center, sigma_lower, sigma_upper - sigma_lower};
    }

    double sigma_upper() const noexcept { return sigma_lower + widening; }
    bool is_type1() const noexcept { return widening == 0.0; }

    void validate() const {
        if (!std::isfinite(center)) throw Error(ErrorCode::invalid_argument, "MF center must be finite");
        if (!(sigma_lower > 0.0) || !std::isfinite(sigma_lower))
            throw Error(ErrorCode::invalid_argument, "MF sigma_lower must be positive");
        if (!(widening >= 0.0) || !std::isfinite(widening))
            throw Error(ErrorCode::invalid_argument, "MF sigma_upper must be >= sigma_lower");
    }

    friend bool operator==(const IT2GaussianMF&, const IT2GaussianMF&) = default;
};

struct Grade {
    double lower = 0.0;
    double upper = 0.0;
};

/// exp(-(x-c)^2 / sigma^2) for both widths. No 1/2 in the exponent.
inline Grade mf_grades(double x, const IT2GaussianMF& mf) noexcept {
    const double d2 = (x - mf.center) * (x - mf.center);
    const double su = mf.sigma_upper();
    return {std::exp(-d2 / (mf.sigma_lower * mf.sigma_lower)), std::exp(-d2 / (su * su))};
}

struct IT2FisConfig {
    std::array<IT2GaussianMF, kMfsPerInput> e_mfs{};
    std::array<IT2GaussianMF, kMfsPerInput> de_mfs{};
    RuleVector theta_kp{};
    RuleVector theta_ki{};
    RuleVector theta_kd{};
    double m = 0.5;

    bool is_type1() const noexcept {
        return std::all_of(e_mfs.begin(), e_mfs.end(), [](const auto& mf) { return mf.is_type1(); }) &&
               std::all_of(de_mfs.begin(), de_mfs.end(), [](const auto& mf) { return mf.is_type1(); });
    }

    void validate() const {
        for (const auto& mf : e_mfs) mf.validate();
        for (const auto& mf : de_mfs) mf.validate();
        for (const RuleVector* theta : {&theta_kp, &theta_ki, &theta_kd})
            for (double t : *theta)
                if (!(t >= kGainMin && t <= kGainMax))
                    throw Error(ErrorCode::invalid_argument, "consequent singletons must lie in [0, 10]");
        if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorCode::invalid_argument, "m must lie in [0, 1]");
    }

    friend bool operator==(const IT2FisConfig&, const IT2FisConfig&) = default;
};

struct RuleFirings {
    RuleVector lower{};
    RuleVector upper{};
};

/// Product t-norm over the 3x3 grid, row-major in (e-MF, de-MF).
inline RuleFirings rule_firings(double e, double de, const IT2FisConfig& cfg) noexcept {
    std::array<Grade, kMfsPerInput> ge;
    std::array<Grade, kMfsPerInput> gd;
    for (std::size_t i = 0; i < kMfsPerInput; ++i) {
        ge[i] = mf_grades(e, cfg.e_mfs[i]);
        gd[i] = mf_grades(de, cfg.de_mfs[i]);
    }
    RuleFirings w;
    for (std::size_t i = 0; i < kMfsPerInput; ++i) {
        for (std::size_t j = 0; j < kMfsPerInput; ++j) {
            w.lower[i * kMfsPerInput + j] = ge[i].lower * gd[j].lower;
            w.upper[i * kMfsPerInput + j] = ge[i].upper * gd[j].upper;
        }
    }
    return w;
}

struct FiringVectors {
    RuleVector zeta_lower{};
    RuleVector zeta_upper{};
};

/// Sum below which a firing band is treated as underflowed.
inline constexpr double kUnderflowSum = 1e-300;

namespace detail {

inline RuleVector normalize_band(const RuleVector& w) noexcept {
    double total = 0.0;
    for (double v : w) total += v;
    RuleVector z;
    if (!(total >= kUnderflowSum)) {
        z.fill(1.0 / static_cast<double>(kRuleCount));
        return z;
    }
    for (std::size_t l = 0; l < kRuleCount; ++l) z[l] = w[l] / total;
    return z;
}

}  // namespace detail

/// Normalizes each band to sum 1; an underflowed band becomes uniform.
inline FiringVectors normalize(const RuleVector& w_lower, const RuleVector& w_upper) noexcept {
    return {detail::normalize_band(w_lower), detail::normalize_band(w_upper)};
}

/// theta^T (m * zeta_U + (1 - m) * zeta_L). The result is a convex
/// combination of theta; it is clamped to [min theta, max theta] so rounding
/// never pushes it outside.
inline double biglarbegian_output(const FiringVectors& zeta, std::span<const double, kRuleCount> theta,
                                  double m) noexcept {
    double out = 0.0;
    double lo = theta[0];
    double hi = theta[0];
    for (std::size_t l = 0; l < kRuleCount; ++l) {
        out += theta[l] * (m * zeta.zeta_upper[l] + (1.0 - m) * zeta.zeta_lower[l]);
        lo = std::min(lo, theta[l]);
        hi = std::max(hi, theta[l]);
    }
    return std::clamp(out, lo, hi);
}

inline PidGains evaluate_gains(double e, double de, const IT2FisConfig& cfg) noexcept {
    const RuleFirings w = rule_firings(e, de, cfg);
    const FiringVectors zeta = normalize(w.lower, w.upper);
    return {biglarbegian_output(zeta, cfg.theta_kp, cfg.m), biglarbegian_output(zeta, cfg.theta_ki, cfg.m),
            biglarbegian_output(zeta, cfg.theta_kd, cfg.m)};
}

/// Validated, immutable inference engine.
class It2Fis {
public:
    explicit It2Fis(IT2FisConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const IT2FisConfig& config() const noexcept { return cfg_; }
    PidGains gains(double e, double de) const noexcept { return evaluate_gains(e, de, cfg_); }

private:
    IT2FisConfig cfg_;
};

}  // namespace gearsync
