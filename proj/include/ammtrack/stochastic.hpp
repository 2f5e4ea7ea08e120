#pragma once

// Disturbance laws for the reference log-price innovations, and a reproducible
// random stream.
//
// RngStream is SplitMix64 (Steele, Lea & Flood 2014) over a state seeded from
// (seed, stream_id). Uniforms take the top 53 bits; normals use Box-Muller with
// one output per call, so every draw consumes a fixed number of uniforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ammtrack {

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), state_(mix(seed ^ mix(stream_id + kGamma))) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return mix(state_ += kGamma); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double standard_normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
};

enum class DisturbanceKind { gaussian, laplace, gaussian_with_shocks };

inline std::string_view to_string(DisturbanceKind k) {
    switch (k) {
        case DisturbanceKind::gaussian: return "gaussian";
        case DisturbanceKind::laplace: return "laplace";
        case DisturbanceKind::gaussian_with_shocks: return "gaussian_with_shocks";
    }
    return "unknown";
}

inline DisturbanceKind disturbance_kind_from_string(std::string_view s) {
    if (s == "gaussian") return DisturbanceKind::gaussian;
    if (s == "laplace") return DisturbanceKind::laplace;
    if (s == "gaussian_with_shocks") return DisturbanceKind::gaussian_with_shocks;
    throw std::invalid_argument("unknown disturbance kind '" + std::string(s) + "'");
}

// sigma is the gaussian standard deviation or the laplace scale b. sigma == 0
// is the degenerate law w = 0, used for noiseless fixtures.
struct DisturbanceSpec {
    DisturbanceKind kind{DisturbanceKind::gaussian};
    double sigma{0.0};
    double shock_prob{0.0};
    double shock_scale{1.0};

    bool degenerate() const { return sigma == 0.0; }

    friend bool operator==(const DisturbanceSpec&, const DisturbanceSpec&) = default;
};

inline void validate(const DisturbanceSpec& spec) {
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
        throw std::invalid_argument("disturbance sigma must be nonnegative and finite");
    }
    if (spec.kind == DisturbanceKind::gaussian_with_shocks) {
        if (!(spec.shock_prob >= 0.0 && spec.shock_prob <= 1.0)) {
            throw std::invalid_argument("shock_prob must lie in [0, 1]");
        }
        if (!(spec.shock_scale > 0.0) || !std::isfinite(spec.shock_scale)) {
            throw std::invalid_argument("shock_scale must be positive and finite");
        }
    }
}

// Supremum of exponents with a finite exponential moment of |w|.
inline double exponent_supremum(const DisturbanceSpec& spec) {
    if (spec.kind == DisturbanceKind::laplace && !spec.degenerate()) return 1.0 / spec.sigma;
    return std::numeric_limits<double>::infinity();
}

// Largest standard deviation among mixture components (scale used to cap exponents).
inline double effective_scale(const DisturbanceSpec& spec) {
    if (spec.kind == DisturbanceKind::gaussian_with_shocks && spec.shock_prob > 0.0) {
        return spec.sigma * std::max(1.0, spec.shock_scale);
    }
    return spec.sigma;
}

inline double sample(const DisturbanceSpec& spec, RngStream& rng) {
    switch (spec.kind) {
        case DisturbanceKind::gaussian:
            return spec.sigma * rng.standard_normal();
        case DisturbanceKind::laplace: {
            const double u = rng.uniform() - 0.5;
            const double mag = -std::log1p(-2.0 * std::abs(u));
            return u < 0.0 ? -spec.sigma * mag : spec.sigma * mag;
        }
        case DisturbanceKind::gaussian_with_shocks: {
            const bool shock = rng.uniform() < spec.shock_prob;
            const double n = rng.standard_normal();
            return (shock ? spec.shock_scale * spec.sigma : spec.sigma) * n;
        }
    }
    return 0.0;
}

namespace detail {
inline double std_normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

// E[exp(alpha |N(0, s^2)|)]
inline double half_normal_mgf(double s, double alpha) {
    const double as = alpha * s;
    return 2.0 * std::exp(0.5 * as * as) * std_normal_cdf(as);
}
}  // namespace detail

inline double mgf_abs(const DisturbanceSpec& spec, double alpha) {
    validate(spec);
    if (!(alpha >= 0.0)) throw std::invalid_argument("mgf_abs: alpha must be nonnegative");
    if (alpha == 0.0 || spec.degenerate()) return 1.0;
    switch (spec.kind) {
        case DisturbanceKind::gaussian:
            return detail::half_normal_mgf(spec.sigma, alpha);
        case DisturbanceKind::laplace: {
            const double ab = alpha * spec.sigma;
            if (ab >= 1.0) {
                throw std::domain_error("mgf_abs: exponential moment diverges for laplace at alpha >= 1/b");
            }
            return 1.0 / (1.0 - ab);
        }
        case DisturbanceKind::gaussian_with_shocks:
            return (1.0 - spec.shock_prob) * detail::half_normal_mgf(spec.sigma, alpha) +
                   spec.shock_prob * detail::half_normal_mgf(spec.shock_scale * spec.sigma, alpha);
    }
    return 1.0;
}

struct MonteCarloEstimate {
    double mean;
    double std_error;
};

inline MonteCarloEstimate mgf_abs_monte_carlo(const DisturbanceSpec& spec, double alpha, std::size_t draws,
                                              RngStream& rng) {
    validate(spec);
    if (draws < 2) throw std::invalid_argument("mgf_abs_monte_carlo: need at least two draws");
    // Welford accumulation.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double v = std::exp(alpha * std::abs(sample(spec, rng)));
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(draws - 1);
    return {mean, std::sqrt(var / static_cast<double>(draws))};
}

inline double mean_abs(const DisturbanceSpec& spec) {
    validate(spec);
    const double half_normal = std::sqrt(2.0 / std::numbers::pi);
    switch (spec.kind) {
        case DisturbanceKind::gaussian:
            return spec.sigma * half_normal;
        case DisturbanceKind::laplace:
            return spec.sigma;
        case DisturbanceKind::gaussian_with_shocks:
            return spec.sigma * half_normal * ((1.0 - spec.shock_prob) + spec.shock_prob * spec.shock_scale);
    }
    return 0.0;
}

}  // namespace ammtrack
