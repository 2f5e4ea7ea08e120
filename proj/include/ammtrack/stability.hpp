#pragma once

// Drift and contraction certificates for the tracking chain under the
// exponential Lyapunov function V(x) = exp(alpha |x|).

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ammtrack/numerics.hpp"
#include "ammtrack/stochastic.hpp"

namespace ammtrack {

// Large-error correction law: with probability p a block removes at least a
// share lambda of the excess gap.
struct ServicePair {
    double lambda{1.0};
    double p{1.0};

    friend bool operator==(const ServicePair&, const ServicePair&) = default;
};

// p = 0 is accepted so the no-service limit can be evaluated.
inline void validate(const ServicePair& pair) {
    if (!(pair.lambda > 0.0 && pair.lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
    if (!(pair.p >= 0.0 && pair.p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
}

struct Certificate {
    double alpha_star{0.0};
    double rho_star{0.0};
    double R{0.0};
    double gamma_bar{0.0};
    bool certified{false};
    double B_bound{0.0};  // exp(alpha R) M_w(alpha), compact-set constant
};

inline double rho_local_with_mgf(const ServicePair& pair, double gamma_bar, double R, double alpha, double mgf) {
    validate(pair);
    if (!(gamma_bar >= 0.0)) throw std::invalid_argument("rho_local: gamma_bar must be nonnegative");
    if (!(R > gamma_bar)) throw std::invalid_argument("rho_local: R must exceed gamma_bar");
    if (!(alpha > 0.0)) throw std::invalid_argument("rho_local: alpha must be positive");
    return mgf * ((1.0 - pair.p) + pair.p * std::exp(alpha * pair.lambda * (gamma_bar - R)));
}

inline double rho_local(const ServicePair& pair, double gamma_bar, double R, double alpha,
                        const DisturbanceSpec& spec) {
    if (!(alpha < exponent_supremum(spec))) {
        throw std::domain_error("rho_local: alpha outside the exponential-moment domain");
    }
    return rho_local_with_mgf(pair, gamma_bar, R, alpha, mgf_abs(spec, alpha));
}

struct CertifyOptions {
    std::optional<double> alpha_cap;  // overrides the default search ceiling
};

// Upper end of the alpha search: 0.99 of the moment supremum for laplace,
// 20 / scale for gaussian kinds, 20 / (R - gamma_bar) for the degenerate law.
// alpha R never exceeds 700 so exp(alpha R) in the compact-set bound stays finite.
inline double alpha_search_ceiling(const DisturbanceSpec& spec, double gamma_bar, double R,
                                   const CertifyOptions& opt = {}) {
    constexpr double kMaxExponent = 700.0;
    double hi = 0.0;
    if (opt.alpha_cap) {
        if (!(*opt.alpha_cap > 0.0)) throw std::invalid_argument("alpha_cap must be positive");
        hi = std::min(*opt.alpha_cap, 0.99 * exponent_supremum(spec));
    } else if (spec.degenerate()) {
        hi = 20.0 / (R - gamma_bar);
    } else if (spec.kind == DisturbanceKind::laplace) {
        hi = 0.99 * exponent_supremum(spec);
    } else {
        hi = 20.0 / effective_scale(spec);
    }
    return std::min(hi, kMaxExponent / R);
}

inline Certificate certify(const ServicePair& pair, double gamma_bar, double R, const DisturbanceSpec& spec,
                           const CertifyOptions& opt = {}) {
    validate(pair);
    validate(spec);
    if (!(R > gamma_bar)) throw std::invalid_argument("certify: R must exceed gamma_bar");
    const double hi = alpha_search_ceiling(spec, gamma_bar, R, opt);
    const double lo = hi * 1e-9;
    // rho is a product of log-convex functions of alpha, hence unimodal.
    const auto best = golden_section_minimize(
        [&](double a) { return rho_local(pair, gamma_bar, R, a, spec); }, lo, hi);
    Certificate c;
    c.alpha_star = best.arg;
    c.rho_star = best.value;
    c.R = R;
    c.gamma_bar = gamma_bar;
    c.certified = best.value < 1.0;
    c.B_bound = std::exp(best.arg * R) * mgf_abs(spec, best.arg);
    return c;
}

struct ContractionCell {
    ServicePair pair;
    double rho_star;
    bool certified;
};

struct ContractionMap {
    std::vector<double> lambdas;
    std::vector<double> ps;
    std::vector<ContractionCell> cells;  // row-major: cells[i * ps.size() + j] is (lambdas[i], ps[j])
    std::vector<ServicePair> boundary;   // interpolated points where rho_star crosses 1

    const ContractionCell& at(std::size_t i, std::size_t j) const { return cells[i * ps.size() + j]; }
};

inline ContractionMap contraction_boundary(const std::vector<double>& lambdas, const std::vector<double>& ps,
                                           double gamma_bar, double R, const DisturbanceSpec& spec,
                                           const CertifyOptions& opt = {}) {
    if (lambdas.empty() || ps.empty()) throw std::invalid_argument("contraction_boundary: empty grid");
    ContractionMap map{lambdas, ps, {}, {}};
    map.cells.reserve(lambdas.size() * ps.size());
    for (double l : lambdas) {
        for (double p : ps) {
            const Certificate c = certify({l, p}, gamma_bar, R, spec, opt);
            map.cells.push_back({{l, p}, c.rho_star, c.certified});
        }
    }
    auto crossing = [&](const ContractionCell& a, const ContractionCell& b) {
        if (a.certified == b.certified) return;
        const double t = (1.0 - a.rho_star) / (b.rho_star - a.rho_star);
        map.boundary.push_back({a.pair.lambda + t * (b.pair.lambda - a.pair.lambda),
                                a.pair.p + t * (b.pair.p - a.pair.p)});
    };
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        for (std::size_t j = 0; j < ps.size(); ++j) {
            if (j + 1 < ps.size()) crossing(map.at(i, j), map.at(i, j + 1));
            if (i + 1 < lambdas.size()) crossing(map.at(i, j), map.at(i + 1, j));
        }
    }
    return map;
}

// e_{n+1} <= (e_n - C_n)_+ + |w_{n+1}|
inline bool check_excess_recursion(double e_n, double C_n, double w_next, double e_next, double tol = 1e-12) {
    return e_next <= positive_part(e_n - C_n) + std::abs(w_next) + tol;
}

// Conditional mean bound on the next excess above the large-error threshold.
inline double mean_excess_bound(const ServicePair& pair, double e, double mu_w) {
    validate(pair);
    return (1.0 - pair.lambda * pair.p) * e + mu_w;
}

}  // namespace ammtrack
