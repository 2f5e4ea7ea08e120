#pragma once

// Constant-product pool mechanics and closed-form corrective arbitrage.
//
// Pool price is reserve_y / reserve_x. Direction +1 inputs asset 0 (lowers the
// pool price), direction -1 inputs asset 1 (raises it). The fee multiplier eta
// discounts the input used for pricing; the full input stays in the pool.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "ammtrack/core.hpp"
#include "ammtrack/numerics.hpp"

namespace ammtrack::cpmm {

struct Pool {
    double reserve_x{0.0};
    double reserve_y{0.0};
    double eta{1.0};

    double invariant_k() const { return reserve_x * reserve_y; }
    double price() const { return reserve_y / reserve_x; }

    friend bool operator==(const Pool&, const Pool&) = default;
};

struct ExecCost {
    double c_f{0.0};
};

struct ArbTrade {
    Dir direction;
    double q_star;
    double profit;
};

inline void validate(const Pool& pool) {
    if (!(pool.reserve_x > 0.0) || !std::isfinite(pool.reserve_x) || !(pool.reserve_y > 0.0) ||
        !std::isfinite(pool.reserve_y)) {
        throw std::invalid_argument("Pool reserves must be positive and finite");
    }
    if (!(pool.eta > 0.0 && pool.eta <= 1.0)) {
        throw std::invalid_argument("Pool.eta must lie in (0, 1]");
    }
}

inline void validate(const ExecCost& cost) {
    if (!(cost.c_f >= 0.0) || !std::isfinite(cost.c_f)) {
        throw std::invalid_argument("ExecCost.c_f must be nonnegative and finite");
    }
}

namespace detail {
inline void check_price(double p_star) {
    if (!(p_star > 0.0) || !std::isfinite(p_star)) {
        throw std::invalid_argument("reference price must be positive and finite");
    }
}
}  // namespace detail

inline double pool_log_price(const Pool& pool) {
    validate(pool);
    return std::log(pool.reserve_y / pool.reserve_x);
}

inline double liquidity_proxy(const Pool& pool) {
    validate(pool);
    return std::sqrt(pool.reserve_x) * std::sqrt(pool.reserve_y);
}

// Output amount of the opposite asset for input q.
inline double swap_output(const Pool& pool, Dir direction, double q) {
    const double eq = pool.eta * q;
    return direction == Dir::plus ? pool.reserve_y * eq / (pool.reserve_x + eq)
                                  : pool.reserve_x * eq / (pool.reserve_y + eq);
}

// Numeraire profit of input q valued at p_star, before fixed cost.
inline double trade_profit(const Pool& pool, double p_star, Dir direction, double q) {
    const double out = swap_output(pool, direction, q);
    return direction == Dir::plus ? out - p_star * q : p_star * out - q;
}

inline double optimal_input(const Pool& pool, double p_star, Dir direction) {
    validate(pool);
    detail::check_price(p_star);
    const double x = pool.reserve_x;
    const double y = pool.reserve_y;
    const double eta = pool.eta;
    if (direction == Dir::plus) {
        return positive_part((std::sqrt(eta * x * y / p_star) - x) / eta);
    }
    return positive_part((std::sqrt(eta * x * y * p_star) - y) / eta);
}

inline double directional_profit(const Pool& pool, double p_star, Dir direction, ExecCost cost) {
    validate(pool);
    validate(cost);
    detail::check_price(p_star);
    const double x = pool.reserve_x;
    const double y = pool.reserve_y;
    double gap = direction == Dir::plus ? std::sqrt(y) - std::sqrt(x * p_star / pool.eta)
                                        : std::sqrt(x * p_star) - std::sqrt(y / pool.eta);
    gap = positive_part(gap);
    return gap * gap - cost.c_f;
}

inline Pool apply_swap(const Pool& pool, Dir direction, double q) {
    validate(pool);
    if (!(q > 0.0) || !std::isfinite(q)) {
        throw std::invalid_argument("apply_swap: input must be positive and finite");
    }
    const double out = swap_output(pool, direction, q);
    Pool next = pool;
    if (direction == Dir::plus) {
        next.reserve_x += q;
        next.reserve_y -= out;
    } else {
        next.reserve_y += q;
        next.reserve_x -= out;
    }
    validate(next);
    return next;
}

// Log-gap radius outside which corrective arbitrage is profitable. With a fixed
// cost the two directional roots generally differ; the larger one is returned.
inline double no_trade_radius(const Pool& pool, ExecCost cost) {
    validate(pool);
    validate(cost);
    const double fee_band = -std::log(pool.eta);
    if (cost.c_f == 0.0) return fee_band;

    constexpr double kMaxGap = 10.0;
    const double p = pool.price();
    double radius = 0.0;
    for (Dir d : {Dir::plus, Dir::minus}) {
        // Direction +1 is active when the reference sits below the pool price.
        auto h = [&](double g) {
            const double p_star = d == Dir::plus ? p * std::exp(-g) : p * std::exp(g);
            return directional_profit(pool, p_star, d, cost);
        };
        if (!(h(kMaxGap) > 0.0)) {
            throw std::domain_error("no_trade_radius: no profitable gap below log-gap 10; pool too shallow for cost");
        }
        radius = std::max(radius, bisect(h, fee_band, kMaxGap));
    }
    return radius;
}

inline std::optional<ArbTrade> best_arb(const Pool& pool, double p_star, ExecCost cost) {
    validate(pool);
    validate(cost);
    detail::check_price(p_star);
    for (Dir d : {Dir::plus, Dir::minus}) {
        const double h = directional_profit(pool, p_star, d, cost);
        if (h > 0.0) {
            const double q = optimal_input(pool, p_star, d);
            if (q > 0.0) return ArbTrade{d, q, h};
        }
    }
    return std::nullopt;
}

}  // namespace ammtrack::cpmm
