#pragma once

// Shared generators and oracles for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ammtrack/core.hpp"
#include "ammtrack/cpmm.hpp"

namespace ammtrack::testkit {

// Test-only randomness; deliberately independent of the library's RngStream.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    cpmm::Pool pool() { return {log_uniform(1.0, 1e6), log_uniform(1.0, 1e6), uniform(0.9, 1.0)}; }

    // A list whose bands are all <= gamma_bar.
    ArbList arb_list(double gamma_bar, int max_len = 8) {
        ArbList l;
        const int k = integer(0, max_len);
        for (int i = 0; i < k; ++i) {
            l.push_back({coin() ? Dir::plus : Dir::minus, uniform(1e-4, 1.0), uniform(0.0, gamma_bar)});
        }
        return l;
    }

private:
    std::mt19937_64 eng_;
};

// Grid maximum of the directional profit integrand over [0, q_hi].
inline double grid_max_profit(const cpmm::Pool& pool, double p_star, Dir d, double q_hi, int points,
                              double* arg = nullptr) {
    double best = 0.0;
    double best_q = 0.0;
    for (int i = 0; i <= points; ++i) {
        const double q = q_hi * static_cast<double>(i) / points;
        const double v = cpmm::trade_profit(pool, p_star, d, q);
        if (v > best) {
            best = v;
            best_q = q;
        }
    }
    if (arg) *arg = best_q;
    return best;
}

}  // namespace ammtrack::testkit
