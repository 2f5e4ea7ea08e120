#pragma once

// Sequential block execution: an ordered list of corrective transactions is
// applied to the pre-execution gap; each one either succeeds in full or reverts.

#include <cmath>
#include <stdexcept>

#include "ammtrack/core.hpp"
#include "ammtrack/numerics.hpp"

namespace ammtrack {

inline BlockOutcome execute_block(double x, const ArbList& list) {
    if (!std::isfinite(x)) throw std::invalid_argument("execute_block: x must be finite");
    BlockOutcome out;
    out.success_flags.reserve(list.size());
    out.residual_path.reserve(list.size() + 1);
    out.residual_path.push_back(x);
    double r = x;
    for (const ArbTx& tx : list) {
        validate(tx);
        const double s = to_int(tx.s);
        // Same direction as the remaining error, and enough residual left to clear the band.
        const bool ok = s * r > 0.0 && std::abs(r) >= tx.gamma + tx.u;
        if (ok) {
            r -= s * tx.u;
            out.total_correction += tx.u;
        }
        out.success_flags.push_back(ok);
        out.residual_path.push_back(r);
    }
    out.z = r;
    return out;
}

// (|x| - gamma_bar)_+
inline double excess(double x, double gamma_bar) {
    if (!(gamma_bar >= 0.0)) throw std::invalid_argument("excess: gamma_bar must be nonnegative");
    return positive_part(std::abs(x) - gamma_bar);
}

constexpr double kBoundTolerance = 1e-12;

// Dead-zone service bound and monotonicity for one executed block. The caller
// guarantees gamma_bar caps every band in the list.
inline bool check_service_bound(double x, const BlockOutcome& outcome, double gamma_bar,
                                double tol = kBoundTolerance) {
    const double lhs = excess(outcome.z, gamma_bar);
    const double rhs = positive_part(excess(x, gamma_bar) - outcome.total_correction);
    return lhs <= rhs + tol && std::abs(outcome.z) <= std::abs(x) + tol;
}

}  // namespace ammtrack
