#pragma once

// Shared tracking-loop types. All gaps are natural-log price differences.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammtrack {

// Corrective direction in error space: +1 reduces a positive gap, -1 a negative one.
enum class Dir : int { minus = -1, plus = +1 };

inline int to_int(Dir d) { return static_cast<int>(d); }

inline Dir dir_from_int(int s) {
    if (s == 1) return Dir::plus;
    if (s == -1) return Dir::minus;
    throw std::invalid_argument("direction must be -1 or +1, got " + std::to_string(s));
}

struct TrackingState {
    double x{0.0};  // pre-execution gap P_n - P~_{n-1}
    double z{0.0};  // post-execution gap P_n - P~_n
    std::uint64_t block_index{0};

    friend bool operator==(const TrackingState&, const TrackingState&) = default;
};

struct ArbTx {
    Dir s{Dir::plus};
    double u{0.0};      // error-magnitude reduction on success
    double gamma{0.0};  // executable residual band

    friend bool operator==(const ArbTx&, const ArbTx&) = default;
};

using ArbList = std::vector<ArbTx>;

struct BlockOutcome {
    double z{0.0};
    double total_correction{0.0};
    std::vector<bool> success_flags;
    std::vector<double> residual_path;  // R_0 = x, ..., R_K = z

    friend bool operator==(const BlockOutcome&, const BlockOutcome&) = default;
};

inline void validate(const ArbTx& tx) {
    if (!(tx.u > 0.0) || !std::isfinite(tx.u)) {
        throw std::invalid_argument("ArbTx.u must be positive and finite");
    }
    if (!(tx.gamma >= 0.0) || !std::isfinite(tx.gamma)) {
        throw std::invalid_argument("ArbTx.gamma must be nonnegative and finite");
    }
}

inline void validate(const TrackingState& st) {
    if (!std::isfinite(st.x) || !std::isfinite(st.z)) {
        throw std::invalid_argument("TrackingState values must be finite");
    }
}

// x_{n+1} = z_n + w_{n+1}
inline double step(double z, double w) { return z + w; }

// Executable band: the larger of the economic threshold and the slippage guard.
inline double combine_band(double gamma_econ, double zeta) {
    if (!(gamma_econ >= 0.0) || !(zeta >= 0.0)) {
        throw std::invalid_argument("combine_band: bands must be nonnegative");
    }
    return gamma_econ > zeta ? gamma_econ : zeta;
}

}  // namespace ammtrack
