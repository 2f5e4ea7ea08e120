#pragma once

// JSON and CSV encodings for the library types. CSV reals use 17 significant
// digits; JSON reals use the shortest round-tripping representation.

#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ammtrack/calibrate.hpp"
#include "ammtrack/core.hpp"
#include "ammtrack/cpmm.hpp"
#include "ammtrack/simulate.hpp"
#include "ammtrack/stability.hpp"
#include "ammtrack/stochastic.hpp"

namespace nlohmann {
template <typename T>
struct adl_serializer<std::optional<T>> {
    static void to_json(json& j, const std::optional<T>& v) {
        if (v) j = *v;
        else j = nullptr;
    }
    static void from_json(const json& j, std::optional<T>& v) {
        if (j.is_null()) v.reset();
        else v = j.get<T>();
    }
};
}  // namespace nlohmann

namespace ammtrack {

using nlohmann::json;

inline void to_json(json& j, Dir d) { j = to_int(d); }
inline void from_json(const json& j, Dir& d) { d = dir_from_int(j.get<int>()); }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrackingState, x, z, block_index)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ArbTx, s, u, gamma)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BlockOutcome, z, total_correction, success_flags, residual_path)

NLOHMANN_JSON_SERIALIZE_ENUM(DisturbanceKind, {{DisturbanceKind::gaussian, "gaussian"},
                                               {DisturbanceKind::laplace, "laplace"},
                                               {DisturbanceKind::gaussian_with_shocks, "gaussian_with_shocks"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DisturbanceSpec, kind, sigma, shock_prob, shock_scale)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ServicePair, lambda, p)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Certificate, alpha_star, rho_star, R, gamma_bar, certified, B_bound)

namespace cpmm {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Pool, reserve_x, reserve_y, eta)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExecCost, c_f)
}  // namespace cpmm

namespace sim {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReducedScenario, pair, x_star, gamma_bar, disturbance, horizon, seed, x0,
                                   below_exponent, partial_on_failure)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MechScenario, pool0, cost, depth_scale, disturbance, horizon, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SimSummary, mean_excess, mean_abs_gap, fraction_in_tube, trades_executed,
                                   batch_means)
}  // namespace sim

namespace calib {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LambdaSelection, lambda_star, p_star)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(QuartileStats, count, positive_ratio, median_relative)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RobustnessReport, rows_with_next, share_raw, share_with_proxy, quartiles)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CalibrationReport, observations, gamma_bar, x_star, selection, phat_reference,
                                   positive_correction_ratio, quartiles, robustness)
}  // namespace calib

namespace io {

inline std::string fmt_real(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

inline void write_trace_csv(std::ostream& os, const sim::SimTrace& trace) {
    os << "block,x,z,abs_x,correction,w_next,excess,ref_log_price,amm_log_price,served";
    if (trace.mechanism) os << ",direction,q,profit,reserve_x,reserve_y";
    os << '\n';
    for (const auto& r : trace.blocks) {
        os << r.block << ',' << fmt_real(r.x) << ',' << fmt_real(r.z) << ',' << fmt_real(std::abs(r.x)) << ','
           << fmt_real(r.correction) << ',' << fmt_real(r.w_next) << ',' << fmt_real(r.excess) << ','
           << fmt_real(r.ref_log_price) << ',' << fmt_real(r.amm_log_price) << ',' << (r.served ? 1 : 0);
        if (trace.mechanism) {
            os << ',' << r.direction << ',' << fmt_real(r.q) << ',' << fmt_real(r.profit) << ','
               << fmt_real(r.reserve_x) << ',' << fmt_real(r.reserve_y);
        }
        os << '\n';
    }
}

// One row per cell; row/col names label the two grid axes.
inline void write_sweep_csv(std::ostream& os, const sim::SweepResult& sweep, const std::string& row_name,
                            const std::string& col_name, const std::vector<double>* rho_star = nullptr) {
    os << row_name << ',' << col_name << ",mean_excess,mean_abs_gap,fraction_in_tube,trades_executed";
    if (rho_star) os << ",rho_star";
    os << '\n';
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        for (std::size_t j = 0; j < sweep.cols.size(); ++j) {
            const auto& c = sweep.at(i, j);
            os << fmt_real(sweep.rows[i]) << ',' << fmt_real(sweep.cols[j]) << ',' << fmt_real(c.mean_excess) << ','
               << fmt_real(c.mean_abs_gap) << ',' << fmt_real(c.fraction_in_tube) << ',' << c.trades_executed;
            if (rho_star) os << ',' << fmt_real((*rho_star)[i * sweep.cols.size() + j]);
            os << '\n';
        }
    }
}

inline void write_boundary_csv(std::ostream& os, const ContractionMap& map) {
    os << "lambda,p\n";
    for (const auto& b : map.boundary) os << fmt_real(b.lambda) << ',' << fmt_real(b.p) << '\n';
}

inline void write_curve_csv(std::ostream& os, const std::vector<calib::CurvePoint>& large,
                            const std::vector<calib::CurvePoint>& small) {
    os << "lambda,phat_large,phat_small\n";
    for (std::size_t i = 0; i < large.size(); ++i) {
        os << fmt_real(large[i].lambda) << ',' << fmt_real(large[i].phat) << ',';
        if (i < small.size()) os << fmt_real(small[i].phat);
        os << '\n';
    }
}

}  // namespace io
}  // namespace ammtrack
