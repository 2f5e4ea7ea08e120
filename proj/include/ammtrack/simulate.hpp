#pragma once

// Block-scale simulators: the reduced correction-law model and the
// constant-product mechanism model, plus their parameter sweeps.
//
// Random streams: disturbances always come from stream 0 of the scenario seed,
// so runs that differ only in service parameters see the same w path. Service
// draws of the reduced model come from stream 1 (+ cell index in sweeps).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ammtrack/core.hpp"
#include "ammtrack/cpmm.hpp"
#include "ammtrack/execution.hpp"
#include "ammtrack/stability.hpp"
#include "ammtrack/stochastic.hpp"

namespace ammtrack::sim {

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDisturbanceStream = 0;
constexpr std::uint64_t kServiceStream = 1;
constexpr std::size_t kBatchCount = 20;

struct ReducedScenario {
    ServicePair pair{0.5, 0.729};
    double x_star{2e-3};
    double gamma_bar{3.82e-4};
    DisturbanceSpec disturbance{DisturbanceKind::gaussian_with_shocks, 2e-3, 0.01, 10.0};
    std::uint64_t horizon{10000};
    std::uint64_t seed{1};
    double x0{0.0};
    // Below x_star both service coordinates scale as (e / (x_star - gamma_bar))^below_exponent.
    double below_exponent{1.0};
    // A failed delivery coin still removes U * lambda * e with U ~ U[0, 1); false removes nothing.
    bool partial_on_failure{true};
};

struct MechScenario {
    cpmm::Pool pool0{1e4, 1e4, 0.997};
    cpmm::ExecCost cost{0.1};
    double depth_scale{1.0};
    DisturbanceSpec disturbance{DisturbanceKind::gaussian_with_shocks, 2e-3, 0.01, 10.0};
    std::uint64_t horizon{10000};
    std::uint64_t seed{1};
};

struct BlockRecord {
    std::uint64_t block{0};
    double x{0.0};           // pre-execution gap
    double z{0.0};           // post-execution gap
    double correction{0.0};  // C_n
    double w_next{0.0};
    double excess{0.0};      // (|x| - gamma_bar)_+
    double ref_log_price{0.0};
    double amm_log_price{0.0};  // after execution
    bool served{false};         // reduced: service coin; mechanism: trade executed
    // Mechanism runs only.
    int direction{0};  // pool-side direction of the executed trade, 0 if none
    double q{0.0};
    double profit{0.0};
    double reserve_x{0.0};
    double reserve_y{0.0};
};

struct SimTrace {
    bool mechanism{false};
    double gamma_bar{0.0};
    std::vector<BlockRecord> blocks;
};

struct SimSummary {
    double mean_excess{0.0};
    double mean_abs_gap{0.0};
    double fraction_in_tube{0.0};
    std::uint64_t trades_executed{0};
    // Batch means of the headline statistic (excess for reduced runs, |gap| for
    // mechanism runs), for paired standard errors between runs.
    std::vector<double> batch_means;

    double headline(bool mechanism) const { return mechanism ? mean_abs_gap : mean_excess; }
};

struct SimResult {
    SimTrace trace;
    SimSummary summary;
};

inline void validate(const ReducedScenario& sc) {
    validate(sc.pair);
    validate(sc.disturbance);
    if (!(sc.gamma_bar >= 0.0)) throw std::invalid_argument("gamma_bar must be nonnegative");
    if (!(sc.x_star > sc.gamma_bar)) throw std::invalid_argument("x_star must exceed gamma_bar");
    if (sc.horizon == 0) throw std::invalid_argument("horizon must be positive");
    if (!std::isfinite(sc.x0)) throw std::invalid_argument("x0 must be finite");
    if (!(sc.below_exponent > 0.0) || !std::isfinite(sc.below_exponent)) {
        throw std::invalid_argument("below_exponent must be positive and finite");
    }
}

inline void validate(const MechScenario& sc) {
    cpmm::validate(sc.pool0);
    cpmm::validate(sc.cost);
    validate(sc.disturbance);
    if (!(sc.depth_scale > 0.0) || !std::isfinite(sc.depth_scale)) {
        throw std::invalid_argument("depth_scale must be positive and finite");
    }
    if (sc.horizon == 0) throw std::invalid_argument("horizon must be positive");
}

namespace detail {

inline std::vector<double> batch_means(const std::vector<double>& v, std::size_t batches) {
    const std::size_t n = v.size();
    const std::size_t b = std::min(batches, n);
    std::vector<double> out(b, 0.0);
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t lo = k * n / b;
        const std::size_t hi = (k + 1) * n / b;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        out[k] = s / static_cast<double>(hi - lo);
    }
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Largest u <= target with gamma + u <= |x| in floating point.
inline double fit_correction(double target, double gamma, double abs_x) {
    double u = target;
    while (u > 0.0 && gamma + u > abs_x) u = std::nextafter(u, 0.0);
    return u;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace detail

// Service law for the reduced model at gap x: the pair applies in full above
// x_star and both coordinates shrink with the excess below it (linearly by default).
inline ServicePair effective_service(const ReducedScenario& sc, double x) {
    if (std::abs(x) >= sc.x_star) return sc.pair;
    const double f = std::pow(excess(x, sc.gamma_bar) / (sc.x_star - sc.gamma_bar), sc.below_exponent);
    return {sc.pair.lambda * f, sc.pair.p * f};
}

inline SimResult run_reduced(const ReducedScenario& sc, std::uint64_t service_stream = kServiceStream) {
    validate(sc);
    RngStream w_rng(sc.seed, kDisturbanceStream);
    RngStream service_rng(sc.seed, service_stream);

    SimResult res;
    res.trace.gamma_bar = sc.gamma_bar;
    res.trace.blocks.reserve(sc.horizon);
    std::vector<double> excesses;
    excesses.reserve(sc.horizon);
    double abs_sum = 0.0;
    std::uint64_t in_tube = 0;

    double x = sc.x0;
    double ref = 0.0;
    for (std::uint64_t n = 0; n < sc.horizon; ++n) {
        const double e = excess(x, sc.gamma_bar);
        const ServicePair law = effective_service(sc, x);
        // Two uniforms every block keep the service stream aligned across parameter changes.
        const bool coin = service_rng.uniform() < law.p;
        const double partial = service_rng.uniform();
        const double share = coin ? 1.0 : (sc.partial_on_failure ? partial : 0.0);
        const double target = share * law.lambda * e;

        ArbList list;
        const double u = detail::fit_correction(target, sc.gamma_bar, std::abs(x));
        if (u > 0.0) list.push_back({x > 0.0 ? Dir::plus : Dir::minus, u, sc.gamma_bar});
        const BlockOutcome out = execute_block(x, list);

        if (std::abs(x) >= sc.x_star && coin && !list.empty() && !out.success_flags.front()) {
            throw InvariantViolation("reduced model: served large-error transaction reverted at block " +
                                     std::to_string(n));
        }
        if (!check_service_bound(x, out, sc.gamma_bar)) {
            throw InvariantViolation("service bound violated at block " + std::to_string(n));
        }

        const double w = sample(sc.disturbance, w_rng);
        const double x_next = step(out.z, w);
        if (!check_excess_recursion(e, out.total_correction, w, excess(x_next, sc.gamma_bar))) {
            throw InvariantViolation("excess recursion violated at block " + std::to_string(n));
        }

        BlockRecord rec;
        rec.block = n;
        rec.x = x;
        rec.z = out.z;
        rec.correction = out.total_correction;
        rec.w_next = w;
        rec.excess = e;
        rec.ref_log_price = ref;
        rec.amm_log_price = ref - out.z;
        rec.served = coin;
        res.trace.blocks.push_back(rec);

        excesses.push_back(e);
        abs_sum += std::abs(x);
        if (std::abs(x) <= sc.gamma_bar) ++in_tube;
        if (!out.success_flags.empty() && out.success_flags.front()) ++res.summary.trades_executed;

        ref += w;
        x = x_next;
    }
    const double h = static_cast<double>(sc.horizon);
    res.summary.mean_excess = detail::mean(excesses);
    res.summary.mean_abs_gap = abs_sum / h;
    res.summary.fraction_in_tube = static_cast<double>(in_tube) / h;
    res.summary.batch_means = detail::batch_means(excesses, kBatchCount);
    return res;
}

enum class ShiftKind { strong, baseline, weak };

struct ShiftSizes {
    double lambda{0.20};
    double p{0.15};
};

inline ShiftKind shift_kind_from_string(const std::string& s) {
    if (s == "strong") return ShiftKind::strong;
    if (s == "baseline") return ShiftKind::baseline;
    if (s == "weak") return ShiftKind::weak;
    throw std::invalid_argument("unknown scenario '" + s + "' (expected strong, baseline or weak)");
}

inline ReducedScenario scenario_shift(const ReducedScenario& base, ShiftKind kind, ShiftSizes shift = {}) {
    validate(base);
    ReducedScenario out = base;
    switch (kind) {
        case ShiftKind::strong:
            out.pair.lambda = std::min(1.0, base.pair.lambda + shift.lambda);
            out.pair.p = std::min(1.0, base.pair.p + shift.p);
            break;
        case ShiftKind::weak:
            out.pair.lambda = std::clamp(base.pair.lambda - shift.lambda, 0.05, 1.0);
            out.pair.p = std::clamp(base.pair.p - shift.p, 0.05, 1.0);
            break;
        case ShiftKind::baseline:
            break;
    }
    return out;
}

// Pool-side direction +1 lowers the pool price, so it reduces a negative
// reference-minus-pool gap; the error-space direction is the opposite sign.
inline SimResult run_mechanism(const MechScenario& sc) {
    validate(sc);
    RngStream w_rng(sc.seed, kDisturbanceStream);
    cpmm::Pool pool = sc.pool0;
    pool.reserve_x *= sc.depth_scale;
    pool.reserve_y *= sc.depth_scale;
    cpmm::validate(pool);

    // Every optimal trade leaves the pool exactly at the fee band edge.
    const double gamma_bar = -std::log(pool.eta);
    SimResult res;
    res.trace.mechanism = true;
    res.trace.gamma_bar = gamma_bar;
    res.trace.blocks.reserve(sc.horizon);
    std::vector<double> gaps;
    gaps.reserve(sc.horizon);
    double excess_sum = 0.0;
    std::uint64_t in_tube = 0;

    double ref = cpmm::pool_log_price(pool);
    for (std::uint64_t n = 0; n < sc.horizon; ++n) {
        const double x = ref - cpmm::pool_log_price(pool);
        const double band = cpmm::no_trade_radius(pool, sc.cost);
        BlockRecord rec;
        rec.block = n;
        rec.x = x;
        rec.ref_log_price = ref;

        BlockOutcome out{x, 0.0, {}, {x}};
        if (auto trade = cpmm::best_arb(pool, std::exp(ref), sc.cost)) {
            pool = cpmm::apply_swap(pool, trade->direction, trade->q_star);
            const double z = ref - cpmm::pool_log_price(pool);
            if (!(std::abs(z) <= std::abs(x) + kBoundTolerance) || sign_of(z) == -sign_of(x)) {
                throw InvariantViolation("mechanism: trade overshot the reference at block " + std::to_string(n));
            }
            out = {z, std::abs(x) - std::abs(z), {true}, {x, z}};
            rec.served = true;
            rec.direction = to_int(trade->direction);
            rec.q = trade->q_star;
            rec.profit = trade->profit;
            ++res.summary.trades_executed;
        }
        if (!check_service_bound(x, out, gamma_bar)) {
            throw InvariantViolation("service bound violated at block " + std::to_string(n));
        }

        const double w = sample(sc.disturbance, w_rng);
        const double e = excess(x, gamma_bar);
        const double x_next = step(out.z, w);
        if (!check_excess_recursion(e, out.total_correction, w, excess(x_next, gamma_bar))) {
            throw InvariantViolation("excess recursion violated at block " + std::to_string(n));
        }

        rec.z = out.z;
        rec.correction = out.total_correction;
        rec.w_next = w;
        rec.excess = e;
        rec.amm_log_price = ref - out.z;
        rec.reserve_x = pool.reserve_x;
        rec.reserve_y = pool.reserve_y;
        res.trace.blocks.push_back(rec);

        gaps.push_back(std::abs(x));
        excess_sum += e;
        if (std::abs(x) <= band) ++in_tube;
        ref += w;
    }
    const double h = static_cast<double>(sc.horizon);
    res.summary.mean_abs_gap = detail::mean(gaps);
    res.summary.mean_excess = excess_sum / h;
    res.summary.fraction_in_tube = static_cast<double>(in_tube) / h;
    res.summary.batch_means = detail::batch_means(gaps, kBatchCount);
    return res;
}

// Row-major grid of summaries: cells[i * cols.size() + j] is (rows[i], cols[j]).
struct SweepResult {
    std::vector<double> rows;
    std::vector<double> cols;
    std::vector<SimSummary> cells;

    const SimSummary& at(std::size_t i, std::size_t j) const { return cells[i * cols.size() + j]; }
};

// Rows are lambda values, columns are p values.
inline SweepResult sweep_reduced(const ReducedScenario& base, const std::vector<double>& lambda_grid,
                                 const std::vector<double>& p_grid) {
    validate(base);
    if (lambda_grid.empty() || p_grid.empty()) throw std::invalid_argument("sweep_reduced: empty grid");
    for (double v : lambda_grid) validate(ServicePair{v, 1.0});
    for (double v : p_grid) {
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("sweep_reduced: p values must lie in (0, 1]");
    }
    SweepResult out{lambda_grid, p_grid, std::vector<SimSummary>(lambda_grid.size() * p_grid.size())};
    detail::parallel_for(out.cells.size(), [&](std::size_t k) {
        ReducedScenario sc = base;
        sc.pair = {lambda_grid[k / p_grid.size()], p_grid[k % p_grid.size()]};
        out.cells[k] = run_reduced(sc, kServiceStream + k).summary;
    });
    return out;
}

// Rows are depth scales, columns are fixed costs.
inline SweepResult sweep_mechanism(const MechScenario& base, const std::vector<double>& depth_grid,
                                   const std::vector<double>& cost_grid) {
    validate(base);
    if (depth_grid.empty() || cost_grid.empty()) throw std::invalid_argument("sweep_mechanism: empty grid");
    SweepResult out{depth_grid, cost_grid, std::vector<SimSummary>(depth_grid.size() * cost_grid.size())};
    detail::parallel_for(out.cells.size(), [&](std::size_t k) {
        MechScenario sc = base;
        sc.depth_scale = depth_grid[k / cost_grid.size()];
        sc.cost = {cost_grid[k % cost_grid.size()]};
        out.cells[k] = run_mechanism(sc).summary;
    });
    return out;
}

// Standard error of the mean difference a - b from paired batch means.
inline double paired_std_error(const SimSummary& a, const SimSummary& b) {
    const std::size_t n = std::min(a.batch_means.size(), b.batch_means.size());
    if (n < 2) return 0.0;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a.batch_means[i] - b.batch_means[i];
    const double m = detail::mean(d);
    double ss = 0.0;
    for (double v : d) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace ammtrack::sim
