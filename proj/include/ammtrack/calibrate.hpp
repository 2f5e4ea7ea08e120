#pragma once

// Estimators that map block-level gap observations to the tracking-loop
// parameters: dead-zone cap, large-error threshold, correction curve and the
// one-step recursion checks.
//
// Conventions: the median of an even-sized sample is the midpoint of the two
// middle order statistics; quartiles are rank-based, Q1 being the lowest
// ceil(n/4) observations by e_pre; the large-error subset is e_pre >= median.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "ammtrack/numerics.hpp"

namespace ammtrack::calib {

struct Observation {
    std::int64_t block_number{0};
    std::string pair_id;
    double e_pre{0.0};
    double e_post{0.0};
    std::optional<double> e_next;

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct ObservationSet {
    std::vector<Observation> observations;
    std::string source;

    std::size_t size() const { return observations.size(); }
    bool empty() const { return observations.empty(); }
};

class CalibrationError : public std::runtime_error {
public:
    enum class Kind { io, missing_column, bad_field, negative_gap, empty };

    CalibrationError(Kind kind, const std::string& what, std::size_t row = 0)
        : std::runtime_error(what), kind_(kind), row_(row) {}

    Kind kind() const { return kind_; }
    std::size_t row() const { return row_; }  // 1-based data row, 0 when not row-specific

private:
    Kind kind_;
    std::size_t row_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_real(const std::string& field, const std::string& column, std::size_t row) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (field.empty() || used != field.size() || !std::isfinite(v)) {
        throw CalibrationError(CalibrationError::Kind::bad_field,
                               "row " + std::to_string(row) + ": column '" + column + "' is not a number: '" +
                                   field + "'",
                               row);
    }
    return v;
}

inline double median_sorted(const std::vector<double>& v, std::size_t count) {
    if (count % 2 == 1) return v[count / 2];
    return 0.5 * (v[count / 2 - 1] + v[count / 2]);
}

inline std::vector<double> sorted_pre(const ObservationSet& set) {
    std::vector<double> v;
    v.reserve(set.size());
    for (const auto& o : set.observations) v.push_back(o.e_pre);
    std::sort(v.begin(), v.end());
    return v;
}

inline void require_nonempty(const ObservationSet& set, const char* who) {
    if (set.empty()) throw CalibrationError(CalibrationError::Kind::empty, std::string(who) + ": empty observation set");
}

}  // namespace detail

inline ObservationSet parse_observations(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) {
        throw CalibrationError(CalibrationError::Kind::empty, source + ": file is empty");
    }
    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            if (required) {
                throw CalibrationError(CalibrationError::Kind::missing_column,
                                       source + ": missing required column '" + name + "'");
            }
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_block = *column("block_number", true);
    const std::size_t c_pair = *column("pair_id", true);
    const std::size_t c_pre = *column("e_pre", true);
    const std::size_t c_post = *column("e_post", true);
    const auto c_next = column("e_next", false);

    ObservationSet set;
    set.source = source;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size()) {
            throw CalibrationError(CalibrationError::Kind::bad_field,
                                   "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                       " fields, found " + std::to_string(f.size()),
                                   row);
        }
        Observation o;
        const double block = detail::parse_real(f[c_block], "block_number", row);
        if (block != std::floor(block)) {
            throw CalibrationError(CalibrationError::Kind::bad_field,
                                   "row " + std::to_string(row) + ": block_number is not an integer", row);
        }
        o.block_number = static_cast<std::int64_t>(block);
        o.pair_id = f[c_pair];
        o.e_pre = detail::parse_real(f[c_pre], "e_pre", row);
        o.e_post = detail::parse_real(f[c_post], "e_post", row);
        if (c_next && !f[*c_next].empty()) o.e_next = detail::parse_real(f[*c_next], "e_next", row);
        for (auto [name, v] : {std::pair{"e_pre", o.e_pre}, std::pair{"e_post", o.e_post},
                               std::pair{"e_next", o.e_next.value_or(0.0)}}) {
            if (v < 0.0) {
                throw CalibrationError(CalibrationError::Kind::negative_gap,
                                       "row " + std::to_string(row) + ": negative gap in column '" + name + "'", row);
            }
        }
        set.observations.push_back(std::move(o));
    }
    if (set.empty()) {
        throw CalibrationError(CalibrationError::Kind::empty, source + ": no observation rows");
    }
    return set;
}

inline ObservationSet load_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError(CalibrationError::Kind::io, "cannot open observation file '" + path + "'");
    return parse_observations(in, path);
}

inline ObservationSet filter_pairs(const ObservationSet& set, const std::unordered_set<std::string>& pair_ids) {
    ObservationSet out;
    out.source = set.source;
    for (const auto& o : set.observations) {
        if (pair_ids.count(o.pair_id)) out.observations.push_back(o);
    }
    return out;
}

// Realized within-block correction S = e_pre - e_post; negative when the block worsened the gap.
inline double correction(const Observation& obs) { return obs.e_pre - obs.e_post; }

inline double deadzone_proxy(const ObservationSet& set) {
    detail::require_nonempty(set, "deadzone_proxy");
    const auto v = detail::sorted_pre(set);
    const std::size_t q1 = (v.size() + 3) / 4;
    return 0.5 * detail::median_sorted(v, q1);
}

inline double threshold(const ObservationSet& set) {
    detail::require_nonempty(set, "threshold");
    const auto v = detail::sorted_pre(set);
    return detail::median_sorted(v, v.size());
}

enum class Subset { large, small, all };

inline ObservationSet select_subset(const ObservationSet& set, Subset subset) {
    detail::require_nonempty(set, "select_subset");
    if (subset == Subset::all) return set;
    const double cut = threshold(set);
    ObservationSet out;
    out.source = set.source;
    for (const auto& o : set.observations) {
        if ((o.e_pre >= cut) == (subset == Subset::large)) out.observations.push_back(o);
    }
    return out;
}

// Empirical P(S >= lambda e_pre) on an already-selected subset.
inline double phat(const ObservationSet& subset, double lambda) {
    detail::require_nonempty(subset, "phat");
    std::size_t hits = 0;
    for (const auto& o : subset.observations) {
        if (correction(o) >= lambda * o.e_pre) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(subset.size());
}

struct CurvePoint {
    double lambda;
    double phat;
};

inline std::vector<CurvePoint> phat_curve(const ObservationSet& set, const std::vector<double>& lambdas,
                                          Subset subset) {
    const ObservationSet sub = select_subset(set, subset);
    if (sub.empty()) throw CalibrationError(CalibrationError::Kind::empty, "phat_curve: selected subset is empty");
    std::vector<CurvePoint> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        if (!(l > 0.0 && l <= 1.0)) throw std::invalid_argument("phat_curve: lambda must lie in (0, 1]");
        out.push_back({l, phat(sub, l)});
    }
    return out;
}

constexpr std::array<double, 3> kReferenceShares{0.25, 0.50, 0.75};
constexpr double kDeliveryFloor = 0.70;

struct LambdaSelection {
    double lambda_star;
    double p_star;
};

// Largest reference share whose large-error delivery probability exceeds 70%.
inline std::optional<LambdaSelection> select_lambda(const ObservationSet& set) {
    const ObservationSet large = select_subset(set, Subset::large);
    std::optional<LambdaSelection> best;
    for (double l : kReferenceShares) {
        const double p = phat(large, l);
        if (p > kDeliveryFloor) best = LambdaSelection{l, p};
    }
    return best;
}

struct QuartileStats {
    std::size_t count{0};
    double positive_ratio{0.0};
    std::optional<double> median_relative;  // median of S / e_pre over rows with e_pre > 0
};

struct RobustnessReport {
    std::size_t rows_with_next{0};
    double share_raw{0.0};         // e_{n+1} <= (e_n - S)_+
    double share_with_proxy{0.0};  // e_{n+1} <= (e_n - S)_+ + w_hat; 1 by construction of w_hat
    std::array<QuartileStats, 4> quartiles{};
};

inline double positive_correction_ratio(const ObservationSet& set) {
    detail::require_nonempty(set, "positive_correction_ratio");
    std::size_t pos = 0;
    for (const auto& o : set.observations) {
        if (correction(o) > 0.0) ++pos;
    }
    return static_cast<double>(pos) / static_cast<double>(set.size());
}

// Rank-based quartiles of e_pre: rank i (0-based, ascending) falls in quartile floor(4 i / n).
inline std::array<QuartileStats, 4> quartile_stats(const ObservationSet& set) {
    detail::require_nonempty(set, "quartile_stats");
    std::vector<const Observation*> by_rank;
    for (const auto& o : set.observations) by_rank.push_back(&o);
    std::stable_sort(by_rank.begin(), by_rank.end(),
                     [](const Observation* a, const Observation* b) { return a->e_pre < b->e_pre; });
    const std::size_t n = by_rank.size();
    std::array<std::vector<const Observation*>, 4> groups;
    for (std::size_t i = 0; i < n; ++i) groups[4 * i / n].push_back(by_rank[i]);

    std::array<QuartileStats, 4> out{};
    for (std::size_t q = 0; q < 4; ++q) {
        auto& st = out[q];
        st.count = groups[q].size();
        if (st.count == 0) continue;
        std::size_t pos = 0;
        std::vector<double> rel;
        for (const Observation* o : groups[q]) {
            if (correction(*o) > 0.0) ++pos;
            if (o->e_pre > 0.0) rel.push_back(correction(*o) / o->e_pre);
        }
        st.positive_ratio = static_cast<double>(pos) / static_cast<double>(st.count);
        if (!rel.empty()) {
            std::sort(rel.begin(), rel.end());
            st.median_relative = detail::median_sorted(rel, rel.size());
        }
    }
    return out;
}

inline RobustnessReport robustness_report(const ObservationSet& set, double gamma_bar) {
    detail::require_nonempty(set, "robustness_report");
    if (!(gamma_bar >= 0.0)) throw std::invalid_argument("robustness_report: gamma_bar must be nonnegative");
    RobustnessReport r;
    std::size_t raw = 0;
    std::size_t proxied = 0;
    for (const auto& o : set.observations) {
        if (!o.e_next) continue;
        ++r.rows_with_next;
        const double e_n = positive_part(o.e_pre - gamma_bar);
        const double e_next = positive_part(*o.e_next - gamma_bar);
        const double carried = positive_part(e_n - correction(o));
        const double w_hat = positive_part(e_next - carried);
        if (e_next <= carried) ++raw;
        if (e_next <= carried + w_hat) ++proxied;
    }
    if (r.rows_with_next == 0) {
        throw CalibrationError(CalibrationError::Kind::empty, "robustness_report: no rows carry e_next");
    }
    const double n = static_cast<double>(r.rows_with_next);
    r.share_raw = static_cast<double>(raw) / n;
    r.share_with_proxy = static_cast<double>(proxied) / n;
    r.quartiles = quartile_stats(set);
    return r;
}

struct CalibrationReport {
    std::size_t observations{0};
    double gamma_bar{0.0};
    double x_star{0.0};
    std::optional<LambdaSelection> selection;  // nullopt: no reference share selected
    std::array<double, 3> phat_reference{};     // large-error p-hat at 0.25 / 0.50 / 0.75
    double positive_correction_ratio{0.0};
    std::array<QuartileStats, 4> quartiles{};
    std::optional<RobustnessReport> robustness;  // present when any row carries e_next
};

inline CalibrationReport calibration_report(const ObservationSet& set) {
    detail::require_nonempty(set, "calibration_report");
    CalibrationReport r;
    r.observations = set.size();
    r.gamma_bar = deadzone_proxy(set);
    r.x_star = threshold(set);
    const ObservationSet large = select_subset(set, Subset::large);
    for (std::size_t i = 0; i < kReferenceShares.size(); ++i) r.phat_reference[i] = phat(large, kReferenceShares[i]);
    r.selection = select_lambda(set);
    r.positive_correction_ratio = positive_correction_ratio(set);
    r.quartiles = quartile_stats(set);
    const bool any_next = std::any_of(set.observations.begin(), set.observations.end(),
                                      [](const Observation& o) { return o.e_next.has_value(); });
    if (any_next) r.robustness = robustness_report(set, r.gamma_bar);
    return r;
}

}  // namespace ammtrack::calib
