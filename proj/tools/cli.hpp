#pragma once

// ammtrack command-line front end.
//
// Parameters resolve in increasing precedence: built-in defaults, config file
// (--config), environment (AMMTRACK_<KEY>), then flags (--seed, --preset,
// --set key=value). The resolved parameters are written to <out>/config.txt in
// the same key = value format, so `--config <out>/config.txt` replays a run.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ammtrack/calibrate.hpp"
#include "ammtrack/io.hpp"
#include "ammtrack/simulate.hpp"
#include "ammtrack/stability.hpp"

namespace ammtrack::cli {

enum ExitCode : int { kOk = 0, kInvariant = 1, kUsage = 2 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Params = std::map<std::string, std::string>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::pair<std::string, std::string> split_assignment(const std::string& text, const std::string& where) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + text + "'");
    auto key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    return {key, trim(text.substr(eq + 1))};
}

}  // namespace detail

inline Params parse_config(std::istream& in, const std::string& source) {
    Params out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        auto [k, v] = detail::split_assignment(line, source + ":" + std::to_string(lineno));
        out[k] = v;
    }
    return out;
}

inline Params load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

// Typed access over resolved parameters.
class Resolved {
public:
    explicit Resolved(Params p) : p_(std::move(p)) {}

    const Params& params() const { return p_; }

    const std::string& str(const std::string& key) const {
        const auto it = p_.find(key);
        if (it == p_.end()) throw ConfigError("missing parameter '" + key + "'");
        return it->second;
    }

    bool has(const std::string& key) const { return p_.count(key) && !p_.at(key).empty(); }

    double real(const std::string& key) const { return to_real(str(key), key); }

    std::uint64_t u64(const std::string& key) const {
        const auto& s = str(key);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (s.empty() || used != s.size()) throw ConfigError("parameter '" + key + "' is not a nonnegative integer: '" + s + "'");
        return v;
    }

    bool boolean(const std::string& key) const {
        const auto& s = str(key);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw ConfigError("parameter '" + key + "' is not a boolean: '" + s + "'");
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_real(detail::trim(item), key));
        if (out.empty()) throw ConfigError("parameter '" + key + "' is an empty list");
        return out;
    }

private:
    static double to_real(const std::string& s, const std::string& key) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (s.empty() || used != s.size() || !std::isfinite(v)) {
            throw ConfigError("parameter '" + key + "' is not a number: '" + s + "'");
        }
        return v;
    }

    Params p_;
};

inline Params disturbance_defaults() {
    return {{"disturbance", "gaussian_with_shocks"}, {"sigma", "0.002"}, {"shock_prob", "0.01"},
            {"shock_scale", "10"}, {"horizon", "10000"}, {"seed", "1"}};
}

inline Params reduced_defaults() {
    Params p = disturbance_defaults();
    p.merge(Params{{"preset", "baseline"}, {"lambda", "0.5"}, {"p", "0.729"}, {"x_star", "0.002"},
                   {"gamma_bar", "0.000382"}, {"x0", "0"}, {"shift_lambda", "0.2"}, {"shift_p", "0.15"},
                   {"below_exponent", "1"}, {"partial_on_failure", "true"}});
    return p;
}

inline Params cpmm_defaults() {
    Params p = disturbance_defaults();
    p.merge(Params{{"reserve_x", "10000"}, {"reserve_y", "10000"}, {"eta", "0.997"}, {"cost", "0.1"},
                   {"depth_scale", "1"}});
    return p;
}

inline Params sweep_defaults() {
    Params p = reduced_defaults();
    p.merge(cpmm_defaults());
    p.merge(Params{{"target", "reduced"},
                   {"lambda_grid", "0.05,0.2,0.35,0.5,0.65,0.8,0.95"},
                   {"p_grid", "0.129,0.279,0.429,0.579,0.729,0.879,1"},
                   // Radius for the rho* contour. Near x_star the certificate is flat at 1.
                   {"certify_R", "0.01"},
                   {"depth_grid", "0.5,1,2,4"},
                   {"cost_grid", "0,0.05,0.1,0.2,0.4"}});
    return p;
}

inline Params certify_defaults() {
    Params p = disturbance_defaults();
    p.erase("horizon");
    p.erase("seed");
    p.merge(Params{{"lambda", "0.5"}, {"p", "0.729"}, {"gamma_bar", "0.000382"}, {"R", "0.002"}, {"alpha_cap", ""}});
    return p;
}

inline Params calibrate_defaults() {
    return {{"input", ""}, {"curve_lambdas", "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1"},
            {"pairs", ""}};
}

inline DisturbanceSpec disturbance_from(const Resolved& r) {
    DisturbanceSpec d;
    d.kind = disturbance_kind_from_string(r.str("disturbance"));
    d.sigma = r.real("sigma");
    d.shock_prob = r.real("shock_prob");
    d.shock_scale = r.real("shock_scale");
    validate(d);
    return d;
}

inline sim::ReducedScenario reduced_from(const Resolved& r) {
    sim::ReducedScenario sc;
    sc.pair = {r.real("lambda"), r.real("p")};
    sc.x_star = r.real("x_star");
    sc.gamma_bar = r.real("gamma_bar");
    sc.disturbance = disturbance_from(r);
    sc.horizon = r.u64("horizon");
    sc.seed = r.u64("seed");
    sc.x0 = r.real("x0");
    sc.below_exponent = r.real("below_exponent");
    sc.partial_on_failure = r.boolean("partial_on_failure");
    sim::validate(sc);
    return sim::scenario_shift(sc, sim::shift_kind_from_string(r.str("preset")),
                               {r.real("shift_lambda"), r.real("shift_p")});
}

inline sim::MechScenario mech_from(const Resolved& r) {
    sim::MechScenario sc;
    sc.pool0 = {r.real("reserve_x"), r.real("reserve_y"), r.real("eta")};
    sc.cost = {r.real("cost")};
    sc.depth_scale = r.real("depth_scale");
    sc.disturbance = disturbance_from(r);
    sc.horizon = r.u64("horizon");
    sc.seed = r.u64("seed");
    sim::validate(sc);
    return sc;
}

struct Invocation {
    std::string command;
    std::string config_path;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir{"out"};
    std::string format{"all"};
    std::vector<std::string> sets;
    std::string input;  // calibrate positional
};

inline Params resolve(const Invocation& inv, Params defaults, const EnvLookup& env) {
    Params p = std::move(defaults);
    auto assign = [&](const std::string& k, const std::string& v, const std::string& where) {
        if (!p.count(k)) throw ConfigError(where + ": unknown parameter '" + k + "' for " + inv.command);
        p[k] = v;
    };
    if (!inv.config_path.empty()) {
        for (const auto& [k, v] : load_config(inv.config_path)) assign(k, v, inv.config_path);
    }
    for (auto& [k, v] : p) {
        std::string name = "AMMTRACK_" + k;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
        if (auto e = env(name)) v = *e;
    }
    for (const auto& s : inv.sets) {
        auto [k, v] = detail::split_assignment(s, "--set");
        assign(k, v, "--set");
    }
    if (inv.preset) assign("preset", *inv.preset, "--preset");
    if (inv.seed) assign("seed", std::to_string(*inv.seed), "--seed");
    if (!inv.input.empty()) assign("input", inv.input, "input");
    return p;
}

class Session {
public:
    Session(const Invocation& inv, std::ostream& out) : inv_(inv), out_(out) {
        if (inv.format != "csv" && inv.format != "json" && inv.format != "all") {
            throw ConfigError("--format must be csv, json or all");
        }
        std::filesystem::create_directories(inv.out_dir);
    }

    bool csv() const { return inv_.format != "json"; }
    bool json_out() const { return inv_.format != "csv"; }

    template <typename Writer>
    void write(const std::string& name, Writer&& w) const {
        const auto path = std::filesystem::path(inv_.out_dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
        w(f);
    }

    void write_json(const std::string& name, const json& j) const {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    void write_config(const Params& p) const {
        write("config.txt", [&](std::ostream& os) {
            os << "# ammtrack " << inv_.command << " resolved parameters\n";
            for (const auto& [k, v] : p) os << k << " = " << v << '\n';
        });
    }

    std::ostream& out() const { return out_; }

private:
    const Invocation& inv_;
    std::ostream& out_;
};

inline int cmd_simulate_reduced(const Session& s, const Resolved& r) {
    const auto sc = reduced_from(r);
    const auto res = sim::run_reduced(sc);
    s.write_config(r.params());
    if (s.csv()) s.write("trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, res.trace); });
    if (s.json_out()) s.write_json("summary.json", json{{"scenario", sc}, {"summary", res.summary}});
    s.out() << "mean_excess = " << io::fmt_real(res.summary.mean_excess) << '\n';
    return kOk;
}

inline int cmd_simulate_cpmm(const Session& s, const Resolved& r) {
    const auto sc = mech_from(r);
    const auto res = sim::run_mechanism(sc);
    s.write_config(r.params());
    if (s.csv()) s.write("trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, res.trace); });
    if (s.json_out()) s.write_json("summary.json", json{{"scenario", sc}, {"summary", res.summary}});
    s.out() << "mean_abs_gap = " << io::fmt_real(res.summary.mean_abs_gap) << '\n'
            << "trades_executed = " << res.summary.trades_executed << '\n';
    return kOk;
}

inline int cmd_sweep(const Session& s, const Resolved& r) {
    const std::string& target = r.str("target");
    s.write_config(r.params());
    if (target == "reduced") {
        const auto base = reduced_from(r);
        const auto lambdas = r.list("lambda_grid");
        const auto ps = r.list("p_grid");
        const auto sweep = sim::sweep_reduced(base, lambdas, ps);
        const auto map = contraction_boundary(lambdas, ps, base.gamma_bar, r.real("certify_R"), base.disturbance);
        std::vector<double> rho;
        for (const auto& c : map.cells) rho.push_back(c.rho_star);
        if (s.csv()) {
            s.write("sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, sweep, "lambda", "p", &rho); });
            s.write("boundary.csv", [&](std::ostream& os) { io::write_boundary_csv(os, map); });
        }
        if (s.json_out()) {
            json cells = json::array();
            for (std::size_t k = 0; k < sweep.cells.size(); ++k) {
                cells.push_back({{"lambda", sweep.rows[k / ps.size()]}, {"p", ps[k % ps.size()]},
                                 {"summary", sweep.cells[k]}, {"rho_star", rho[k]}});
            }
            s.write_json("sweep.json", json{{"base", base}, {"cells", cells}, {"boundary", map.boundary}});
        }
        s.out() << "cells = " << sweep.cells.size() << "\nboundary_points = " << map.boundary.size() << '\n';
        return kOk;
    }
    if (target == "cpmm") {
        const auto base = mech_from(r);
        const auto depths = r.list("depth_grid");
        const auto costs = r.list("cost_grid");
        const auto sweep = sim::sweep_mechanism(base, depths, costs);
        if (s.csv()) s.write("sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, sweep, "depth", "cost"); });
        if (s.json_out()) {
            json cells = json::array();
            for (std::size_t k = 0; k < sweep.cells.size(); ++k) {
                cells.push_back({{"depth", depths[k / costs.size()]}, {"cost", costs[k % costs.size()]},
                                 {"summary", sweep.cells[k]}});
            }
            s.write_json("sweep.json", json{{"base", base}, {"cells", cells}});
        }
        s.out() << "cells = " << sweep.cells.size() << '\n';
        return kOk;
    }
    throw ConfigError("target must be reduced or cpmm, got '" + target + "'");
}

inline int cmd_calibrate(const Session& s, const Resolved& r) {
    if (!r.has("input")) throw ConfigError("calibrate: no observation file given");
    auto set = calib::load_observations(r.str("input"));
    if (r.has("pairs")) {
        std::unordered_set<std::string> ids;
        std::stringstream ss(r.str("pairs"));
        std::string id;
        while (std::getline(ss, id, ',')) ids.insert(detail::trim(id));
        set = calib::filter_pairs(set, ids);
        if (set.empty()) throw ConfigError("calibrate: pair filter left no observations");
    }
    const auto report = calib::calibration_report(set);
    const auto lambdas = r.list("curve_lambdas");
    const auto large = calib::phat_curve(set, lambdas, calib::Subset::large);
    const auto small_set = calib::select_subset(set, calib::Subset::small);
    const auto small = small_set.empty() ? std::vector<calib::CurvePoint>{}
                                         : calib::phat_curve(small_set, lambdas, calib::Subset::all);
    s.write_config(r.params());
    if (s.json_out()) s.write_json("report.json", json(report));
    if (s.csv()) s.write("phat_curve.csv", [&](std::ostream& os) { io::write_curve_csv(os, large, small); });
    s.out() << "observations = " << report.observations << '\n'
            << "gamma_bar = " << io::fmt_real(report.gamma_bar) << '\n'
            << "x_star = " << io::fmt_real(report.x_star) << '\n';
    if (report.selection) {
        s.out() << "lambda_star = " << io::fmt_real(report.selection->lambda_star) << '\n'
                << "p_star = " << io::fmt_real(report.selection->p_star) << '\n';
    } else {
        s.out() << "lambda_star = none-selected\n";
    }
    return kOk;
}

inline int cmd_certify(const Session& s, const Resolved& r) {
    const ServicePair pair{r.real("lambda"), r.real("p")};
    CertifyOptions opt;
    if (r.has("alpha_cap")) opt.alpha_cap = r.real("alpha_cap");
    const auto cert = certify(pair, r.real("gamma_bar"), r.real("R"), disturbance_from(r), opt);
    s.write_config(r.params());
    s.write_json("certificate.json", json(cert));
    s.out() << "alpha_star = " << io::fmt_real(cert.alpha_star) << '\n'
            << "rho_star = " << io::fmt_real(cert.rho_star) << '\n'
            << "B_bound = " << io::fmt_real(cert.B_bound) << '\n'
            << "certified = " << (cert.certified ? "true" : "false") << '\n';
    return kOk;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
               const EnvLookup& env = process_env) {
    CLI::App app{"Block-scale AMM price-tracking toolkit", "ammtrack"};
    app.require_subcommand(1);
    Invocation inv;

    struct Entry {
        const char* name;
        const char* help;
        Params (*defaults)();
        int (*fn)(const Session&, const Resolved&);
    };
    const std::vector<Entry> entries{
        {"simulate-reduced", "Reduced correction-law simulation", reduced_defaults, cmd_simulate_reduced},
        {"simulate-cpmm", "Constant-product mechanism simulation", cpmm_defaults, cmd_simulate_cpmm},
        {"sweep", "Parameter sweep over (lambda, p) or (depth, cost)", sweep_defaults, cmd_sweep},
        {"calibrate", "Estimate tracking parameters from an observation CSV", calibrate_defaults, cmd_calibrate},
        {"certify", "Local contraction certificate", certify_defaults, cmd_certify},
    };
    std::vector<CLI::App*> subs;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        sub->add_option("--config", inv.config_path, "key = value parameter file");
        sub->add_option("--seed", inv.seed, "RNG seed");
        sub->add_option("--out", inv.out_dir, "output directory");
        sub->add_option("--format", inv.format, "csv, json or all");
        sub->add_option("--set", inv.sets, "parameter override key=value (repeatable)");
        if (std::string(e.name) != "calibrate" && std::string(e.name) != "certify") {
            sub->add_option("--preset", inv.preset, "strong, baseline or weak");
        }
        if (std::string(e.name) == "calibrate") sub->add_option("input", inv.input, "observation CSV");
        subs.push_back(sub);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        inv.command = entries[i].name;
        try {
            const Resolved r(resolve(inv, entries[i].defaults(), env));
            const Session session(inv, out);
            return entries[i].fn(session, r);
        } catch (const sim::InvariantViolation& e) {
            err << "invariant violation: " << e.what() << '\n';
            return kInvariant;
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return kUsage;
        } catch (const calib::CalibrationError& e) {
            err << "input error: " << e.what() << '\n';
            return kUsage;
        } catch (const std::invalid_argument& e) {
            err << "config error: " << e.what() << '\n';
            return kUsage;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kInvariant;
        }
    }
    return kUsage;
}

}  // namespace ammtrack::cli
