#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace ammtrack {

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

struct BisectionOptions {
    double tol{1e-12};
    int max_iter{200};
};

// Root of a monotone function on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect(F&& f, double lo, double hi, BisectionOptions opt = {}) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo < 0.0) == (f_hi < 0.0)) {
        throw std::domain_error("bisect: root not bracketed on [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
    }
    for (int i = 0; i < opt.max_iter && hi - lo > opt.tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct GoldenSectionOptions {
    double rel_tol{1e-12};
    int max_iter{500};
};

struct ScalarMinimum {
    double arg;
    double value;
};

// Minimizer of a unimodal function on [lo, hi]. Endpoints are compared against the
// interior estimate so a boundary minimum is not lost.
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, GoldenSectionOptions opt = {}) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double lo0 = lo;
    const double hi0 = hi;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < opt.max_iter; ++i) {
        if (hi - lo <= opt.rel_tol * (std::abs(c) + std::abs(d)) + std::numeric_limits<double>::min()) break;
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    ScalarMinimum best = fc < fd ? ScalarMinimum{c, fc} : ScalarMinimum{d, fd};
    for (double edge : {lo0, hi0}) {
        const double fe = f(edge);
        if (fe < best.value) best = {edge, fe};
    }
    return best;
}

}  // namespace ammtrack
