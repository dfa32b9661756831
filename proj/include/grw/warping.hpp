#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "grw/core.hpp"

// Warping functions f > 0 on an open interval I, their derivatives, the
// primitive G with G' = f, and the six Einstein solution families of the
// classification table for Einstein GRW spacetimes.

namespace grw {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(lo < hi)) throw error("Interval: requires lo < hi");
    }

    bool contains(double t) const { return lo < t && t < hi; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

    static Interval all() { return Interval{}; }
};

enum class WarpingFamily {
    constant,       // f = a
    exponential,    // f = a e^{bt}
    cosh_type,      // f = a e^{bt} + d e^{-bt}
    affine,         // f = s t + a
    trigonometric,  // f = a1 cos(bt) + a2 sin(bt)
    custom          // user-supplied callbacks, G by adaptive quadrature
};

inline const char* family_name(WarpingFamily f) {
    switch (f) {
        case WarpingFamily::constant: return "constant";
        case WarpingFamily::exponential: return "exponential";
        case WarpingFamily::cosh_type: return "cosh_type";
        case WarpingFamily::affine: return "affine";
        case WarpingFamily::trigonometric: return "trigonometric";
        case WarpingFamily::custom: return "custom";
    }
    return "?";
}

// (f, f', f'', (log f)'')
struct WarpEval {
    double f = 0.0, fp = 0.0, fpp = 0.0, logfpp = 0.0;
};

namespace detail {

struct CustomCallbacks {
    std::function<double(double)> f, fp, fpp;
};

// Adaptive Simpson on [a, b]; abs/rel tolerance as configured for custom G.
inline double adaptive_simpson(const std::function<double(double)>& g, double a, double b,
                               double abs_tol, double rel_tol) {
    struct Frame {
        double a, b, fa, fm, fb, whole;
    };
    auto simpson = [&](double x0, double x1, double f0, double fm, double f1) {
        return (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    };
    const double m0 = 0.5 * (a + b);
    std::vector<Frame> stack;
    stack.push_back({a, b, g(a), g(m0), g(b), 0.0});
    stack.back().whole = simpson(a, b, stack.back().fa, stack.back().fm, stack.back().fb);

    double total = 0.0;
    int depth_budget = 2000000;  // node budget, not recursion depth
    std::vector<double> scale_acc;
    while (!stack.empty()) {
        Frame fr = stack.back();
        stack.pop_back();
        const double m = 0.5 * (fr.a + fr.b);
        const double lm = 0.5 * (fr.a + m), rm = 0.5 * (m + fr.b);
        const double flm = g(lm), frm = g(rm);
        const double left = simpson(fr.a, m, fr.fa, flm, fr.fm);
        const double right = simpson(m, fr.b, fr.fm, frm, fr.fb);
        const double err = (left + right - fr.whole) / 15.0;
        const double tol = std::max(abs_tol * (fr.b - fr.a) / (b - a + 1e-300),
                                    rel_tol * std::abs(left + right));
        if (std::abs(err) <= tol || (fr.b - fr.a) < 1e-14 * (std::abs(fr.a) + std::abs(fr.b) + 1.0)) {
            total += left + right + err;
        } else {
            if (--depth_budget <= 0)
                throw integration_error("primitive_G: adaptive quadrature did not converge",
                                        std::abs(err));
            stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left});
            stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right});
        }
    }
    return total;
}

}  // namespace detail

class WarpingFunction {
  public:
    // params layout per family:
    //   constant:      {a}
    //   exponential:   {a, b}
    //   cosh_type:     {a, b, d}
    //   affine:        {s, a}        f = s t + a
    //   trigonometric: {a1, a2, b}
    static WarpingFunction make(WarpingFamily fam, std::vector<double> params, Interval domain,
                                double ref_point = std::numeric_limits<double>::quiet_NaN()) {
        WarpingFunction w;
        w.family_ = fam;
        w.params_ = std::move(params);
        w.domain_ = domain;
        w.check_param_count();
        w.ref_point_ = std::isnan(ref_point) ? default_ref(domain) : ref_point;
        if (!domain.contains(w.ref_point_))
            throw error("WarpingFunction: ref_point outside domain");
        w.validate_positivity();
        return w;
    }

    // Custom analytic family: callbacks are validated against centered
    // finite differences at construction; G is computed by quadrature.
    static WarpingFunction make_custom(std::function<double(double)> f,
                                       std::function<double(double)> fp,
                                       std::function<double(double)> fpp, Interval domain,
                                       double ref_point = std::numeric_limits<double>::quiet_NaN()) {
        WarpingFunction w;
        w.family_ = WarpingFamily::custom;
        w.custom_ = std::make_shared<detail::CustomCallbacks>(
            detail::CustomCallbacks{std::move(f), std::move(fp), std::move(fpp)});
        w.domain_ = domain;
        w.ref_point_ = std::isnan(ref_point) ? default_ref(domain) : ref_point;
        if (!domain.contains(w.ref_point_))
            throw error("WarpingFunction: ref_point outside domain");
        w.validate_positivity();
        w.validate_custom_derivatives();
        return w;
    }

    WarpingFamily family() const { return family_; }
    const std::vector<double>& params() const { return params_; }
    const Interval& domain() const { return domain_; }
    double ref_point() const { return ref_point_; }

    WarpEval eval(double t) const {
        if (!domain_.contains(t)) {
            std::ostringstream os;
            os << "warping eval: t = " << t << " outside domain (" << domain_.lo << ", "
               << domain_.hi << ")";
            throw eval_range_error(os.str());
        }
        WarpEval e = eval_raw(t);
        if (!(e.f > 0.0)) {
            std::ostringstream os;
            os << "warping eval: f(" << t << ") = " << e.f << " is not positive";
            throw invalid_warping_error(os.str());
        }
        e.logfpp = (e.fpp * e.f - e.fp * e.fp) / (e.f * e.f);
        return e;
    }

    double f(double t) const { return eval(t).f; }
    double fprime(double t) const { return eval(t).fp; }

    // G with G' = f and G(ref_point) = 0; strictly increasing since f > 0.
    double primitive_G(double t) const {
        if (!domain_.contains(t)) throw eval_range_error("primitive_G: t outside domain");
        const double t0 = ref_point_;
        switch (family_) {
            case WarpingFamily::constant:
                return params_[0] * (t - t0);
            case WarpingFamily::exponential: {
                const double a = params_[0], b = params_[1];
                if (b == 0.0) return a * (t - t0);
                return a / b * (std::exp(b * t) - std::exp(b * t0));
            }
            case WarpingFamily::cosh_type: {
                const double a = params_[0], b = params_[1], d = params_[2];
                return a / b * (std::exp(b * t) - std::exp(b * t0)) -
                       d / b * (std::exp(-b * t) - std::exp(-b * t0));
            }
            case WarpingFamily::affine: {
                const double s = params_[0], a = params_[1];
                return 0.5 * s * (t * t - t0 * t0) + a * (t - t0);
            }
            case WarpingFamily::trigonometric: {
                const double a1 = params_[0], a2 = params_[1], b = params_[2];
                return a1 / b * (std::sin(b * t) - std::sin(b * t0)) -
                       a2 / b * (std::cos(b * t) - std::cos(b * t0));
            }
            case WarpingFamily::custom: {
                auto g = [this](double x) { return custom_->f(x); };
                const double lo = std::min(t0, t), hi = std::max(t0, t);
                const double v = detail::adaptive_simpson(g, lo, hi, 1e-12, 1e-10);
                return t >= t0 ? v : -v;
            }
        }
        return 0.0;
    }

  private:
    WarpingFamily family_ = WarpingFamily::constant;
    std::vector<double> params_;
    Interval domain_;
    double ref_point_ = 0.0;
    std::shared_ptr<detail::CustomCallbacks> custom_;

    static double default_ref(const Interval& dom) {
        if (dom.bounded()) return 0.5 * (dom.lo + dom.hi);
        if (std::isfinite(dom.lo)) return dom.lo + 1.0;
        if (std::isfinite(dom.hi)) return dom.hi - 1.0;
        return 0.0;
    }

    void check_param_count() const {
        const std::size_t want = family_ == WarpingFamily::constant       ? 1
                                 : family_ == WarpingFamily::exponential  ? 2
                                 : family_ == WarpingFamily::cosh_type    ? 3
                                 : family_ == WarpingFamily::affine       ? 2
                                                                          : 3;
        if (params_.size() != want) {
            std::ostringstream os;
            os << family_name(family_) << " family expects " << want << " params, got "
               << params_.size();
            throw error(os.str());
        }
    }

    WarpEval eval_raw(double t) const {
        switch (family_) {
            case WarpingFamily::constant:
                return {params_[0], 0.0, 0.0, 0.0};
            case WarpingFamily::exponential: {
                const double a = params_[0], b = params_[1];
                const double v = a * std::exp(b * t);
                return {v, b * v, b * b * v, 0.0};
            }
            case WarpingFamily::cosh_type: {
                const double a = params_[0], b = params_[1], d = params_[2];
                const double ep = std::exp(b * t), em = std::exp(-b * t);
                return {a * ep + d * em, b * (a * ep - d * em), b * b * (a * ep + d * em), 0.0};
            }
            case WarpingFamily::affine: {
                const double s = params_[0], a = params_[1];
                return {s * t + a, s, 0.0, 0.0};
            }
            case WarpingFamily::trigonometric: {
                const double a1 = params_[0], a2 = params_[1], b = params_[2];
                const double c = std::cos(b * t), s = std::sin(b * t);
                const double v = a1 * c + a2 * s;
                return {v, b * (-a1 * s + a2 * c), -b * b * v, 0.0};
            }
            case WarpingFamily::custom:
                return {custom_->f(t), custom_->fp(t), custom_->fpp(t), 0.0};
        }
        return {};
    }

    // dense positivity sample over the evaluable part of the domain
    void validate_positivity() const {
        const auto [lo, hi] = sample_range();
        const int n = 512;
        for (int k = 0; k <= n; ++k) {
            const double t = lo + (hi - lo) * k / n;
            if (!domain_.contains(t)) continue;
            if (!(eval_raw(t).f > 0.0)) {
                std::ostringstream os;
                os << "warping: f not positive at t = " << t;
                throw invalid_warping_error(os.str());
            }
        }
    }

    void validate_custom_derivatives() const {
        const auto [lo, hi] = sample_range();
        const double h = (hi - lo) * 1e-5;
        double worst = 0.0;
        for (int k = 1; k < 32; ++k) {
            const double t = lo + (hi - lo) * k / 32.0;
            if (!(domain_.contains(t - h) && domain_.contains(t + h))) continue;
            const double fd1 = (custom_->f(t + h) - custom_->f(t - h)) / (2.0 * h);
            const double fd2 =
                (custom_->f(t + h) - 2.0 * custom_->f(t) + custom_->f(t - h)) / (h * h);
            const double s = std::abs(custom_->f(t)) + 1.0;
            worst = std::max(worst, std::abs(fd1 - custom_->fp(t)) / s);
            worst = std::max(worst, std::abs(fd2 - custom_->fpp(t)) / s);
        }
        if (worst > 1e-4)
            throw invalid_warping_error(
                "custom warping: supplied derivatives disagree with finite differences");
    }

    std::pair<double, double> sample_range() const {
        double lo = domain_.lo, hi = domain_.hi;
        if (!std::isfinite(lo)) lo = ref_point_ - 8.0;
        if (!std::isfinite(hi)) hi = ref_point_ + 8.0;
        const double pad = (hi - lo) * 1e-9;
        return {lo + pad, hi - pad};
    }
};

// ---------------------------------------------------------------------------
// Einstein GRW families. Row k of the classification table solves
//   f''/f = cbar/n,    cbar (n-1)/n = (c + (n-1) f'^2) / f^2,
// with sign pattern (cbar, c) and the per-row parameter constraints.

struct EinsteinFamily {
    int case_id = 0;
    int n = 2;
    double c_bar = 0.0;  // ambient Einstein constant
    double c = 0.0;      // fiber Ricci constant
    std::vector<double> params;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw invalid_family_error(msg);
}

}  // namespace detail

// params per case:
//   1: {a}          f = a e^{bt} + (c n / (4 a cbar (n-1))) e^{-bt}, a > 0
//   2: {a, eps}     f = a e^{eps b t}, a > 0, eps = +-1
//   3: {a}          as case 1 but a != 0, c < 0; domain restricted to f > 0
//   4: {a}          f = a, a > 0
//   5: {a, eps}     f = eps sqrt(-c/(n-1)) t + a; domain restricted to f > 0
//   6: {a1, a2}     f = a1 cos(bt) + a2 sin(bt), a1^2 + a2^2 = c n/(cbar (n-1))
inline WarpingFunction make_einstein_family(int case_id, int n, double c_bar, double c,
                                            const std::vector<double>& params) {
    using detail::require;
    if (case_id < 1 || case_id > 6) throw invalid_family_error("einstein family: case_id must be 1..6");
    if (n < 2) throw invalid_family_error("einstein family: n must be >= 2");
    constexpr double kRelTol = 1e-12;

    switch (case_id) {
        case 1: {
            require(c_bar > 0.0 && c > 0.0, "case 1 requires cbar > 0 and c > 0");
            require(params.size() == 1, "case 1 expects params {a}");
            const double a = params[0];
            require(a > 0.0, "case 1 requires a > 0");
            const double b = std::sqrt(c_bar / n);
            const double d = c * n / (4.0 * a * c_bar * (n - 1));
            return WarpingFunction::make(WarpingFamily::cosh_type, {a, b, d}, Interval::all(), 0.0);
        }
        case 2: {
            require(c_bar > 0.0 && c == 0.0, "case 2 requires cbar > 0 and c = 0");
            require(params.size() == 2, "case 2 expects params {a, eps}");
            const double a = params[0], eps = params[1];
            require(a > 0.0, "case 2 requires a > 0");
            require(eps == 1.0 || eps == -1.0, "case 2 requires eps = +-1");
            const double b = std::sqrt(c_bar / n);
            return WarpingFunction::make(WarpingFamily::exponential, {a, eps * b}, Interval::all(), 0.0);
        }
        case 3: {
            require(c_bar > 0.0 && c < 0.0, "case 3 requires cbar > 0 and c < 0");
            require(params.size() == 1, "case 3 expects params {a}");
            const double a = params[0];
            require(a != 0.0, "case 3 requires a != 0");
            const double b = std::sqrt(c_bar / n);
            const double d = c * n / (4.0 * a * c_bar * (n - 1));
            // a and d have opposite signs; f = a e^{bt} + d e^{-bt} vanishes at
            // t* = log(-d/a)/(2b) and is positive on exactly one side.
            const double tstar = std::log(-d / a) / (2.0 * b);
            Interval dom = a > 0.0 ? Interval(tstar, std::numeric_limits<double>::infinity())
                                   : Interval(-std::numeric_limits<double>::infinity(), tstar);
            const double ref = a > 0.0 ? tstar + 1.0 : tstar - 1.0;
            return WarpingFunction::make(WarpingFamily::cosh_type, {a, b, d}, dom, ref);
        }
        case 4: {
            require(c_bar == 0.0 && c == 0.0, "case 4 requires cbar = 0 and c = 0");
            require(params.size() == 1, "case 4 expects params {a}");
            require(params[0] > 0.0, "case 4 requires a > 0");
            return WarpingFunction::make(WarpingFamily::constant, {params[0]}, Interval::all(), 0.0);
        }
        case 5: {
            require(c_bar == 0.0 && c < 0.0, "case 5 requires cbar = 0 and c < 0");
            require(params.size() == 2, "case 5 expects params {a, eps}");
            const double a = params[0], eps = params[1];
            require(eps == 1.0 || eps == -1.0, "case 5 requires eps = +-1");
            const double s = eps * std::sqrt(-c / (n - 1));
            const double tzero = -a / s;
            Interval dom = s > 0.0 ? Interval(tzero, std::numeric_limits<double>::infinity())
                                   : Interval(-std::numeric_limits<double>::infinity(), tzero);
            const double ref = s > 0.0 ? tzero + 1.0 : tzero - 1.0;
            return WarpingFunction::make(WarpingFamily::affine, {s, a}, dom, ref);
        }
        case 6: {
            require(c_bar < 0.0 && c < 0.0, "case 6 requires cbar < 0 and c < 0");
            require(params.size() == 2, "case 6 expects params {a1, a2}");
            const double a1 = params[0], a2 = params[1];
            const double want = c * n / (c_bar * (n - 1));
            const double got = a1 * a1 + a2 * a2;
            const double res = std::abs(got - want) / std::max(std::abs(want), 1e-300);
            if (res > kRelTol) {
                std::ostringstream os;
                os << "case 6 amplitude identity violated: a1^2 + a2^2 = " << got
                   << ", required " << want;
                throw family_constraint_error(os.str(), res);
            }
            const double b = std::sqrt(-c_bar / n);
            // f = R cos(bt - delta) with R = sqrt(a1^2 + a2^2): positive on a
            // half-period window around t = delta/b.
            const double delta = std::atan2(a2, a1);
            Interval dom((delta - 0.5 * M_PI) / b, (delta + 0.5 * M_PI) / b);
            return WarpingFunction::make(WarpingFamily::trigonometric, {a1, a2, b}, dom,
                                         delta / b);
        }
    }
    throw invalid_family_error("unreachable");
}

// Max-abs residuals of the two Einstein ODEs over the sample points.
struct EinsteinResiduals {
    double r1 = 0.0;  // |f''/f - cbar/n|
    double r2 = 0.0;  // |cbar (n-1)/n - (c + (n-1) f'^2)/f^2|
};

inline EinsteinResiduals einstein_residuals(const WarpingFunction& w, int n, double c_bar,
                                            double c, const std::vector<double>& t_samples) {
    EinsteinResiduals r;
    for (double t : t_samples) {
        const WarpEval e = w.eval(t);
        r.r1 = std::max(r.r1, std::abs(e.fpp / e.f - c_bar / n));
        r.r2 = std::max(r.r2, std::abs(c_bar * (n - 1) / n -
                                       (c + (n - 1) * e.fp * e.fp) / (e.f * e.f)));
    }
    return r;
}

// Uniform sample points strictly inside the (possibly clipped) domain. The
// pad keeps samples away from boundaries where f may vanish and residuals of
// the form (...)/f^2 lose all significance.
inline std::vector<double> uniform_samples(const WarpingFunction& w, int count,
                                           double span_if_unbounded = 4.0,
                                           double pad_fraction = 1e-2) {
    const Interval& dom = w.domain();
    double lo = dom.lo, hi = dom.hi;
    if (!std::isfinite(lo)) lo = w.ref_point() - span_if_unbounded;
    if (!std::isfinite(hi)) hi = w.ref_point() + span_if_unbounded;
    const double pad = (hi - lo) * pad_fraction;
    lo += pad;
    hi -= pad;
    std::vector<double> ts(count);
    for (int k = 0; k < count; ++k)
        ts[k] = lo + (hi - lo) * (count == 1 ? 0.5 : static_cast<double>(k) / (count - 1));
    return ts;
}

}  // namespace grw
