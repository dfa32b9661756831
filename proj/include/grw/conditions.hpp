#pragma once

#include <cmath>
#include <vector>

#include "grw/core.hpp"
#include "grw/fiber.hpp"
#include "grw/warping.hpp"

// Ambient curvature of the GRW spacetime I x_f F and the energy-condition
// classification: Ricci tensor, scalar curvature, NCC (plain and strict),
// the TCC necessary condition f'' <= 0, and the weak energy condition
// via the Einstein tensor on timelike vectors.

namespace grw {

struct Spacetime {
    const WarpingFunction* warping = nullptr;
    const FiberGrid* fiber = nullptr;

    Spacetime(const WarpingFunction& w, const FiberGrid& f) : warping(&w), fiber(&f) {}

    int n() const { return fiber->dim(); }
};

struct AmbientVector {
    double t_component = 0.0;
    double fx = 0.0, fy = 0.0;  // fiber-tangent components in grid coordinates
    double base_t = 0.0;
    int node_i = 0, node_j = 0;

    bool same_base(const AmbientVector& o) const {
        return base_t == o.base_t && node_i == o.node_i && node_j == o.node_j;
    }
};

namespace detail {

inline void require_base(const AmbientVector& X, const AmbientVector& Y, const char* op) {
    if (!X.same_base(Y)) throw base_mismatch_error(std::string(op) + ": vectors at different base points");
}

}  // namespace detail

// g = -dt^2 + f(t)^2 g_F
inline double metric_ambient(const Spacetime& st, const AmbientVector& X, const AmbientVector& Y) {
    detail::require_base(X, Y, "metric_ambient");
    const double f = st.warping->eval(X.base_t).f;
    const Sym2 gF = st.fiber->metric_at(X.node_i, X.node_j);
    return -X.t_component * Y.t_component + f * f * bilin(gF, X.fx, X.fy, Y.fx, Y.fy);
}

// Ric(X, Y) = Ric^F(X^F, Y^F) + (f''/f + (n-1) f'^2/f^2) g(X^F, Y^F)
//             - n (f''/f) g(X, dt) g(Y, dt)
// with the homogeneous fiber supplying Ric^F = ricci_const * g_F.
inline double ricci_ambient(const Spacetime& st, const AmbientVector& X, const AmbientVector& Y) {
    detail::require_base(X, Y, "ricci_ambient");
    const WarpEval e = st.warping->eval(X.base_t);
    const int n = st.n();
    const Sym2 gF = st.fiber->metric_at(X.node_i, X.node_j);
    const double gF_XY = bilin(gF, X.fx, X.fy, Y.fx, Y.fy);
    const double ricF = st.fiber->ricci_const() * gF_XY;
    const double g_XF_YF = e.f * e.f * gF_XY;
    const double Xt = -X.t_component;  // g(X, dt)
    const double Yt = -Y.t_component;
    return ricF + (e.fpp / e.f + (n - 1) * sq(e.fp / e.f)) * g_XF_YF - n * (e.fpp / e.f) * Xt * Yt;
}

// S = S^F / f^2 + 2n f''/f + n(n-1) f'^2/f^2
inline double scalar_ambient(const Spacetime& st, double t) {
    const WarpEval e = st.warping->eval(t);
    const int n = st.n();
    return st.fiber->scalar_const() / (e.f * e.f) + 2.0 * n * e.fpp / e.f +
           n * (n - 1) * sq(e.fp / e.f);
}

// ---------------------------------------------------------------------------
// Energy conditions

struct NccVerdict {
    double margin = 0.0;    // min over t of Ric^F - (n-1) f^2 (log f)''
    double argmin_t = 0.0;
    bool holds = false;         // margin >= 0 (up to roundoff slack)
    bool strict_holds = false;  // margin > 0
};

inline NccVerdict ncc_margin(const Spacetime& st, double t_lo, double t_hi, int samples = 512) {
    NccVerdict v;
    v.margin = std::numeric_limits<double>::infinity();
    const int n = st.n();
    for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? 0.5 * (t_lo + t_hi)
                                      : t_lo + (t_hi - t_lo) * k / (samples - 1);
        const WarpEval e = st.warping->eval(t);
        const double m = st.fiber->ricci_const() - (n - 1) * e.f * e.f * e.logfpp;
        if (m < v.margin) {
            v.margin = m;
            v.argmin_t = t;
        }
    }
    v.holds = v.margin >= -1e-12;
    v.strict_holds = v.margin > 1e-12;
    return v;
}

// necessary condition of the TCC: f'' <= 0 throughout the sampled range
inline bool tcc_hint(const Spacetime& st, double t_lo, double t_hi, int samples = 512) {
    for (int k = 0; k < samples; ++k) {
        const double t = samples == 1 ? 0.5 * (t_lo + t_hi)
                                      : t_lo + (t_hi - t_lo) * k / (samples - 1);
        if (st.warping->eval(t).fpp > 1e-12) return false;
    }
    return true;
}

// Einstein tensor on a timelike Z, in the GRW closed form:
//   G(Z,Z) = Ric^F(Z^F,Z^F) - (n-1) f^2 (log f)'' g_F(Z^F,Z^F)
//            - (S^F / 2f^2) g(Z,Z) - (n(n-1)/2)(f'^2/f^2) g(Z,Z)
inline double einstein_GZZ_display(const Spacetime& st, const AmbientVector& Z) {
    const WarpEval e = st.warping->eval(Z.base_t);
    const int n = st.n();
    const Sym2 gF = st.fiber->metric_at(Z.node_i, Z.node_j);
    const double q = quad(gF, Z.fx, Z.fy);
    const double gZZ = metric_ambient(st, Z, Z);
    return st.fiber->ricci_const() * q - (n - 1) * e.f * e.f * e.logfpp * q -
           st.fiber->scalar_const() / (2.0 * e.f * e.f) * gZZ -
           0.5 * n * (n - 1) * sq(e.fp / e.f) * gZZ;
}

// independent assembly G = Ric - (1/2) S g, used as the cross-check route
inline double einstein_GZZ_assembled(const Spacetime& st, const AmbientVector& Z) {
    return ricci_ambient(st, Z, Z) - 0.5 * scalar_ambient(st, Z.base_t) * metric_ambient(st, Z, Z);
}

// random fiber direction with g_F(e, e) = 1
inline void random_unit_fiber_dir(const Spacetime& st, Rng& rng, int i, int j, double& ex,
                                  double& ey) {
    const double alpha = rng.uniform(0.0, 2.0 * M_PI);
    const Sym2 gF = st.fiber->metric_at(i, j);
    ex = std::cos(alpha) / std::sqrt(gF.xx);
    ey = std::sin(alpha) / std::sqrt(gF.yy);
    const double norm = std::sqrt(quad(gF, ex, ey));
    ex /= norm;
    ey /= norm;
}

// null vector dt + (1/f) e (or the past-directed mirror)
inline AmbientVector random_null_vector(const Spacetime& st, Rng& rng, double t_lo, double t_hi) {
    AmbientVector X;
    X.base_t = rng.uniform(t_lo, t_hi);
    X.node_i = static_cast<int>(rng.uniform() * st.fiber->nx()) % st.fiber->nx();
    X.node_j = static_cast<int>(rng.uniform() * st.fiber->ny()) % st.fiber->ny();
    double ex, ey;
    random_unit_fiber_dir(st, rng, X.node_i, X.node_j, ex, ey);
    const double f = st.warping->eval(X.base_t).f;
    const double sigma = rng.uniform() < 0.5 ? -1.0 : 1.0;
    X.t_component = sigma;
    X.fx = ex / f;
    X.fy = ey / f;
    return X;
}

// unit timelike vector cosh(chi) dt + sinh(chi) (1/f) e
inline AmbientVector random_timelike_vector(const Spacetime& st, Rng& rng, double t_lo,
                                            double t_hi, double max_rapidity = 2.5) {
    AmbientVector Z;
    Z.base_t = rng.uniform(t_lo, t_hi);
    Z.node_i = static_cast<int>(rng.uniform() * st.fiber->nx()) % st.fiber->nx();
    Z.node_j = static_cast<int>(rng.uniform() * st.fiber->ny()) % st.fiber->ny();
    double ex, ey;
    random_unit_fiber_dir(st, rng, Z.node_i, Z.node_j, ex, ey);
    const double f = st.warping->eval(Z.base_t).f;
    const double chi = rng.uniform(0.0, max_rapidity);
    Z.t_component = std::cosh(chi);
    Z.fx = std::sinh(chi) * ex / f;
    Z.fy = std::sinh(chi) * ey / f;
    return Z;
}

struct WecVerdict {
    double margin = 0.0;  // min of G(Z,Z) over the sampled timelike vectors
    double argmin_t = 0.0;
    bool sufficient_condition = false;  // S^F >= -n(n-1) inf f'^2 over the range
    bool holds = false;
};

inline WecVerdict wec_margin(const Spacetime& st, double t_lo, double t_hi, int samples,
                             std::uint64_t seed = 12345) {
    if (samples <= 0) throw error("wec_margin: samples must be positive");
    WecVerdict v;
    v.margin = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    for (int k = 0; k < samples; ++k) {
        const AmbientVector Z = random_timelike_vector(st, rng, t_lo, t_hi);
        const double G = einstein_GZZ_display(st, Z);
        if (G < v.margin) {
            v.margin = G;
            v.argmin_t = Z.base_t;
        }
    }
    double inf_fp2 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 512; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / 511.0;
        inf_fp2 = std::min(inf_fp2, sq(st.warping->eval(t).fp));
    }
    const int n = st.n();
    v.sufficient_condition = st.fiber->scalar_const() >= -n * (n - 1) * inf_fp2 - 1e-12;
    v.holds = v.margin >= -1e-9;
    return v;
}

}  // namespace grw
