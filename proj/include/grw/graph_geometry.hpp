#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "grw/core.hpp"
#include "grw/fiber.hpp"
#include "grw/warping.hpp"

// Extrinsic and intrinsic geometry of the spacelike graph over the fiber:
// spacelikeness margin, hyperbolic angle, unit normal, induced metric, mean
// curvature, shape operator and umbilicity defect.
//
// Conventions, fixed once: N is the future-pointing timelike unit normal
// (g(N, dt) <= -1), A = -grad N restricted to the tangent space, and
// H = -(1/n) tr A, so the slice t = t0 has H = f'(t0)/f(t0).

namespace grw {

struct GraphFunction {
    const FiberGrid* grid = nullptr;
    ScalarField u;

    GraphFunction() = default;
    GraphFunction(const FiberGrid& g, ScalarField values) : grid(&g), u(std::move(values)) {
        detail::check_shape(g, u, "GraphFunction");
    }

    static GraphFunction slice(const FiberGrid& g, double t0) {
        return GraphFunction(g, ScalarField(g, t0));
    }

    std::uint64_t content_hash() const {
        return hash_values(u.v, grid->content_hash());
    }
};

namespace detail {

// per-node basics shared by all graph operations
struct GraphBasics {
    ScalarField f, fp;      // f(u), f'(u)
    VectorField Du;         // fiber gradient of u
    ScalarField q;          // |Du|^2 / f(u)^2
    ScalarField w;          // sqrt(1 - q); cosh(phi) = 1/w
    double margin = 0.0;    // max |Du| / f(u)
    int worst_i = 0, worst_j = 0;
};

inline GraphBasics graph_basics(const WarpingFunction& wf, const GraphFunction& gf) {
    const FiberGrid& g = *gf.grid;
    GraphBasics b;
    b.f = ScalarField(g);
    b.fp = ScalarField(g);
    b.q = ScalarField(g);
    b.w = ScalarField(g);
    b.Du = grad_F(g, gf.u);
    double qmax = -1.0;
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 met = g.metric_at(i, 0);
        for (int j = 0; j < g.ny(); ++j) {
            const WarpEval e = wf.eval(gf.u(i, j));
            b.f(i, j) = e.f;
            b.fp(i, j) = e.fp;
            const double du2 = quad(met, b.Du.vx(i, j), b.Du.vy(i, j));
            const double q = du2 / (e.f * e.f);
            b.q(i, j) = q;
            b.w(i, j) = q < 1.0 ? std::sqrt(1.0 - q) : 0.0;
            if (q > qmax) {
                qmax = q;
                b.worst_i = i;
                b.worst_j = j;
            }
        }
    }
    b.margin = std::sqrt(std::max(qmax, 0.0));
    return b;
}

inline void require_spacelike(const GraphBasics& b, const char* op) {
    if (b.margin >= 1.0) {
        std::ostringstream os;
        os << op << ": graph is not spacelike, |Du|/f(u) = " << b.margin << " at node ("
           << b.worst_i << ", " << b.worst_j << ")";
        throw spacelike_violation(os.str(), b.worst_i, b.worst_j, b.margin);
    }
}

}  // namespace detail

// max over nodes of |Du| / f(u); the graph is spacelike iff this is < 1
inline double check_spacelike(const WarpingFunction& f, const GraphFunction& gf) {
    return detail::graph_basics(f, gf).margin;
}

// Eq-of-angle for graphs: cosh(phi) = f(u) / sqrt(f(u)^2 - |Du|^2)
inline ScalarField hyperbolic_angle(const WarpingFunction& f, const GraphFunction& gf) {
    const auto b = detail::graph_basics(f, gf);
    detail::require_spacelike(b, "hyperbolic_angle");
    const FiberGrid& g = *gf.grid;
    ScalarField out(g);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) out(i, j) = 1.0 / b.w(i, j);
    return out;
}

// Quasilinear mean curvature operator of the graph:
//   H(u) = div( Du / (n f sqrt(f^2 - |Du|^2)) )
//        + f'(u) / (n sqrt(f^2 - |Du|^2)) * (n + |Du|^2 / f^2).
// The divergence is assembled conservatively from half-point fluxes, which
// keeps constants exact (H(slice) = f'/f with zero divergence term) and the
// linearization free of checkerboard null modes. Pole faces on the sphere
// carry zero flux.
inline ScalarField mean_curvature(const WarpingFunction& f, const GraphFunction& gf,
                                  bool* conditioning_warning = nullptr) {
    const FiberGrid& g = *gf.grid;
    const auto b = detail::graph_basics(f, gf);
    detail::require_spacelike(b, "mean_curvature");
    if (conditioning_warning) *conditioning_warning = b.margin > 0.999;

    const int n = g.dim();
    // beta = 1/(n f sqrt(f^2 - |Du|^2)) = 1/(n f^2 w)
    ScalarField beta(g);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            beta(i, j) = 1.0 / (n * b.f(i, j) * b.f(i, j) * b.w(i, j));

    const bool sph = g.topology() == Topology::sphere;
    ScalarField out(g);

    // x-face fluxes: face fi sits between rows fi and fi+1
    auto flux_x = [&](int fi, int j) -> double {
        if (sph && (fi < 0 || fi >= g.nx() - 1)) return 0.0;  // pole faces
        const double sd = g.sqrt_det_xface(fi);
        const Sym2 gif = g.metric_inv_xface(fi);
        const double bf = 0.5 * (beta.at(fi, j) + beta.at(fi + 1, j));
        return sd * gif.xx * bf * (gf.u.at(fi + 1, j) - gf.u.at(fi, j)) / g.hx();
    };
    auto flux_y = [&](int i, int fj) -> double {
        const double sd = g.sqrt_det_at(i, 0);
        const Sym2 giv = g.metric_inv_at(i, 0);
        const double bf = 0.5 * (beta.at(i, fj) + beta.at(i, fj + 1));
        return sd * giv.yy * bf * (gf.u.at(i, fj + 1) - gf.u.at(i, fj)) / g.hy();
    };

    for (int i = 0; i < g.nx(); ++i) {
        const double isd = 1.0 / g.sqrt_det_at(i, 0);
        for (int j = 0; j < g.ny(); ++j) {
            const double div_term = isd * ((flux_x(i, j) - flux_x(i - 1, j)) / g.hx() +
                                           (flux_y(i, j) - flux_y(i, j - 1)) / g.hy());
            const double point_term =
                b.fp(i, j) / (n * b.f(i, j) * b.w(i, j)) * (n + b.q(i, j));
            out(i, j) = div_term + point_term;
        }
    }
    return out;
}

// (g_u)_{ij} = -d_i u d_j u + f(u)^2 (g_F)_{ij}; positive definite iff spacelike
inline std::vector<Sym2> induced_metric(const WarpingFunction& f, const GraphFunction& gf) {
    const FiberGrid& g = *gf.grid;
    std::vector<Sym2> out(static_cast<std::size_t>(g.size()));
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 met = g.metric_at(i, 0);
        for (int j = 0; j < g.ny(); ++j) {
            const double fx = dpx(gf.u, i, j);
            const double fy = dpy(gf.u, i, j);
            const double f2 = sq(f.eval(gf.u(i, j)).f);
            const Sym2 gu{f2 * met.xx - fx * fx, f2 * met.xy - fx * fy, f2 * met.yy - fy * fy};
            if (!gu.positive_definite()) {
                std::ostringstream os;
                os << "induced_metric: not positive definite at node (" << i << ", " << j
                   << "); graph is not spacelike there";
                throw spacelike_violation(os.str(), i, j, 1.0);
            }
            out[static_cast<std::size_t>(g.idx(i, j))] = gu;
        }
    }
    return out;
}

// future-pointing unit normal, ambient components (t, fiber x, fiber y)
struct NormalField {
    ScalarField t;   // = cosh(phi)
    VectorField fiber;
};

inline NormalField normal(const WarpingFunction& f, const GraphFunction& gf) {
    const FiberGrid& g = *gf.grid;
    const auto b = detail::graph_basics(f, gf);
    detail::require_spacelike(b, "normal");
    NormalField N{ScalarField(g), VectorField(g)};
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.ny(); ++j) {
            const double denom = b.f(i, j) * b.f(i, j) * b.w(i, j);
            N.t(i, j) = 1.0 / b.w(i, j);
            N.fiber.vx(i, j) = b.Du.vx(i, j) / denom;
            N.fiber.vy(i, j) = b.Du.vy(i, j) / denom;
        }
    }
    return N;
}

struct ShapeOperatorField {
    std::vector<Mat2> A;    // mixed components A^m_i per node
    ScalarField trA2;
    ScalarField trace_H;    // -(1/n) tr A, cross-check against mean_curvature
    double eq2_residual;    // discrete residual of grad_X K = f' X on basis fields
};

// A = -grad N on tangent vectors E_i = d_i u dt + d_i, expressed in the
// tangent basis through the induced metric. Ambient Christoffel data of the
// warped product: G^t_{ij} = f f' g_ij, G^i_{tj} = (f'/f) d^i_j, plus fiber
// Christoffels.
inline ShapeOperatorField shape_operator(const WarpingFunction& f, const GraphFunction& gf) {
    const FiberGrid& g = *gf.grid;
    const auto b = detail::graph_basics(f, gf);
    detail::require_spacelike(b, "shape_operator");
    const NormalField N = normal(f, gf);
    const auto gu = induced_metric(f, gf);

    ShapeOperatorField out;
    out.A.resize(static_cast<std::size_t>(g.size()));
    out.trA2 = ScalarField(g);
    out.trace_H = ScalarField(g);

    // discrete Eq-(2) self-check: t-component of grad_{E_i} K minus f' E_i
    double eq2 = 0.0;
    ScalarField f_of_u = b.f;

    const int n = g.dim();
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 met = g.metric_at(i, 0);
        const double gxyy = g.gamma_x_yy(i);
        const double gyxy = g.gamma_y_xy(i);
        for (int j = 0; j < g.ny(); ++j) {
            const double fu = b.f(i, j), fpu = b.fp(i, j);
            const double ux = dpx(gf.u, i, j), uy = dpy(gf.u, i, j);
            const double Nt = N.t(i, j);
            const double Nx = N.fiber.vx(i, j), Ny = N.fiber.vy(i, j);

            const double dNt_x = dpx(N.t, i, j);
            const double dNt_y = dpy(N.t, i, j);
            const double dNx_x = (N.fiber.vx_at(i + 1, j) - N.fiber.vx_at(i - 1, j)) / (2 * g.hx());
            const double dNx_y = (N.fiber.vx_at(i, j + 1) - N.fiber.vx_at(i, j - 1)) / (2 * g.hy());
            const double dNy_x = (N.fiber.vy_at(i + 1, j) - N.fiber.vy_at(i - 1, j)) / (2 * g.hx());
            const double dNy_y = (N.fiber.vy_at(i, j + 1) - N.fiber.vy_at(i, j - 1)) / (2 * g.hy());

            // W_i = -grad_{E_i} N, ambient components
            const double Wx_t = -(dNt_x + fu * fpu * (met.xx * Nx + met.xy * Ny));
            const double Wx_x = -(dNx_x + (fpu / fu) * (Nt + Nx * ux));
            const double Wx_y = -(dNy_x + (fpu / fu) * (Ny * ux) + gyxy * Ny);
            const double Wy_t = -(dNt_y + fu * fpu * (met.xy * Nx + met.yy * Ny));
            const double Wy_x = -(dNx_y + (fpu / fu) * (Nx * uy) + gxyy * Ny);
            const double Wy_y = -(dNy_y + (fpu / fu) * (Nt + Ny * uy) + gyxy * Nx);

            // B_{i k} = g(W_i, E_k) with E_k = d_k u dt + d_k
            const double f2 = fu * fu;
            auto pair_with = [&](double Wt, double Wxc, double Wyc, double uk, int comp) {
                const double gx = comp == 0 ? met.xx : met.xy;
                const double gy = comp == 0 ? met.xy : met.yy;
                return -Wt * uk + f2 * (gx * Wxc + gy * Wyc);
            };
            const double Bxx = pair_with(Wx_t, Wx_x, Wx_y, ux, 0);
            const double Bxy = pair_with(Wx_t, Wx_x, Wx_y, uy, 1);
            const double Byx = pair_with(Wy_t, Wy_x, Wy_y, ux, 0);
            const double Byy = pair_with(Wy_t, Wy_x, Wy_y, uy, 1);

            const Sym2 ginv = gu[static_cast<std::size_t>(g.idx(i, j))].inverse();
            Mat2 A;
            A.a00 = ginv.xx * Bxx + ginv.xy * Bxy;   // A^x_x
            A.a10 = ginv.xy * Bxx + ginv.yy * Bxy;   // A^y_x
            A.a01 = ginv.xx * Byx + ginv.xy * Byy;   // A^x_y
            A.a11 = ginv.xy * Byx + ginv.yy * Byy;   // A^y_y

            out.A[static_cast<std::size_t>(g.idx(i, j))] = A;
            out.trA2(i, j) = A.trace_sq();
            out.trace_H(i, j) = -A.trace() / n;

            // grad_{E_i} K - f' E_i: only the t-component survives discretely
            const double r1 = std::abs(dpx(f_of_u, i, j) - fpu * ux);
            const double r2 = std::abs(dpy(f_of_u, i, j) - fpu * uy);
            eq2 = std::max(eq2, std::max(r1, r2));
        }
    }
    out.eq2_residual = eq2;
    return out;
}

// ---------------------------------------------------------------------------
// Full per-graph bundle

struct GeometryFields {
    ScalarField H;
    ScalarField cosh_phi;
    NormalField N;
    std::vector<Sym2> g_u;
    std::vector<Mat2> A;
    ScalarField trA2;
    ScalarField gKN;         // g(K, N) = -f(u) cosh(phi)
    double margin = 0.0;
    double sup_cosh_phi = 1.0;
    double eq2_residual = 0.0;
    bool conditioning_warning = false;
};

inline GeometryFields compute_geometry(const WarpingFunction& f, const GraphFunction& gf) {
    const FiberGrid& g = *gf.grid;
    GeometryFields out;
    out.margin = check_spacelike(f, gf);
    out.H = mean_curvature(f, gf, &out.conditioning_warning);
    out.cosh_phi = hyperbolic_angle(f, gf);
    out.N = normal(f, gf);
    out.g_u = induced_metric(f, gf);
    auto sh = shape_operator(f, gf);
    out.A = std::move(sh.A);
    out.trA2 = std::move(sh.trA2);
    out.eq2_residual = sh.eq2_residual;
    out.gKN = ScalarField(g);
    double sup = 1.0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double cp = out.cosh_phi(i, j);
            sup = std::max(sup, cp);
            out.gKN(i, j) = -f.eval(gf.u(i, j)).f * cp;
        }
    out.sup_cosh_phi = sup;
    return out;
}

// max over nodes of tr(A^2) - n H^2; zero (up to discretization) iff the
// graph is totally umbilical
inline double umbilicity_defect(const GeometryFields& fields) {
    const FiberGrid& g = *fields.H.grid;
    double worst = -std::numeric_limits<double>::infinity();
    const int n = g.dim();
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            worst = std::max(worst, fields.trA2(i, j) - n * sq(fields.H(i, j)));
    return worst;
}

// ---------------------------------------------------------------------------
// Cache keyed by content hash of (warping, grid, u). The solver's hot path
// calls mean_curvature directly; the bundle is for diagnostics, where repeat
// lookups with identical u are common.

class GeometryCache {
  public:
    const GeometryFields& get(const WarpingFunction& f, const GraphFunction& gf) {
        const std::uint64_t key = gf.content_hash() ^ warp_hash(f);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(key);
        if (it != map_.end()) {
            ++hits_;
            return *it->second;
        }
        if (map_.size() > 64) map_.clear();
        auto fields = std::make_shared<GeometryFields>(compute_geometry(f, gf));
        auto [pos, ok] = map_.emplace(key, std::move(fields));
        (void)ok;
        return *pos->second;
    }

    std::size_t hits() const { return hits_; }

  private:
    static std::uint64_t warp_hash(const WarpingFunction& f) {
        const auto fam = f.family();
        std::uint64_t h = fnv1a(&fam, sizeof(fam));
        h = hash_values(f.params(), h);
        const double bounds[3] = {f.domain().lo, f.domain().hi, f.ref_point()};
        return fnv1a(bounds, sizeof(bounds), h);
    }

    std::mutex mutex_;
    std::unordered_map<std::uint64_t, std::shared_ptr<GeometryFields>> map_;
    std::size_t hits_ = 0;
};

}  // namespace grw
