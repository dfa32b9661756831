#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "grw/core.hpp"

// Discretized homogeneous 2D Riemannian fibers: the flat torus and the round
// sphere. Structured grids, centered second-order differences, and the pole
// treatment for the latitude-longitude sphere grid: nodes sit half a step off
// the poles and ghost values are read across the pole with a pi shift in
// longitude (scalars unchanged, the latitudinal vector component negated).

namespace grw {

enum class Topology { torus, sphere };

inline const char* topology_name(Topology t) {
    return t == Topology::torus ? "torus" : "sphere";
}

class FiberGrid {
  public:
    static FiberGrid torus(int nx, int ny, double length) {
        if (nx < 4 || ny < 4) throw error("torus grid: need at least 4 nodes per axis");
        if (!(length > 0.0)) throw error("torus grid: length must be positive");
        FiberGrid g;
        g.topology_ = Topology::torus;
        g.nx_ = nx;
        g.ny_ = ny;
        g.length_ = length;
        g.hx_ = length / nx;
        g.hy_ = length / ny;
        g.ricci_const_ = 0.0;
        g.scalar_const_ = 0.0;
        g.sect_lower_bound_ = 0.0;
        g.is_compact_ = true;
        g.universal_cover_parabolic_ = true;  // universal cover R^2
        return g;
    }

    static FiberGrid sphere(int n_theta, int n_phi, double radius) {
        if (n_theta < 4 || n_phi < 8) throw error("sphere grid: need >= 4 x 8 nodes");
        if (n_phi % 2 != 0) throw error("sphere grid: n_phi must be even for the pole shift");
        if (!(radius > 0.0)) throw error("sphere grid: radius must be positive");
        FiberGrid g;
        g.topology_ = Topology::sphere;
        g.nx_ = n_theta;
        g.ny_ = n_phi;
        g.radius_ = radius;
        g.hx_ = M_PI / n_theta;
        g.hy_ = 2.0 * M_PI / n_phi;
        g.ricci_const_ = 1.0 / (radius * radius);             // (dim-1)/r^2, dim = 2
        g.scalar_const_ = 2.0 / (radius * radius);            // dim (dim-1)/r^2
        g.sect_lower_bound_ = 1.0 / (radius * radius);
        g.is_compact_ = true;
        g.universal_cover_parabolic_ = false;  // cover is the (compact) sphere itself
        return g;
    }

    Topology topology() const { return topology_; }
    int dim() const { return 2; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int size() const { return nx_ * ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double length() const { return length_; }
    double radius() const { return radius_; }
    double ricci_const() const { return ricci_const_; }
    double scalar_const() const { return scalar_const_; }
    double sect_lower_bound() const { return sect_lower_bound_; }
    bool is_compact() const { return is_compact_; }
    bool universal_cover_parabolic() const { return universal_cover_parabolic_; }

    // physical grid spacing (used by verdict tolerances of the form c h^2)
    double h_max() const {
        if (topology_ == Topology::torus) return std::max(hx_, hy_);
        return std::max(hx_ * radius_, hy_ * radius_);
    }

    int idx(int i, int j) const { return i * ny_ + j; }

    // coordinates: torus (x, y) in [0, L)^2; sphere (theta, phi) with the
    // half-offset colatitude theta_i = (i + 1/2) h_theta
    double x_of(int i) const {
        return topology_ == Topology::torus ? i * hx_ : (i + 0.5) * hx_;
    }
    double y_of(int j) const { return j * hy_; }

    Sym2 metric_at(int i, int /*j*/) const {
        if (topology_ == Topology::torus) return Sym2{1.0, 0.0, 1.0};
        const double s = std::sin(x_of(i));
        return Sym2{radius_ * radius_, 0.0, radius_ * radius_ * s * s};
    }

    Sym2 metric_inv_at(int i, int /*j*/) const {
        if (topology_ == Topology::torus) return Sym2{1.0, 0.0, 1.0};
        const double s = std::sin(x_of(i));
        return Sym2{1.0 / (radius_ * radius_), 0.0, 1.0 / (radius_ * radius_ * s * s)};
    }

    double sqrt_det_at(int i, int /*j*/) const {
        if (topology_ == Topology::torus) return 1.0;
        return radius_ * radius_ * std::sin(x_of(i));
    }

    // x-face between rows i and i+1 (i = -1 and i = nx-1 are the poles on the
    // sphere, where sin vanishes and with it any flux)
    double sqrt_det_xface(int i) const {
        if (topology_ == Topology::torus) return 1.0;
        return radius_ * radius_ * std::sin((i + 1) * hx_);
    }

    Sym2 metric_inv_xface(int i) const {
        if (topology_ == Topology::torus) return Sym2{1.0, 0.0, 1.0};
        const double s = std::sin((i + 1) * hx_);
        return Sym2{1.0 / (radius_ * radius_), 0.0, 1.0 / (radius_ * radius_ * s * s)};
    }

    // Exact latitude-band area for the sphere makes the constant integrate to
    // 4 pi r^2 to roundoff; the torus cell is just hx hy.
    double cell_measure(int i, int /*j*/) const {
        if (topology_ == Topology::torus) return hx_ * hy_;
        const double th = x_of(i);
        return radius_ * radius_ * (std::cos(th - 0.5 * hx_) - std::cos(th + 0.5 * hx_)) * hy_;
    }

    double total_volume() const {
        if (topology_ == Topology::torus) return length_ * length_;
        return 4.0 * M_PI * radius_ * radius_;
    }

    // fiber Christoffel symbols (only the sphere has nonzero ones)
    // Gamma^x_{yy}, Gamma^y_{xy}
    double gamma_x_yy(int i) const {
        if (topology_ == Topology::torus) return 0.0;
        const double th = x_of(i);
        return -std::sin(th) * std::cos(th);
    }
    double gamma_y_xy(int i) const {
        if (topology_ == Topology::torus) return 0.0;
        return std::cos(x_of(i)) / std::sin(x_of(i));
    }

    std::uint64_t content_hash() const {
        std::uint64_t h = fnv1a(&topology_, sizeof(topology_));
        h = fnv1a(&nx_, sizeof(nx_), h);
        h = fnv1a(&ny_, sizeof(ny_), h);
        h = fnv1a(&length_, sizeof(length_), h);
        h = fnv1a(&radius_, sizeof(radius_), h);
        return h;
    }

    // --- ghost-aware logical indexing -------------------------------------
    // Maps a logical (i, j) with i in [-1, nx] and any j to a physical node
    // plus the parity sign of the latitudinal vector component.
    struct Mapped {
        int i, j;
        double x_sign;  // -1 across a pole for contravariant x-components
    };

    Mapped map_index(int i, int j) const {
        int jj = j % ny_;
        if (jj < 0) jj += ny_;
        if (topology_ == Topology::torus) {
            int ii = i % nx_;
            if (ii < 0) ii += nx_;
            return {ii, jj, 1.0};
        }
        if (i >= 0 && i < nx_) return {i, jj, 1.0};
        const int shifted = (jj + ny_ / 2) % ny_;
        if (i == -1) return {0, shifted, -1.0};
        if (i == nx_) return {nx_ - 1, shifted, -1.0};
        throw error("sphere grid: index beyond one ghost layer");
    }

  private:
    Topology topology_ = Topology::torus;
    int nx_ = 0, ny_ = 0;
    double hx_ = 0.0, hy_ = 0.0;
    double length_ = 0.0, radius_ = 0.0;
    double ricci_const_ = 0.0, scalar_const_ = 0.0, sect_lower_bound_ = 0.0;
    bool is_compact_ = true, universal_cover_parabolic_ = true;
};

// ---------------------------------------------------------------------------
// Fields

struct ScalarField {
    const FiberGrid* grid = nullptr;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const FiberGrid& g, double fill = 0.0)
        : grid(&g), v(static_cast<std::size_t>(g.size()), fill) {}

    double& operator()(int i, int j) { return v[static_cast<std::size_t>(grid->idx(i, j))]; }
    double operator()(int i, int j) const { return v[static_cast<std::size_t>(grid->idx(i, j))]; }

    // ghost-aware read
    double at(int i, int j) const {
        const auto m = grid->map_index(i, j);
        return v[static_cast<std::size_t>(grid->idx(m.i, m.j))];
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    double min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double x : v) m = std::min(m, x);
        return m;
    }
    double max() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double x : v) m = std::max(m, x);
        return m;
    }
};

// contravariant components in grid coordinates
struct VectorField {
    const FiberGrid* grid = nullptr;
    std::vector<double> x, y;

    VectorField() = default;
    explicit VectorField(const FiberGrid& g)
        : grid(&g),
          x(static_cast<std::size_t>(g.size()), 0.0),
          y(static_cast<std::size_t>(g.size()), 0.0) {}

    double& vx(int i, int j) { return x[static_cast<std::size_t>(grid->idx(i, j))]; }
    double& vy(int i, int j) { return y[static_cast<std::size_t>(grid->idx(i, j))]; }
    double vx(int i, int j) const { return x[static_cast<std::size_t>(grid->idx(i, j))]; }
    double vy(int i, int j) const { return y[static_cast<std::size_t>(grid->idx(i, j))]; }

    // ghost-aware reads; the x-component flips sign across a pole
    double vx_at(int i, int j) const {
        const auto m = grid->map_index(i, j);
        return m.x_sign * x[static_cast<std::size_t>(grid->idx(m.i, m.j))];
    }
    double vy_at(int i, int j) const {
        const auto m = grid->map_index(i, j);
        return y[static_cast<std::size_t>(grid->idx(m.i, m.j))];
    }
};

namespace detail {

inline bool same_grid(const FiberGrid& a, const FiberGrid& b) {
    return &a == &b || (a.topology() == b.topology() && a.nx() == b.nx() && a.ny() == b.ny() &&
                        a.hx() == b.hx() && a.hy() == b.hy());
}

inline void check_shape(const FiberGrid& g, const ScalarField& s, const char* op) {
    if (s.grid == nullptr || !same_grid(*s.grid, g))
        throw dimension_error(std::string(op) + ": field shape does not match grid");
}

inline void check_shape(const FiberGrid& g, const VectorField& s, const char* op) {
    if (s.grid == nullptr || !same_grid(*s.grid, g))
        throw dimension_error(std::string(op) + ": field shape does not match grid");
}

}  // namespace detail

// centered coordinate partials (second order)
inline double dpx(const ScalarField& s, int i, int j) {
    return (s.at(i + 1, j) - s.at(i - 1, j)) / (2.0 * s.grid->hx());
}
inline double dpy(const ScalarField& s, int i, int j) {
    return (s.at(i, j + 1) - s.at(i, j - 1)) / (2.0 * s.grid->hy());
}

// (D phi)^i = g_F^{ij} d_j phi
inline VectorField grad_F(const FiberGrid& g, const ScalarField& phi) {
    detail::check_shape(g, phi, "grad_F");
    VectorField out(g);
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 ginv = g.metric_inv_at(i, 0);
        for (int j = 0; j < g.ny(); ++j) {
            const double dx = dpx(phi, i, j);
            const double dy = dpy(phi, i, j);
            out.vx(i, j) = ginv.xx * dx + ginv.xy * dy;
            out.vy(i, j) = ginv.xy * dx + ginv.yy * dy;
        }
    }
    return out;
}

// div X = (1/sqrt g) d_i (sqrt g X^i)
inline ScalarField div_F(const FiberGrid& g, const VectorField& X) {
    detail::check_shape(g, X, "div_F");
    ScalarField out(g);
    auto flux_x = [&](int i, int j) {
        const auto m = g.map_index(i, j);
        // sqrt(g) X^x is even across the pole: both factors flip sign
        return g.sqrt_det_at(m.i, m.j) * X.x[static_cast<std::size_t>(g.idx(m.i, m.j))];
    };
    auto flux_y = [&](int i, int j) {
        const auto m = g.map_index(i, j);
        return g.sqrt_det_at(m.i, m.j) * X.y[static_cast<std::size_t>(g.idx(m.i, m.j))];
    };
    for (int i = 0; i < g.nx(); ++i) {
        const double isd = 1.0 / g.sqrt_det_at(i, 0);
        for (int j = 0; j < g.ny(); ++j) {
            const double ddx = (flux_x(i + 1, j) - flux_x(i - 1, j)) / (2.0 * g.hx());
            const double ddy = (flux_y(i, j + 1) - flux_y(i, j - 1)) / (2.0 * g.hy());
            out(i, j) = isd * (ddx + ddy);
        }
    }
    return out;
}

// pointwise g_F(X, X)
inline ScalarField norm2_F(const FiberGrid& g, const VectorField& X) {
    detail::check_shape(g, X, "norm2_F");
    ScalarField out(g);
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 met = g.metric_at(i, 0);
        for (int j = 0; j < g.ny(); ++j)
            out(i, j) = quad(met, X.vx(i, j), X.vy(i, j));
    }
    return out;
}

// pointwise g_F(X, Y)
inline ScalarField inner_F(const FiberGrid& g, const VectorField& X, const VectorField& Y) {
    detail::check_shape(g, X, "inner_F");
    detail::check_shape(g, Y, "inner_F");
    ScalarField out(g);
    for (int i = 0; i < g.nx(); ++i) {
        const Sym2 met = g.metric_at(i, 0);
        for (int j = 0; j < g.ny(); ++j)
            out(i, j) = bilin(met, X.vx(i, j), X.vy(i, j), Y.vx(i, j), Y.vy(i, j));
    }
    return out;
}

inline double integrate(const FiberGrid& g, const ScalarField& phi) {
    detail::check_shape(g, phi, "integrate");
    double sum = 0.0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) sum += phi(i, j) * g.cell_measure(i, j);
    return sum;
}

inline double mean_value(const FiberGrid& g, const ScalarField& phi) {
    return integrate(g, phi) / g.total_volume();
}

}  // namespace grw
