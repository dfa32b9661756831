#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Small shared pieces: error types, 2x2 symmetric/general matrices,
// a portable seeded RNG and content hashing for field caches.

namespace grw {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation point left the warping domain.
struct eval_range_error : error {
    using error::error;
};

// f <= 0 detected (construction-time dense sample or at evaluation).
struct invalid_warping_error : error {
    using error::error;
};

// Adaptive quadrature failed to reach the requested tolerance.
struct integration_error : error {
    double achieved_tol;
    integration_error(const std::string& msg, double tol)
        : error(msg), achieved_tol(tol) {}
};

// Sign pattern of (cbar, c) does not match the Table 1 row.
struct invalid_family_error : error {
    using error::error;
};

// Row constraint (e.g. amplitude identity) violated; carries the residual.
struct family_constraint_error : error {
    double residual;
    family_constraint_error(const std::string& msg, double res)
        : error(msg), residual(res) {}
};

// Field shape does not match the owning grid.
struct dimension_error : error {
    using error::error;
};

// |Du| >= f(u) somewhere; carries the worst node and its margin.
struct spacelike_violation : error {
    int node_i, node_j;
    double margin;
    spacelike_violation(const std::string& msg, int i, int j, double m)
        : error(msg), node_i(i), node_j(j), margin(m) {}
};

// Operation requires constant mean curvature; carries the H oscillation.
struct not_cmc_error : error {
    double oscillation;
    not_cmc_error(const std::string& msg, double osc)
        : error(msg), oscillation(osc) {}
};

// Ambient vectors paired at different base points.
struct base_mismatch_error : error {
    using error::error;
};

// ---------------------------------------------------------------------------
// 2x2 linear algebra (value types, no allocation)

struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    double det() const { return xx * yy - xy * xy; }

    Sym2 inverse() const {
        const double d = det();
        return Sym2{yy / d, -xy / d, xx / d};
    }

    bool positive_definite() const { return xx > 0.0 && det() > 0.0; }
};

inline Sym2 operator*(double s, const Sym2& m) {
    return Sym2{s * m.xx, s * m.xy, s * m.yy};
}

inline Sym2 operator+(const Sym2& a, const Sym2& b) {
    return Sym2{a.xx + b.xx, a.xy + b.xy, a.yy + b.yy};
}

inline Sym2 operator-(const Sym2& a, const Sym2& b) {
    return Sym2{a.xx - b.xx, a.xy - b.xy, a.yy - b.yy};
}

// quadratic form v^T m v
inline double quad(const Sym2& m, double vx, double vy) {
    return m.xx * vx * vx + 2.0 * m.xy * vx * vy + m.yy * vy * vy;
}

// bilinear form v^T m w
inline double bilin(const Sym2& m, double vx, double vy, double wx, double wy) {
    return m.xx * vx * wx + m.xy * (vx * wy + vy * wx) + m.yy * vy * wy;
}

// General 2x2 matrix, used for mixed-index tensors such as the shape operator.
struct Mat2 {
    double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

    double trace() const { return a00 + a11; }

    // tr(M^2) for the same matrix
    double trace_sq() const {
        return a00 * a00 + 2.0 * a01 * a10 + a11 * a11;
    }
};

// ---------------------------------------------------------------------------
// Portable RNG: mt19937_64 with explicit double mapping, so that histories
// are bit-reproducible for a fixed seed regardless of the standard library's
// distribution implementations.

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_u64() {
        // xorshift* variant; small, fast, and fully specified here
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // split off an independent stream (used by batch runs: one stream per seed)
    Rng split(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull));
    }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a over raw bytes), used to key geometry caches.

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_values(const std::vector<double>& v, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

// ---------------------------------------------------------------------------
// Misc numeric helpers

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double sq(double x) { return x * x; }

// Least-squares slope of log(res) vs log(h); measures convergence order.
inline double fit_order(const std::vector<double>& hs, const std::vector<double>& residuals) {
    const std::size_t m = hs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double x = std::log(hs[k]);
        const double y = std::log(std::max(residuals[k], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dm = static_cast<double>(m);
    return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

}  // namespace grw
