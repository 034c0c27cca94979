#pragma once

#include <cmath>

namespace pds {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

/// Symmetric 2x2 tensor [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    static constexpr Sym2 identity() { return {1.0, 1.0, 0.0}; }

    constexpr double trace() const { return xx + yy; }

    Sym2& operator+=(const Sym2& o)
    {
        xx += o.xx;
        yy += o.yy;
        xy += o.xy;
        return *this;
    }
    Sym2& operator-=(const Sym2& o)
    {
        xx -= o.xx;
        yy -= o.yy;
        xy -= o.xy;
        return *this;
    }

    friend constexpr Sym2 operator+(Sym2 a, const Sym2& b) { return {a.xx + b.xx, a.yy + b.yy, a.xy + b.xy}; }
    friend constexpr Sym2 operator-(Sym2 a, const Sym2& b) { return {a.xx - b.xx, a.yy - b.yy, a.xy - b.xy}; }
    friend constexpr Sym2 operator*(double s, const Sym2& a) { return {s * a.xx, s * a.yy, s * a.xy}; }
    friend constexpr bool operator==(const Sym2&, const Sym2&) = default;
};

/// Full contraction A:B.
constexpr double ddot(const Sym2& a, const Sym2& b)
{
    return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

/// Frobenius norm.
inline double norm(const Sym2& a) { return std::sqrt(ddot(a, a)); }

/// Trace-free symmetric 2x2 tensor stored as (d11, d12); d22 = -d11 always.
struct Dev2 {
    double d11 = 0.0;
    double d12 = 0.0;

    constexpr Sym2 sym() const { return {d11, -d11, d12}; }

    Dev2& operator+=(const Dev2& o)
    {
        d11 += o.d11;
        d12 += o.d12;
        return *this;
    }

    friend constexpr Dev2 operator+(Dev2 a, Dev2 b) { return {a.d11 + b.d11, a.d12 + b.d12}; }
    friend constexpr Dev2 operator-(Dev2 a, Dev2 b) { return {a.d11 - b.d11, a.d12 - b.d12}; }
    friend constexpr Dev2 operator*(double s, Dev2 a) { return {s * a.d11, s * a.d12}; }
    friend constexpr bool operator==(Dev2, Dev2) = default;
};

constexpr double ddot(Dev2 a, Dev2 b) { return 2.0 * (a.d11 * b.d11 + a.d12 * b.d12); }
inline double norm(Dev2 a) { return std::sqrt(ddot(a, a)); }

/// Deviatoric projection in two dimensions: M - tr(M)/2 I.
constexpr Dev2 dev(const Sym2& m) { return {0.5 * (m.xx - m.yy), m.xy}; }

} // namespace pds
