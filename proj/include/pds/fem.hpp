#pragma once

#include "pds/material.hpp"
#include "pds/mesh.hpp"
#include "pds/sparse.hpp"

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace pds {

/// A mesh together with the material of every triangle.
struct Body {
    Mesh mesh;
    std::vector<MaterialParams> mat; ///< per triangle

    const MaterialParams& material(std::size_t t) const { return mat[t]; }
};

inline Body uniform_body(Mesh mesh, const MaterialParams& m)
{
    validate(m);
    Body b;
    b.mat.assign(mesh.num_tris(), m);
    b.mesh = std::move(mesh);
    return b;
}

/// Nodal vector fields are stored interleaved: [u0x, u0y, u1x, u1y, ...].
inline Vec2 node_value(std::span<const double> u, int node)
{
    return {u[2 * static_cast<std::size_t>(node)], u[2 * static_cast<std::size_t>(node) + 1]};
}

/// Constant symmetrized gradient of a P1 vector field on triangle `t`.
inline Sym2 strain_of(const Mesh& mesh, std::span<const double> u, std::size_t t)
{
    const auto& tri = mesh.tris[t];
    const auto& g = mesh.tri_grads[t];
    Sym2 e;
    for (int a = 0; a < 3; ++a) {
        const Vec2 ua = node_value(u, tri[a]);
        e.xx += ua.x * g[a].x;
        e.yy += ua.y * g[a].y;
        e.xy += 0.5 * (ua.x * g[a].y + ua.y * g[a].x);
    }
    return e;
}

inline std::vector<Sym2> strain_field(const Mesh& mesh, std::span<const double> u)
{
    std::vector<Sym2> e(mesh.num_tris());
    for (std::size_t t = 0; t < e.size(); ++t) {
        e[t] = strain_of(mesh, u, t);
    }
    return e;
}

inline double tri_average(const Mesh& mesh, std::span<const double> nodal, std::size_t t)
{
    const auto& tri = mesh.tris[t];
    return (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
}

inline Vec2 tri_gradient(const Mesh& mesh, std::span<const double> nodal, std::size_t t)
{
    const auto& tri = mesh.tris[t];
    const auto& g = mesh.tri_grads[t];
    return nodal[tri[0]] * g[0] + nodal[tri[1]] * g[1] + nodal[tri[2]] * g[2];
}

/// 6x6 row-major element matrix of the isotropic form lambda tr e(u) tr e(v) + 2 mu e(u):e(v),
/// integrated over the triangle. Local dof order (a, component).
inline std::array<double, 36> element_stiffness(const Mesh& mesh, std::size_t t, double lambda, double mu)
{
    const auto& g = mesh.tri_grads[t];
    const double area = mesh.tri_area[t];
    std::array<double, 36> k{};
    for (int a = 0; a < 3; ++a) {
        const double ga[2] = {g[a].x, g[a].y};
        for (int b = 0; b < 3; ++b) {
            const double gb[2] = {g[b].x, g[b].y};
            const double gab = dot(g[a], g[b]);
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    const double v = lambda * ga[i] * gb[j] + mu * ((i == j ? gab : 0.0) + ga[j] * gb[i]);
                    k[static_cast<std::size_t>((2 * a + i) * 6 + 2 * b + j)] = area * v;
                }
            }
        }
    }
    return k;
}

/// f += scale * int s : e(v) for every P1 test function v on triangle t.
inline void add_stress_divergence(const Mesh& mesh, std::size_t t, const Sym2& s, double scale, std::span<double> f)
{
    const auto& tri = mesh.tris[t];
    const auto& g = mesh.tri_grads[t];
    const double w = scale * mesh.tri_area[t];
    for (int a = 0; a < 3; ++a) {
        const auto dof = 2 * static_cast<std::size_t>(tri[a]);
        f[dof] += w * (s.xx * g[a].x + s.xy * g[a].y);
        f[dof + 1] += w * (s.xy * g[a].x + s.yy * g[a].y);
    }
}

/// Row-sum lumped P1 mass per node for unit density weighted by a per-triangle density.
inline std::vector<double> lumped_node_mass(const Body& body)
{
    const Mesh& mesh = body.mesh;
    std::vector<double> m(mesh.num_nodes(), 0.0);
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const double share = body.material(t).rho * mesh.tri_area[t] / 3.0;
        for (int v : mesh.tris[t]) {
            m[static_cast<std::size_t>(v)] += share;
        }
    }
    return m;
}

/// Lumped mass diagonal per displacement dof (two dofs per node).
inline std::vector<double> lumped_mass(const Mesh& mesh, double rho)
{
    std::vector<double> m(mesh.num_dofs(), 0.0);
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const double share = rho * mesh.tri_area[t] / 3.0;
        for (int v : mesh.tris[t]) {
            m[2 * static_cast<std::size_t>(v)] += share;
            m[2 * static_cast<std::size_t>(v) + 1] += share;
        }
    }
    return m;
}

inline std::vector<double> lumped_mass(const Body& body)
{
    const auto node = lumped_node_mass(body);
    std::vector<double> m(2 * node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        m[2 * i] = node[i];
        m[2 * i + 1] = node[i];
    }
    return m;
}

/// Stiffness of the mechanical increment with frozen damage: C(a) + D(a)/tau on every triangle
/// (a = triangle average of alpha_prev) plus the lumped inertia rho/tau^2 M.
inline SparseSym assemble_visc_elast_matrix(const Body& body, std::span<const double> alpha_prev, double tau)
{
    if (!(tau > 0.0)) {
        throw PreconditionError("assemble_visc_elast_matrix: tau must be positive");
    }
    const Mesh& mesh = body.mesh;
    TripletBuilder tb(mesh.num_dofs());
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const MaterialParams& m = body.material(t);
        const double g = degradation(m, tri_average(mesh, alpha_prev, t));
        const double lambda = g * m.lambda1 + (m.lambda0 + m.chi * g * m.lambda1) / tau;
        const double mu = g * m.mu1 + (m.mu0 + m.chi * g * m.mu1) / tau;
        const auto k = element_stiffness(mesh, t, lambda, mu);
        const auto& tri = mesh.tris[t];
        for (int r = 0; r < 6; ++r) {
            const int gr = 2 * tri[r / 2] + r % 2;
            for (int c = 0; c < 6; ++c) {
                tb.add(gr, 2 * tri[c / 2] + c % 2, k[static_cast<std::size_t>(r * 6 + c)]);
            }
        }
    }
    const auto mass = lumped_mass(body);
    for (std::size_t i = 0; i < mass.size(); ++i) {
        tb.add(static_cast<int>(i), static_cast<int>(i), mass[i] / (tau * tau));
    }
    return tb.build();
}

struct EnergyGrad {
    double energy = 0.0;
    std::vector<double> grad;
};

namespace detail {

template <class Coef>
EnergyGrad p_laplacian(const Mesh& mesh, std::span<const double> alpha, Coef coef)
{
    EnergyGrad out;
    out.grad.assign(mesh.num_nodes(), 0.0);
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const auto [kappa, p] = coef(t);
        const Vec2 ga = tri_gradient(mesh, alpha, t);
        const double sq = dot(ga, ga);
        const double area = mesh.tri_area[t];
        const double pow_pm2 = std::pow(sq, 0.5 * (p - 2.0)); // |grad|^(p-2)
        out.energy += area * kappa / p * pow_pm2 * sq;
        const double w = area * kappa * pow_pm2;
        const auto& g = mesh.tri_grads[t];
        for (int a = 0; a < 3; ++a) {
            out.grad[static_cast<std::size_t>(mesh.tris[t][a])] += w * dot(ga, g[a]);
        }
    }
    return out;
}

} // namespace detail

/// sum_t (kappa/p) |grad alpha|^p area and its exact derivative with respect to nodal values.
inline EnergyGrad p_laplacian_energy_grad(const Mesh& mesh, std::span<const double> alpha, double kappa,
                                          double p_exp)
{
    if (p_exp < 2.0) {
        throw PreconditionError("p_laplacian_energy_grad: p must be >= 2");
    }
    return detail::p_laplacian(mesh, alpha, [&](std::size_t) { return std::pair{kappa, p_exp}; });
}

inline EnergyGrad p_laplacian_energy_grad(const Body& body, std::span<const double> alpha)
{
    return detail::p_laplacian(body.mesh, alpha, [&](std::size_t t) {
        return std::pair{body.material(t).kappa, body.material(t).p_exp};
    });
}

} // namespace pds
