#pragma once

#include "pds/errors.hpp"
#include "pds/fem.hpp"
#include "pds/state.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pds {

enum class LinearSolver { cholesky, cg };

struct MechOptions {
    double tol = 1e-9;   ///< relative objective decrease and max plastic-strain change per sweep
    int maxit = 200;     ///< outer (alternating) iterations
    LinearSolver solver = LinearSolver::cholesky;
    double cg_tol = 1e-12;
    int cg_maxit = 20000;

    friend bool operator==(const MechOptions&, const MechOptions&) = default;
};

/// Loads of one increment, both per displacement dof: the body force density f^k at the nodes and
/// the Dirichlet lift u_D^k (only its entries on Dirichlet nodes constrain the solution).
struct IncrementLoads {
    std::vector<double> body_force;
    std::vector<double> u_dirichlet;
};

struct MechResult {
    std::vector<double> u_new;
    std::vector<Sym2> e_el_new;
    std::vector<Dev2> pi_new;
    std::vector<Sym2> sigma;
    std::vector<double> objective_trace;
    int iters = 0;
    double equilibrium_residual = 0.0; ///< ||K u - rhs|| / ||rhs|| on free dofs at exit
};

struct RadialReturn {
    Dev2 pi_new;
    Dev2 s_dev;
};

/// Exact minimizer over pi of
///   muC |E - pi|^2 + muD_over_tau |E - pi - d_prev|^2 + sigY |pi - pi_prev|
/// (all tensors trace-free): a shrinkage of the trial stress onto the disk of radius sigY.
inline RadialReturn radial_return(Dev2 E_dev, Dev2 pi_prev, Dev2 d_prev, double muC, double muD_over_tau, double sigY)
{
    if (!(sigY > 0.0)) {
        throw ConfigError("radial_return: yield stress must be positive");
    }
    const Dev2 a = E_dev - pi_prev;
    const Dev2 s_tr = 2.0 * muC * a + 2.0 * muD_over_tau * (a - d_prev);
    const double s_norm = norm(s_tr);
    if (s_norm <= sigY) {
        return {pi_prev, s_tr};
    }
    const double two_mu = 2.0 * (muC + muD_over_tau);
    const double gamma = (s_norm - sigY) / two_mu;
    const Dev2 n = (1.0 / s_norm) * s_tr;
    return {pi_prev + gamma * n, sigY * n};
}

namespace detail {

struct TriModuli {
    double g = 0.0;
    double sigY = 0.0;
};

inline TriModuli tri_moduli(const Body& body, std::span<const double> alpha_prev, std::size_t t)
{
    const MaterialParams& m = body.material(t);
    const double a = tri_average(body.mesh, alpha_prev, t);
    return {degradation(m, a), yield_stress(m, a)};
}

/// C(a) e for a precomputed degradation value.
inline Sym2 elastic_stress(const MaterialParams& m, double g, const Sym2& e)
{
    return g * isotropic_apply(m.lambda1, m.mu1, e);
}

inline Sym2 viscous_stress(const MaterialParams& m, double g, const Sym2& edot)
{
    return isotropic_apply(m.lambda0, m.mu0, edot) + (m.chi * g) * isotropic_apply(m.lambda1, m.mu1, edot);
}

} // namespace detail

/// Value of the incremental functional for displacement u and plastic strain pi given the previous
/// levels in `prev` (u^{k-1} = prev.u, u^{k-2} = prev.u_prev, e^{k-1} = prev.e_el, pi^{k-1} = prev.pi).
inline double objective_J(const Body& body, std::span<const double> u, std::span<const Dev2> pi, const State& prev,
                          std::span<const double> alpha_prev, std::span<const double> body_force, double tau)
{
    const Mesh& mesh = body.mesh;
    double J = 0.0;
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const MaterialParams& m = body.material(t);
        const auto mod = detail::tri_moduli(body, alpha_prev, t);
        const Sym2 e = strain_of(mesh, u, t) - pi[t].sym();
        const Sym2 de = e - prev.e_el[t];
        const double density = 0.5 * ddot(detail::elastic_stress(m, mod.g, e), e) +
                               0.5 / tau * ddot(detail::viscous_stress(m, mod.g, de), de) +
                               mod.sigY * norm(pi[t] - prev.pi[t]);
        J += mesh.tri_area[t] * density;
    }
    const auto mass = lumped_mass(body);
    const auto geo = lumped_mass(mesh, 1.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double acc = u[i] - 2.0 * prev.u[i] + prev.u_prev[i];
        J += 0.5 * mass[i] / (tau * tau) * acc * acc - geo[i] * body_force[i] * u[i];
    }
    return J;
}

/// Total stress C(a) e + D(a) (e - e_prev)/tau per triangle, a = triangle average of alpha_prev.
inline std::vector<Sym2> total_stress(const Body& body, std::span<const double> alpha_prev, std::span<const Sym2> e,
                                      std::span<const Sym2> e_prev, double tau)
{
    std::vector<Sym2> s(e.size());
    for (std::size_t t = 0; t < e.size(); ++t) {
        const MaterialParams& m = body.material(t);
        const double g = degradation(m, tri_average(body.mesh, alpha_prev, t));
        s[t] = detail::elastic_stress(m, g, e[t]) + (1.0 / tau) * detail::viscous_stress(m, g, e[t] - e_prev[t]);
    }
    return s;
}

/// Minimizes the incremental functional over (u, pi) with damage frozen at `prev.alpha` by
/// alternating an exact displacement solve with the per-triangle radial return.
inline MechResult mechanical_step(const Body& body, const State& prev, const IncrementLoads& loads, double tau,
                                  const MechOptions& opt = {})
{
    if (!(opt.tol > 0.0)) {
        throw PreconditionError("mechanical_step: tol must be positive");
    }
    const Mesh& mesh = body.mesh;
    const std::size_t ndof = mesh.num_dofs();
    const std::size_t ntri = mesh.num_tris();
    std::span<const double> alpha_prev = prev.alpha;

    const SparseSym K = assemble_visc_elast_matrix(body, alpha_prev, tau);
    std::vector<char> fixed(ndof, 0);
    for (int n : mesh.dirichlet_nodes) {
        fixed[2 * static_cast<std::size_t>(n)] = 1;
        fixed[2 * static_cast<std::size_t>(n) + 1] = 1;
    }
    const ReducedSystem red = restrict_to_free(K, fixed);
    std::optional<EnvelopeCholesky> chol;
    if (opt.solver == LinearSolver::cholesky) {
        chol.emplace(red.A);
    }

    const auto mass = lumped_mass(body);
    const auto geo = lumped_mass(mesh, 1.0);
    std::vector<double> base_rhs(ndof);
    for (std::size_t i = 0; i < ndof; ++i) {
        base_rhs[i] = mass[i] / (tau * tau) * (2.0 * prev.u[i] - prev.u_prev[i]) + geo[i] * loads.body_force[i];
    }

    std::vector<detail::TriModuli> mod(ntri);
    for (std::size_t t = 0; t < ntri; ++t) {
        mod[t] = detail::tri_moduli(body, alpha_prev, t);
    }

    MechResult res;
    res.u_new = prev.u;
    for (int n : mesh.dirichlet_nodes) {
        for (std::size_t c = 0; c < 2; ++c) {
            const std::size_t d = 2 * static_cast<std::size_t>(n) + c;
            res.u_new[d] = loads.u_dirichlet[d];
        }
    }
    res.pi_new = prev.pi;
    auto& u = res.u_new;
    auto& pi = res.pi_new;

    auto rhs_for = [&](std::span<const Dev2> p) {
        std::vector<double> rhs = base_rhs;
        for (std::size_t t = 0; t < ntri; ++t) {
            const MaterialParams& m = body.material(t);
            const Sym2 ps = p[t].sym();
            const Sym2 s = detail::elastic_stress(m, mod[t].g, ps) +
                           (1.0 / tau) * detail::viscous_stress(m, mod[t].g, ps + prev.e_el[t]);
            add_stress_divergence(mesh, t, s, 1.0, rhs);
        }
        return rhs;
    };

    double J_prev = objective_J(body, u, pi, prev, alpha_prev, loads.body_force, tau);
    res.objective_trace.push_back(J_prev);
    std::vector<double> b_red;
    for (int it = 1; it <= opt.maxit; ++it) {
        // Displacement block.
        const auto rhs = rhs_for(pi);
        b_red = reduced_rhs(K, red, rhs, u);
        std::vector<double> x(red.A.n);
        if (chol) {
            x = chol->solve(b_red);
        } else {
            for (std::size_t r = 0; r < x.size(); ++r) {
                x[r] = u[static_cast<std::size_t>(red.free_index[r])];
            }
            cg_solve(red.A, b_red, x, opt.cg_tol, static_cast<std::size_t>(opt.cg_maxit));
        }
        for (std::size_t r = 0; r < x.size(); ++r) {
            u[static_cast<std::size_t>(red.free_index[r])] = x[r];
        }

        // Plastic block.
        double max_change = 0.0;
        for (std::size_t t = 0; t < ntri; ++t) {
            const MaterialParams& m = body.material(t);
            const Dev2 E = dev(strain_of(mesh, u, t));
            const double muC = m.mu1 * mod[t].g;
            const double muD = (m.mu0 + m.chi * m.mu1 * mod[t].g) / tau;
            const auto rr = radial_return(E, prev.pi[t], dev(prev.e_el[t]), muC, muD, mod[t].sigY);
            max_change = std::max(max_change, norm(rr.pi_new - pi[t]));
            pi[t] = rr.pi_new;
        }

        const double J = objective_J(body, u, pi, prev, alpha_prev, loads.body_force, tau);
        if (!std::isfinite(J)) {
            throw NumericalError("mechanical_step: objective became non-finite", res.objective_trace);
        }
        res.objective_trace.push_back(J);
        res.iters = it;
        const double rel_decrease = (J_prev - J) / std::max(std::abs(J), 1e-300);
        J_prev = J;
        if (rel_decrease < opt.tol && max_change < opt.tol) {
            break;
        }
        if (it == opt.maxit) {
            throw NumericalError("mechanical_step: " + std::to_string(opt.maxit) +
                                     " alternating iterations exceeded (last plastic change " +
                                     std::to_string(max_change) + ")",
                                 res.objective_trace);
        }
    }

    // Equilibrium residual with the final plastic strain.
    {
        const auto rhs = rhs_for(pi);
        const auto b = reduced_rhs(K, red, rhs, u);
        std::vector<double> x(red.A.n);
        for (std::size_t r = 0; r < x.size(); ++r) {
            x[r] = u[static_cast<std::size_t>(red.free_index[r])];
        }
        const auto Ax = red.A * x;
        double rn = 0.0;
        for (std::size_t r = 0; r < x.size(); ++r) {
            rn += (Ax[r] - b[r]) * (Ax[r] - b[r]);
        }
        const double bn = norm2(b);
        res.equilibrium_residual = bn > 0.0 ? std::sqrt(rn) / bn : std::sqrt(rn);
    }

    res.e_el_new.resize(ntri);
    for (std::size_t t = 0; t < ntri; ++t) {
        res.e_el_new[t] = strain_of(mesh, u, t) - pi[t].sym();
    }
    res.sigma = total_stress(body, alpha_prev, res.e_el_new, prev.e_el, tau);
    return res;
}

} // namespace pds
