#pragma once

#include "pds/errors.hpp"
#include "pds/fem.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pds {

struct DamageOptions {
    double tol = 1e-8; ///< projected-gradient norm
    int maxit = 5000;

    friend bool operator==(const DamageOptions&, const DamageOptions&) = default;
};

struct DamageResult {
    std::vector<double> alpha_new;
    std::vector<double> objective_trace;
    std::vector<int> active_lower; ///< nodes with alpha_new == 0
    std::vector<int> active_upper; ///< nodes with alpha_new == alpha_prev
    int iters = 0;
    double projected_gradient = 0.0;
};

/// Damage functional of one increment and its gradient with respect to nodal damage. Per triangle,
/// with a and a_prev the vertex averages of alpha and alpha_prev:
///   area * [ eta/(2 tau) avg((alpha - alpha_prev)^2) + kappa/p |grad alpha|^p
///            + 1/2 (C1 e:e) H_C(a; a_prev) - H_phi(a; a_prev) ]
inline EnergyGrad damage_objective_grad(const Body& body, std::span<const double> alpha,
                                        std::span<const double> alpha_prev, std::span<const Sym2> e_el, double tau)
{
    const Mesh& mesh = body.mesh;
    EnergyGrad out = p_laplacian_energy_grad(body, alpha);
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const MaterialParams& m = body.material(t);
        const auto& tri = mesh.tris[t];
        const double area = mesh.tri_area[t];
        const double a = tri_average(mesh, alpha, t);
        const double ap = tri_average(mesh, alpha_prev, t);
        const double ce = 0.5 * ddot(isotropic_apply(m.lambda1, m.mu1, e_el[t]), e_el[t]);
        const auto H = damage_primitives(m, a, ap);
        double visc = 0.0;
        for (int v : tri) {
            const double d = alpha[static_cast<std::size_t>(v)] - alpha_prev[static_cast<std::size_t>(v)];
            visc += d * d;
        }
        out.energy += area * (m.eta / (2.0 * tau) * visc / 3.0 + ce * H.H_C - H.H_phi);
        const double drive = (ce * secant_g(a, ap) - secant_phi(m, a, ap)) / 3.0;
        for (int v : tri) {
            const auto i = static_cast<std::size_t>(v);
            out.grad[i] += area * (m.eta / tau * (alpha[i] - alpha_prev[i]) / 3.0 + drive);
        }
    }
    return out;
}

inline double damage_objective(const Body& body, std::span<const double> alpha, std::span<const double> alpha_prev,
                               std::span<const Sym2> e_el, double tau)
{
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!(alpha[i] >= 0.0 && alpha[i] <= alpha_prev[i])) {
            throw PreconditionError("damage_objective: node " + std::to_string(i) +
                                    " violates 0 <= alpha <= alpha_prev");
        }
    }
    return damage_objective_grad(body, alpha, alpha_prev, e_el, tau).energy;
}

namespace detail {

inline double clamp_box(double x, double hi) { return std::min(std::max(x, 0.0), hi); }

} // namespace detail

/// Minimizes the damage functional over the box 0 <= alpha <= alpha_prev by projected gradient
/// descent with Barzilai-Borwein step lengths and backtracking.
inline DamageResult damage_step(const Body& body, std::span<const double> alpha_prev, std::span<const Sym2> e_el,
                                double tau, const DamageOptions& opt = {})
{
    const std::size_t n = alpha_prev.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(alpha_prev[i] >= 0.0 && alpha_prev[i] <= 1.0)) {
            throw PreconditionError("damage_step: alpha_prev outside [0,1] at node " + std::to_string(i));
        }
    }
    auto eval = [&](std::span<const double> x) { return damage_objective_grad(body, x, alpha_prev, e_el, tau); };
    auto pg_norm = [&](std::span<const double> x, std::span<const double> g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = detail::clamp_box(x[i] - g[i], alpha_prev[i]) - x[i];
            s += d * d;
        }
        return std::sqrt(s);
    };

    DamageResult res;
    std::vector<double> x(alpha_prev.begin(), alpha_prev.end());
    EnergyGrad fg = eval(x);
    res.objective_trace.push_back(fg.energy);
    double step = 1.0;
    std::vector<double> d(n), trial(n);
    for (int it = 0;; ++it) {
        res.projected_gradient = pg_norm(x, fg.grad);
        res.iters = it;
        if (res.projected_gradient < opt.tol) {
            break;
        }
        if (it == opt.maxit) {
            throw NumericalError("damage_step: " + std::to_string(opt.maxit) +
                                     " iterations exceeded (projected gradient " +
                                     std::to_string(res.projected_gradient) + ")",
                                 res.objective_trace);
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = detail::clamp_box(x[i] - step * fg.grad[i], alpha_prev[i]) - x[i];
            slope += fg.grad[i] * d[i];
        }
        // Backtracking along the projected direction. The clamp only absorbs rounding.
        double t = 1.0;
        EnergyGrad trial_fg;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = detail::clamp_box(x[i] + t * d[i], alpha_prev[i]);
            }
            trial_fg = eval(trial);
            // Sufficient decrease through the directional derivative at the trial point: by convexity
            // F(trial) - F(x) <= t * grad F(trial) . d <= 1e-4 * t * slope. Comparing energies instead
            // fails once the constant part of F (of order Gc/eps_at) swamps the decrease in rounding.
            double trial_slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial_slope += trial_fg.grad[i] * d[i];
            }
            if (trial_slope <= 1e-4 * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No representable decrease left: the iterate is optimal to rounding.
            break;
        }
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = trial[i] - x[i];
            ss += s * s;
            sy += s * (trial_fg.grad[i] - fg.grad[i]);
        }
        x.swap(trial);
        fg = std::move(trial_fg);
        res.objective_trace.push_back(fg.energy);
        step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : 1e12;
        if (ss == 0.0) {
            break;
        }
    }

    // Nodes pinned within a few ulps of alpha_prev while the gradient still pushes downward have
    // their minimizer below the ulp spacing. Step them down one ulp at a time until the sign flips.
    for (int pass = 0; pass < 8; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double near = alpha_prev[i] - 8.0 * (std::nextafter(alpha_prev[i], 2.0) - alpha_prev[i]);
            if (fg.grad[i] > 0.0 && x[i] > 0.0 && x[i] >= near) {
                x[i] = std::nextafter(x[i], 0.0);
                moved = true;
            }
        }
        if (!moved) {
            break;
        }
        fg = eval(x);
        res.objective_trace.push_back(fg.energy);
    }
    res.projected_gradient = pg_norm(x, fg.grad);

    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] == 0.0) {
            res.active_lower.push_back(static_cast<int>(i));
        }
        if (x[i] == alpha_prev[i]) {
            res.active_upper.push_back(static_cast<int>(i));
        }
    }
    res.alpha_new = std::move(x);
    return res;
}

} // namespace pds
