#pragma once

#include "pds/errors.hpp"
#include "pds/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pds {

/// Constitutive constants. Elasticity is C(a) = g(a) C1 with g(a) = eps_res + a^2,
/// viscosity is D(a) = D0 + chi C(a), yield stress is sigma0 + sigma1 a and the
/// damage energy is phi(a) = -Gc (1 - a)^2 / (2 eps_at).
struct MaterialParams {
    double lambda1 = 100.0;
    double mu1 = 100.0;
    double eps_res = 1e-4;
    double lambda0 = 0.1;
    double mu0 = 0.1;
    double chi = 1e-3;
    double sigma0 = 1.0;
    double sigma1 = 0.5;
    double Gc = 0.01;
    double eps_at = 0.1;
    double eta = 1e-3;
    double kappa = 1e-3;
    double p_exp = 2.0;
    double rho = 1.0;

    friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

struct MaterialField {
    const char* name;
    double MaterialParams::*member;
};

/// Configuration names of the material constants, in declaration order.
inline constexpr MaterialField material_fields[] = {
    {"lambda1", &MaterialParams::lambda1}, {"mu1", &MaterialParams::mu1},       {"eps_res", &MaterialParams::eps_res},
    {"lambda0", &MaterialParams::lambda0}, {"mu0", &MaterialParams::mu0},       {"chi", &MaterialParams::chi},
    {"sigma0", &MaterialParams::sigma0},   {"sigma1", &MaterialParams::sigma1}, {"Gc", &MaterialParams::Gc},
    {"eps_at", &MaterialParams::eps_at},   {"eta", &MaterialParams::eta},       {"kappa", &MaterialParams::kappa},
    {"p", &MaterialParams::p_exp},         {"rho", &MaterialParams::rho},
};

inline const MaterialField* find_material_field(std::string_view name)
{
    for (const auto& f : material_fields) {
        if (name == f.name) {
            return &f;
        }
    }
    return nullptr;
}

/// Names of every violated constraint; empty when the parameters are admissible.
inline std::vector<std::string> violated_constraints(const MaterialParams& m)
{
    std::vector<std::string> out;
    auto require = [&out](bool ok, const char* what) {
        if (!ok) {
            out.emplace_back(what);
        }
    };
    require(m.mu1 >= 0.0, "mu1 >= 0 (C1 positive semidefinite)");
    require(m.lambda1 + m.mu1 >= 0.0, "lambda1 + mu1 >= 0 (C1 positive semidefinite)");
    require(m.eps_res >= 0.0, "eps_res >= 0");
    require(m.mu0 > 0.0, "mu0 > 0 (D0 positive definite)");
    require(m.lambda0 + m.mu0 > 0.0, "lambda0 + mu0 > 0 (D0 positive definite)");
    require(m.chi >= 0.0, "chi >= 0");
    require(m.sigma0 > 0.0, "sigma0 > 0 (yield stress positivity)");
    require(m.sigma1 >= 0.0, "sigma1 >= 0 (yield stress nondecreasing)");
    require(m.Gc >= 0.0, "Gc >= 0 (phi' >= 0)");
    require(m.eps_at > 0.0, "eps_at > 0");
    require(m.eta > 0.0, "eta > 0");
    require(m.kappa > 0.0, "kappa > 0");
    require(m.p_exp >= 2.0, "p >= 2");
    require(m.rho > 0.0, "rho > 0");
    return out;
}

inline void validate(const MaterialParams& m)
{
    const auto bad = violated_constraints(m);
    if (!bad.empty()) {
        std::string msg = "invalid material parameters:";
        for (const auto& b : bad) {
            msg += " [" + b + "]";
        }
        throw ConfigError(msg);
    }
}

/// Non-fatal remarks about admissible but degenerate choices.
inline std::vector<std::string> material_warnings(const MaterialParams& m)
{
    std::vector<std::string> out;
    if (m.eps_res == 0.0) {
        out.emplace_back("eps_res = 0: the mechanical system loses elastic stiffness where damage is complete");
    }
    return out;
}

/// Ambrosio-Tortorelli preset: g(a) = (eps/eps0)^2 + a^2, phi from the crack surface density,
/// kappa/2 |grad a|^2 = Gc eps/2 |grad a|^2.
inline MaterialParams ambrosio_tortorelli(MaterialParams base, double Gc, double eps, double eps0)
{
    base.Gc = Gc;
    base.eps_at = eps;
    base.eps_res = (eps / eps0) * (eps / eps0);
    base.kappa = Gc * eps;
    base.p_exp = 2.0;
    return base;
}

inline double degradation(const MaterialParams& m, double a) { return m.eps_res + a * a; }
inline double degradation_slope(double a) { return 2.0 * a; }

/// lambda tr(e) I + 2 mu e
inline Sym2 isotropic_apply(double lambda, double mu, const Sym2& e)
{
    return lambda * e.trace() * Sym2::identity() + 2.0 * mu * e;
}

/// C(alpha) e
inline Sym2 stiffness_apply(const MaterialParams& m, double alpha, const Sym2& e)
{
    return degradation(m, alpha) * isotropic_apply(m.lambda1, m.mu1, e);
}

/// D(alpha) edot = D0 edot + chi C(alpha) edot
inline Sym2 viscosity_apply(const MaterialParams& m, double alpha, const Sym2& edot)
{
    return isotropic_apply(m.lambda0, m.mu0, edot) + m.chi * stiffness_apply(m, alpha, edot);
}

inline double yield_stress(const MaterialParams& m, double alpha) { return m.sigma0 + m.sigma1 * alpha; }

/// Specific damage energy phi(a) = -Gc (1 - a)^2 / (2 eps_at).
inline double damage_energy(const MaterialParams& m, double a)
{
    return -m.Gc * (1.0 - a) * (1.0 - a) / (2.0 * m.eps_at);
}

inline double damage_energy_slope(const MaterialParams& m, double a) { return m.Gc * (1.0 - a) / m.eps_at; }

/// Difference quotient of g, (g(a) - g(b)) / (a - b), with g'(a) on the diagonal.
/// For the quadratic degradation this is a + b in both cases.
inline double secant_g(double a, double b) { return a + b; }

/// Difference quotient of phi; Gc (2 - a - b) / (2 eps_at) for the quadratic phi.
inline double secant_phi(const MaterialParams& m, double a, double b)
{
    return m.Gc * (2.0 - a - b) / (2.0 * m.eps_at);
}

struct DamagePrimitives {
    double H_C = 0.0;   ///< int_0^alpha secant_g(s, alpha_prev) ds
    double H_phi = 0.0; ///< int_0^alpha secant_phi(s, alpha_prev) ds
};

inline DamagePrimitives damage_primitives(const MaterialParams& m, double alpha, double alpha_prev)
{
    DamagePrimitives out;
    out.H_C = 0.5 * alpha * alpha + alpha_prev * alpha;
    out.H_phi = m.Gc / (2.0 * m.eps_at) * (2.0 * alpha - 0.5 * alpha * alpha - alpha_prev * alpha);
    return out;
}

} // namespace pds
