#pragma once

#include "pds/damage_step.hpp"
#include "pds/errors.hpp"
#include "pds/fem.hpp"
#include "pds/mech_step.hpp"
#include "pds/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace pds {

/// Every term of the discrete energy inequality for the increment k-1 -> k, plus the pointwise
/// residuals of yield admissibility, flow-rule complementarity and the damage variational inequality.
/// Energies are at level k; *_d and work_* are increments over the step.
struct EnergyLedger {
    int k = 0;
    double t = 0.0;
    double kinetic = 0.0;
    double stored_elastic = 0.0;      ///< 1/2 C(alpha^k) e^k : e^k
    double stored_elastic_prev = 0.0; ///< 1/2 C(alpha^{k-1}) e^k : e^k (not written to CSV)
    double stored_damage = 0.0;       ///< kappa/p |grad alpha^k|^p - phi(alpha^k)
    double visc_d = 0.0;
    double plast_d = 0.0;
    double dmg_d = 0.0;
    double work_body = 0.0;
    double work_dir = 0.0;
    double ineq_res = 0.0; ///< cumulative: external work - (energy increase + dissipation) from level 0
    double yield_res = 0.0;
    double compl_res = 0.0;
    double vi_res = 0.0; ///< worst damage variational-inequality violation (energy units)

    double energy() const { return kinetic + stored_elastic + stored_damage; }
    double dissipation() const { return visc_d + plast_d + dmg_d; }
    double work() const { return work_body + work_dir; }
};

namespace detail {

inline double lumped_l2_sq(std::span<const double> geo, std::span<const double> v)
{
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += geo[i] * v[i] * v[i];
    }
    return s;
}

/// Elastic energy of strains `e` with the degradation of each triangle taken from `alpha`.
inline double elastic_energy(const Body& body, std::span<const double> alpha, std::span<const Sym2> e)
{
    double s = 0.0;
    for (std::size_t t = 0; t < e.size(); ++t) {
        const MaterialParams& m = body.material(t);
        const double a = tri_average(body.mesh, alpha, t);
        s += body.mesh.tri_area[t] * 0.5 * ddot(stiffness_apply(m, a, e[t]), e[t]);
    }
    return s;
}

inline double damage_stored_energy(const Body& body, std::span<const double> alpha)
{
    double s = p_laplacian_energy_grad(body, alpha).energy;
    for (std::size_t t = 0; t < body.mesh.num_tris(); ++t) {
        s -= body.mesh.tri_area[t] * damage_energy(body.material(t), tri_average(body.mesh, alpha, t));
    }
    return s;
}

inline double kinetic_energy(const Body& body, const State& s, double tau)
{
    const auto mass = lumped_mass(body);
    return 0.5 * lumped_l2_sq(mass, velocity(s, tau));
}

} // namespace detail

/// Ledger row for the initial level: energies only.
inline EnergyLedger initial_ledger(const Body& body, const State& s0, double tau)
{
    EnergyLedger L;
    L.k = s0.k;
    L.t = s0.t;
    L.kinetic = detail::kinetic_energy(body, s0, tau);
    L.stored_elastic = detail::elastic_energy(body, s0.alpha, s0.e_el);
    L.stored_elastic_prev = detail::elastic_energy(body, s0.alpha_prev, s0.e_el);
    L.stored_damage = detail::damage_stored_energy(body, s0.alpha);
    return L;
}

/// Running sums needed to turn per-step terms into the cumulative inequality.
struct LedgerTotals {
    double initial_energy = 0.0;
    double dissipation = 0.0;
    double work = 0.0;
    std::vector<EnergyLedger> rows;
};

inline LedgerTotals start_totals(const EnergyLedger& initial)
{
    LedgerTotals tot;
    tot.initial_energy = initial.energy();
    tot.rows.push_back(initial);
    return tot;
}

/// Normalization used by every energy gate: energies at level k plus accumulated dissipation plus one.
inline double residual_scale(const EnergyLedger& L, double cumulative_dissipation)
{
    return std::abs(L.kinetic) + std::abs(L.stored_elastic) + std::abs(L.stored_damage) + cumulative_dissipation + 1.0;
}

/// Fills the cumulative inequality residual of `L` and appends it to the totals.
inline void accumulate(LedgerTotals& tot, EnergyLedger& L)
{
    tot.dissipation += L.dissipation();
    tot.work += L.work();
    L.ineq_res = tot.work - (L.energy() - tot.initial_energy + tot.dissipation);
    tot.rows.push_back(L);
}

/// Per-step terms of the energy inequality for consecutive levels `old_s` (k-1) and `new_s` (k).
/// `loads` are the data of level k, `u_dirichlet_old` the Dirichlet lift of level k-1.
inline EnergyLedger energy_terms(const Body& body, const State& new_s, const State& old_s, const IncrementLoads& loads,
                                 std::span<const double> u_dirichlet_old, double tau)
{
    const Mesh& mesh = body.mesh;
    EnergyLedger L;
    L.k = new_s.k;
    L.t = new_s.t;
    L.kinetic = detail::kinetic_energy(body, new_s, tau);
    L.stored_elastic = detail::elastic_energy(body, new_s.alpha, new_s.e_el);
    L.stored_elastic_prev = detail::elastic_energy(body, old_s.alpha, new_s.e_el);
    L.stored_damage = detail::damage_stored_energy(body, new_s.alpha);

    const auto sigma = total_stress(body, old_s.alpha, new_s.e_el, old_s.e_el, tau);
    const std::size_t ndof = mesh.num_dofs();
    std::vector<double> du_d(ndof);
    for (std::size_t i = 0; i < ndof; ++i) {
        du_d[i] = loads.u_dirichlet[i] - u_dirichlet_old[i];
    }

    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        const MaterialParams& m = body.material(t);
        const double area = mesh.tri_area[t];
        const double a_old = tri_average(mesh, old_s.alpha, t);
        const Sym2 de = new_s.e_el[t] - old_s.e_el[t];
        L.visc_d += area / tau * ddot(viscosity_apply(m, a_old, de), de);
        const Dev2 dpi = new_s.pi[t] - old_s.pi[t];
        const double sigY = yield_stress(m, a_old);
        const double dpi_norm = norm(dpi);
        L.plast_d += area * sigY * dpi_norm;
        L.work_dir += area * ddot(sigma[t], strain_of(mesh, du_d, t));

        const Dev2 sdev = dev(sigma[t]);
        L.yield_res = std::max(L.yield_res, std::max(0.0, norm(sdev) - sigY) / sigY);
        if (dpi_norm > 0.0) {
            L.compl_res = std::max(L.compl_res, std::abs(ddot(sdev, dpi) - sigY * dpi_norm) / (sigY * dpi_norm));
        }
        double dd = 0.0;
        for (int v : mesh.tris[t]) {
            const double d = new_s.alpha[static_cast<std::size_t>(v)] - old_s.alpha[static_cast<std::size_t>(v)];
            dd += d * d;
        }
        L.dmg_d += area * m.eta * dd / 3.0 / tau;
    }

    const auto mass = lumped_mass(body);
    const auto geo = lumped_mass(mesh, 1.0);
    for (std::size_t i = 0; i < ndof; ++i) {
        const double du = new_s.u[i] - old_s.u[i];
        const double acc = (new_s.u[i] - 2.0 * old_s.u[i] + old_s.u_prev[i]) / (tau * tau);
        L.work_body += geo[i] * loads.body_force[i] * (du - du_d[i]);
        L.work_dir += mass[i] * acc * du_d[i];
    }
    return L;
}

/// Worst violation of the discrete damage variational inequality at alpha^k over `probes` random
/// admissible test rates phi <= 0 with alpha^{k-1} + tau phi >= 0. The first probe is the realized
/// rate (alpha^k - alpha^{k-1})/tau. Returns the largest value of -F'(alpha^k)[beta - alpha^k],
/// beta = alpha^{k-1} + tau phi, clipped at zero.
inline double damage_vi_residual(const Body& body, const State& new_s, const State& old_s, double tau, int probes,
                                 std::uint64_t seed)
{
    const auto fg = damage_objective_grad(body, new_s.alpha, old_s.alpha, new_s.e_el, tau);
    const std::size_t n = new_s.alpha.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    std::vector<double> beta(n);
    for (int p = 0; p < probes; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = old_s.alpha[i];
            if (p == 0) {
                beta[i] = new_s.alpha[i];
            } else if (p % 2 == 1) {
                beta[i] = hi * unif(rng);
            } else {
                beta[i] = unif(rng) < 0.5 ? 0.0 : hi;
            }
        }
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d += fg.grad[i] * (beta[i] - new_s.alpha[i]);
        }
        worst = std::max(worst, -d);
    }
    return worst;
}

struct InequalityReport {
    bool pass = true;
    double worst = 0.0;        ///< smallest normalized cumulative residual (negative means violation)
    std::vector<int> flagged;  ///< step indices that failed any check
    std::vector<std::string> reasons;
};

/// Re-derives the cumulative inequality from the per-step terms of every row (row 0 is the initial
/// level) and flags steps whose residual falls below -atol - rtol * scale, whose dissipation terms
/// are negative, or whose recorded cumulative residual disagrees with the recomputed one.
inline InequalityReport check_energy_inequality(std::span<const EnergyLedger> rows, double rtol, double atol = 0.0)
{
    if (rows.empty()) {
        throw PreconditionError("check_energy_inequality: empty ledger");
    }
    InequalityReport rep;
    const double E0 = rows.front().energy();
    double diss = 0.0, work = 0.0;
    auto flag = [&rep](int k, std::string why) {
        rep.pass = false;
        if (rep.flagged.empty() || rep.flagged.back() != k) {
            rep.flagged.push_back(k);
        }
        rep.reasons.push_back("step " + std::to_string(k) + ": " + why);
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const EnergyLedger& L = rows[i];
        if (L.visc_d < 0.0 || L.plast_d < 0.0 || L.dmg_d < 0.0) {
            flag(L.k, "negative dissipation");
        }
        diss += L.dissipation();
        work += L.work();
        const double res = work - (L.energy() - E0 + diss);
        const double scale = residual_scale(L, diss);
        rep.worst = std::min(rep.worst, res / scale);
        if (res < -atol - rtol * scale) {
            flag(L.k, "energy inequality violated (normalized residual " + std::to_string(res / scale) + ")");
        }
        if (std::abs(res - L.ineq_res) > 1e-12 * scale) {
            flag(L.k, "recorded cumulative residual does not match its terms");
        }
    }
    return rep;
}

/// Gate values for the pointwise residual columns.
struct ResidualGates {
    double ineq_rtol = 1e-8;
    double yield_tol = 1e-8;
    double compl_tol = 1e-7;
    double vi_rtol = 1e-7;

    friend bool operator==(const ResidualGates&, const ResidualGates&) = default;
};

struct GateReport {
    bool pass = true;
    std::vector<std::string> failures;
    double worst_ineq = 0.0;
    double worst_yield = 0.0;
    double worst_compl = 0.0;
    double worst_vi = 0.0; ///< normalized by the residual scale
};

inline GateReport check_gates(std::span<const EnergyLedger> rows, const ResidualGates& g)
{
    GateReport rep;
    const auto ineq = check_energy_inequality(rows, g.ineq_rtol);
    rep.worst_ineq = ineq.worst;
    if (!ineq.pass) {
        rep.pass = false;
        rep.failures.push_back("energy_inequality: " + ineq.reasons.front());
    }
    double diss = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const EnergyLedger& L = rows[i];
        diss += L.dissipation();
        rep.worst_yield = std::max(rep.worst_yield, L.yield_res);
        rep.worst_compl = std::max(rep.worst_compl, L.compl_res);
        rep.worst_vi = std::max(rep.worst_vi, L.vi_res / residual_scale(L, diss));
    }
    auto gate = [&rep](bool ok, const std::string& what) {
        if (!ok) {
            rep.pass = false;
            rep.failures.push_back(what);
        }
    };
    gate(rep.worst_yield <= g.yield_tol, "yield_admissibility: " + std::to_string(rep.worst_yield));
    gate(rep.worst_compl <= g.compl_tol, "flow_rule_complementarity: " + std::to_string(rep.worst_compl));
    gate(rep.worst_vi <= g.vi_rtol, "damage_inequality: " + std::to_string(rep.worst_vi));
    return rep;
}

// ---------------------------------------------------------------------------------------------
// A-priori monitors

/// Discrete surrogates of the quantities bounded uniformly in tau by the energy estimates and by
/// the higher-order estimates obtained through w = u + chi (u^k - u^{k-1})/tau.
struct AprioriNorms {
    double max_velocity = 0.0;       ///< max_k ||delta u^k||_L2
    double sum_strain_rate_sq = 0.0; ///< sum_k tau ||delta e^k||^2_L2
    double sum_plastic_rate = 0.0;   ///< sum_k tau |delta pi^k|(Omega)
    double max_grad_alpha = 0.0;     ///< max_k ||grad alpha^k||_Lp
    double sum_damage_rate_sq = 0.0; ///< sum_k tau ||delta alpha^k||^2_L2
    double sum_accel_sq = 0.0;       ///< sum_k tau ||delta^2 u^k||^2_L2
    double max_strain_rate = 0.0;    ///< max_k ||delta e^k||_L2
    double max_plastic_rate = 0.0;   ///< max_k |delta pi^k|(Omega)
    double max_w_rate = 0.0;         ///< max_k ||delta w^k||_L2

    static constexpr const char* names[] = {"max_velocity",   "sum_strain_rate_sq", "sum_plastic_rate",
                                            "max_grad_alpha", "sum_damage_rate_sq", "sum_accel_sq",
                                            "max_strain_rate", "max_plastic_rate",  "max_w_rate"};

    std::vector<double> values() const
    {
        return {max_velocity,       sum_strain_rate_sq, sum_plastic_rate, max_grad_alpha,  sum_damage_rate_sq,
                sum_accel_sq,       max_strain_rate,    max_plastic_rate, max_w_rate};
    }
};

class AprioriMonitor {
public:
    AprioriMonitor(const Body& body, double tau, double chi)
        : body_(&body), tau_(tau), chi_(chi), geo_(lumped_mass(body.mesh, 1.0))
    {
        const auto node = lumped_mass(body.mesh, 1.0);
        geo_node_.resize(body.mesh.num_nodes());
        for (std::size_t i = 0; i < geo_node_.size(); ++i) {
            geo_node_[i] = node[2 * i];
        }
    }

    void observe_initial(const State& s0)
    {
        out_.max_velocity = std::max(out_.max_velocity, std::sqrt(detail::lumped_l2_sq(geo_, velocity(s0, tau_))));
        out_.max_grad_alpha = std::max(out_.max_grad_alpha, grad_alpha_lp(s0.alpha));
    }

    void observe_step(const State& old_s, const State& new_s)
    {
        const Mesh& mesh = body_->mesh;
        const double tau = tau_;
        const auto v = velocity(new_s, tau);
        const auto v_old = velocity(old_s, tau);
        std::vector<double> acc(v.size()), dw(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc[i] = (v[i] - v_old[i]) / tau;
            dw[i] = v[i] + chi_ * acc[i];
        }
        double de_sq = 0.0, dpi = 0.0;
        for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
            const Sym2 de = (1.0 / tau) * (new_s.e_el[t] - old_s.e_el[t]);
            de_sq += mesh.tri_area[t] * ddot(de, de);
            dpi += mesh.tri_area[t] * norm(new_s.pi[t] - old_s.pi[t]) / tau;
        }
        double da_sq = 0.0;
        for (std::size_t i = 0; i < new_s.alpha.size(); ++i) {
            const double da = (new_s.alpha[i] - old_s.alpha[i]) / tau;
            da_sq += geo_node_[i] * da * da;
        }
        out_.max_velocity = std::max(out_.max_velocity, std::sqrt(detail::lumped_l2_sq(geo_, v)));
        out_.sum_strain_rate_sq += tau * de_sq;
        out_.sum_plastic_rate += tau * dpi;
        out_.max_grad_alpha = std::max(out_.max_grad_alpha, grad_alpha_lp(new_s.alpha));
        out_.sum_damage_rate_sq += tau * da_sq;
        out_.sum_accel_sq += tau * detail::lumped_l2_sq(geo_, acc);
        out_.max_strain_rate = std::max(out_.max_strain_rate, std::sqrt(de_sq));
        out_.max_plastic_rate = std::max(out_.max_plastic_rate, dpi);
        out_.max_w_rate = std::max(out_.max_w_rate, std::sqrt(detail::lumped_l2_sq(geo_, dw)));
    }

    const AprioriNorms& norms() const { return out_; }

private:
    double grad_alpha_lp(std::span<const double> alpha) const
    {
        const Mesh& mesh = body_->mesh;
        double s = 0.0, p = 2.0;
        for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
            p = body_->material(t).p_exp;
            const Vec2 g = tri_gradient(mesh, alpha, t);
            s += mesh.tri_area[t] * std::pow(std::sqrt(dot(g, g)), p);
        }
        return std::pow(s, 1.0 / p);
    }

    const Body* body_;
    double tau_;
    double chi_;
    std::vector<double> geo_;
    std::vector<double> geo_node_;
    AprioriNorms out_;
};

/// Monitors of a whole trajectory (level 0 first).
inline AprioriNorms apriori_norms(const Body& body, std::span<const State> trajectory, double tau, double chi)
{
    if (trajectory.empty()) {
        throw PreconditionError("apriori_norms: empty trajectory");
    }
    AprioriMonitor mon(body, tau, chi);
    mon.observe_initial(trajectory.front());
    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        mon.observe_step(trajectory[k - 1], trajectory[k]);
    }
    return mon.norms();
}

// ---------------------------------------------------------------------------------------------
// Ledger CSV

inline constexpr const char* ledger_csv_header =
    "k,t,kinetic,stored_elastic,stored_damage,visc_d,plast_d,dmg_d,work_body,work_dir,ineq_res,yield_res,compl_res,"
    "vi_res";

inline void write_ledger_row(std::ostream& out, const EnergyLedger& L)
{
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", L.k, L.t,
                  L.kinetic, L.stored_elastic, L.stored_damage, L.visc_d, L.plast_d, L.dmg_d, L.work_body, L.work_dir,
                  L.ineq_res, L.yield_res, L.compl_res, L.vi_res);
    out << buf;
}

inline void write_ledger_csv(std::ostream& out, std::span<const EnergyLedger> rows)
{
    out << ledger_csv_header << '\n';
    for (const auto& L : rows) {
        write_ledger_row(out, L);
    }
}

inline std::vector<EnergyLedger> read_ledger_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("ledger: empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != ledger_csv_header) {
        throw ConfigError("ledger: unexpected header");
    }
    std::vector<EnergyLedger> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(cell, &used));
                while (used < cell.size() && (cell[used] == '\r' || cell[used] == ' ')) {
                    ++used;
                }
                if (used != cell.size()) {
                    throw std::invalid_argument(cell);
                }
            } catch (const std::exception&) {
                throw ConfigError("ledger line " + std::to_string(lineno) + ": malformed number '" + cell + "'");
            }
        }
        if (v.size() != 14) {
            throw ConfigError("ledger line " + std::to_string(lineno) + ": expected 14 columns");
        }
        EnergyLedger L;
        L.k = static_cast<int>(v[0]);
        L.t = v[1];
        L.kinetic = v[2];
        L.stored_elastic = v[3];
        L.stored_damage = v[4];
        L.visc_d = v[5];
        L.plast_d = v[6];
        L.dmg_d = v[7];
        L.work_body = v[8];
        L.work_dir = v[9];
        L.ineq_res = v[10];
        L.yield_res = v[11];
        L.compl_res = v[12];
        L.vi_res = v[13];
        rows.push_back(L);
    }
    if (rows.empty()) {
        throw ConfigError("ledger: no rows");
    }
    return rows;
}

} // namespace pds
