#pragma once

#include "pds/damage_step.hpp"
#include "pds/diagnostics.hpp"
#include "pds/errors.hpp"
#include "pds/material.hpp"
#include "pds/mech_step.hpp"
#include "pds/mesh.hpp"
#include "pds/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace pds {

/// Scalar time profile: none (0), constant a, ramp a + b t, sinus a sin(2 pi b t).
struct TimeProgram {
    enum class Kind { none, constant, ramp, sinus };
    Kind kind = Kind::none;
    double a = 0.0;
    double b = 0.0;

    double value(double t) const
    {
        switch (kind) {
        case Kind::none: return 0.0;
        case Kind::constant: return a;
        case Kind::ramp: return a + b * t;
        case Kind::sinus: return a * std::sin(2.0 * std::numbers::pi * b * t);
        }
        return 0.0;
    }

    double rate(double t) const
    {
        switch (kind) {
        case Kind::none:
        case Kind::constant: return 0.0;
        case Kind::ramp: return b;
        case Kind::sinus: return a * 2.0 * std::numbers::pi * b * std::cos(2.0 * std::numbers::pi * b * t);
        }
        return 0.0;
    }

    /// Mean over (t0, t1) by two-point Gauss quadrature.
    double mean(double t0, double t1) const
    {
        const double c = 0.5 * (t0 + t1), h = 0.5 * (t1 - t0) / std::numbers::sqrt3;
        return 0.5 * (value(c - h) + value(c + h));
    }

    friend bool operator==(const TimeProgram&, const TimeProgram&) = default;
};

enum class Profile { uniform, linear_x, linear_y };

/// u_D(t, x) = program(t) * profile(x) * direction, extended to every node.
/// linear_x and linear_y scale by x / Lx and y / Ly of the mesh bounding box.
struct DirichletProgram {
    TimeProgram program;
    Profile profile = Profile::uniform;
    Vec2 direction{1.0, 0.0};

    friend bool operator==(const DirichletProgram&, const DirichletProgram&) = default;
};

/// f(t, x) = program(t) * direction.
struct BodyLoad {
    TimeProgram program;
    Vec2 direction{0.0, -1.0};

    friend bool operator==(const BodyLoad&, const BodyLoad&) = default;
};

struct MeshSpec {
    int nx = 16;
    int ny = 16;
    double lx = 1.0;
    double ly = 1.0;
    SideSet dirichlet{Side::bottom};
    std::string file; ///< when set, the mesh is read from this file instead

    friend bool operator==(const MeshSpec&, const MeshSpec&) = default;
};

/// Material overrides on the triangles whose centroid lies in [x0,x1] x [y0,y1].
struct RegionOverride {
    std::string name;
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    std::vector<std::pair<std::string, double>> values;

    friend bool operator==(const RegionOverride&, const RegionOverride&) = default;
};

struct AlphaInit {
    enum class Kind { constant, disc };
    Kind kind = Kind::constant;
    double value = 1.0; ///< everywhere (constant) or inside the disc
    double cx = 0.0, cy = 0.0, r = 0.0;

    friend bool operator==(const AlphaInit&, const AlphaInit&) = default;
};

struct InitialData {
    enum class Field { zero, dirichlet };
    Field u0 = Field::zero;
    Field v0 = Field::zero;
    Dev2 pi0;
    Dev2 pidot0;
    AlphaInit alpha0;

    friend bool operator==(const InitialData&, const InitialData&) = default;
};

struct CheckSettings {
    ResidualGates gates;
    int probes = 32;
    std::uint64_t seed = 12345;

    friend bool operator==(const CheckSettings&, const CheckSettings&) = default;
};

struct OutputSettings {
    std::string dir = "out";
    int every = 0; ///< snapshot cadence in steps; 0 disables snapshots
    bool vtk = true;

    friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

struct ScenarioConfig {
    MeshSpec mesh;
    MaterialParams material;
    std::vector<RegionOverride> regions;
    double tau = 1e-3;
    double T = 0.1;
    BodyLoad load;
    DirichletProgram bc;
    InitialData init;
    MechOptions mech;
    DamageOptions damage;
    CheckSettings check;
    OutputSettings output;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline int num_steps(const ScenarioConfig& c)
{
    const double r = c.T / c.tau;
    const double n = std::round(r);
    return static_cast<int>(std::abs(r - n) <= 1e-9 * r ? n : std::ceil(r));
}

inline MaterialParams apply_overrides(MaterialParams m, const RegionOverride& r)
{
    for (const auto& [key, value] : r.values) {
        const MaterialField* f = find_material_field(key);
        if (f == nullptr) {
            throw ConfigError("region " + r.name + ": unknown material key '" + key + "'");
        }
        m.*(f->member) = value;
    }
    return m;
}

/// Names of every violated scenario-level constraint (material constraints included).
inline std::vector<std::string> violated_constraints(const ScenarioConfig& c)
{
    std::vector<std::string> out;
    auto require = [&out](bool ok, const std::string& what) {
        if (!ok) {
            out.push_back(what);
        }
    };
    require(c.tau > 0.0, "time.tau > 0");
    require(c.T >= c.tau, "time.T >= time.tau");
    if (c.mesh.file.empty()) {
        require(c.mesh.nx >= 1 && c.mesh.ny >= 1, "mesh.nx, mesh.ny >= 1");
        require(c.mesh.lx > 0.0 && c.mesh.ly > 0.0, "mesh.lx, mesh.ly > 0");
        require(!c.mesh.dirichlet.empty(), "mesh.dirichlet nonempty");
    }
    for (const auto& s : violated_constraints(c.material)) {
        out.push_back("material: " + s);
    }
    for (const auto& r : c.regions) {
        require(r.x0 <= r.x1 && r.y0 <= r.y1, "region." + r.name + ".box ordered");
        try {
            for (const auto& s : violated_constraints(apply_overrides(c.material, r))) {
                out.push_back("region." + r.name + ": " + s);
            }
        } catch (const ConfigError& e) {
            out.emplace_back(e.what());
        }
    }
    const auto& a = c.init.alpha0;
    require(a.value >= 0.0 && a.value <= 1.0, "init.alpha0 in [0,1]");
    require(a.kind != AlphaInit::Kind::disc || a.r > 0.0, "init.alpha0 disc radius > 0");
    require(c.mech.tol > 0.0 && c.mech.maxit >= 1, "solver.mech_tol > 0, solver.mech_maxit >= 1");
    require(c.mech.cg_tol > 0.0 && c.mech.cg_maxit >= 1, "solver.cg_tol > 0, solver.cg_maxit >= 1");
    require(c.damage.tol > 0.0 && c.damage.maxit >= 1, "solver.damage_tol > 0, solver.damage_maxit >= 1");
    require(c.check.probes >= 0, "check.probes >= 0");
    require(c.output.every >= 0, "output.every >= 0");
    return out;
}

inline void validate(const ScenarioConfig& c)
{
    const auto bad = violated_constraints(c);
    if (!bad.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& b : bad) {
            msg += " [" + b + "]";
        }
        throw ConfigError(msg);
    }
}

} // namespace pds
