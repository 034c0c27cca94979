#pragma once

#include "pds/config.hpp"
#include "pds/errors.hpp"
#include "pds/fem.hpp"
#include "pds/mech_step.hpp"
#include "pds/state.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pds {

namespace detail {

inline std::string fmt_num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> words(const std::string& s)
{
    std::vector<std::string> w;
    std::istringstream in(s);
    std::string t;
    while (in >> t) {
        w.push_back(t);
    }
    return w;
}

class LineError {
public:
    explicit LineError(int line) : line_(line) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    double number(const std::string& s) const
    {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
            fail("expected a finite number, got '" + s + "'");
        }
        return v;
    }

    long long integer(const std::string& s) const
    {
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
            fail("expected an integer, got '" + s + "'");
        }
        return v;
    }

    std::vector<double> numbers(const std::string& value, std::size_t count, const std::string& key) const
    {
        const auto w = words(value);
        if (w.size() != count) {
            fail(key + " expects " + std::to_string(count) + " number(s)");
        }
        std::vector<double> out;
        for (const auto& x : w) {
            out.push_back(number(x));
        }
        return out;
    }

    TimeProgram program(const std::string& value, const std::string& key) const
    {
        const auto w = words(value);
        if (w.empty()) {
            fail(key + " is empty");
        }
        TimeProgram p;
        auto args = [&](std::size_t n) {
            if (w.size() != n + 1) {
                fail(key + " " + w[0] + " expects " + std::to_string(n) + " argument(s)");
            }
        };
        if (w[0] == "none" || w[0] == "fixed") {
            args(0);
        } else if (w[0] == "constant") {
            args(1);
            p.kind = TimeProgram::Kind::constant;
            p.a = number(w[1]);
        } else if (w[0] == "ramp") {
            args(2);
            p.kind = TimeProgram::Kind::ramp;
            p.a = number(w[1]);
            p.b = number(w[2]);
        } else if (w[0] == "sinus") {
            args(2);
            p.kind = TimeProgram::Kind::sinus;
            p.a = number(w[1]);
            p.b = number(w[2]);
        } else {
            fail(key + ": unknown program '" + w[0] + "' (expected none, fixed, constant, ramp or sinus)");
        }
        return p;
    }

    bool boolean(const std::string& s) const
    {
        if (s == "true" || s == "1") {
            return true;
        }
        if (s == "false" || s == "0") {
            return false;
        }
        fail("expected true or false, got '" + s + "'");
    }

private:
    int line_;
};

inline std::string program_text(const TimeProgram& p)
{
    switch (p.kind) {
    case TimeProgram::Kind::none: return "none";
    case TimeProgram::Kind::constant: return "constant " + fmt_num(p.a);
    case TimeProgram::Kind::ramp: return "ramp " + fmt_num(p.a) + " " + fmt_num(p.b);
    case TimeProgram::Kind::sinus: return "sinus " + fmt_num(p.a) + " " + fmt_num(p.b);
    }
    return "none";
}

inline const char* profile_name(Profile p)
{
    switch (p) {
    case Profile::uniform: return "uniform";
    case Profile::linear_x: return "linear_x";
    case Profile::linear_y: return "linear_y";
    }
    return "uniform";
}

inline RegionOverride& region_named(std::vector<RegionOverride>& regions, const std::string& name)
{
    for (auto& r : regions) {
        if (r.name == name) {
            return r;
        }
    }
    RegionOverride r;
    r.name = name;
    regions.push_back(std::move(r));
    return regions.back();
}

inline void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value, const LineError& at,
                      std::set<std::string>& region_boxes)
{
    auto one = [&]() { return at.numbers(value, 1, key)[0]; };
    auto integer = [&]() {
        const auto w = words(value);
        if (w.size() != 1) {
            at.fail(key + " expects one integer");
        }
        return at.integer(w[0]);
    };
    auto positive_int = [&]() {
        const long long v = integer();
        if (v < 0 || v > 1'000'000'000) {
            at.fail(key + " out of range");
        }
        return static_cast<int>(v);
    };
    auto dev2 = [&]() {
        const auto v = at.numbers(value, 2, key);
        return Dev2{v[0], v[1]};
    };
    auto vec2 = [&]() {
        const auto v = at.numbers(value, 2, key);
        return Vec2{v[0], v[1]};
    };
    auto field = [&]() {
        if (value == "zero") {
            return InitialData::Field::zero;
        }
        if (value == "dirichlet") {
            return InitialData::Field::dirichlet;
        }
        at.fail(key + ": expected zero or dirichlet");
    };

    if (key == "mesh.nx") {
        c.mesh.nx = positive_int();
    } else if (key == "mesh.ny") {
        c.mesh.ny = positive_int();
    } else if (key == "mesh.lx") {
        c.mesh.lx = one();
    } else if (key == "mesh.ly") {
        c.mesh.ly = one();
    } else if (key == "mesh.dirichlet") {
        SideSet s;
        try {
            for (const auto& w : words(value)) {
                s |= parse_side(w);
            }
        } catch (const ConfigError& e) {
            at.fail(e.what());
        }
        c.mesh.dirichlet = s;
    } else if (key == "mesh.file") {
        c.mesh.file = value;
    } else if (key.starts_with("material.")) {
        const std::string name = key.substr(9);
        if (name == "ambrosio_tortorelli") {
            const auto v = at.numbers(value, 3, key);
            if (!(v[1] > 0.0 && v[2] > 0.0)) {
                at.fail(key + ": lengths must be positive");
            }
            c.material = ambrosio_tortorelli(c.material, v[0], v[1], v[2]);
        } else if (const MaterialField* f = find_material_field(name)) {
            c.material.*(f->member) = one();
        } else {
            at.fail("unknown key '" + key + "'");
        }
    } else if (key.starts_with("region.")) {
        const std::string rest = key.substr(7);
        const auto dot = rest.find('.');
        if (dot == std::string::npos || dot == 0) {
            at.fail("region keys have the form region.<name>.<field>");
        }
        const std::string name = rest.substr(0, dot), fieldname = rest.substr(dot + 1);
        RegionOverride& r = region_named(c.regions, name);
        if (fieldname == "box") {
            const auto v = at.numbers(value, 4, key);
            r.x0 = v[0];
            r.x1 = v[1];
            r.y0 = v[2];
            r.y1 = v[3];
            region_boxes.insert(name);
        } else if (find_material_field(fieldname) != nullptr) {
            r.values.emplace_back(fieldname, one());
        } else {
            at.fail("unknown key '" + key + "'");
        }
    } else if (key == "time.tau") {
        c.tau = one();
    } else if (key == "time.T") {
        c.T = one();
    } else if (key == "load.body") {
        c.load.program = at.program(value, key);
    } else if (key == "load.direction") {
        c.load.direction = vec2();
    } else if (key == "bc.dirichlet") {
        c.bc.program = at.program(value, key);
    } else if (key == "bc.profile") {
        if (value == "uniform") {
            c.bc.profile = Profile::uniform;
        } else if (value == "linear_x") {
            c.bc.profile = Profile::linear_x;
        } else if (value == "linear_y") {
            c.bc.profile = Profile::linear_y;
        } else {
            at.fail(key + ": expected uniform, linear_x or linear_y");
        }
    } else if (key == "bc.direction") {
        c.bc.direction = vec2();
    } else if (key == "init.u0") {
        c.init.u0 = field();
    } else if (key == "init.v0") {
        c.init.v0 = field();
    } else if (key == "init.pi0") {
        c.init.pi0 = dev2();
    } else if (key == "init.pidot0") {
        c.init.pidot0 = dev2();
    } else if (key == "init.alpha0") {
        const auto w = words(value);
        AlphaInit a;
        if (!w.empty() && w[0] == "constant" && w.size() == 2) {
            a.value = at.number(w[1]);
        } else if (!w.empty() && w[0] == "disc" && w.size() == 5) {
            a.kind = AlphaInit::Kind::disc;
            a.cx = at.number(w[1]);
            a.cy = at.number(w[2]);
            a.r = at.number(w[3]);
            a.value = at.number(w[4]);
        } else {
            at.fail(key + ": expected 'constant A' or 'disc CX CY R A'");
        }
        c.init.alpha0 = a;
    } else if (key == "solver.mech_tol") {
        c.mech.tol = one();
    } else if (key == "solver.mech_maxit") {
        c.mech.maxit = positive_int();
    } else if (key == "solver.linear") {
        if (value == "cholesky") {
            c.mech.solver = LinearSolver::cholesky;
        } else if (value == "cg") {
            c.mech.solver = LinearSolver::cg;
        } else {
            at.fail(key + ": expected cholesky or cg");
        }
    } else if (key == "solver.cg_tol") {
        c.mech.cg_tol = one();
    } else if (key == "solver.cg_maxit") {
        c.mech.cg_maxit = positive_int();
    } else if (key == "solver.damage_tol") {
        c.damage.tol = one();
    } else if (key == "solver.damage_maxit") {
        c.damage.maxit = positive_int();
    } else if (key == "check.ineq_rtol") {
        c.check.gates.ineq_rtol = one();
    } else if (key == "check.yield_tol") {
        c.check.gates.yield_tol = one();
    } else if (key == "check.compl_tol") {
        c.check.gates.compl_tol = one();
    } else if (key == "check.vi_rtol") {
        c.check.gates.vi_rtol = one();
    } else if (key == "check.probes") {
        c.check.probes = positive_int();
    } else if (key == "check.seed") {
        const long long v = integer();
        if (v < 0) {
            at.fail(key + " must be nonnegative");
        }
        c.check.seed = static_cast<std::uint64_t>(v);
    } else if (key == "output.dir") {
        if (value.empty()) {
            at.fail(key + " is empty");
        }
        c.output.dir = value;
    } else if (key == "output.every") {
        c.output.every = positive_int();
    } else if (key == "output.vtk") {
        c.output.vtk = at.boolean(value);
    } else {
        at.fail("unknown key '" + key + "'");
    }
}

} // namespace detail

/// Parses the line-based `key = value` format. Unknown or repeated keys are errors; the result is
/// validated as a whole.
inline ScenarioConfig parse_config(std::istream& in)
{
    ScenarioConfig c;
    std::set<std::string> seen, region_boxes;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const detail::LineError at(lineno);
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            at.fail("expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            at.fail("missing key");
        }
        if (!seen.insert(key).second) {
            at.fail("duplicate key '" + key + "'");
        }
        detail::apply_key(c, key, value, at, region_boxes);
    }
    for (const auto& r : c.regions) {
        if (!region_boxes.contains(r.name)) {
            throw ConfigError("region " + r.name + ": missing region." + r.name + ".box");
        }
    }
    validate(c);
    return c;
}

inline ScenarioConfig parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline ScenarioConfig parse_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    return parse_config(in);
}

/// Writes every setting so that parse_config reproduces `c` exactly.
inline void emit_config(std::ostream& out, const ScenarioConfig& c)
{
    using detail::fmt_num;
    out << "mesh.nx = " << c.mesh.nx << '\n' << "mesh.ny = " << c.mesh.ny << '\n';
    out << "mesh.lx = " << fmt_num(c.mesh.lx) << '\n' << "mesh.ly = " << fmt_num(c.mesh.ly) << '\n';
    out << "mesh.dirichlet =";
    for (Side s : all_sides) {
        if (c.mesh.dirichlet.contains(s)) {
            out << ' ' << side_name(s);
        }
    }
    out << '\n';
    if (!c.mesh.file.empty()) {
        out << "mesh.file = " << c.mesh.file << '\n';
    }
    for (const auto& f : material_fields) {
        out << "material." << f.name << " = " << fmt_num(c.material.*(f.member)) << '\n';
    }
    for (const auto& r : c.regions) {
        out << "region." << r.name << ".box = " << fmt_num(r.x0) << ' ' << fmt_num(r.x1) << ' ' << fmt_num(r.y0)
            << ' ' << fmt_num(r.y1) << '\n';
        for (const auto& [k, v] : r.values) {
            out << "region." << r.name << '.' << k << " = " << fmt_num(v) << '\n';
        }
    }
    out << "time.tau = " << fmt_num(c.tau) << '\n' << "time.T = " << fmt_num(c.T) << '\n';
    out << "load.body = " << detail::program_text(c.load.program) << '\n';
    out << "load.direction = " << fmt_num(c.load.direction.x) << ' ' << fmt_num(c.load.direction.y) << '\n';
    out << "bc.dirichlet = " << detail::program_text(c.bc.program) << '\n';
    out << "bc.profile = " << detail::profile_name(c.bc.profile) << '\n';
    out << "bc.direction = " << fmt_num(c.bc.direction.x) << ' ' << fmt_num(c.bc.direction.y) << '\n';
    auto field = [](InitialData::Field f) { return f == InitialData::Field::zero ? "zero" : "dirichlet"; };
    out << "init.u0 = " << field(c.init.u0) << '\n' << "init.v0 = " << field(c.init.v0) << '\n';
    out << "init.pi0 = " << fmt_num(c.init.pi0.d11) << ' ' << fmt_num(c.init.pi0.d12) << '\n';
    out << "init.pidot0 = " << fmt_num(c.init.pidot0.d11) << ' ' << fmt_num(c.init.pidot0.d12) << '\n';
    const auto& a = c.init.alpha0;
    if (a.kind == AlphaInit::Kind::constant) {
        out << "init.alpha0 = constant " << fmt_num(a.value) << '\n';
    } else {
        out << "init.alpha0 = disc " << fmt_num(a.cx) << ' ' << fmt_num(a.cy) << ' ' << fmt_num(a.r) << ' '
            << fmt_num(a.value) << '\n';
    }
    out << "solver.mech_tol = " << fmt_num(c.mech.tol) << '\n' << "solver.mech_maxit = " << c.mech.maxit << '\n';
    out << "solver.linear = " << (c.mech.solver == LinearSolver::cholesky ? "cholesky" : "cg") << '\n';
    out << "solver.cg_tol = " << fmt_num(c.mech.cg_tol) << '\n' << "solver.cg_maxit = " << c.mech.cg_maxit << '\n';
    out << "solver.damage_tol = " << fmt_num(c.damage.tol) << '\n'
        << "solver.damage_maxit = " << c.damage.maxit << '\n';
    out << "check.ineq_rtol = " << fmt_num(c.check.gates.ineq_rtol) << '\n'
        << "check.yield_tol = " << fmt_num(c.check.gates.yield_tol) << '\n'
        << "check.compl_tol = " << fmt_num(c.check.gates.compl_tol) << '\n'
        << "check.vi_rtol = " << fmt_num(c.check.gates.vi_rtol) << '\n'
        << "check.probes = " << c.check.probes << '\n'
        << "check.seed = " << c.check.seed << '\n';
    out << "output.dir = " << c.output.dir << '\n' << "output.every = " << c.output.every << '\n';
    out << "output.vtk = " << (c.output.vtk ? "true" : "false") << '\n';
}

inline std::string emit_config_string(const ScenarioConfig& c)
{
    std::ostringstream out;
    emit_config(out, c);
    return out.str();
}

/// Legacy ASCII VTK snapshot of one level. Cell tensors are written as (11, 12, 22) triples and
/// `mises` is |dev sigma| of the total stress.
inline void write_vtk(std::ostream& out, const State& s, const Body& body, double tau)
{
    using detail::fmt_num;
    const Mesh& mesh = body.mesh;
    const auto v = velocity(s, tau);
    const auto sigma = total_stress(body, s.alpha_prev, s.e_el, s.e_el_prev, tau);
    out << "# vtk DataFile Version 3.0\n";
    out << "pds step " << s.k << " t " << fmt_num(s.t) << '\n';
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (const Vec2& p : mesh.nodes) {
        out << fmt_num(p.x) << ' ' << fmt_num(p.y) << " 0\n";
    }
    out << "CELLS " << mesh.num_tris() << ' ' << 4 * mesh.num_tris() << '\n';
    for (const Tri& t : mesh.tris) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << mesh.num_tris() << '\n';
    for (std::size_t t = 0; t < mesh.num_tris(); ++t) {
        out << "5\n";
    }
    out << "POINT_DATA " << mesh.num_nodes() << '\n';
    auto vectors = [&](const char* name, std::span<const double> f) {
        out << "VECTORS " << name << " double\n";
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
            out << fmt_num(f[2 * i]) << ' ' << fmt_num(f[2 * i + 1]) << " 0\n";
        }
    };
    vectors("u", s.u);
    vectors("v", v);
    out << "SCALARS alpha double 1\nLOOKUP_TABLE default\n";
    for (double a : s.alpha) {
        out << fmt_num(a) << '\n';
    }
    out << "CELL_DATA " << mesh.num_tris() << '\n';
    out << "SCALARS pi double 3\nLOOKUP_TABLE default\n";
    for (const Dev2& p : s.pi) {
        out << fmt_num(p.d11) << ' ' << fmt_num(p.d12) << ' ' << fmt_num(-p.d11) << '\n';
    }
    out << "SCALARS e_el double 3\nLOOKUP_TABLE default\n";
    for (const Sym2& e : s.e_el) {
        out << fmt_num(e.xx) << ' ' << fmt_num(e.xy) << ' ' << fmt_num(e.yy) << '\n';
    }
    out << "SCALARS mises double 1\nLOOKUP_TABLE default\n";
    for (const Sym2& sg : sigma) {
        out << fmt_num(norm(dev(sg))) << '\n';
    }
}

inline void write_vtk(const std::filesystem::path& path, const State& s, const Body& body, double tau)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_vtk(out, s, body, tau);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

/// Plain-text dump of both stored levels of a state.
inline void write_state(std::ostream& out, const State& s)
{
    using detail::fmt_num;
    out << "k " << s.k << "\nt " << fmt_num(s.t) << '\n';
    auto scalars = [&](const char* name, std::span<const double> v) {
        out << name << ' ' << v.size() << '\n';
        for (double x : v) {
            out << fmt_num(x) << '\n';
        }
    };
    auto syms = [&](const char* name, std::span<const Sym2> v) {
        out << name << ' ' << v.size() << '\n';
        for (const Sym2& e : v) {
            out << fmt_num(e.xx) << ' ' << fmt_num(e.yy) << ' ' << fmt_num(e.xy) << '\n';
        }
    };
    auto devs = [&](const char* name, std::span<const Dev2> v) {
        out << name << ' ' << v.size() << '\n';
        for (const Dev2& p : v) {
            out << fmt_num(p.d11) << ' ' << fmt_num(p.d12) << '\n';
        }
    };
    scalars("u", s.u);
    scalars("u_prev", s.u_prev);
    syms("e_el", s.e_el);
    syms("e_el_prev", s.e_el_prev);
    devs("pi", s.pi);
    devs("pi_prev", s.pi_prev);
    scalars("alpha", s.alpha);
    scalars("alpha_prev", s.alpha_prev);
}

} // namespace pds
