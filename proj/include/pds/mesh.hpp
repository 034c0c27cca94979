#pragma once

#include "pds/errors.hpp"
#include "pds/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace pds {

enum class Side : std::uint8_t { left = 1, right = 2, bottom = 4, top = 8 };

struct SideSet {
    std::uint8_t bits = 0;

    constexpr SideSet() = default;
    constexpr SideSet(Side s) : bits(static_cast<std::uint8_t>(s)) {}

    constexpr bool contains(Side s) const { return (bits & static_cast<std::uint8_t>(s)) != 0; }
    constexpr bool empty() const { return bits == 0; }
    constexpr SideSet& operator|=(SideSet o)
    {
        bits |= o.bits;
        return *this;
    }
    friend constexpr SideSet operator|(SideSet a, SideSet b) { return a |= b; }
    friend constexpr bool operator==(SideSet, SideSet) = default;
};

constexpr SideSet operator|(Side a, Side b) { return SideSet(a) | SideSet(b); }

inline const char* side_name(Side s)
{
    switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
    }
    return "?";
}

inline constexpr std::array<Side, 4> all_sides = {Side::left, Side::right, Side::bottom, Side::top};

inline Side parse_side(const std::string& s)
{
    for (Side side : all_sides) {
        if (s == side_name(side)) {
            return side;
        }
    }
    throw ConfigError("unknown side '" + s + "' (expected left, right, bottom or top)");
}

using Tri = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Linear triangle mesh with nodal Dirichlet tagging. Immutable after construction.
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<Tri> tris;
    std::vector<int> dirichlet_nodes;
    std::vector<char> is_dirichlet;   ///< per node
    std::vector<Edge> dirichlet_edges; ///< boundary edges with both ends on the Dirichlet set
    std::vector<Edge> neumann_edges;  ///< remaining (traction-free) boundary edges
    std::vector<double> tri_area;
    std::vector<std::array<Vec2, 3>> tri_grads;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_tris() const { return tris.size(); }
    std::size_t num_dofs() const { return 2 * nodes.size(); }

    double total_area() const
    {
        double a = 0.0;
        for (double t : tri_area) {
            a += t;
        }
        return a;
    }

    Vec2 centroid(std::size_t t) const
    {
        const auto& [i, j, k] = tris[t];
        return (1.0 / 3.0) * (nodes[i] + nodes[j] + nodes[k]);
    }
};

/// Builds the derived data (areas, gradients, boundary tagging) and checks every mesh invariant.
inline Mesh make_mesh(std::vector<Vec2> nodes, std::vector<Tri> tris, std::vector<char> dirichlet_flag)
{
    if (dirichlet_flag.size() != nodes.size()) {
        throw ConfigError("mesh: Dirichlet flag count does not match node count");
    }
    Mesh m;
    m.nodes = std::move(nodes);
    m.tris = std::move(tris);
    m.is_dirichlet = std::move(dirichlet_flag);
    const int n = static_cast<int>(m.nodes.size());

    m.tri_area.reserve(m.tris.size());
    m.tri_grads.reserve(m.tris.size());
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        const auto& tri = m.tris[t];
        for (int v : tri) {
            if (v < 0 || v >= n) {
                throw ConfigError("mesh: triangle " + std::to_string(t) + " references node " + std::to_string(v) +
                                  " out of range");
            }
        }
        const Vec2 p0 = m.nodes[tri[0]];
        const Vec2 p1 = m.nodes[tri[1]];
        const Vec2 p2 = m.nodes[tri[2]];
        const double twice = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        if (!(twice > 0.0)) {
            throw ConfigError("mesh: triangle " + std::to_string(t) + " has non-positive area (must be counterclockwise)");
        }
        m.tri_area.push_back(0.5 * twice);
        m.tri_grads.push_back({Vec2{(p1.y - p2.y) / twice, (p2.x - p1.x) / twice},
                               Vec2{(p2.y - p0.y) / twice, (p0.x - p2.x) / twice},
                               Vec2{(p0.y - p1.y) / twice, (p1.x - p0.x) / twice}});
    }

    for (int i = 0; i < n; ++i) {
        if (m.is_dirichlet[i]) {
            m.dirichlet_nodes.push_back(i);
        }
    }
    if (m.dirichlet_nodes.empty()) {
        throw ConfigError("mesh: the Dirichlet node set is empty");
    }

    // Boundary edges are the ones owned by exactly one triangle.
    std::map<std::pair<int, int>, int> count;
    for (const auto& tri : m.tris) {
        for (int e = 0; e < 3; ++e) {
            int a = tri[e];
            int b = tri[(e + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    for (const auto& [edge, c] : count) {
        if (c > 2) {
            throw ConfigError("mesh: edge shared by more than two triangles");
        }
        if (c == 1) {
            Edge e{edge.first, edge.second};
            if (m.is_dirichlet[e[0]] && m.is_dirichlet[e[1]]) {
                m.dirichlet_edges.push_back(e);
            } else {
                m.neumann_edges.push_back(e);
            }
        }
    }
    return m;
}

/// Structured mesh of [0,Lx] x [0,Ly]: each cell is split along alternating diagonals.
inline Mesh build_rect_mesh(int nx, int ny, double Lx, double Ly, SideSet dirichlet_sides)
{
    if (nx < 1 || ny < 1) {
        throw ConfigError("mesh: nx and ny must be at least 1");
    }
    if (!(Lx > 0.0) || !(Ly > 0.0)) {
        throw ConfigError("mesh: Lx and Ly must be positive");
    }
    if (dirichlet_sides.empty()) {
        throw ConfigError("mesh: at least one Dirichlet side is required");
    }
    std::vector<Vec2> nodes;
    std::vector<char> flag;
    nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            nodes.push_back({Lx * i / nx, Ly * j / ny});
            const bool d = (i == 0 && dirichlet_sides.contains(Side::left)) ||
                           (i == nx && dirichlet_sides.contains(Side::right)) ||
                           (j == 0 && dirichlet_sides.contains(Side::bottom)) ||
                           (j == ny && dirichlet_sides.contains(Side::top));
            flag.push_back(d ? 1 : 0);
        }
    }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<Tri> tris;
    tris.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            } else {
                tris.push_back({a, b, d});
                tris.push_back({b, c, d});
            }
        }
    }
    return make_mesh(std::move(nodes), std::move(tris), std::move(flag));
}

/// Plain-text mesh: `nodes N tris M`, then N lines `x y dflag`, then M lines `i j k` (0-based).
inline Mesh read_mesh(std::istream& in)
{
    std::string line;
    int lineno = 0;
    auto next_line = [&]() -> std::string {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                return line;
            }
        }
        throw ConfigError("mesh file: unexpected end of file after line " + std::to_string(lineno));
    };
    auto fail = [&](const std::string& what) {
        return ConfigError("mesh file line " + std::to_string(lineno) + ": " + what);
    };

    std::istringstream head(next_line());
    std::string kw1, kw2;
    long n = -1, t = -1;
    if (!(head >> kw1 >> n >> kw2 >> t) || kw1 != "nodes" || kw2 != "tris" || n < 0 || t < 0) {
        throw fail("expected header 'nodes N tris M'");
    }
    std::vector<Vec2> nodes(static_cast<std::size_t>(n));
    std::vector<char> flag(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        std::istringstream ls(next_line());
        int d = 0;
        if (!(ls >> nodes[i].x >> nodes[i].y >> d) || (d != 0 && d != 1)) {
            throw fail("expected 'x y dflag' with dflag 0 or 1");
        }
        flag[i] = static_cast<char>(d);
    }
    std::vector<Tri> tris(static_cast<std::size_t>(t));
    for (long k = 0; k < t; ++k) {
        std::istringstream ls(next_line());
        if (!(ls >> tris[k][0] >> tris[k][1] >> tris[k][2])) {
            throw fail("expected 'i j k'");
        }
    }
    return make_mesh(std::move(nodes), std::move(tris), std::move(flag));
}

inline void write_mesh(std::ostream& out, const Mesh& m)
{
    out << "nodes " << m.nodes.size() << " tris " << m.tris.size() << '\n';
    char buf[96];
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", m.nodes[i].x, m.nodes[i].y, m.is_dirichlet[i] ? 1 : 0);
        out << buf;
    }
    for (const auto& t : m.tris) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
}

} // namespace pds
