#pragma once

#include "pds/tensor.hpp"

#include <span>
#include <vector>

namespace pds {

/// Discrete unknowns at two consecutive time levels k and k-1.
/// Displacements are nodal and interleaved, strains are per triangle, damage is nodal.
struct State {
    int k = 0;
    double t = 0.0;
    std::vector<double> u, u_prev;
    std::vector<Sym2> e_el, e_el_prev;
    std::vector<Dev2> pi, pi_prev;
    std::vector<double> alpha, alpha_prev;

    friend bool operator==(const State&, const State&) = default;
};

/// (u^k - u^{k-1}) / tau
inline std::vector<double> velocity(const State& s, double tau)
{
    std::vector<double> v(s.u.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = (s.u[i] - s.u_prev[i]) / tau;
    }
    return v;
}

} // namespace pds
