#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "types.hpp"

namespace ivmed {

using WBits = std::array<int, 3>;

// Structural model over binary (W1,W2,W3,A,Z[,L],M,Y). Each variable V is
// generated as 1{U_V < p_V(parents)} with one uniform per variable, shared
// across counterfactual parent settings (comonotone coupling).
struct StructuralDGM {
    Setting setting = Setting::Single;
    double p_w1 = 0.0;
    double p_w2 = 0.0;
    std::function<double(int, int)> p_w3;                 // (w1,w2)
    double p_a = 0.0;
    std::function<double(int, const WBits&)> p_z;         // (a,w)
    std::function<double(int, const WBits&)> p_l;         // (z,w), double setting only
    std::function<double(int, int, const WBits&)> p_m;    // (l,z,w); l ignored for single
    std::function<double(int, int, const WBits&)> p_y;    // (m,z,w)

    double pw(const WBits& w) const {
        double p1 = w[0] ? p_w1 : 1.0 - p_w1;
        double p2 = w[1] ? p_w2 : 1.0 - p_w2;
        double p3w = p_w3(w[0], w[1]);
        double p3 = w[2] ? p3w : 1.0 - p3w;
        return p1 * p2 * p3;
    }
};

// The two simulation data-generating mechanisms.
StructuralDGM build_dgm(Setting setting);

// i.i.d. draws; deterministic given seed, one uniform stream per variable.
Dataset sample(const StructuralDGM& dgm, std::size_t n, std::uint64_t seed);

}  // namespace ivmed
