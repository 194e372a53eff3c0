#include "dgm.hpp"

#include <cmath>

#include "common.hpp"

namespace ivmed {

StructuralDGM build_dgm(Setting setting) {
    StructuralDGM g;
    g.setting = setting;
    g.p_w1 = 0.6;
    g.p_w2 = 0.3;
    g.p_w3 = [](int w1, int w2) { return 0.2 + (w1 + w2) / 3.0; };
    g.p_a = 0.5;
    g.p_z = [](int a, const WBits& w) {
        return expit(-std::log(1.1) * (w[0] + w[1] + w[2]) / 3.0 + 3.0 * a);
    };
    if (setting == Setting::Single) {
        g.p_m = [](int /*l*/, int z, const WBits& w) {
            return expit(-std::log(3.0) * (w[0] + w[1]) + 2.0 * z);
        };
        g.p_y = [](int m, int z, const WBits& w) {
            double den = -w[0] - w[1] - w[2] + z + m - 1;
            if (den == 0.0) return 1.0;  // expit(1/0) = expit(+inf)
            return expit(1.0 / den);
        };
    } else {
        g.p_l = [](int z, const WBits& w) {
            return expit(-std::log(2.0) * (w[0] + w[1] + w[2]) / 3.0 + 3.0 * z - 1.0);
        };
        g.p_m = [](int l, int z, const WBits& w) {
            return expit(-std::log(3.0) * (w[0] + w[1]) + 3.0 * l + z - 1.0);
        };
        g.p_y = [](int m, int z, const WBits& w) {
            return expit(0.3 - std::log(5.0) * (w[0] + w[1] + w[2]) + z + m);
        };
    }
    return g;
}

namespace {
// fixed variable ids for the per-unit uniform streams
enum : std::uint64_t { U_W1 = 1, U_W2 = 2, U_W3 = 3, U_A = 4, U_Z = 5, U_L = 6, U_M = 7, U_Y = 8 };
}

Dataset sample(const StructuralDGM& dgm, std::size_t n, std::uint64_t seed) {
    Dataset d;
    d.n = n;
    d.n_w = 3;
    d.w_names = {"w1", "w2", "w3"};
    d.w.resize(n * 3);
    d.a.resize(n);
    d.z.resize(n);
    d.m.resize(n);
    d.y.resize(n);
    if (dgm.setting == Setting::Double) d.l = std::vector<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        WBits w;
        w[0] = counter_uniform(seed, i, U_W1) < dgm.p_w1 ? 1 : 0;
        w[1] = counter_uniform(seed, i, U_W2) < dgm.p_w2 ? 1 : 0;
        w[2] = counter_uniform(seed, i, U_W3) < dgm.p_w3(w[0], w[1]) ? 1 : 0;
        int a = counter_uniform(seed, i, U_A) < dgm.p_a ? 1 : 0;
        int z = counter_uniform(seed, i, U_Z) < dgm.p_z(a, w) ? 1 : 0;
        int l = 0;
        if (dgm.setting == Setting::Double) {
            l = counter_uniform(seed, i, U_L) < dgm.p_l(z, w) ? 1 : 0;
            (*d.l)[i] = l;
        }
        int m = counter_uniform(seed, i, U_M) < dgm.p_m(l, z, w) ? 1 : 0;
        int y = counter_uniform(seed, i, U_Y) < dgm.p_y(m, z, w) ? 1 : 0;
        d.w[i * 3 + 0] = w[0];
        d.w[i * 3 + 1] = w[1];
        d.w[i * 3 + 2] = w[2];
        d.a[i] = a;
        d.z[i] = z;
        d.m[i] = m;
        d.y[i] = y;
    }
    return d;
}

}  // namespace ivmed
