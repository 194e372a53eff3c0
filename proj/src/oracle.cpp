#include "oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

#include "common.hpp"

namespace ivmed {

namespace {

WBits wbits(int code) { return WBits{code & 1, (code >> 1) & 1, (code >> 2) & 1}; }
int wcode(const WBits& w) { return w[0] | (w[1] << 1) | (w[2] << 2); }

// pair indices for (a', a*)
constexpr int kPairs[3][2] = {{1, 0}, {0, 0}, {1, 1}};
constexpr int P10 = 0, P00 = 1, P11 = 2;

double bsel(int bit, double p1) { return bit ? p1 : 1.0 - p1; }

}  // namespace

JointTable::JointTable(const StructuralDGM& dgm) : setting_(dgm.setting) {
    int lmax = (setting_ == Setting::Double) ? 1 : 0;
    for (int wc = 0; wc < 8; ++wc) {
        WBits w = wbits(wc);
        double pw = dgm.pw(w);
        for (int a = 0; a <= 1; ++a) {
            double pa = bsel(a, dgm.p_a);
            for (int z = 0; z <= 1; ++z) {
                double pz = bsel(z, dgm.p_z(a, w));
                for (int l = 0; l <= lmax; ++l) {
                    double pl = (setting_ == Setting::Double) ? bsel(l, dgm.p_l(z, w)) : 1.0;
                    for (int m = 0; m <= 1; ++m) {
                        double pm = bsel(m, dgm.p_m(l, z, w));
                        for (int y = 0; y <= 1; ++y) {
                            double py = bsel(y, dgm.p_y(m, z, w));
                            configs_.push_back(Config{w, a, z, l, m, y, pw * pa * pz * pl * pm * py});
                        }
                    }
                }
            }
        }
    }
}

double JointTable::total() const {
    double s = 0.0;
    for (const auto& c : configs_) s += c.p;
    return s;
}

double JointTable::cond(const std::function<double(const Config&)>& f,
                        const std::function<bool(const Config&)>& given) const {
    double num = 0.0, den = 0.0;
    for (const auto& c : configs_) {
        if (given(c)) {
            num += f(c) * c.p;
            den += c.p;
        }
    }
    if (den <= 0.0) throw estimation_error("ZeroDenominator", "conditioning event has mass 0");
    return num / den;
}

double JointTable::pw(const WBits& w) const {
    double s = 0.0;
    for (const auto& c : configs_) {
        if (c.w == w) s += c.p;
    }
    return s;
}

double JointTable::g1(const WBits& w) const {
    return cond([](const Config& c) { return double(c.a); },
                [&](const Config& c) { return c.w == w; });
}

double JointTable::q1(int a, const WBits& w) const {
    return cond([](const Config& c) { return double(c.z); },
                [&](const Config& c) { return c.w == w && c.a == a; });
}

double JointTable::r1(int a, int m, const WBits& w) const {
    return cond([](const Config& c) { return double(c.z); },
                [&](const Config& c) { return c.w == w && c.a == a && c.m == m; });
}

double JointTable::e1(int m, const WBits& w) const {
    return cond([](const Config& c) { return double(c.a); },
                [&](const Config& c) { return c.w == w && c.m == m; });
}

double JointTable::pm_cond(int m, int z, int a, const WBits& w) const {
    return cond([&](const Config& c) { return c.m == m ? 1.0 : 0.0; },
                [&](const Config& c) { return c.w == w && c.z == z && c.a == a; });
}

double JointTable::pm_a(int m, int a, const WBits& w) const {
    return cond([&](const Config& c) { return c.m == m ? 1.0 : 0.0; },
                [&](const Config& c) { return c.w == w && c.a == a; });
}

double JointTable::mu_s(int z, int m, const WBits& w) const {
    return cond([](const Config& c) { return double(c.y); },
                [&](const Config& c) { return c.w == w && c.z == z && c.m == m; });
}

double JointTable::p1(int z, int a, const WBits& w) const {
    return cond([](const Config& c) { return double(c.l); },
                [&](const Config& c) { return c.w == w && c.z == z && c.a == a; });
}

double JointTable::c1(int l, int z, const WBits& w) const {
    return cond([](const Config& c) { return double(c.m); },
                [&](const Config& c) { return c.w == w && c.l == l && c.z == z; });
}

double JointTable::mu_d(int l, int z, const WBits& w) const {
    return cond([](const Config& c) { return double(c.y); },
                [&](const Config& c) { return c.w == w && c.l == l && c.z == z; });
}

double JointTable::gamma1(int a, const WBits& w) const {
    return cond([](const Config& c) { return double(c.m); },
                [&](const Config& c) { return c.w == w && c.a == a; });
}

double JointTable::marginal_mean(char var) const {
    double s = 0.0;
    for (const auto& c : configs_) {
        double v = 0.0;
        switch (var) {
            case 'a': v = c.a; break;
            case 'z': v = c.z; break;
            case 'l': v = c.l; break;
            case 'm': v = c.m; break;
            case 'y': v = c.y; break;
            default: throw estimation_error("BadVariable", std::string(1, var));
        }
        s += v * c.p;
    }
    return s;
}

// ---------------------------------------------------------------------------
// identified functionals

TrueValues true_identified_functionals(const JointTable& t) {
    TrueValues out;
    double psi_fs = 0.0;
    for (int wc = 0; wc < 8; ++wc) {
        WBits w = wbits(wc);
        psi_fs += t.pw(w) * (t.q1(1, w) - t.q1(0, w));
    }
    out["psi_FS"] = psi_fs;
    if (std::fabs(psi_fs) < 1e-12)
        throw estimation_error("ZeroDenominator", "psi_FS is numerically zero");

    if (t.setting() == Setting::Single) {
        auto theta = [&](int ap, int as) {
            double v = 0.0;
            for (int wc = 0; wc < 8; ++wc) {
                WBits w = wbits(wc);
                double pw = t.pw(w);
                for (int z = 0; z <= 1; ++z) {
                    double qz = bsel(z, t.q1(ap, w));
                    for (int m = 0; m <= 1; ++m) {
                        v += pw * qz * t.pm_a(m, as, w) * t.mu_s(z, m, w);
                    }
                }
            }
            return v;
        };
        double th10 = theta(1, 0), th00 = theta(0, 0), th11 = theta(1, 1);
        out["theta_10"] = th10;
        out["theta_00"] = th00;
        out["theta_11"] = th11;
        out["psi_ITT_IDE"] = th10 - th00;
        out["psi_ITT_IIE"] = th11 - th10;
        out["psi_ITT_ITE"] = th11 - th00;
        out["psi_CIDE"] = (th10 - th00) / psi_fs;
        out["psi_CIIE"] = (th11 - th10) / psi_fs;
        out["psi_CITE"] = (th11 - th00) / psi_fs;
        return out;
    }

    // double: Theorem 2 formulas with gamma composed from (c, p, q)
    auto gamma_comp = [&](int m, int a, const WBits& w) {
        double g = 0.0;
        for (int l = 0; l <= 1; ++l) {
            for (int z = 0; z <= 1; ++z) {
                double cden = m ? t.c1(l, z, w) : 1.0 - t.c1(l, z, w);
                g += cden * bsel(l, t.p1(z, a, w)) * bsel(z, t.q1(a, w));
            }
        }
        return g;
    };
    auto mubar_z = [&](int l, int ap, const WBits& w) {
        return t.mu_d(l, 0, w) * (1.0 - t.q1(ap, w)) + t.mu_d(l, 1, w) * t.q1(ap, w);
    };
    auto vartheta = [&](int ap, int as) {
        double v = 0.0;
        for (int wc = 0; wc < 8; ++wc) {
            WBits w = wbits(wc);
            double pw = t.pw(w);
            for (int l = 0; l <= 1; ++l) v += pw * mubar_z(l, ap, w) * gamma_comp(l, as, w);
        }
        return v;
    };
    auto phi = [&](int a, int l) {
        double v = 0.0;
        for (int wc = 0; wc < 8; ++wc) {
            WBits w = wbits(wc);
            v += t.pw(w) * t.c1(l, 1, w) * t.q1(a, w);
        }
        return v;
    };
    double v11 = vartheta(1, 1), v10 = vartheta(1, 0), v00 = vartheta(0, 0);
    double jfs = phi(1, 1) - phi(1, 0) - phi(0, 1) + phi(0, 0);
    out["phi_00"] = phi(0, 0);
    out["phi_01"] = phi(0, 1);
    out["phi_10"] = phi(1, 0);
    out["phi_11"] = phi(1, 1);
    out["vartheta_00"] = v00;
    out["vartheta_10"] = v10;
    out["vartheta_11"] = v11;
    out["psi_JFS"] = jfs;
    if (std::fabs(jfs) < 1e-12)
        throw estimation_error("ZeroDenominator", "psi_JFS is numerically zero");
    out["psi_TIIDE"] = v10 - v00;
    out["psi_TIIIE"] = v11 - v10;
    out["psi_TIITE"] = v11 - v00;
    out["psi_DCIDE"] = (v10 - v00) / jfs;
    out["psi_DCIIE"] = (v11 - v10) / jfs;
    out["psi_DCIDE_WEAK"] = (v10 - v00) / psi_fs;
    return out;
}

// ---------------------------------------------------------------------------
// counterfactual route: enumerate the exogenous uniforms

namespace {

// interval partition of [0,1) induced by a cut set; (midpoint, length)
std::vector<std::pair<double, double>> intervals_for(std::vector<double> cuts) {
    cuts.push_back(0.0);
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = std::max(0.0, cuts[i]);
        double hi = std::min(1.0, cuts[i + 1]);
        if (hi > lo) out.emplace_back(0.5 * (lo + hi), hi - lo);
    }
    return out;
}

}  // namespace

TrueValues true_counterfactual_effects(const StructuralDGM& dgm) {
    TrueValues out;
    if (dgm.setting == Setting::Single) {
        double fs = 0.0, cond_num = 0.0;
        double th[3] = {0.0, 0.0, 0.0};
        for (int wc = 0; wc < 8; ++wc) {
            WBits w = wbits(wc);
            double pw = dgm.pw(w);
            if (pw <= 0.0) continue;
            double pz0 = dgm.p_z(0, w), pz1 = dgm.p_z(1, w);
            // counterfactual mediator-draw distribution under instrument a
            auto gam = [&](int a) {
                double pz = dgm.p_z(a, w);
                return pz * dgm.p_m(0, 1, w) + (1.0 - pz) * dgm.p_m(0, 0, w);
            };
            double g0 = gam(0), g1v = gam(1);
            auto ivZ = intervals_for({pz0, pz1});
            auto ivY = intervals_for({dgm.p_y(0, 0, w), dgm.p_y(0, 1, w), dgm.p_y(1, 0, w),
                                      dgm.p_y(1, 1, w)});
            auto ivG = intervals_for({g0, g1v});
            for (const auto& [uz, mz] : ivZ) {
                int z0 = uz < pz0, z1 = uz < pz1;
                int cz = z1 - z0;
                for (const auto& [ug, mg] : ivG) {
                    int gd0 = ug < g0, gd1 = ug < g1v;
                    for (const auto& [uy, my] : ivY) {
                        double mass = pw * mz * mg * my;
                        auto ycf = [&](int zslot, int mval) {
                            return (uy < dgm.p_y(mval, zslot, w)) ? 1.0 : 0.0;
                        };
                        fs += mass * cz;
                        th[P10] += mass * ycf(z1, gd0);
                        th[P00] += mass * ycf(z0, gd0);
                        th[P11] += mass * ycf(z1, gd1);
                        cond_num += mass * cz * (ycf(1, gd0) - ycf(0, gd0));
                    }
                }
            }
        }
        if (std::fabs(fs) < 1e-12) throw estimation_error("NoCompliers", "P(C_Z=1) = 0");
        out["cf_psi_FS"] = fs;
        out["cf_theta_10"] = th[P10];
        out["cf_theta_00"] = th[P00];
        out["cf_theta_11"] = th[P11];
        out["cf_psi_ITT_IDE"] = th[P10] - th[P00];
        out["cf_psi_ITT_IIE"] = th[P11] - th[P10];
        out["cf_psi_ITT_ITE"] = th[P11] - th[P00];
        out["cf_psi_CIDE"] = (th[P10] - th[P00]) / fs;
        out["cf_psi_CIIE"] = (th[P11] - th[P10]) / fs;
        out["cf_psi_CITE"] = (th[P11] - th[P00]) / fs;
        out["cf_psi_CIDE_conditional"] = cond_num / fs;
        return out;
    }

    double fs = 0.0, jfs = 0.0, cond_weak_num = 0.0;
    double vt[3] = {0.0, 0.0, 0.0};
    double phi_cf[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double p_eq = 0.0, p_joint = 0.0, p_cz1 = 0.0;
    for (int wc = 0; wc < 8; ++wc) {
        WBits w = wbits(wc);
        double pw = dgm.pw(w);
        if (pw <= 0.0) continue;
        double pz0 = dgm.p_z(0, w), pz1 = dgm.p_z(1, w);
        auto gam = [&](int a) {
            double pz = dgm.p_z(a, w);
            double g = 0.0;
            for (int z = 0; z <= 1; ++z) {
                double pzv = bsel(z, pz);
                double pl = dgm.p_l(z, w);
                for (int l = 0; l <= 1; ++l) g += pzv * bsel(l, pl) * dgm.p_m(l, z, w);
            }
            return g;
        };
        double g0 = gam(0), g1v = gam(1);
        auto ivA = intervals_for({dgm.p_a});
        auto ivZ = intervals_for({pz0, pz1});
        auto ivM = intervals_for({dgm.p_m(0, 0, w), dgm.p_m(0, 1, w), dgm.p_m(1, 0, w),
                                  dgm.p_m(1, 1, w)});
        auto ivY = intervals_for({dgm.p_y(0, 0, w), dgm.p_y(0, 1, w), dgm.p_y(1, 0, w),
                                  dgm.p_y(1, 1, w)});
        auto ivG = intervals_for({g0, g1v});
        for (const auto& [ua, ma] : ivA) {
            int a_nat = ua < dgm.p_a;
            for (const auto& [uz, mz] : ivZ) {
                int z0 = uz < pz0, z1 = uz < pz1;
                int cz = z1 - z0;
                int z_nat = a_nat ? z1 : z0;
                {
                    for (const auto& [um, mm] : ivM) {
                        int cm_nat = (um < dgm.p_m(1, z_nat, w)) - (um < dgm.p_m(0, z_nat, w));
                        for (const auto& [ug, mgm] : ivG) {
                            int gd0 = ug < g0, gd1 = ug < g1v;
                            for (const auto& [uy, my] : ivY) {
                                double mass = pw * ma * mz * mm * mgm * my;
                                // Y under joint instrument intervention (A=a, L=g)
                                auto ycf = [&](int aset, int g) {
                                    int zv = aset ? z1 : z0;
                                    int mv = um < dgm.p_m(g, zv, w);
                                    return (uy < dgm.p_y(mv, zv, w)) ? 1.0 : 0.0;
                                };
                                vt[P10] += mass * ycf(1, gd0);
                                vt[P00] += mass * ycf(0, gd0);
                                vt[P11] += mass * ycf(1, gd1);
                                // joint first stage: M under (A=a, L=l), times Z_a
                                auto q_la = [&](int l, int a) {
                                    int zv = a ? z1 : z0;
                                    int mv = um < dgm.p_m(l, zv, w);
                                    return double(mv * zv);
                                };
                                phi_cf[1][1] += mass * q_la(1, 1);
                                phi_cf[1][0] += mass * q_la(0, 1);
                                phi_cf[0][1] += mass * q_la(1, 0);
                                phi_cf[0][0] += mass * q_la(0, 0);
                                fs += mass * cz;
                                cond_weak_num += mass * cz * (ycf(1, gd0) - ycf(0, gd0));
                                p_eq += mass * (cz == cm_nat ? 1.0 : 0.0);
                                p_joint += mass * ((cz == 1 && cm_nat == 1) ? 1.0 : 0.0);
                                p_cz1 += mass * (cz == 1 ? 1.0 : 0.0);
                            }
                        }
                    }
                }
            }
        }
    }
    jfs = phi_cf[1][1] - phi_cf[1][0] - phi_cf[0][1] + phi_cf[0][0];
    if (std::fabs(fs) < 1e-12) throw estimation_error("NoCompliers", "P(C_Z=1) = 0");
    if (std::fabs(jfs) < 1e-12) throw estimation_error("ZeroDenominator", "counterfactual JFS = 0");
    out["cf_psi_FS"] = fs;
    out["cf_phi_00"] = phi_cf[0][0];
    out["cf_phi_01"] = phi_cf[0][1];
    out["cf_phi_10"] = phi_cf[1][0];
    out["cf_phi_11"] = phi_cf[1][1];
    out["cf_psi_JFS"] = jfs;
    out["cf_vartheta_00"] = vt[P00];
    out["cf_vartheta_10"] = vt[P10];
    out["cf_vartheta_11"] = vt[P11];
    out["cf_psi_TIIDE"] = vt[P10] - vt[P00];
    out["cf_psi_TIIIE"] = vt[P11] - vt[P10];
    out["cf_psi_TIITE"] = vt[P11] - vt[P00];
    out["cf_psi_DCIDE"] = (vt[P10] - vt[P00]) / jfs;
    out["cf_psi_DCIIE"] = (vt[P11] - vt[P10]) / jfs;
    out["cf_psi_DCIDE_WEAK"] = (vt[P10] - vt[P00]) / fs;
    out["cf_psi_DCIDE_WEAK_conditional"] = cond_weak_num / fs;
    out["info_P_CZ1"] = p_cz1;
    out["info_P_CZ1_CM1"] = p_joint;
    out["info_P_CZ_eq_CM"] = p_eq;
    return out;
}

// ---------------------------------------------------------------------------
// EIFs under nuisance limits

bool NuisanceLimits::truth(const std::string& nm) const {
    auto it = is_true.find(nm);
    if (it == is_true.end())
        throw estimation_error("MissingNuisance", "no limit mode for '" + nm + "'");
    return it->second;
}

NuisanceLimits NuisanceLimits::all_true(Setting s) {
    NuisanceLimits lim;
    for (const char* nm : {"g", "q", "mu"}) lim.is_true[nm] = true;
    if (s == Setting::Single) {
        lim.is_true["r"] = true;
        lim.is_true["e"] = true;
    } else {
        lim.is_true["p"] = true;
        lim.is_true["c"] = true;
    }
    return lim;
}

namespace {

// Limit-aware single-setting nuisances plus the pseudo-outcome regression
// limits (true conditional expectations of the limit pseudo-outcomes).
struct SingleNu {
    double pwv[8];
    double g1v[8], q1v[2][8], r1v[2][2][8], e1v[2][8], muv[2][2][8];
    double pm_true[2][2][2][8];  // [m][z][a][w]
    double pma_true[2][2][8];    // [m][a][w]
    double uu[3][2][8];          // pair, z, w
    double vv[3][8];
    double theta_star[3] = {0, 0, 0};
    double fs_star = 0.0;

    double gd(int a, int w) const { return bsel(a, g1v[w]); }
    double qd(int z, int a, int w) const { return bsel(z, q1v[a][w]); }
    double rd(int z, int a, int m, int w) const { return bsel(z, r1v[a][m][w]); }
    double ed(int a, int m, int w) const { return bsel(a, e1v[m][w]); }
    double h(int pair, int z, int m, int w) const {
        int ap = kPairs[pair][0], as = kPairs[pair][1];
        return qd(z, ap, w) / rd(z, ap, m, w) * (ed(as, m, w) / ed(ap, m, w));
    }
    double theta_terms(int pair, const JointTable::Config& c) const {
        int ap = kPairs[pair][0], as = kPairs[pair][1];
        int w = wcode(c.w);
        double t = 0.0;
        if (c.a == ap) {
            t += h(pair, c.z, c.m, w) * (c.y - muv[c.z][c.m][w]) / gd(ap, w);
            double ubar = uu[pair][1][w] * q1v[ap][w] + uu[pair][0][w] * (1.0 - q1v[ap][w]);
            t += (uu[pair][c.z][w] - ubar) / gd(ap, w);
        }
        if (c.a == as) {
            double mix = muv[1][c.m][w] * q1v[ap][w] + muv[0][c.m][w] * (1.0 - q1v[ap][w]);
            t += (mix - vv[pair][w]) / gd(as, w);
        }
        t += vv[pair][w];
        return t;
    }
    double fs_terms(const JointTable::Config& c) const {
        int w = wcode(c.w);
        double sign = 2.0 * c.a - 1.0;
        return sign / gd(c.a, w) * (c.z - q1v[c.a][w]) + q1v[1][w] - q1v[0][w];
    }
};

SingleNu build_single_nu(const JointTable& t, const NuisanceLimits& lim) {
    SingleNu s;
    double ea = t.marginal_mean('a');
    double ez = t.marginal_mean('z');
    double ey = t.marginal_mean('y');
    bool g_true = lim.truth("g"), q_true = lim.truth("q"), r_true = lim.truth("r"),
         e_true = lim.truth("e"), mu_true = lim.truth("mu");
    for (int wc = 0; wc < 8; ++wc) {
        WBits w = wbits(wc);
        s.pwv[wc] = t.pw(w);
        s.g1v[wc] = g_true ? t.g1(w) : ea;
        for (int a = 0; a <= 1; ++a) {
            s.q1v[a][wc] = q_true ? t.q1(a, w) : ez;
            for (int m = 0; m <= 1; ++m) s.r1v[a][m][wc] = r_true ? t.r1(a, m, w) : ez;
        }
        for (int m = 0; m <= 1; ++m) {
            s.e1v[m][wc] = e_true ? t.e1(m, w) : ea;
            for (int z = 0; z <= 1; ++z) {
                s.muv[z][m][wc] = mu_true ? t.mu_s(z, m, w) : ey;
                for (int a = 0; a <= 1; ++a) s.pm_true[m][z][a][wc] = t.pm_cond(m, z, a, w);
            }
            for (int a = 0; a <= 1; ++a) s.pma_true[m][a][wc] = t.pm_a(m, a, w);
        }
    }
    // pseudo-outcome regression limits: true conditional expectations of the
    // limit pseudo-outcomes
    for (int pair = 0; pair < 3; ++pair) {
        int ap = kPairs[pair][0], as = kPairs[pair][1];
        for (int wc = 0; wc < 8; ++wc) {
            for (int z = 0; z <= 1; ++z) {
                double u = 0.0;
                for (int m = 0; m <= 1; ++m) {
                    u += s.pm_true[m][z][ap][wc] * s.muv[z][m][wc] * s.h(pair, z, m, wc);
                }
                s.uu[pair][z][wc] = u;
            }
            double v = 0.0;
            for (int m = 0; m <= 1; ++m) {
                double mix = s.muv[1][m][wc] * s.q1v[ap][wc] +
                             s.muv[0][m][wc] * (1.0 - s.q1v[ap][wc]);
                v += s.pma_true[m][as][wc] * mix;
            }
            s.vv[pair][wc] = v;
        }
    }
    for (const auto& c : t.configs()) {
        for (int pair = 0; pair < 3; ++pair) s.theta_star[pair] += c.p * s.theta_terms(pair, c);
        s.fs_star += c.p * s.fs_terms(c);
    }
    return s;
}

struct DoubleNu {
    double pwv[8];
    double g1v[8], q1v[2][8];
    double p1v[2][2][8];    // [z][a][w]
    double c1v[2][2][8];    // [l][z][w]
    double muv[2][2][8];    // [l][z][w]
    double gam1v[2][8];     // [a][w]  direct M-marginal regression limit
    double mbZ[2][2][8];    // [l][a][w]
    double mbL[2][2][8];    // [z][astar][w]
    double vt_star[3] = {0, 0, 0};
    double phi_star[2][2] = {{0, 0}, {0, 0}};
    double fs_star = 0.0;

    double gd(int a, int w) const { return bsel(a, g1v[w]); }
    double pd(int l, int z, int a, int w) const { return bsel(l, p1v[z][a][w]); }
    double gamd(int l, int a, int w) const { return bsel(l, gam1v[a][w]); }
    double vartheta_terms(int pair, const JointTable::Config& c) const {
        int ap = kPairs[pair][0], as = kPairs[pair][1];
        int w = wcode(c.w);
        double t = 0.0;
        if (c.a == ap) {
            t += gamd(c.l, as, w) / (pd(c.l, c.z, ap, w) * gd(ap, w)) *
                 (c.y - muv[c.l][c.z][w]);
            double mix = mbL[1][as][w] * q1v[ap][w] + mbL[0][as][w] * (1.0 - q1v[ap][w]);
            t += (mbL[c.z][as][w] - mix) / gd(ap, w);
        }
        if (c.a == as) {
            double mix = mbZ[1][ap][w] * gam1v[as][w] + mbZ[0][ap][w] * (1.0 - gam1v[as][w]);
            t += (mbZ[c.m][ap][w] - mix) / gd(as, w);
        }
        t += mbZ[1][ap][w] * gam1v[as][w] + mbZ[0][ap][w] * (1.0 - gam1v[as][w]);
        return t;
    }
    double phi_terms(int a, int l, const JointTable::Config& c) const {
        int w = wcode(c.w);
        double t = 0.0;
        if (c.a == a && c.l == l) {
            t += (c.m * c.z - c.z * c1v[l][c.z][w]) / (gd(a, w) * pd(l, c.z, a, w));
        }
        if (c.a == a) {
            t += (c.z * c1v[l][c.z][w] - c1v[l][1][w] * q1v[a][w]) / gd(a, w);
        }
        t += c1v[l][1][w] * q1v[a][w];
        return t;
    }
    double fs_terms(const JointTable::Config& c) const {
        int w = wcode(c.w);
        double sign = 2.0 * c.a - 1.0;
        return sign / gd(c.a, w) * (c.z - q1v[c.a][w]) + q1v[1][w] - q1v[0][w];
    }
};

DoubleNu build_double_nu(const JointTable& t, const NuisanceLimits& lim) {
    DoubleNu s;
    double ea = t.marginal_mean('a');
    double ez = t.marginal_mean('z');
    double el = t.marginal_mean('l');
    double em = t.marginal_mean('m');
    double ey = t.marginal_mean('y');
    bool g_true = lim.truth("g"), q_true = lim.truth("q"), p_true = lim.truth("p"),
         c_true = lim.truth("c"), mu_true = lim.truth("mu");
    for (int wc = 0; wc < 8; ++wc) {
        WBits w = wbits(wc);
        s.pwv[wc] = t.pw(w);
        s.g1v[wc] = g_true ? t.g1(w) : ea;
        for (int a = 0; a <= 1; ++a) {
            s.q1v[a][wc] = q_true ? t.q1(a, w) : ez;
            for (int z = 0; z <= 1; ++z) s.p1v[z][a][wc] = p_true ? t.p1(z, a, w) : el;
            s.gam1v[a][wc] = c_true ? t.gamma1(a, w) : em;
        }
        for (int l = 0; l <= 1; ++l) {
            for (int z = 0; z <= 1; ++z) {
                s.c1v[l][z][wc] = c_true ? t.c1(l, z, w) : em;
                s.muv[l][z][wc] = mu_true ? t.mu_d(l, z, w) : ey;
            }
        }
        for (int a = 0; a <= 1; ++a) {
            for (int l = 0; l <= 1; ++l) {
                s.mbZ[l][a][wc] = s.muv[l][1][wc] * s.q1v[a][wc] +
                                  s.muv[l][0][wc] * (1.0 - s.q1v[a][wc]);
            }
            for (int z = 0; z <= 1; ++z) {
                s.mbL[z][a][wc] = s.muv[1][z][wc] * s.gam1v[a][wc] +
                                  s.muv[0][z][wc] * (1.0 - s.gam1v[a][wc]);
            }
        }
    }
    for (const auto& c : t.configs()) {
        for (int pair = 0; pair < 3; ++pair) s.vt_star[pair] += c.p * s.vartheta_terms(pair, c);
        for (int a = 0; a <= 1; ++a)
            for (int l = 0; l <= 1; ++l) s.phi_star[a][l] += c.p * s.phi_terms(a, l, c);
        s.fs_star += c.p * s.fs_terms(c);
    }
    return s;
}

}  // namespace

std::vector<double> eif_values_at(const JointTable& t, const std::string& key,
                                  const NuisanceLimits& limits) {
    const auto& cfgs = t.configs();
    std::vector<double> out(cfgs.size(), 0.0);
    if (t.setting() == Setting::Single) {
        SingleNu s = build_single_nu(t, limits);
        double psi_ide = s.theta_star[P10] - s.theta_star[P00];
        double psi_ite = s.theta_star[P11] - s.theta_star[P00];
        for (std::size_t i = 0; i < cfgs.size(); ++i) {
            const auto& c = cfgs[i];
            double d10 = s.theta_terms(P10, c) - s.theta_star[P10];
            double d00 = s.theta_terms(P00, c) - s.theta_star[P00];
            double d11 = s.theta_terms(P11, c) - s.theta_star[P11];
            double dfs = s.fs_terms(c) - s.fs_star;
            double dide = d10 - d00, dite = d11 - d00, diie = d11 - d10;
            if (key == "FS") out[i] = dfs;
            else if (key == "IDE") out[i] = dide;
            else if (key == "IIE") out[i] = diie;
            else if (key == "ITE") out[i] = dite;
            else if (key == "CIDE")
                out[i] = dide / s.fs_star - psi_ide * dfs / (s.fs_star * s.fs_star);
            else if (key == "CITE")
                out[i] = dite / s.fs_star - psi_ite * dfs / (s.fs_star * s.fs_star);
            else if (key == "CIIE")
                out[i] = (dite - dide) / s.fs_star -
                         (psi_ite - psi_ide) * dfs / (s.fs_star * s.fs_star);
            else
                throw estimation_error("UnknownEifKey", key);
        }
        return out;
    }
    DoubleNu s = build_double_nu(t, limits);
    double jfs = s.phi_star[1][1] - s.phi_star[1][0] - s.phi_star[0][1] + s.phi_star[0][0];
    double tiide = s.vt_star[P10] - s.vt_star[P00];
    double tiiie = s.vt_star[P11] - s.vt_star[P10];
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const auto& c = cfgs[i];
        double d10 = s.vartheta_terms(P10, c) - s.vt_star[P10];
        double d00 = s.vartheta_terms(P00, c) - s.vt_star[P00];
        double d11 = s.vartheta_terms(P11, c) - s.vt_star[P11];
        double dphi[2][2];
        for (int a = 0; a <= 1; ++a)
            for (int l = 0; l <= 1; ++l) dphi[a][l] = s.phi_terms(a, l, c) - s.phi_star[a][l];
        double djfs = dphi[1][1] - dphi[1][0] - dphi[0][1] + dphi[0][0];
        double dfs = s.fs_terms(c) - s.fs_star;
        double dtiide = d10 - d00, dtiiie = d11 - d10, dtiite = d11 - d00;
        if (key == "FS") out[i] = dfs;
        else if (key == "TIIDE") out[i] = dtiide;
        else if (key == "TIIIE") out[i] = dtiiie;
        else if (key == "TIITE") out[i] = dtiite;
        else if (key == "JFS") out[i] = djfs;
        else if (key == "PHI_00") out[i] = dphi[0][0];
        else if (key == "PHI_01") out[i] = dphi[0][1];
        else if (key == "PHI_10") out[i] = dphi[1][0];
        else if (key == "PHI_11") out[i] = dphi[1][1];
        else if (key == "VARTHETA_00") out[i] = d00;
        else if (key == "VARTHETA_10") out[i] = d10;
        else if (key == "VARTHETA_11") out[i] = d11;
        else if (key == "DCIDE") out[i] = dtiide / jfs - tiide * djfs / (jfs * jfs);
        else if (key == "DCIIE") out[i] = dtiiie / jfs - tiiie * djfs / (jfs * jfs);
        else if (key == "DCIDE_WEAK")
            out[i] = dtiide / s.fs_star - tiide * dfs / (s.fs_star * s.fs_star);
        else
            throw estimation_error("UnknownEifKey", key);
    }
    return out;
}

double eif_mean_at_truth(const JointTable& t, const std::string& key) {
    auto vals = eif_values_at(t, key, NuisanceLimits::all_true(t.setting()));
    double s = 0.0;
    const auto& cfgs = t.configs();
    for (std::size_t i = 0; i < cfgs.size(); ++i) s += cfgs[i].p * vals[i];
    return s;
}

double efficiency_bound(const JointTable& t, const std::string& key) {
    auto vals = eif_values_at(t, key, NuisanceLimits::all_true(t.setting()));
    const auto& cfgs = t.configs();
    double m = 0.0;
    for (std::size_t i = 0; i < cfgs.size(); ++i) m += cfgs[i].p * vals[i];
    double v = 0.0;
    for (std::size_t i = 0; i < cfgs.size(); ++i) v += cfgs[i].p * (vals[i] - m) * (vals[i] - m);
    return v;
}

double population_onestep(const JointTable& t, EstimandKind kind, const NuisanceLimits& limits) {
    if (t.setting() == Setting::Single) {
        SingleNu s = build_single_nu(t, limits);
        double ide = s.theta_star[P10] - s.theta_star[P00];
        double iie = s.theta_star[P11] - s.theta_star[P10];
        double ite = s.theta_star[P11] - s.theta_star[P00];
        switch (kind) {
            case EstimandKind::FS: return s.fs_star;
            case EstimandKind::ITT_IDE: return ide;
            case EstimandKind::ITT_IIE: return iie;
            case EstimandKind::ITT_ITE: return ite;
            case EstimandKind::CIDE:
            case EstimandKind::CIIE:
            case EstimandKind::CITE: {
                if (std::fabs(s.fs_star) < 1e-12)
                    throw estimation_error("ZeroDenominator", "first-stage limit is zero");
                double num = (kind == EstimandKind::CIDE) ? ide
                             : (kind == EstimandKind::CIIE) ? iie
                                                            : ite;
                return num / s.fs_star;
            }
            default:
                throw estimation_error("WrongSetting", "estimand needs the double setting");
        }
    }
    DoubleNu s = build_double_nu(t, limits);
    double jfs = s.phi_star[1][1] - s.phi_star[1][0] - s.phi_star[0][1] + s.phi_star[0][0];
    double tiide = s.vt_star[P10] - s.vt_star[P00];
    double tiiie = s.vt_star[P11] - s.vt_star[P10];
    switch (kind) {
        case EstimandKind::JFS: return jfs;
        case EstimandKind::FS: return s.fs_star;
        case EstimandKind::DCIDE:
            if (std::fabs(jfs) < 1e-12) throw estimation_error("ZeroDenominator", "JFS limit");
            return tiide / jfs;
        case EstimandKind::DCIIE:
            if (std::fabs(jfs) < 1e-12) throw estimation_error("ZeroDenominator", "JFS limit");
            return tiiie / jfs;
        case EstimandKind::DCIDE_WEAK:
            if (std::fabs(s.fs_star) < 1e-12)
                throw estimation_error("ZeroDenominator", "first-stage limit");
            return tiide / s.fs_star;
        default:
            throw estimation_error("WrongSetting", "estimand needs the single setting");
    }
}

// ---------------------------------------------------------------------------
// fixtures

namespace {

const std::vector<std::string>& fixture_keys(Setting s) {
    static const std::vector<std::string> single = {
        "psi_FS",        "theta_00",      "theta_10",      "theta_11",     "psi_ITT_IDE",
        "psi_ITT_IIE",   "psi_ITT_ITE",   "psi_CIDE",      "psi_CIIE",     "psi_CITE",
        "bound_FS",      "bound_ITT_IDE", "bound_ITT_IIE", "bound_ITT_ITE", "bound_CIDE",
        "bound_CIIE",    "bound_CITE"};
    static const std::vector<std::string> dbl = {
        "psi_FS",       "phi_00",         "phi_01",        "phi_10",       "phi_11",
        "psi_JFS",      "vartheta_00",    "vartheta_10",   "vartheta_11",  "psi_TIIDE",
        "psi_TIIIE",    "psi_TIITE",      "psi_DCIDE",     "psi_DCIIE",    "psi_DCIDE_WEAK",
        "bound_FS",     "bound_JFS",      "bound_TIIDE",   "bound_TIIIE",  "bound_TIITE",
        "bound_DCIDE",  "bound_DCIIE",    "bound_DCIDE_WEAK", "info_P_CZ1", "info_P_CZ1_CM1",
        "info_P_CZ_eq_CM"};
    return s == Setting::Single ? single : dbl;
}

}  // namespace

std::string fixtures_text(Setting setting) {
    StructuralDGM dgm = build_dgm(setting);
    JointTable table(dgm);
    TrueValues ident = true_identified_functionals(table);
    TrueValues cf = true_counterfactual_effects(dgm);
    TrueValues all = ident;
    if (setting == Setting::Single) {
        all["bound_FS"] = efficiency_bound(table, "FS");
        all["bound_ITT_IDE"] = efficiency_bound(table, "IDE");
        all["bound_ITT_IIE"] = efficiency_bound(table, "IIE");
        all["bound_ITT_ITE"] = efficiency_bound(table, "ITE");
        all["bound_CIDE"] = efficiency_bound(table, "CIDE");
        all["bound_CIIE"] = efficiency_bound(table, "CIIE");
        all["bound_CITE"] = efficiency_bound(table, "CITE");
    } else {
        all["bound_FS"] = efficiency_bound(table, "FS");
        all["bound_JFS"] = efficiency_bound(table, "JFS");
        all["bound_TIIDE"] = efficiency_bound(table, "TIIDE");
        all["bound_TIIIE"] = efficiency_bound(table, "TIIIE");
        all["bound_TIITE"] = efficiency_bound(table, "TIITE");
        all["bound_DCIDE"] = efficiency_bound(table, "DCIDE");
        all["bound_DCIIE"] = efficiency_bound(table, "DCIIE");
        all["bound_DCIDE_WEAK"] = efficiency_bound(table, "DCIDE_WEAK");
        all["info_P_CZ1"] = cf.at("info_P_CZ1");
        all["info_P_CZ1_CM1"] = cf.at("info_P_CZ1_CM1");
        all["info_P_CZ_eq_CM"] = cf.at("info_P_CZ_eq_CM");
    }
    std::ostringstream os;
    for (const auto& k : fixture_keys(setting)) {
        os << k << " = " << fmt_g17(all.at(k)) << "\n";
    }
    return os.str();
}

TrueValues parse_fixtures(const std::string& text) {
    TrueValues out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw parse_error("BadFixtureLine", line);
        std::string key = line.substr(0, eq);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        out[key] = std::stod(line.substr(eq + 1));
    }
    return out;
}

// populated from data/oracle_fixtures_*.txt at configure time
extern const char* const kEmbeddedFixturesSingle;
extern const char* const kEmbeddedFixturesDouble;

const std::string& embedded_fixtures_text(Setting setting) {
    static const std::string single_text(kEmbeddedFixturesSingle);
    static const std::string double_text(kEmbeddedFixturesDouble);
    return setting == Setting::Single ? single_text : double_text;
}

const TrueValues& embedded_fixtures(Setting setting) {
    static const TrueValues single_vals = parse_fixtures(embedded_fixtures_text(Setting::Single));
    static const TrueValues double_vals = parse_fixtures(embedded_fixtures_text(Setting::Double));
    const TrueValues& v = setting == Setting::Single ? single_vals : double_vals;
    if (v.empty()) throw io_error("MissingFixtures", "embedded fixtures are empty; regenerate data/oracle_fixtures_*.txt");
    return v;
}

// ---------------------------------------------------------------------------
// Monte Carlo cross-check of the fixtures

namespace {

struct Acc {
    double sum = 0.0, sum2 = 0.0, n = 0.0;
    void add(double v) {
        sum += v;
        sum2 += v * v;
        n += 1.0;
    }
    double mean() const { return sum / n; }
    double se() const {
        double m = mean();
        double var = (sum2 - n * m * m) / (n - 1.0);
        return std::sqrt(std::max(var, 0.0) / n);
    }
    McEstimate est() const { return {mean(), se()}; }
};

// variance estimate with its own standard error (via the 4th moment)
struct VarAcc {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0, n = 0.0;
    void add(double v) {
        s1 += v;
        s2 += v * v;
        s3 += v * v * v;
        s4 += v * v * v * v;
        n += 1.0;
    }
    McEstimate est() const {
        double m = s1 / n;
        double m2 = s2 / n - m * m;
        double m3 = s3 / n - 3.0 * m * s2 / n + 2.0 * m * m * m;
        double m4 = s4 / n - 4.0 * m * s3 / n + 6.0 * m * m * s2 / n - 3.0 * m * m * m * m;
        (void)m3;
        double var = m2 * n / (n - 1.0);
        double se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
        return {var, se};
    }
};

// ratio of two sample means with a delta-method standard error
struct RatioAcc {
    double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0, n = 0.0;
    void add(double x, double y) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        n += 1.0;
    }
    McEstimate est() const {
        double mx = sx / n, my = sy / n;
        double vx = (sxx - n * mx * mx) / (n - 1.0);
        double vy = (syy - n * my * my) / (n - 1.0);
        double cxy = (sxy - n * mx * my) / (n - 1.0);
        double var_infl = vx / (my * my) + mx * mx * vy / (my * my * my * my) -
                          2.0 * mx * cxy / (my * my * my);
        return {mx / my, std::sqrt(std::max(var_infl, 0.0) / n)};
    }
};

}  // namespace

std::map<std::string, McEstimate> oracle_mc_check(Setting setting, std::size_t ndraws,
                                                  std::uint64_t seed) {
    StructuralDGM dgm = build_dgm(setting);
    JointTable table(dgm);
    NuisanceLimits truth = NuisanceLimits::all_true(setting);
    std::map<std::string, McEstimate> out;

    enum : std::uint64_t { MC_W1 = 11, MC_W2 = 12, MC_W3 = 13, MC_A = 14, MC_Z = 15, MC_L = 16,
                           MC_M = 17, MC_Y = 18, MC_G = 19 };

    if (setting == Setting::Single) {
        SingleNu nu = build_single_nu(table, truth);
        Acc fs, th10, th00, th11, ide, iie, ite;
        RatioAcc cide, ciie, cite;
        VarAcc d_fs, d_ide, d_cide;
        for (std::size_t i = 0; i < ndraws; ++i) {
            WBits w;
            w[0] = counter_uniform(seed, i, MC_W1) < dgm.p_w1;
            w[1] = counter_uniform(seed, i, MC_W2) < dgm.p_w2;
            w[2] = counter_uniform(seed, i, MC_W3) < dgm.p_w3(w[0], w[1]);
            double uz = counter_uniform(seed, i, MC_Z);
            double uy = counter_uniform(seed, i, MC_Y);
            double ug = counter_uniform(seed, i, MC_G);
            int z0 = uz < dgm.p_z(0, w), z1 = uz < dgm.p_z(1, w);
            int cz = z1 - z0;
            auto gam = [&](int a) {
                double pz = dgm.p_z(a, w);
                return pz * dgm.p_m(0, 1, w) + (1.0 - pz) * dgm.p_m(0, 0, w);
            };
            int g0 = ug < gam(0), g1v = ug < gam(1);
            auto ycf = [&](int zslot, int mval) {
                return (uy < dgm.p_y(mval, zslot, w)) ? 1.0 : 0.0;
            };
            double t10 = ycf(z1, g0), t00 = ycf(z0, g0), t11 = ycf(z1, g1v);
            fs.add(cz);
            th10.add(t10);
            th00.add(t00);
            th11.add(t11);
            ide.add(t10 - t00);
            iie.add(t11 - t10);
            ite.add(t11 - t00);
            cide.add(t10 - t00, cz);
            ciie.add(t11 - t10, cz);
            cite.add(t11 - t00, cz);

            // observational draw for the bound checks
            int a = counter_uniform(seed, i, MC_A) < dgm.p_a;
            int zo = uz < dgm.p_z(a, w);
            int mo = counter_uniform(seed, i, MC_M) < dgm.p_m(0, zo, w);
            int yo = uy < dgm.p_y(mo, zo, w);
            JointTable::Config c{w, a, zo, 0, mo, yo, 0.0};
            double dfs = nu.fs_terms(c) - nu.fs_star;
            double d10 = nu.theta_terms(P10, c) - nu.theta_star[P10];
            double d00 = nu.theta_terms(P00, c) - nu.theta_star[P00];
            double dide = d10 - d00;
            double psi_ide = nu.theta_star[P10] - nu.theta_star[P00];
            d_fs.add(dfs);
            d_ide.add(dide);
            d_cide.add(dide / nu.fs_star - psi_ide * dfs / (nu.fs_star * nu.fs_star));
        }
        out["psi_FS"] = fs.est();
        out["theta_10"] = th10.est();
        out["theta_00"] = th00.est();
        out["theta_11"] = th11.est();
        out["psi_ITT_IDE"] = ide.est();
        out["psi_ITT_IIE"] = iie.est();
        out["psi_ITT_ITE"] = ite.est();
        out["psi_CIDE"] = cide.est();
        out["psi_CIIE"] = ciie.est();
        out["psi_CITE"] = cite.est();
        out["bound_FS"] = d_fs.est();
        out["bound_ITT_IDE"] = d_ide.est();
        out["bound_CIDE"] = d_cide.est();
        return out;
    }

    DoubleNu nu = build_double_nu(table, truth);
    Acc vt10, vt00, vt11, jfs_acc, tiide_acc, tiiie_acc, fs_acc;
    RatioAcc dcide, dciie, dcide_weak;
    VarAcc d_jfs, d_tiide, d_dcide;
    double jfs_true = nu.phi_star[1][1] - nu.phi_star[1][0] - nu.phi_star[0][1] +
                      nu.phi_star[0][0];
    double tiide_true = nu.vt_star[P10] - nu.vt_star[P00];
    for (std::size_t i = 0; i < ndraws; ++i) {
        WBits w;
        w[0] = counter_uniform(seed, i, MC_W1) < dgm.p_w1;
        w[1] = counter_uniform(seed, i, MC_W2) < dgm.p_w2;
        w[2] = counter_uniform(seed, i, MC_W3) < dgm.p_w3(w[0], w[1]);
        double uz = counter_uniform(seed, i, MC_Z);
        double ul = counter_uniform(seed, i, MC_L);
        double um = counter_uniform(seed, i, MC_M);
        double uy = counter_uniform(seed, i, MC_Y);
        double ug = counter_uniform(seed, i, MC_G);
        int z0 = uz < dgm.p_z(0, w), z1 = uz < dgm.p_z(1, w);
        int cz = z1 - z0;
        auto gam = [&](int a) {
            double pz = dgm.p_z(a, w);
            double g = 0.0;
            for (int z = 0; z <= 1; ++z) {
                double pzv = bsel(z, pz);
                for (int l = 0; l <= 1; ++l)
                    g += pzv * bsel(l, dgm.p_l(z, w)) * dgm.p_m(l, z, w);
            }
            return g;
        };
        int g0 = ug < gam(0), g1v = ug < gam(1);
        auto ycf = [&](int aset, int g) {
            int zv = aset ? z1 : z0;
            int mv = um < dgm.p_m(g, zv, w);
            return (uy < dgm.p_y(mv, zv, w)) ? 1.0 : 0.0;
        };
        auto q_la = [&](int l, int a) {
            int zv = a ? z1 : z0;
            int mv = um < dgm.p_m(l, zv, w);
            return double(mv * zv);
        };
        double t10 = ycf(1, g0), t00 = ycf(0, g0), t11 = ycf(1, g1v);
        double jfs_i = q_la(1, 1) - q_la(0, 1) - q_la(1, 0) + q_la(0, 0);
        vt10.add(t10);
        vt00.add(t00);
        vt11.add(t11);
        tiide_acc.add(t10 - t00);
        tiiie_acc.add(t11 - t10);
        fs_acc.add(cz);
        jfs_acc.add(jfs_i);
        dcide.add(t10 - t00, jfs_i);
        dciie.add(t11 - t10, jfs_i);
        dcide_weak.add(t10 - t00, cz);

        int a = counter_uniform(seed, i, MC_A) < dgm.p_a;
        int zo = uz < dgm.p_z(a, w);
        int lo = ul < dgm.p_l(zo, w);
        int mo = um < dgm.p_m(lo, zo, w);
        int yo = uy < dgm.p_y(mo, zo, w);
        JointTable::Config c{w, a, zo, lo, mo, yo, 0.0};
        double dphi[2][2];
        for (int aa = 0; aa <= 1; ++aa)
            for (int ll = 0; ll <= 1; ++ll)
                dphi[aa][ll] = nu.phi_terms(aa, ll, c) - nu.phi_star[aa][ll];
        double djfs = dphi[1][1] - dphi[1][0] - dphi[0][1] + dphi[0][0];
        double d10 = nu.vartheta_terms(P10, c) - nu.vt_star[P10];
        double d00 = nu.vartheta_terms(P00, c) - nu.vt_star[P00];
        double dtiide = d10 - d00;
        d_jfs.add(djfs);
        d_tiide.add(dtiide);
        d_dcide.add(dtiide / jfs_true - tiide_true * djfs / (jfs_true * jfs_true));
    }
    out["vartheta_10"] = vt10.est();
    out["vartheta_00"] = vt00.est();
    out["vartheta_11"] = vt11.est();
    out["psi_JFS"] = jfs_acc.est();
    out["psi_TIIDE"] = tiide_acc.est();
    out["psi_TIIIE"] = tiiie_acc.est();
    out["psi_FS"] = fs_acc.est();
    out["psi_DCIDE"] = dcide.est();
    out["psi_DCIIE"] = dciie.est();
    out["psi_DCIDE_WEAK"] = dcide_weak.est();
    out["bound_JFS"] = d_jfs.est();
    out["bound_TIIDE"] = d_tiide.est();
    out["bound_DCIDE"] = d_dcide.est();
    return out;
}

}  // namespace ivmed
