#include "estimator_double.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "estimator_single.hpp"

namespace ivmed {

namespace {

double bsel(double bit, double p1) { return bit != 0.0 ? p1 : 1.0 - p1; }

bool is_double_kind(EstimandKind k) {
    switch (k) {
        case EstimandKind::DCIDE:
        case EstimandKind::DCIIE:
        case EstimandKind::DCIDE_WEAK:
        case EstimandKind::JFS:
            return true;
        default:
            return false;
    }
}

}  // namespace

double compose_gamma1(const NuisanceFitDouble& f, std::size_t i, int a) {
    double q1 = a ? f.q1_a1[i] : f.q1_a0[i];
    double g = 0.0;
    for (int z = 0; z <= 1; ++z) {
        double qz = z ? q1 : 1.0 - q1;
        for (int l = 0; l <= 1; ++l) {
            double pl = l ? f.p1[z][a][i] : 1.0 - f.p1[z][a][i];
            g += f.c1[l][z][i] * pl * qz;
        }
    }
    return g;
}

void derive_mu_bars(NuisanceFitDouble& f, std::size_t n) {
    for (int l = 0; l <= 1; ++l) {
        for (int a = 0; a <= 1; ++a) {
            auto& col = f.mubar_z[l][a];
            col.resize(n);
            const auto& q1 = a ? f.q1_a1 : f.q1_a0;
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = f.mu[l][1][i] * q1[i] + f.mu[l][0][i] * (1.0 - q1[i]);
            }
        }
    }
    for (int z = 0; z <= 1; ++z) {
        for (int a = 0; a <= 1; ++a) {
            auto& col = f.mubar_l[z][a];
            col.resize(n);
            const auto& g1 = a ? f.gamma1_a1 : f.gamma1_a0;
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = f.mu[1][z][i] * g1[i] + f.mu[0][z][i] * (1.0 - g1[i]);
            }
        }
    }
}

NuisanceFitDouble fit_nuisances_double(const Dataset& d, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds, double clip,
                                       std::uint64_t seed) {
    CrossFitPredictions pred =
        crossfit_nuisances(d, scenario, folds, {"g", "q", "p", "c", "mu", "gamma"}, clip, seed);
    NuisanceFitDouble f;
    f.g1 = pred.at("g1");
    f.q1_a0 = pred.at("q1_a0");
    f.q1_a1 = pred.at("q1_a1");
    f.p1[0][0] = pred.at("p1_z0_a0");
    f.p1[1][0] = pred.at("p1_z1_a0");
    f.p1[0][1] = pred.at("p1_z0_a1");
    f.p1[1][1] = pred.at("p1_z1_a1");
    f.c1[0][0] = pred.at("c1_l0_z0");
    f.c1[1][0] = pred.at("c1_l1_z0");
    f.c1[0][1] = pred.at("c1_l0_z1");
    f.c1[1][1] = pred.at("c1_l1_z1");
    f.mu[0][0] = pred.at("mu_l0_z0");
    f.mu[1][0] = pred.at("mu_l1_z0");
    f.mu[0][1] = pred.at("mu_l0_z1");
    f.mu[1][1] = pred.at("mu_l1_z1");
    f.gamma1_a0 = pred.at("gamma1_a0");
    f.gamma1_a1 = pred.at("gamma1_a1");
    derive_mu_bars(f, d.n);
    return f;
}

DoubleTerms compute_double_terms(const Dataset& d, const NuisanceFitDouble& f) {
    std::size_t n = d.n;
    const std::vector<double>& lvec = *d.l;
    DoubleTerms t;
    t.fs_unc.resize(n);
    for (int pair = 0; pair < 3; ++pair) t.vt_unc[pair].resize(n);
    for (int a = 0; a <= 1; ++a)
        for (int l = 0; l <= 1; ++l) t.phi_unc[a][l].resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        int li = int(lvec[i]);
        int zi = int(d.z[i]);
        int mi = int(d.m[i]);
        double ga1 = f.g1[i];
        // first stage
        {
            double ga = bsel(d.a[i], ga1);
            double q1a = d.a[i] != 0.0 ? f.q1_a1[i] : f.q1_a0[i];
            t.fs_unc[i] =
                (2.0 * d.a[i] - 1.0) / ga * (d.z[i] - q1a) + f.q1_a1[i] - f.q1_a0[i];
        }
        // theta-type terms
        for (int pair = 0; pair < 3; ++pair) {
            int ap = kThetaPairs[pair][0], as = kThetaPairs[pair][1];
            double q1p = ap ? f.q1_a1[i] : f.q1_a0[i];
            double gam1s = as ? f.gamma1_a1[i] : f.gamma1_a0[i];
            double val = 0.0;
            if (d.a[i] == double(ap)) {
                double gap = bsel(double(ap), ga1);
                double gam_l = li ? gam1s : 1.0 - gam1s;
                double p_l = li ? f.p1[zi][ap][i] : 1.0 - f.p1[zi][ap][i];
                val += gam_l / (p_l * gap) * (d.y[i] - f.mu[li][zi][i]);
                double mbl_mix = f.mubar_l[1][as][i] * q1p + f.mubar_l[0][as][i] * (1.0 - q1p);
                val += (f.mubar_l[zi][as][i] - mbl_mix) / gap;
            }
            if (d.a[i] == double(as)) {
                double gas = bsel(double(as), ga1);
                double mbz_mix =
                    f.mubar_z[1][ap][i] * gam1s + f.mubar_z[0][ap][i] * (1.0 - gam1s);
                val += (f.mubar_z[mi][ap][i] - mbz_mix) / gas;
            }
            val += f.mubar_z[1][ap][i] * gam1s + f.mubar_z[0][ap][i] * (1.0 - gam1s);
            t.vt_unc[pair][i] = val;
        }
        // joint first stage terms
        for (int a = 0; a <= 1; ++a) {
            double q1a = a ? f.q1_a1[i] : f.q1_a0[i];
            for (int l = 0; l <= 1; ++l) {
                double val = 0.0;
                double c_lz = f.c1[l][zi][i];
                if (d.a[i] == double(a) && li == l) {
                    double p_l = l ? f.p1[zi][a][i] : 1.0 - f.p1[zi][a][i];
                    val += (d.m[i] * d.z[i] - d.z[i] * c_lz) / (bsel(double(a), ga1) * p_l);
                }
                if (d.a[i] == double(a)) {
                    val += (d.z[i] * c_lz - f.c1[l][1][i] * q1a) / bsel(double(a), ga1);
                }
                val += f.c1[l][1][i] * q1a;
                t.phi_unc[a][l][i] = val;
            }
        }
    }
    t.fs_hat = mean_of(t.fs_unc);
    for (int pair = 0; pair < 3; ++pair) t.vt_hat[pair] = mean_of(t.vt_unc[pair]);
    for (int a = 0; a <= 1; ++a)
        for (int l = 0; l <= 1; ++l) t.phi_hat[a][l] = mean_of(t.phi_unc[a][l]);
    return t;
}

namespace {

EstimateOutcome finish(const Dataset& d, EstimandKind kind, double num, double den,
                       std::vector<double> eif, const FoldAssignment& folds,
                       const EstimateOptions& opts, bool ratio, bool weak) {
    EstimateOutcome out;
    out.report.estimand = kind;
    out.report.alpha = opts.alpha;
    out.report.numerator_hat = num;
    out.report.denominator_hat = ratio ? den : 1.0;
    out.report.n = d.n;
    out.report.folds = folds.j;
    out.report.seed = opts.seed;
    if (weak) {
        out.status = EstimateOutcome::Status::WeakInstrument;
        out.report.psi_hat = std::numeric_limits<double>::quiet_NaN();
        out.report.se = std::numeric_limits<double>::quiet_NaN();
        out.report.ci_lower = std::numeric_limits<double>::quiet_NaN();
        out.report.ci_upper = std::numeric_limits<double>::quiet_NaN();
        out.message = std::string("WeakInstrument: |denominator| = ") + fmt_g12(std::fabs(den)) +
                      " below threshold; no ratio CI (numerator and denominator reported)";
        return out;
    }
    out.report.psi_hat = ratio ? num / den : num;
    WaldInterval wald = wald_interval(out.report.psi_hat, eif, opts.alpha);
    out.report.se = wald.se;
    out.report.ci_lower = wald.lo;
    out.report.ci_upper = wald.hi;
    out.report.eif_values = std::move(eif);
    return out;
}

}  // namespace

std::map<EstimandKind, EstimateOutcome> estimate_double_all(const Dataset& d,
                                                            const std::vector<EstimandKind>& kinds,
                                                            const ScenarioSpec& scenario,
                                                            const FoldAssignment& folds,
                                                            const EstimateOptions& opts) {
    for (EstimandKind k : kinds) {
        if (!is_double_kind(k))
            throw validation_error("WrongSetting", std::string(estimand_name(k)) +
                                                       " is not a double-instrument estimand");
        validate(d, k);
    }
    if (folds.fold_of.size() != d.n)
        throw validation_error("LengthMismatch", "fold assignment does not match dataset");
    NuisanceFitDouble f = fit_nuisances_double(d, scenario, folds, opts.clip, opts.seed);
    DoubleTerms t = compute_double_terms(d, f);
    std::size_t n = d.n;

    double jfs = t.phi_hat[1][1] - t.phi_hat[1][0] - t.phi_hat[0][1] + t.phi_hat[0][0];
    auto eif_jfs = [&](std::size_t i) {
        return (t.phi_unc[1][1][i] - t.phi_hat[1][1]) - (t.phi_unc[1][0][i] - t.phi_hat[1][0]) -
               (t.phi_unc[0][1][i] - t.phi_hat[0][1]) + (t.phi_unc[0][0][i] - t.phi_hat[0][0]);
    };
    auto eif_fs = [&](std::size_t i) { return t.fs_unc[i] - t.fs_hat; };
    auto eif_pair = [&](int pair, std::size_t i) {
        return t.vt_unc[pair][i] - t.vt_hat[pair];
    };

    std::map<EstimandKind, EstimateOutcome> out;
    for (EstimandKind k : kinds) {
        if (k == EstimandKind::JFS) {
            std::vector<double> eif(n);
            for (std::size_t i = 0; i < n; ++i) eif[i] = eif_jfs(i);
            out[k] = finish(d, k, jfs, 1.0, std::move(eif), folds, opts, false, false);
            continue;
        }
        int pa = (k == EstimandKind::DCIIE) ? kP11 : kP10;
        int pb = (k == EstimandKind::DCIIE) ? kP10 : kP00;
        double num = t.vt_hat[pa] - t.vt_hat[pb];
        double den = (k == EstimandKind::DCIDE_WEAK) ? t.fs_hat : jfs;
        double thresh = (k == EstimandKind::DCIDE_WEAK) ? opts.weak_fs_threshold
                                                        : opts.weak_jfs_threshold;
        if (std::fabs(den) < thresh) {
            out[k] = finish(d, k, num, den, {}, folds, opts, true, true);
            continue;
        }
        std::vector<double> eif(n);
        for (std::size_t i = 0; i < n; ++i) {
            double dn = eif_pair(pa, i) - eif_pair(pb, i);
            double dden = (k == EstimandKind::DCIDE_WEAK) ? eif_fs(i) : eif_jfs(i);
            eif[i] = dn / den - num * dden / (den * den);
        }
        out[k] = finish(d, k, num, den, std::move(eif), folds, opts, true, false);
    }
    return out;
}

EstimateOutcome estimate_double(const Dataset& d, EstimandKind kind, const ScenarioSpec& scenario,
                                const FoldAssignment& folds, const EstimateOptions& opts) {
    auto all = estimate_double_all(d, {kind}, scenario, folds, opts);
    return all.at(kind);
}

}  // namespace ivmed
