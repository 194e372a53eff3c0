#include "estimator_single.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace ivmed {

namespace {

double bsel(double bit, double p1) { return bit != 0.0 ? p1 : 1.0 - p1; }

bool is_single_kind(EstimandKind k) {
    switch (k) {
        case EstimandKind::CIDE:
        case EstimandKind::CIIE:
        case EstimandKind::CITE:
        case EstimandKind::ITT_IDE:
        case EstimandKind::ITT_IIE:
        case EstimandKind::ITT_ITE:
        case EstimandKind::FS:
            return true;
        default:
            return false;
    }
}

bool needs_theta(EstimandKind k) { return k != EstimandKind::FS && is_single_kind(k); }

}  // namespace

double compute_h(const Dataset& d, const NuisanceFitSingle& f, std::size_t i, int pair) {
    int ap = kThetaPairs[pair][0], as = kThetaPairs[pair][1];
    double q1 = ap ? f.q1_a1[i] : f.q1_a0[i];
    double r1 = ap ? f.r1_a1[i] : f.r1_a0[i];
    double qz = bsel(d.z[i], q1);
    double rz = bsel(d.z[i], r1);
    double es = as ? f.e1[i] : 1.0 - f.e1[i];
    double ep = ap ? f.e1[i] : 1.0 - f.e1[i];
    return qz / rz * (es / ep);
}

void fit_u_v(const Dataset& d, const ScenarioSpec& scenario, const FoldAssignment& folds,
             int pair, NuisanceFitSingle& fits, double clip, std::uint64_t seed) {
    int ap = kThetaPairs[pair][0], as = kThetaPairs[pair][1];
    std::size_t n = d.n;
    const LearnerSpec& pseudo_learner = scenario.learner("mu");

    std::vector<double> pseudo_u(n), pseudo_v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu_obs = d.z[i] != 0.0 ? fits.mu_z1[i] : fits.mu_z0[i];
        pseudo_u[i] = mu_obs * compute_h(d, fits, i, pair);
        double q1 = ap ? fits.q1_a1[i] : fits.q1_a0[i];
        pseudo_v[i] = fits.mu_z1[i] * q1 + fits.mu_z0[i] * (1.0 - q1);
        if (!std::isfinite(pseudo_u[i]) || !std::isfinite(pseudo_v[i]))
            throw estimation_error("NonFinitePseudoOutcome", "row " + std::to_string(i));
    }

    std::vector<char> in_ap(n), in_as(n);
    for (std::size_t i = 0; i < n; ++i) {
        in_ap[i] = d.a[i] == double(ap);
        in_as[i] = d.a[i] == double(as);
    }

    DesignMatrix xu = make_design(d, "z");
    auto ucols = crossfit_columns(xu, pseudo_u, OutcomeType::Continuous, pseudo_learner, folds,
                                  {{{0, 0.0}}, {{0, 1.0}}}, clip,
                                  rng_hash(seed, 0x075EEDULL, pair), &in_ap);
    fits.u_z0[pair] = std::move(ucols[0]);
    fits.u_z1[pair] = std::move(ucols[1]);

    DesignMatrix xv = make_design(d, "");
    auto vcols = crossfit_columns(xv, pseudo_v, OutcomeType::Continuous, pseudo_learner, folds,
                                  {{}}, clip, rng_hash(seed, 0x075EEDULL, pair), &in_as);
    fits.v[pair] = std::move(vcols[0]);
}

NuisanceFitSingle fit_nuisances_single(const Dataset& d, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds,
                                       const std::vector<EstimandKind>& kinds, double clip,
                                       std::uint64_t seed) {
    bool theta = std::any_of(kinds.begin(), kinds.end(), needs_theta);
    std::vector<std::string> required = {"g", "q"};
    if (theta) {
        required.push_back("r");
        required.push_back("e");
        required.push_back("mu");
    }
    CrossFitPredictions pred = crossfit_nuisances(d, scenario, folds, required, clip, seed);
    NuisanceFitSingle f;
    f.g1 = pred.at("g1");
    f.q1_a0 = pred.at("q1_a0");
    f.q1_a1 = pred.at("q1_a1");
    if (theta) {
        f.r1_a0 = pred.at("r1_a0");
        f.r1_a1 = pred.at("r1_a1");
        f.e1 = pred.at("e1");
        f.mu_z0 = pred.at("mu_z0");
        f.mu_z1 = pred.at("mu_z1");
        for (int pair = 0; pair < 3; ++pair) fit_u_v(d, scenario, folds, pair, f, clip, seed);
    }
    return f;
}

namespace {

struct SingleTerms {
    std::array<std::vector<double>, 3> theta_unc;  // uncentered theta terms per pair
    std::vector<double> fs_unc;
    std::array<double, 3> theta_hat{};
    double fs_hat = 0.0;
};

SingleTerms compute_terms(const Dataset& d, const NuisanceFitSingle& f, bool theta) {
    std::size_t n = d.n;
    SingleTerms t;
    t.fs_unc.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double g1 = f.g1[i];
        double ga = bsel(d.a[i], g1);
        double q1a = d.a[i] != 0.0 ? f.q1_a1[i] : f.q1_a0[i];
        t.fs_unc[i] = (2.0 * d.a[i] - 1.0) / ga * (d.z[i] - q1a) + f.q1_a1[i] - f.q1_a0[i];
    }
    t.fs_hat = mean_of(t.fs_unc);
    if (!theta) return t;
    for (int pair = 0; pair < 3; ++pair) {
        int ap = kThetaPairs[pair][0], as = kThetaPairs[pair][1];
        auto& col = t.theta_unc[pair];
        col.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double q1 = ap ? f.q1_a1[i] : f.q1_a0[i];
            double mu_obs = d.z[i] != 0.0 ? f.mu_z1[i] : f.mu_z0[i];
            double val = 0.0;
            if (d.a[i] == double(ap)) {
                double gap = bsel(double(ap), f.g1[i]);
                val += compute_h(d, f, i, pair) * (d.y[i] - mu_obs) / gap;
                double u_obs = d.z[i] != 0.0 ? f.u_z1[pair][i] : f.u_z0[pair][i];
                double ubar = f.u_z1[pair][i] * q1 + f.u_z0[pair][i] * (1.0 - q1);
                val += (u_obs - ubar) / gap;
            }
            if (d.a[i] == double(as)) {
                double gas = bsel(double(as), f.g1[i]);
                double mix = f.mu_z1[i] * q1 + f.mu_z0[i] * (1.0 - q1);
                val += (mix - f.v[pair][i]) / gas;
            }
            val += f.v[pair][i];
            col[i] = val;
        }
        t.theta_hat[pair] = mean_of(col);
    }
    return t;
}

EstimateOutcome make_report(const Dataset& d, EstimandKind kind, double num, double den,
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

std::map<EstimandKind, EstimateOutcome> estimate_single_all(const Dataset& d,
                                                            const std::vector<EstimandKind>& kinds,
                                                            const ScenarioSpec& scenario,
                                                            const FoldAssignment& folds,
                                                            const EstimateOptions& opts) {
    for (EstimandKind k : kinds) {
        if (!is_single_kind(k))
            throw validation_error("WrongSetting", std::string(estimand_name(k)) +
                                                       " is not a single-instrument estimand");
        validate(d, k);
    }
    if (folds.fold_of.size() != d.n)
        throw validation_error("LengthMismatch", "fold assignment does not match dataset");
    bool theta = std::any_of(kinds.begin(), kinds.end(), needs_theta);
    NuisanceFitSingle f = fit_nuisances_single(d, scenario, folds, kinds, opts.clip, opts.seed);
    SingleTerms t = compute_terms(d, f, theta);
    std::size_t n = d.n;

    auto eif_fs = [&](std::size_t i) { return t.fs_unc[i] - t.fs_hat; };
    auto eif_pair = [&](int pair, std::size_t i) {
        return t.theta_unc[pair][i] - t.theta_hat[pair];
    };

    std::map<EstimandKind, EstimateOutcome> out;
    for (EstimandKind k : kinds) {
        if (k == EstimandKind::FS) {
            std::vector<double> eif(n);
            for (std::size_t i = 0; i < n; ++i) eif[i] = eif_fs(i);
            out[k] = make_report(d, k, t.fs_hat, 1.0, std::move(eif), folds, opts, false, false);
            continue;
        }
        int pa = kP10, pb = kP00;
        if (k == EstimandKind::ITT_IIE || k == EstimandKind::CIIE) {
            pa = kP11;
            pb = kP10;
        } else if (k == EstimandKind::ITT_ITE || k == EstimandKind::CITE) {
            pa = kP11;
            pb = kP00;
        }
        double num = t.theta_hat[pa] - t.theta_hat[pb];
        bool ratio = estimand_is_ratio(k);
        if (!ratio) {
            std::vector<double> eif(n);
            for (std::size_t i = 0; i < n; ++i) eif[i] = eif_pair(pa, i) - eif_pair(pb, i);
            out[k] = make_report(d, k, num, 1.0, std::move(eif), folds, opts, false, false);
            continue;
        }
        if (std::fabs(t.fs_hat) < opts.weak_fs_threshold) {
            out[k] = make_report(d, k, num, t.fs_hat, {}, folds, opts, true, true);
            continue;
        }
        std::vector<double> eif(n);
        double fs2 = t.fs_hat * t.fs_hat;
        for (std::size_t i = 0; i < n; ++i) {
            double dn = eif_pair(pa, i) - eif_pair(pb, i);
            eif[i] = dn / t.fs_hat - num * eif_fs(i) / fs2;
        }
        out[k] = make_report(d, k, num, t.fs_hat, std::move(eif), folds, opts, true, false);
    }
    return out;
}

EstimateOutcome estimate_single(const Dataset& d, EstimandKind kind, const ScenarioSpec& scenario,
                                const FoldAssignment& folds, const EstimateOptions& opts) {
    auto all = estimate_single_all(d, {kind}, scenario, folds, opts);
    return all.at(kind);
}

}  // namespace ivmed
