#pragma once

#include <array>
#include <map>
#include <vector>

#include "crossfit.hpp"
#include "types.hpp"

namespace ivmed {

// Cross-fitted per-observation nuisance values for the double-instrument
// setting. gamma1 comes from a direct cross-fitted regression of M on (A,W);
// the closed-form (c,p,q) composition is kept as compose_gamma1 for checks.
struct NuisanceFitDouble {
    std::vector<double> g1;
    std::vector<double> q1_a0, q1_a1;
    std::array<std::array<std::vector<double>, 2>, 2> p1;      // [z][a] -> phat(1|z,a,W_i)
    std::array<std::array<std::vector<double>, 2>, 2> c1;      // [l][z] -> chat(1|l,z,W_i)
    std::array<std::array<std::vector<double>, 2>, 2> mu;      // [l][z] -> muhat(l,z,W_i)
    std::vector<double> gamma1_a0, gamma1_a1;                  // direct M-marginal
    // derived closed-form sums
    std::array<std::array<std::vector<double>, 2>, 2> mubar_z;  // [l][a']
    std::array<std::array<std::vector<double>, 2>, 2> mubar_l;  // [z][a*]
};

// Theorem 2's rewrite of the mediator marginal from the (c,p,q) primitives.
double compose_gamma1(const NuisanceFitDouble& f, std::size_t i, int a);

// mubar_z(l,a',W_i) and mubar_l(z,a*,W_i) as exact two-term sums.
void derive_mu_bars(NuisanceFitDouble& f, std::size_t n);

NuisanceFitDouble fit_nuisances_double(const Dataset& d, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds, double clip,
                                       std::uint64_t seed);

// Uncentered per-observation EIF terms; the one-step point estimates are the
// column means.
struct DoubleTerms {
    std::array<std::vector<double>, 3> vt_unc;                  // per theta pair
    std::array<std::array<std::vector<double>, 2>, 2> phi_unc;  // [a][l]
    std::vector<double> fs_unc;
    std::array<double, 3> vt_hat{};
    std::array<std::array<double, 2>, 2> phi_hat{};
    double fs_hat = 0.0;
};

DoubleTerms compute_double_terms(const Dataset& d, const NuisanceFitDouble& f);

std::map<EstimandKind, EstimateOutcome> estimate_double_all(const Dataset& d,
                                                            const std::vector<EstimandKind>& kinds,
                                                            const ScenarioSpec& scenario,
                                                            const FoldAssignment& folds,
                                                            const EstimateOptions& opts);

EstimateOutcome estimate_double(const Dataset& d, EstimandKind kind, const ScenarioSpec& scenario,
                                const FoldAssignment& folds, const EstimateOptions& opts);

}  // namespace ivmed
