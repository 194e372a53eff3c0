#pragma once

#include <array>
#include <map>
#include <vector>

#include "crossfit.hpp"
#include "types.hpp"

namespace ivmed {

// (a', a*) pairs used by the theta-type functionals, in a fixed order.
inline constexpr int kThetaPairs[3][2] = {{1, 0}, {0, 0}, {1, 1}};
inline constexpr int kP10 = 0, kP00 = 1, kP11 = 2;

// Cross-fitted per-observation nuisance values for the single-instrument
// setting, plus the pseudo-outcome regressions u and v per theta pair.
struct NuisanceFitSingle {
    std::vector<double> g1;            // ghat(1|W_i)
    std::vector<double> q1_a0, q1_a1;  // qhat(1|a,W_i)
    std::vector<double> r1_a0, r1_a1;  // rhat(1|a,M_i,W_i)
    std::vector<double> e1;            // ehat(1|M_i,W_i)
    std::vector<double> mu_z0, mu_z1;  // muhat(z,M_i,W_i)
    std::array<std::vector<double>, 3> u_z0, u_z1;  // uhat(z,W_i) per pair
    std::array<std::vector<double>, 3> v;           // vhat(W_i) per pair
};

// Density-ratio weight h(Z_i, M_i, W_i) for one theta pair.
double compute_h(const Dataset& d, const NuisanceFitSingle& f, std::size_t i, int pair);

// Cross-fitted pseudo-outcome regressions for one pair: u regresses
// muhat*h on (Z,W) among rows with A=a', v regresses the q-mixture of muhat
// on W among rows with A=a*; both reuse the primitive folds.
void fit_u_v(const Dataset& d, const ScenarioSpec& scenario, const FoldAssignment& folds,
             int pair, NuisanceFitSingle& fits, double clip, std::uint64_t seed);

NuisanceFitSingle fit_nuisances_single(const Dataset& d, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds,
                                       const std::vector<EstimandKind>& kinds, double clip,
                                       std::uint64_t seed);

std::map<EstimandKind, EstimateOutcome> estimate_single_all(const Dataset& d,
                                                            const std::vector<EstimandKind>& kinds,
                                                            const ScenarioSpec& scenario,
                                                            const FoldAssignment& folds,
                                                            const EstimateOptions& opts);

EstimateOutcome estimate_single(const Dataset& d, EstimandKind kind, const ScenarioSpec& scenario,
                                const FoldAssignment& folds, const EstimateOptions& opts);

}  // namespace ivmed
