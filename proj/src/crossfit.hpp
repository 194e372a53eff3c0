#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "learners.hpp"
#include "types.hpp"

namespace ivmed {

// J-fold partition; fold ids are 1..J, sizes differ by at most one.
struct FoldAssignment {
    int j = 0;
    std::vector<int> fold_of;
    std::uint64_t seed = 0;
};

FoldAssignment assign_folds(std::size_t n, int j, std::uint64_t seed);

// Out-of-fold predicted columns keyed by name; every probability column is
// clipped to [clip, 1-clip] by the learners.
struct CrossFitPredictions {
    std::map<std::string, std::vector<double>> cols;

    const std::vector<double>& at(const std::string& name) const;
};

// Cross-fitted prediction columns for one regression: for every fold, fit on
// the complement (optionally restricted by train_filter) and predict the
// held-out rows under each override set. Output: one column per override set.
std::vector<std::vector<double>> crossfit_columns(const DesignMatrix& x,
                                                  const std::vector<double>& y,
                                                  OutcomeType outcome, const LearnerSpec& spec,
                                                  const FoldAssignment& folds,
                                                  const std::vector<std::vector<Override>>& override_sets,
                                                  double clip, std::uint64_t seed,
                                                  const std::vector<char>* train_filter);

// Primitive nuisances for the scenario's setting. `required` selects which to
// fit; names: single {g,q,r,e,mu}, double {g,q,p,c,mu,gamma}.
CrossFitPredictions crossfit_nuisances(const Dataset& data, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds,
                                       const std::vector<std::string>& required, double clip,
                                       std::uint64_t seed);

// Design helpers shared with the estimators. `codes` picks leading columns
// ('a','z','l','m'); the W block is always appended after them.
DesignMatrix make_design(const Dataset& data, const std::string& codes);

}  // namespace ivmed
