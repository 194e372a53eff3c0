#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "types.hpp"

namespace ivmed {

// Dense row-major design matrix with named columns.
struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    std::vector<std::string> names;

    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }

    static DesignMatrix zeros(std::size_t r, std::size_t c) {
        DesignMatrix m;
        m.rows = r;
        m.cols = c;
        m.data.assign(r * c, 0.0);
        m.names.assign(c, "");
        return m;
    }
};

enum class OutcomeType { Binary, Continuous };

// Column override: predict with input column `col` forced to `value`.
// Interactions are expanded after overrides are applied.
struct Override {
    std::size_t col;
    double value;
};

struct FeatureMap {
    std::size_t n_base = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // i<j products, L1 kinds only
};

struct FittedModel {
    LearnerKind kind = LearnerKind::INTERCEPT_ONLY;
    OutcomeType outcome = OutcomeType::Binary;
    bool degenerate = false;  // constant-outcome fallback was taken
    double intercept = 0.0;   // for INTERCEPT_ONLY this is the fitted mean itself
    std::vector<double> coef;  // expanded design, original scale
    FeatureMap fmap;
    double lambda_selected = 0.0;  // L1 kinds
};

// Fit a nuisance regression. `seed` drives the internal CV fold assignment of
// the L1 kinds; fits are reproducible and invariant to row order.
FittedModel fit(const LearnerSpec& spec, const DesignMatrix& x, const std::vector<double>& y,
                OutcomeType outcome, std::uint64_t seed, double clip);

// Predicted probabilities (binary, clipped to [clip, 1-clip]) or values.
std::vector<double> predict(const FittedModel& model, const DesignMatrix& x,
                            const std::vector<Override>& overrides, double clip);

// All pairwise products of the base columns appended after them.
DesignMatrix expand_pairwise(const DesignMatrix& x);

// Default path: n_lambda log-spaced values from lambda_max down to
// lambda_max * min_ratio.
std::vector<double> default_lambda_grid(double lambda_max, std::size_t n_lambda = 50,
                                        double min_ratio = 1e-4);

// Content-hash fold ids in {0,..,k-1}; invariant to row permutation.
std::vector<int> content_hash_folds(const DesignMatrix& x, const std::vector<double>& y, int k,
                                    std::uint64_t seed);

// Per-sweep penalized objective values of the last coordinate-descent run,
// exposed for the monotonicity property tests.
struct FitDiagnostics {
    std::vector<double> objective_trace;
};
FittedModel fit_traced(const LearnerSpec& spec, const DesignMatrix& x,
                       const std::vector<double>& y, OutcomeType outcome, std::uint64_t seed,
                       double clip, FitDiagnostics* diag);

}  // namespace ivmed
