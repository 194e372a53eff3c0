#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace ivmed {

struct SimulationPlan {
    Setting setting = Setting::Single;
    std::vector<int> sample_sizes = {500, 1000, 2000, 5000};
    int replicates = 1000;
    std::vector<std::string> scenarios;
    std::vector<EstimandKind> estimands;  // empty -> setting default
    std::uint64_t base_seed = 1;
    int folds_j = 5;
    double alpha = 0.05;
    double clip = 1e-3;
};

// Raises validation_error naming the offending field.
void check_plan(const SimulationPlan& plan);

// Flat key=value text with repeated keys for lists; '#' starts a comment.
// Keys: setting, n, replicates, scenario, estimand, base_seed, folds,
// alpha, clip.
SimulationPlan parse_plan(const std::string& text);

struct CellMetrics {
    double abs_bias = 0.0;
    double sqrt_n_abs_bias = 0.0;
    double n_mse_over_bound = 0.0;
    double coverage_95 = 0.0;
    double mean_se = 0.0;
    long replicate_failures = 0;
    long successes = 0;
};

struct SimulationResult {
    struct Row {
        std::string scenario;
        int n = 0;
        EstimandKind estimand = EstimandKind::FS;
        CellMetrics metrics;
    };
    std::vector<Row> rows;  // ordered by (scenario, n, estimand) as planned
};

// Replicates run on a bounded worker pool; aggregation is an ordered
// reduction by replicate index, so output is independent of `jobs`.
SimulationResult run_simulation(const SimulationPlan& plan, int jobs);

// Tidy long-format table (scenario,n,estimand,metric,value), 12 significant
// digits, stable row order.
std::string emit_csv(const SimulationResult& result);
// Same rows as JSON with lossless doubles; parse_result_json round-trips.
std::string emit_json(const SimulationResult& result);
SimulationResult parse_result_json(const std::string& text);

bool result_equal(const SimulationResult& a, const SimulationResult& b);

}  // namespace ivmed
