#include "simharness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "common.hpp"
#include "crossfit.hpp"
#include "dgm.hpp"
#include "estimator_double.hpp"
#include "estimator_single.hpp"
#include "oracle.hpp"
#include "scenarios.hpp"

namespace ivmed {

namespace {

std::vector<EstimandKind> default_estimands(Setting s) {
    if (s == Setting::Single) {
        return {EstimandKind::CIDE, EstimandKind::CIIE, EstimandKind::CITE, EstimandKind::FS};
    }
    return {EstimandKind::DCIDE, EstimandKind::DCIIE, EstimandKind::DCIDE_WEAK,
            EstimandKind::JFS};
}

std::string truth_key(EstimandKind k) {
    switch (k) {
        case EstimandKind::FS: return "psi_FS";
        case EstimandKind::JFS: return "psi_JFS";
        default: return std::string("psi_") + estimand_name(k);
    }
}

std::string bound_key(EstimandKind k) {
    return std::string("bound_") + (k == EstimandKind::FS ? "FS" : estimand_name(k));
}

struct ReplicateCell {
    bool ok = false;
    double psi = 0.0, se = 0.0, lo = 0.0, hi = 0.0;
};

}  // namespace

void check_plan(const SimulationPlan& plan) {
    if (plan.replicates < 1) throw validation_error("BadPlan", "replicates: must be >= 1");
    if (plan.sample_sizes.empty()) throw validation_error("BadPlan", "n: at least one sample size");
    for (int n : plan.sample_sizes) {
        if (n < plan.folds_j) throw validation_error("BadPlan", "n: must be >= folds");
    }
    if (plan.scenarios.empty()) throw validation_error("BadPlan", "scenario: none given");
    for (const auto& s : plan.scenarios) scenario_by_name(plan.setting, s);
    if (plan.folds_j < 2) throw validation_error("BadPlan", "folds: must be >= 2");
    if (!(plan.alpha > 0.0 && plan.alpha < 1.0))
        throw validation_error("BadPlan", "alpha: must be in (0,1)");
    if (!(plan.clip > 0.0 && plan.clip < 0.5))
        throw validation_error("BadPlan", "clip: must be in (0,0.5)");
    std::vector<EstimandKind> kinds =
        plan.estimands.empty() ? default_estimands(plan.setting) : plan.estimands;
    for (EstimandKind k : kinds) {
        bool dbl = estimand_requires_l(k);
        if (dbl != (plan.setting == Setting::Double))
            throw validation_error("BadPlan", std::string("estimand: ") + estimand_name(k) +
                                                  " does not match setting");
    }
}

SimulationPlan parse_plan(const std::string& text) {
    SimulationPlan plan;
    plan.sample_sizes.clear();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
        return s;
    };
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("BadPlan", "line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "setting") plan.setting = parse_setting(val);
            else if (key == "n") plan.sample_sizes.push_back(std::stoi(val));
            else if (key == "replicates") plan.replicates = std::stoi(val);
            else if (key == "scenario") plan.scenarios.push_back(val);
            else if (key == "estimand") plan.estimands.push_back(parse_estimand(val));
            else if (key == "base_seed") plan.base_seed = std::stoull(val);
            else if (key == "folds") plan.folds_j = std::stoi(val);
            else if (key == "alpha") plan.alpha = std::stod(val);
            else if (key == "clip") plan.clip = std::stod(val);
            else throw parse_error("BadPlan", "unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw parse_error("BadPlan", key + ": bad value '" + val + "'");
        } catch (const std::out_of_range&) {
            throw parse_error("BadPlan", key + ": value out of range '" + val + "'");
        }
    }
    if (plan.sample_sizes.empty()) plan.sample_sizes = {500, 1000, 2000, 5000};
    return plan;
}

SimulationResult run_simulation(const SimulationPlan& plan, int jobs) {
    check_plan(plan);
    if (jobs < 1) jobs = 1;
    std::vector<EstimandKind> kinds =
        plan.estimands.empty() ? default_estimands(plan.setting) : plan.estimands;
    StructuralDGM dgm = build_dgm(plan.setting);
    const TrueValues& fixtures = embedded_fixtures(plan.setting);

    struct Task {
        std::size_t scenario_idx, n_idx;
        int replicate;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < plan.scenarios.size(); ++si)
        for (std::size_t ni = 0; ni < plan.sample_sizes.size(); ++ni)
            for (int r = 0; r < plan.replicates; ++r) tasks.push_back({si, ni, r});

    // slot per (scenario, n, replicate, estimand)
    std::size_t n_cells = plan.scenarios.size() * plan.sample_sizes.size() *
                          static_cast<std::size_t>(plan.replicates) * kinds.size();
    std::vector<ReplicateCell> cells(n_cells);
    auto slot = [&](std::size_t si, std::size_t ni, int r, std::size_t ki) {
        return ((si * plan.sample_sizes.size() + ni) * static_cast<std::size_t>(plan.replicates) +
                static_cast<std::size_t>(r)) *
                   kinds.size() +
               ki;
    };

    std::atomic<std::size_t> next{0};
    std::atomic<long> done{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const Task& task = tasks[t];
            int n = plan.sample_sizes[task.n_idx];
            std::uint64_t seed = plan.base_seed + static_cast<std::uint64_t>(task.replicate);
            ScenarioSpec scenario = scenario_by_name(plan.setting, plan.scenarios[task.scenario_idx]);
            EstimateOptions opts;
            opts.alpha = plan.alpha;
            opts.clip = plan.clip;
            opts.seed = seed;
            try {
                Dataset ds = sample(dgm, static_cast<std::size_t>(n), seed);
                FoldAssignment folds = assign_folds(ds.n, plan.folds_j, seed);
                std::map<EstimandKind, EstimateOutcome> res =
                    (plan.setting == Setting::Single)
                        ? estimate_single_all(ds, kinds, scenario, folds, opts)
                        : estimate_double_all(ds, kinds, scenario, folds, opts);
                for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
                    const EstimateOutcome& oc = res.at(kinds[ki]);
                    ReplicateCell& cell = cells[slot(task.scenario_idx, task.n_idx,
                                                     task.replicate, ki)];
                    if (oc.ok()) {
                        cell.ok = true;
                        cell.psi = oc.report.psi_hat;
                        cell.se = oc.report.se;
                        cell.lo = oc.report.ci_lower;
                        cell.hi = oc.report.ci_upper;
                    }
                }
            } catch (const std::exception&) {
                // replicate failure: cells stay not-ok and are tallied below
            }
            long d = done.fetch_add(1) + 1;
            if (d % 50 == 0 || d == static_cast<long>(tasks.size())) {
                std::lock_guard<std::mutex> lock(log_mutex);
                std::fprintf(stderr, "simulate: %ld/%zu replicates done\n", d, tasks.size());
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    SimulationResult result;
    for (std::size_t si = 0; si < plan.scenarios.size(); ++si) {
        for (std::size_t ni = 0; ni < plan.sample_sizes.size(); ++ni) {
            int n = plan.sample_sizes[ni];
            for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
                EstimandKind kind = kinds[ki];
                double truth = fixtures.at(truth_key(kind));
                double bound = fixtures.at(bound_key(kind));
                double sum = 0.0, sum_sq_err = 0.0, sum_se = 0.0;
                long covered = 0, ok_count = 0;
                for (int r = 0; r < plan.replicates; ++r) {
                    const ReplicateCell& cell = cells[slot(si, ni, r, ki)];
                    if (!cell.ok) continue;
                    ++ok_count;
                    sum += cell.psi;
                    sum_sq_err += (cell.psi - truth) * (cell.psi - truth);
                    sum_se += cell.se;
                    if (cell.lo <= truth && truth <= cell.hi) ++covered;
                }
                CellMetrics m;
                m.successes = ok_count;
                m.replicate_failures = plan.replicates - ok_count;
                if (ok_count > 0) {
                    double mean_psi = sum / ok_count;
                    m.abs_bias = std::fabs(mean_psi - truth);
                    m.sqrt_n_abs_bias = std::sqrt(double(n)) * m.abs_bias;
                    m.n_mse_over_bound = double(n) * (sum_sq_err / ok_count) / bound;
                    m.coverage_95 = double(covered) / double(ok_count);
                    m.mean_se = sum_se / ok_count;
                }
                result.rows.push_back(
                    {plan.scenarios[si], n, kind, m});
            }
        }
    }
    return result;
}

namespace {

const char* const kMetricNames[6] = {"abs_bias",    "sqrt_n_abs_bias",    "n_mse_over_bound",
                                     "coverage_95", "mean_se",            "replicate_failures"};

double metric_value(const CellMetrics& m, int idx) {
    switch (idx) {
        case 0: return m.abs_bias;
        case 1: return m.sqrt_n_abs_bias;
        case 2: return m.n_mse_over_bound;
        case 3: return m.coverage_95;
        case 4: return m.mean_se;
        default: return double(m.replicate_failures);
    }
}

}  // namespace

std::string emit_csv(const SimulationResult& result) {
    std::ostringstream os;
    os << "scenario,n,estimand,metric,value\n";
    for (const auto& row : result.rows) {
        for (int k = 0; k < 6; ++k) {
            os << row.scenario << ',' << row.n << ',' << estimand_name(row.estimand) << ','
               << kMetricNames[k] << ',' << fmt_g12(metric_value(row.metrics, k)) << '\n';
        }
    }
    return os.str();
}

std::string emit_json(const SimulationResult& result) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : result.rows) {
        nlohmann::ordered_json o;
        o["scenario"] = row.scenario;
        o["n"] = row.n;
        o["estimand"] = estimand_name(row.estimand);
        o["abs_bias"] = row.metrics.abs_bias;
        o["sqrt_n_abs_bias"] = row.metrics.sqrt_n_abs_bias;
        o["n_mse_over_bound"] = row.metrics.n_mse_over_bound;
        o["coverage_95"] = row.metrics.coverage_95;
        o["mean_se"] = row.metrics.mean_se;
        o["replicate_failures"] = row.metrics.replicate_failures;
        o["successes"] = row.metrics.successes;
        arr.push_back(o);
    }
    return arr.dump(2) + "\n";
}

SimulationResult parse_result_json(const std::string& text) {
    SimulationResult result;
    nlohmann::json arr = nlohmann::json::parse(text);
    for (const auto& o : arr) {
        SimulationResult::Row row;
        row.scenario = o.at("scenario").get<std::string>();
        row.n = o.at("n").get<int>();
        row.estimand = parse_estimand(o.at("estimand").get<std::string>());
        row.metrics.abs_bias = o.at("abs_bias").get<double>();
        row.metrics.sqrt_n_abs_bias = o.at("sqrt_n_abs_bias").get<double>();
        row.metrics.n_mse_over_bound = o.at("n_mse_over_bound").get<double>();
        row.metrics.coverage_95 = o.at("coverage_95").get<double>();
        row.metrics.mean_se = o.at("mean_se").get<double>();
        row.metrics.replicate_failures = o.at("replicate_failures").get<long>();
        row.metrics.successes = o.at("successes").get<long>();
        result.rows.push_back(row);
    }
    return result;
}

bool result_equal(const SimulationResult& a, const SimulationResult& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.scenario != y.scenario || x.n != y.n || x.estimand != y.estimand) return false;
        const auto& mx = x.metrics;
        const auto& my = y.metrics;
        if (mx.abs_bias != my.abs_bias || mx.sqrt_n_abs_bias != my.sqrt_n_abs_bias ||
            mx.n_mse_over_bound != my.n_mse_over_bound || mx.coverage_95 != my.coverage_95 ||
            mx.mean_se != my.mean_se || mx.replicate_failures != my.replicate_failures ||
            mx.successes != my.successes)
            return false;
    }
    return true;
}

}  // namespace ivmed
