#include "ivmed.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "crossfit.hpp"
#include "estimator_double.hpp"
#include "estimator_single.hpp"
#include "oracle.hpp"
#include "scenarios.hpp"
#include "simharness.hpp"
#include "types.hpp"

using namespace ivmed;

struct ivmed_dataset {
    Dataset data;
};

struct ivmed_reports {
    std::vector<EstimateOutcome> outcomes;
};

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

int map_exception() {
    try {
        throw;
    } catch (const validation_error& e) {
        return set_error(IVMED_E_VALIDATION, e.what());
    } catch (const parse_error& e) {
        return set_error(IVMED_E_VALIDATION, e.what());
    } catch (const estimation_error& e) {
        return set_error(IVMED_E_ESTIMATION, e.what());
    } catch (const io_error& e) {
        return set_error(IVMED_E_IO, e.what());
    } catch (const std::exception& e) {
        return set_error(IVMED_E_INTERNAL, e.what());
    } catch (...) {
        return set_error(IVMED_E_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::map<std::string, std::string> parse_overrides(const char* text) {
    std::map<std::string, std::string> out;
    if (!text) return out;
    std::string s(text);
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find(';', pos);
        if (end == std::string::npos) end = s.size();
        std::string item = s.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw parse_error("BadOverride", "expected nuisance=kind in '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

}  // namespace

extern "C" {

const char* ivmed_version(void) { return "ivmed 1.0.0"; }

const char* ivmed_last_error(void) { return g_last_error.c_str(); }

int ivmed_dataset_create(int64_t n, int32_t n_w, const double* w, const char* const* w_names,
                         const double* a, const double* z, const double* l, const double* m,
                         const double* y, ivmed_dataset** out) {
    if (!out) return set_error(IVMED_E_ARGUMENT, "out is NULL");
    *out = nullptr;
    if (n <= 0 || n_w <= 0 || !w || !w_names || !a || !z || !m || !y)
        return set_error(IVMED_E_ARGUMENT, "missing required dataset arrays");
    try {
        auto ds = std::make_unique<ivmed_dataset>();
        Dataset& d = ds->data;
        d.n = static_cast<std::size_t>(n);
        d.n_w = static_cast<std::size_t>(n_w);
        d.w.assign(w, w + n * n_w);
        for (int32_t j = 0; j < n_w; ++j) d.w_names.emplace_back(w_names[j]);
        d.a.assign(a, a + n);
        d.z.assign(z, z + n);
        d.m.assign(m, m + n);
        d.y.assign(y, y + n);
        if (l) d.l = std::vector<double>(l, l + n);
        validate(d, d.has_l() ? EstimandKind::JFS : EstimandKind::FS);
        *out = ds.release();
        return IVMED_OK;
    } catch (...) {
        return map_exception();
    }
}

void ivmed_dataset_destroy(ivmed_dataset* d) { delete d; }

int ivmed_estimate(const ivmed_dataset* d, const char* const* estimands, int32_t n_estimands,
                   const char* scenario, const char* learner_overrides, int32_t folds,
                   uint64_t seed, double alpha, double clip, ivmed_reports** out) {
    if (!out) return set_error(IVMED_E_ARGUMENT, "out is NULL");
    *out = nullptr;
    if (!d || !estimands || n_estimands <= 0)
        return set_error(IVMED_E_ARGUMENT, "dataset or estimand list missing");
    try {
        std::vector<EstimandKind> kinds;
        for (int32_t i = 0; i < n_estimands; ++i) kinds.push_back(parse_estimand(estimands[i]));
        bool dbl = estimand_requires_l(kinds.front());
        for (EstimandKind k : kinds) {
            if (estimand_requires_l(k) != dbl)
                throw validation_error("MixedSettings",
                                       "estimand list mixes single and double settings");
        }
        Setting setting = dbl ? Setting::Double : Setting::Single;
        ScenarioSpec spec;
        auto overrides = parse_overrides(learner_overrides);
        if (!overrides.empty()) {
            spec = scenario_with_overrides(setting, overrides);
        } else {
            spec = scenario_by_name(setting, scenario ? scenario : "all_correct");
        }
        EstimateOptions opts;
        opts.alpha = alpha;
        opts.clip = clip;
        opts.seed = seed;
        FoldAssignment fa = assign_folds(d->data.n, folds, seed);
        std::map<EstimandKind, EstimateOutcome> res =
            dbl ? estimate_double_all(d->data, kinds, spec, fa, opts)
                : estimate_single_all(d->data, kinds, spec, fa, opts);
        auto reports = std::make_unique<ivmed_reports>();
        for (EstimandKind k : kinds) reports->outcomes.push_back(res.at(k));
        *out = reports.release();
        return IVMED_OK;
    } catch (...) {
        return map_exception();
    }
}

int32_t ivmed_reports_count(const ivmed_reports* r) {
    return r ? static_cast<int32_t>(r->outcomes.size()) : 0;
}

#define IVMED_CHECK_IDX(r, idx) \
    ((r) != nullptr && (idx) >= 0 && (idx) < static_cast<int32_t>((r)->outcomes.size()))

int ivmed_report_status(const ivmed_reports* r, int32_t idx) {
    if (!IVMED_CHECK_IDX(r, idx)) return -1;
    return r->outcomes[idx].ok() ? IVMED_REPORT_OK : IVMED_REPORT_WEAK_INSTRUMENT;
}

const char* ivmed_report_estimand(const ivmed_reports* r, int32_t idx) {
    if (!IVMED_CHECK_IDX(r, idx)) return "";
    return estimand_name(r->outcomes[idx].report.estimand);
}

const char* ivmed_report_message(const ivmed_reports* r, int32_t idx) {
    if (!IVMED_CHECK_IDX(r, idx)) return "";
    return r->outcomes[idx].message.c_str();
}

double ivmed_report_psi(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.psi_hat : 0.0;
}
double ivmed_report_se(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.se : 0.0;
}
double ivmed_report_ci_lower(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.ci_lower : 0.0;
}
double ivmed_report_ci_upper(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.ci_upper : 0.0;
}
double ivmed_report_numerator(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.numerator_hat : 0.0;
}
double ivmed_report_denominator(const ivmed_reports* r, int32_t idx) {
    return IVMED_CHECK_IDX(r, idx) ? r->outcomes[idx].report.denominator_hat : 0.0;
}

int ivmed_report_eif(const ivmed_reports* r, int32_t idx, const double** values, int64_t* len) {
    if (!IVMED_CHECK_IDX(r, idx) || !values || !len)
        return set_error(IVMED_E_ARGUMENT, "bad report index or output pointers");
    const auto& eif = r->outcomes[idx].report.eif_values;
    *values = eif.data();
    *len = static_cast<int64_t>(eif.size());
    return IVMED_OK;
}

void ivmed_reports_destroy(ivmed_reports* r) { delete r; }

int ivmed_oracle_fixtures(const char* setting, char** out_text) {
    if (!out_text) return set_error(IVMED_E_ARGUMENT, "out_text is NULL");
    *out_text = nullptr;
    if (!setting) return set_error(IVMED_E_ARGUMENT, "setting is NULL");
    try {
        std::string text = fixtures_text(parse_setting(setting));
        *out_text = dup_string(text);
        if (!*out_text) return set_error(IVMED_E_INTERNAL, "allocation failed");
        return IVMED_OK;
    } catch (...) {
        return map_exception();
    }
}

int ivmed_simulate(const char* plan_text, const char* format, int32_t jobs, char** out_table) {
    if (!out_table) return set_error(IVMED_E_ARGUMENT, "out_table is NULL");
    *out_table = nullptr;
    if (!plan_text || !format) return set_error(IVMED_E_ARGUMENT, "plan or format missing");
    try {
        SimulationPlan plan = parse_plan(plan_text);
        check_plan(plan);
        SimulationResult result = run_simulation(plan, jobs);
        std::string fmt(format);
        std::string text;
        if (fmt == "csv") text = emit_csv(result);
        else if (fmt == "json") text = emit_json(result);
        else return set_error(IVMED_E_ARGUMENT, "format must be csv or json");
        *out_table = dup_string(text);
        if (!*out_table) return set_error(IVMED_E_INTERNAL, "allocation failed");
        return IVMED_OK;
    } catch (...) {
        return map_exception();
    }
}

void ivmed_string_destroy(char* s) { delete[] s; }

}  // extern "C"
