#include "types.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace ivmed {

const char* estimand_name(EstimandKind k) {
    switch (k) {
        case EstimandKind::CIDE: return "CIDE";
        case EstimandKind::CIIE: return "CIIE";
        case EstimandKind::CITE: return "CITE";
        case EstimandKind::DCIDE: return "DCIDE";
        case EstimandKind::DCIIE: return "DCIIE";
        case EstimandKind::DCIDE_WEAK: return "DCIDE_WEAK";
        case EstimandKind::ITT_IDE: return "ITT_IDE";
        case EstimandKind::ITT_IIE: return "ITT_IIE";
        case EstimandKind::ITT_ITE: return "ITT_ITE";
        case EstimandKind::FS: return "FS";
        case EstimandKind::JFS: return "JFS";
    }
    return "?";
}

EstimandKind parse_estimand(const std::string& s) {
    static const std::map<std::string, EstimandKind> table = {
        {"CIDE", EstimandKind::CIDE},       {"CIIE", EstimandKind::CIIE},
        {"CITE", EstimandKind::CITE},       {"DCIDE", EstimandKind::DCIDE},
        {"DCIIE", EstimandKind::DCIIE},     {"DCIDE_WEAK", EstimandKind::DCIDE_WEAK},
        {"ITT_IDE", EstimandKind::ITT_IDE}, {"ITT_IIE", EstimandKind::ITT_IIE},
        {"ITT_ITE", EstimandKind::ITT_ITE}, {"FS", EstimandKind::FS},
        {"JFS", EstimandKind::JFS},
    };
    auto it = table.find(s);
    if (it == table.end()) throw parse_error("UnknownEstimand", s);
    return it->second;
}

bool estimand_requires_l(EstimandKind k) {
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

bool estimand_is_ratio(EstimandKind k) {
    switch (k) {
        case EstimandKind::CIDE:
        case EstimandKind::CIIE:
        case EstimandKind::CITE:
        case EstimandKind::DCIDE:
        case EstimandKind::DCIIE:
        case EstimandKind::DCIDE_WEAK:
            return true;
        default:
            return false;
    }
}

bool column_is_binary(const std::vector<double>& col) {
    for (double v : col) {
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

namespace {

void check_no_missing(const std::vector<double>& col, const std::string& name) {
    for (double v : col) {
        if (std::isnan(v)) throw validation_error("MissingValue", "column '" + name + "'");
    }
}

void check_length(std::size_t got, std::size_t want, const std::string& name) {
    if (got != want) {
        throw validation_error("LengthMismatch",
                               "column '" + name + "' has length " + std::to_string(got) +
                                   ", expected " + std::to_string(want));
    }
}

void check_binary(const std::vector<double>& col, const std::string& name) {
    if (!column_is_binary(col)) throw validation_error("NonBinaryColumn", "column '" + name + "'");
}

}  // namespace

void validate(const Dataset& d, EstimandKind estimand) {
    if (d.n < 1) throw validation_error("LengthMismatch", "dataset is empty");
    if (d.n_w < 1) throw validation_error("LengthMismatch", "no covariate columns");
    if (d.w_names.size() != d.n_w)
        throw validation_error("LengthMismatch", "w_names does not match covariate count");
    if (d.w.size() != d.n * d.n_w) throw validation_error("LengthMismatch", "column 'w'");
    check_length(d.a.size(), d.n, "a");
    check_length(d.z.size(), d.n, "z");
    check_length(d.m.size(), d.n, "m");
    check_length(d.y.size(), d.n, "y");
    if (d.has_l()) check_length(d.l->size(), d.n, "l");

    for (std::size_t j = 0; j < d.n_w; ++j) {
        for (std::size_t i = 0; i < d.n; ++i) {
            if (std::isnan(d.wat(i, j)))
                throw validation_error("MissingValue", "column '" + d.w_names[j] + "'");
        }
    }
    check_no_missing(d.a, "a");
    check_no_missing(d.z, "z");
    check_no_missing(d.m, "m");
    check_no_missing(d.y, "y");
    if (d.has_l()) check_no_missing(*d.l, "l");

    check_binary(d.a, "a");
    check_binary(d.z, "z");
    if (d.has_l()) {
        check_binary(*d.l, "l");
        check_binary(d.m, "m");  // binary mediator required alongside L
    }
    if (estimand_requires_l(estimand) && !d.has_l()) {
        throw validation_error("MissingInstrumentL",
                               std::string(estimand_name(estimand)) + " needs column 'l'");
    }
}

WaldInterval wald_interval(double psi_hat, const std::vector<double>& eif_values, double alpha) {
    if (eif_values.empty()) throw validation_error("EmptyEif", "eif_values is empty");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw validation_error("BadAlpha", "alpha must be in (0,1)");
    double n = static_cast<double>(eif_values.size());
    double se = std::sqrt(sample_variance(eif_values) / n);
    double zq = normal_quantile(1.0 - alpha / 2.0);
    return WaldInterval{se, psi_hat - zq * se, psi_hat + zq * se};
}

const char* learner_kind_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::INTERCEPT_ONLY: return "intercept_only";
        case LearnerKind::LOGISTIC_MAIN: return "logistic_main";
        case LearnerKind::LOGISTIC_L1_INTERACTIONS: return "logistic_l1_interactions";
        case LearnerKind::LINEAR_MAIN: return "linear_main";
    }
    return "?";
}

LearnerKind parse_learner_kind(const std::string& s) {
    if (s == "intercept_only") return LearnerKind::INTERCEPT_ONLY;
    if (s == "logistic_main") return LearnerKind::LOGISTIC_MAIN;
    if (s == "logistic_l1_interactions") return LearnerKind::LOGISTIC_L1_INTERACTIONS;
    if (s == "linear_main") return LearnerKind::LINEAR_MAIN;
    throw parse_error("UnknownLearner", s);
}

void LearnerSpec::check() const {
    if (!lambda_grid.empty()) {
        if (kind != LearnerKind::LOGISTIC_L1_INTERACTIONS)
            throw validation_error("BadLearnerSpec", "lambda_grid only applies to L1 kinds");
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            if (!(lambda_grid[i] > 0.0))
                throw validation_error("BadLearnerSpec", "lambda_grid must be positive");
            if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1]))
                throw validation_error("BadLearnerSpec", "lambda_grid must be strictly decreasing");
        }
    }
    if (cv_folds_for_lambda < 2)
        throw validation_error("BadLearnerSpec", "cv_folds_for_lambda must be >= 2");
}

const char* setting_name(Setting s) { return s == Setting::Single ? "single" : "double"; }

Setting parse_setting(const std::string& s) {
    if (s == "single") return Setting::Single;
    if (s == "double") return Setting::Double;
    throw parse_error("UnknownSetting", s);
}

const LearnerSpec& ScenarioSpec::learner(const std::string& nuisance) const {
    auto it = learners.find(nuisance);
    if (it == learners.end())
        throw validation_error("MissingNuisanceLearner", "scenario '" + name + "' lacks '" + nuisance + "'");
    return it->second;
}

void ScenarioSpec::check() const {
    static const std::vector<std::string> single_names = {"g", "q", "r", "e", "mu"};
    static const std::vector<std::string> double_names = {"g", "q", "p", "c", "mu"};
    const auto& names = (setting == Setting::Single) ? single_names : double_names;
    for (const auto& nm : names) {
        learner(nm).check();
    }
    for (const auto& [nm, spec] : learners) {
        if (std::find(names.begin(), names.end(), nm) == names.end())
            throw validation_error("UnknownNuisance",
                                   "scenario '" + name + "' assigns unknown nuisance '" + nm + "'");
    }
}

}  // namespace ivmed
