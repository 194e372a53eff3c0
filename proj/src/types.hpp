#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivmed {

// Errors carry a short machine-readable kind plus a human message.
class ivmed_error : public std::runtime_error {
  public:
    ivmed_error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

class validation_error : public ivmed_error {
  public:
    using ivmed_error::ivmed_error;
};

class estimation_error : public ivmed_error {
  public:
    using ivmed_error::ivmed_error;
};

class parse_error : public ivmed_error {
  public:
    using ivmed_error::ivmed_error;
};

class io_error : public ivmed_error {
  public:
    using ivmed_error::ivmed_error;
};

enum class EstimandKind {
    CIDE,
    CIIE,
    CITE,
    DCIDE,
    DCIIE,
    DCIDE_WEAK,
    ITT_IDE,
    ITT_IIE,
    ITT_ITE,
    FS,
    JFS,
};

const char* estimand_name(EstimandKind k);
EstimandKind parse_estimand(const std::string& s);

// Kinds that need the mediator instrument L (and binary M).
bool estimand_requires_l(EstimandKind k);
// Kinds reported as a ratio of one-step estimates (denominator != 1).
bool estimand_is_ratio(EstimandKind k);

// Observed data: covariate matrix W plus role vectors. Immutable after
// construction; validate() is the single gatekeeper.
struct Dataset {
    std::vector<std::string> w_names;
    std::vector<double> w;  // row-major, n x n_w
    std::vector<double> a;
    std::vector<double> z;
    std::optional<std::vector<double>> l;
    std::vector<double> m;
    std::vector<double> y;
    std::size_t n = 0;
    std::size_t n_w = 0;

    double wat(std::size_t i, std::size_t j) const { return w[i * n_w + j]; }
    bool has_l() const { return l.has_value(); }
};

void validate(const Dataset& data, EstimandKind estimand);

// True when every value of the column is 0 or 1.
bool column_is_binary(const std::vector<double>& col);

struct WaldInterval {
    double se;
    double lo;
    double hi;
};

WaldInterval wald_interval(double psi_hat, const std::vector<double>& eif_values, double alpha);

enum class LearnerKind {
    INTERCEPT_ONLY,
    LOGISTIC_MAIN,
    LOGISTIC_L1_INTERACTIONS,
    LINEAR_MAIN,
};

const char* learner_kind_name(LearnerKind k);
LearnerKind parse_learner_kind(const std::string& s);

struct LearnerSpec {
    LearnerKind kind = LearnerKind::INTERCEPT_ONLY;
    std::vector<double> lambda_grid;  // empty -> data-driven default path
    int cv_folds_for_lambda = 10;

    void check() const;
};

enum class Setting { Single, Double };

const char* setting_name(Setting s);
Setting parse_setting(const std::string& s);

// Per-nuisance learner assignment. Nuisance names: single {g,q,r,e,mu},
// double {g,q,p,c,mu}; the double M-marginal regression follows the c knob.
struct ScenarioSpec {
    std::string name;
    Setting setting = Setting::Single;
    std::map<std::string, LearnerSpec> learners;

    const LearnerSpec& learner(const std::string& nuisance) const;
    void check() const;
};

struct EstimateReport {
    EstimandKind estimand = EstimandKind::FS;
    double psi_hat = 0.0;
    double se = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double alpha = 0.05;
    std::vector<double> eif_values;
    double numerator_hat = 0.0;
    double denominator_hat = 1.0;
    std::size_t n = 0;
    int folds = 0;
    std::uint64_t seed = 0;
};

struct EstimateOutcome {
    enum class Status { Ok, WeakInstrument };
    Status status = Status::Ok;
    EstimateReport report;
    std::string message;

    bool ok() const { return status == Status::Ok; }
};

struct EstimateOptions {
    double alpha = 0.05;
    double clip = 1e-3;
    double weak_fs_threshold = 0.01;
    double weak_jfs_threshold = 0.005;
    std::uint64_t seed = 1;
};

}  // namespace ivmed
