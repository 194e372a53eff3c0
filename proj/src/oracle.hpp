#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgm.hpp"
#include "types.hpp"

namespace ivmed {

// Exact joint probability table over all binary configurations of a DGM
// (2^7 single, 2^8 double). All conditionals are computed by marginalization,
// independently of the structural formulas that built the table.
class JointTable {
  public:
    struct Config {
        WBits w;
        int a, z, l, m, y;
        double p;
    };

    explicit JointTable(const StructuralDGM& dgm);

    Setting setting() const { return setting_; }
    const std::vector<Config>& configs() const { return configs_; }
    double total() const;

    double pw(const WBits& w) const;
    double g1(const WBits& w) const;                            // P(A=1|w)
    double q1(int a, const WBits& w) const;                     // P(Z=1|a,w)
    double r1(int a, int m, const WBits& w) const;              // P(Z=1|a,m,w)  single
    double e1(int m, const WBits& w) const;                     // P(A=1|m,w)    single
    double pm_cond(int m, int z, int a, const WBits& w) const;  // P(M=m|z,a,w)  single
    double pm_a(int m, int a, const WBits& w) const;            // P(M=m|a,w)
    double mu_s(int z, int m, const WBits& w) const;            // E(Y|m,z,w)    single
    double p1(int z, int a, const WBits& w) const;              // P(L=1|z,a,w)  double
    double c1(int l, int z, const WBits& w) const;              // P(M=1|l,z,w)  double
    double mu_d(int l, int z, const WBits& w) const;            // E(Y|l,z,w)    double
    double gamma1(int a, const WBits& w) const;                 // P(M=1|a,w)    double
    double marginal_mean(char var) const;                       // 'a','z','l','m','y'

  private:
    Setting setting_;
    std::vector<Config> configs_;
    double cond(const std::function<double(const Config&)>& f,
                const std::function<bool(const Config&)>& given) const;
};

using TrueValues = std::map<std::string, double>;

// Theorem-side functionals evaluated from the observational table only.
TrueValues true_identified_functionals(const JointTable& t);

// Counterfactual-side quantities by exact enumeration of the exogenous
// uniforms under the comonotone coupling, composed from structural functions
// only. Includes the complier-conditional forms that hold pointwise and the
// enumerated compliance overlap probabilities for the double setting.
TrueValues true_counterfactual_effects(const StructuralDGM& dgm);

// Which nuisances converge to the truth; the rest converge to the
// marginal-mean intercept limit. Names: single {g,q,r,e,mu}, double
// {g,q,p,c,mu} (the direct M-marginal regression follows the c knob).
struct NuisanceLimits {
    std::map<std::string, bool> is_true;
    bool truth(const std::string& nm) const;
    static NuisanceLimits all_true(Setting s);
};

// Per-configuration EIF values under the given nuisance limits, aligned with
// table.configs(). Keys: single FS, IDE, IIE, ITE, CIDE, CIIE, CITE;
// double FS, TIIDE, TIIIE, TIITE, JFS, DCIDE, DCIIE, DCIDE_WEAK,
// PHI_00, PHI_01, PHI_10, PHI_11, VARTHETA_{00,10,11}.
std::vector<double> eif_values_at(const JointTable& t, const std::string& key,
                                  const NuisanceLimits& limits);
double eif_mean_at_truth(const JointTable& t, const std::string& key);
double efficiency_bound(const JointTable& t, const std::string& key);

// Asymptotic limit of the one-step estimator when the nuisance estimators
// converge to the given limits; exact enumeration.
double population_onestep(const JointTable& t, EstimandKind kind, const NuisanceLimits& limits);

// Golden constants: flat "key = value" lines, canonical order, 17 significant
// digits. The committed fixtures files are produced by this function.
std::string fixtures_text(Setting setting);
TrueValues parse_fixtures(const std::string& text);

// Fixtures embedded at build time from data/oracle_fixtures_*.txt.
const std::string& embedded_fixtures_text(Setting setting);
const TrueValues& embedded_fixtures(Setting setting);

// Independent Monte Carlo cross-check of the fixtures constants.
struct McEstimate {
    double value = 0.0;
    double se = 0.0;
};
std::map<std::string, McEstimate> oracle_mc_check(Setting setting, std::size_t ndraws,
                                                  std::uint64_t seed);

}  // namespace ivmed
