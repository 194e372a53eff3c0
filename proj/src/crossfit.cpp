#include "crossfit.hpp"

#include <algorithm>
#include <cstring>

#include "common.hpp"

namespace ivmed {

FoldAssignment assign_folds(std::size_t n, int j, std::uint64_t seed) {
    if (j < 2) throw validation_error("TooFewFolds", "need j >= 2");
    if (n < static_cast<std::size_t>(j))
        throw validation_error("TooFewRows", "n=" + std::to_string(n) + " < j=" + std::to_string(j));
    // counter-based shuffle: sort by per-index hash, deal round-robin
    std::vector<std::pair<std::uint64_t, std::size_t>> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = {rng_hash(seed, i, 0xF01DULL), i};
    std::sort(keys.begin(), keys.end());
    FoldAssignment fa;
    fa.j = j;
    fa.seed = seed;
    fa.fold_of.assign(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
        fa.fold_of[keys[t].second] = static_cast<int>(t % static_cast<std::size_t>(j)) + 1;
    }
    return fa;
}

const std::vector<double>& CrossFitPredictions::at(const std::string& name) const {
    auto it = cols.find(name);
    if (it == cols.end()) throw estimation_error("MissingNuisance", "column '" + name + "'");
    return it->second;
}

std::vector<std::vector<double>> crossfit_columns(const DesignMatrix& x,
                                                  const std::vector<double>& y,
                                                  OutcomeType outcome, const LearnerSpec& spec,
                                                  const FoldAssignment& folds,
                                                  const std::vector<std::vector<Override>>& override_sets,
                                                  double clip, std::uint64_t seed,
                                                  const std::vector<char>* train_filter) {
    std::size_t n = x.rows;
    std::vector<std::vector<double>> out(override_sets.size(), std::vector<double>(n, 0.0));
    for (int fold = 1; fold <= folds.j; ++fold) {
        std::vector<std::size_t> train, val;
        for (std::size_t i = 0; i < n; ++i) {
            if (folds.fold_of[i] == fold) {
                val.push_back(i);
            } else if (!train_filter || (*train_filter)[i]) {
                train.push_back(i);
            }
        }
        if (val.empty()) continue;
        if (train.size() < 2)
            throw estimation_error("EmptySubset", "fold " + std::to_string(fold) +
                                                      " has no usable training rows");
        DesignMatrix xtr = DesignMatrix::zeros(train.size(), x.cols);
        xtr.names = x.names;
        std::vector<double> ytr(train.size());
        for (std::size_t k = 0; k < train.size(); ++k) {
            std::memcpy(&xtr.data[k * x.cols], &x.data[train[k] * x.cols],
                        x.cols * sizeof(double));
            ytr[k] = y[train[k]];
        }
        FittedModel model;
        try {
            model = fit(spec, xtr, ytr, outcome, rng_hash(seed, 0x5EEDF17ULL, fold), clip);
        } catch (const ivmed_error& e) {
            throw estimation_error(e.kind(), std::string(e.what()) + " (fold " +
                                                 std::to_string(fold) + ")");
        }
        DesignMatrix xval = DesignMatrix::zeros(val.size(), x.cols);
        xval.names = x.names;
        for (std::size_t k = 0; k < val.size(); ++k) {
            std::memcpy(&xval.data[k * x.cols], &x.data[val[k] * x.cols],
                        x.cols * sizeof(double));
        }
        for (std::size_t s = 0; s < override_sets.size(); ++s) {
            std::vector<double> pred = predict(model, xval, override_sets[s], clip);
            for (std::size_t k = 0; k < val.size(); ++k) out[s][val[k]] = pred[k];
        }
    }
    return out;
}

DesignMatrix make_design(const Dataset& d, const std::string& codes) {
    std::size_t extra = codes.size();
    DesignMatrix x = DesignMatrix::zeros(d.n, extra + d.n_w);
    for (std::size_t c = 0; c < extra; ++c) {
        const std::vector<double>* col = nullptr;
        switch (codes[c]) {
            case 'a': col = &d.a; x.names[c] = "a"; break;
            case 'z': col = &d.z; x.names[c] = "z"; break;
            case 'm': col = &d.m; x.names[c] = "m"; break;
            case 'l':
                if (!d.has_l()) throw validation_error("MissingInstrumentL", "design needs l");
                col = &*d.l;
                x.names[c] = "l";
                break;
            default:
                throw estimation_error("BadDesignCode", std::string(1, codes[c]));
        }
        for (std::size_t i = 0; i < d.n; ++i) x.at(i, c) = (*col)[i];
    }
    for (std::size_t j = 0; j < d.n_w; ++j) {
        x.names[extra + j] = d.w_names[j];
        for (std::size_t i = 0; i < d.n; ++i) x.at(i, extra + j) = d.wat(i, j);
    }
    return x;
}

namespace {

std::uint64_t name_seed(std::uint64_t seed, const char* name) {
    std::uint64_t h = 0;
    for (const char* p = name; *p; ++p) h = h * 131 + static_cast<unsigned char>(*p);
    return rng_hash(seed, h, 0xC0F17ULL);
}

}  // namespace

CrossFitPredictions crossfit_nuisances(const Dataset& d, const ScenarioSpec& scenario,
                                       const FoldAssignment& folds,
                                       const std::vector<std::string>& required, double clip,
                                       std::uint64_t seed) {
    CrossFitPredictions out;
    auto wants = [&](const char* nm) {
        return std::find(required.begin(), required.end(), nm) != required.end();
    };
    OutcomeType ytype = column_is_binary(d.y) ? OutcomeType::Binary : OutcomeType::Continuous;

    if (wants("g")) {
        DesignMatrix x = make_design(d, "");
        auto cols = crossfit_columns(x, d.a, OutcomeType::Binary, scenario.learner("g"), folds,
                                     {{}}, clip, name_seed(seed, "g"), nullptr);
        out.cols["g1"] = std::move(cols[0]);
    }
    if (wants("q")) {
        DesignMatrix x = make_design(d, "a");
        auto cols = crossfit_columns(x, d.z, OutcomeType::Binary, scenario.learner("q"), folds,
                                     {{{0, 0.0}}, {{0, 1.0}}}, clip, name_seed(seed, "q"), nullptr);
        out.cols["q1_a0"] = std::move(cols[0]);
        out.cols["q1_a1"] = std::move(cols[1]);
    }

    if (scenario.setting == Setting::Single) {
        if (wants("r")) {
            DesignMatrix x = make_design(d, "am");
            auto cols = crossfit_columns(x, d.z, OutcomeType::Binary, scenario.learner("r"),
                                         folds, {{{0, 0.0}}, {{0, 1.0}}}, clip,
                                         name_seed(seed, "r"), nullptr);
            out.cols["r1_a0"] = std::move(cols[0]);
            out.cols["r1_a1"] = std::move(cols[1]);
        }
        if (wants("e")) {
            DesignMatrix x = make_design(d, "m");
            auto cols = crossfit_columns(x, d.a, OutcomeType::Binary, scenario.learner("e"),
                                         folds, {{}}, clip, name_seed(seed, "e"), nullptr);
            out.cols["e1"] = std::move(cols[0]);
        }
        if (wants("mu")) {
            DesignMatrix x = make_design(d, "zm");
            auto cols = crossfit_columns(x, d.y, ytype, scenario.learner("mu"), folds,
                                         {{{0, 0.0}}, {{0, 1.0}}}, clip, name_seed(seed, "mu"),
                                         nullptr);
            out.cols["mu_z0"] = std::move(cols[0]);
            out.cols["mu_z1"] = std::move(cols[1]);
        }
    } else {
        if (wants("p")) {
            DesignMatrix x = make_design(d, "za");
            std::vector<std::vector<Override>> sets;
            for (double a : {0.0, 1.0})
                for (double z : {0.0, 1.0}) sets.push_back({{0, z}, {1, a}});
            auto cols = crossfit_columns(x, *d.l, OutcomeType::Binary, scenario.learner("p"),
                                         folds, sets, clip, name_seed(seed, "p"), nullptr);
            out.cols["p1_z0_a0"] = std::move(cols[0]);
            out.cols["p1_z1_a0"] = std::move(cols[1]);
            out.cols["p1_z0_a1"] = std::move(cols[2]);
            out.cols["p1_z1_a1"] = std::move(cols[3]);
        }
        if (wants("c")) {
            DesignMatrix x = make_design(d, "lz");
            std::vector<std::vector<Override>> sets;
            for (double z : {0.0, 1.0})
                for (double l : {0.0, 1.0}) sets.push_back({{0, l}, {1, z}});
            auto cols = crossfit_columns(x, d.m, OutcomeType::Binary, scenario.learner("c"),
                                         folds, sets, clip, name_seed(seed, "c"), nullptr);
            out.cols["c1_l0_z0"] = std::move(cols[0]);
            out.cols["c1_l1_z0"] = std::move(cols[1]);
            out.cols["c1_l0_z1"] = std::move(cols[2]);
            out.cols["c1_l1_z1"] = std::move(cols[3]);
        }
        if (wants("mu")) {
            DesignMatrix x = make_design(d, "lz");
            std::vector<std::vector<Override>> sets;
            for (double z : {0.0, 1.0})
                for (double l : {0.0, 1.0}) sets.push_back({{0, l}, {1, z}});
            auto cols = crossfit_columns(x, d.y, ytype, scenario.learner("mu"), folds, sets,
                                         clip, name_seed(seed, "mu"), nullptr);
            out.cols["mu_l0_z0"] = std::move(cols[0]);
            out.cols["mu_l1_z0"] = std::move(cols[1]);
            out.cols["mu_l0_z1"] = std::move(cols[2]);
            out.cols["mu_l1_z1"] = std::move(cols[3]);
        }
        if (wants("gamma")) {
            // M-marginal given instrument and covariates; follows the c knob
            DesignMatrix x = make_design(d, "a");
            auto cols = crossfit_columns(x, d.m, OutcomeType::Binary, scenario.learner("c"),
                                         folds, {{{0, 0.0}}, {{0, 1.0}}}, clip,
                                         name_seed(seed, "gamma"), nullptr);
            out.cols["gamma1_a0"] = std::move(cols[0]);
            out.cols["gamma1_a1"] = std::move(cols[1]);
        }
    }
    return out;
}

}  // namespace ivmed
