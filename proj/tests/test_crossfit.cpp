#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "common.hpp"
#include "crossfit.hpp"
#include "dgm.hpp"
#include "scenarios.hpp"

using namespace ivmed;

TEST_CASE("assign_folds: exact division, remainder, determinism") {
    FoldAssignment f = assign_folds(6, 3, 0);
    std::vector<int> counts(4, 0);
    for (int fo : f.fold_of) counts[fo]++;
    CHECK(counts[1] == 2);
    CHECK(counts[2] == 2);
    CHECK(counts[3] == 2);

    f = assign_folds(7, 3, 0);
    std::vector<int> sizes;
    counts.assign(4, 0);
    for (int fo : f.fold_of) counts[fo]++;
    for (int j = 1; j <= 3; ++j) sizes.push_back(counts[j]);
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 2, 3});

    FoldAssignment a = assign_folds(1000, 5, 42);
    FoldAssignment b = assign_folds(1000, 5, 42);
    CHECK(a.fold_of == b.fold_of);
    FoldAssignment c = assign_folds(1000, 5, 43);
    CHECK(a.fold_of != c.fold_of);

    CHECK_THROWS_AS(assign_folds(3, 4, 0), validation_error);
}

TEST_CASE("assign_folds is a partition for many (n, j)") {
    for (std::size_t n : {std::size_t(5), std::size_t(17), std::size_t(100), std::size_t(257)}) {
        for (int j : {2, 3, 5}) {
            if (n < std::size_t(j)) continue;
            FoldAssignment f = assign_folds(n, j, 9);
            int lo = int(n), hi = 0;
            std::vector<int> counts(j + 1, 0);
            for (int fo : f.fold_of) {
                REQUIRE(fo >= 1);
                REQUIRE(fo <= j);
                counts[fo]++;
            }
            for (int k = 1; k <= j; ++k) {
                lo = std::min(lo, counts[k]);
                hi = std::max(hi, counts[k]);
            }
            CHECK(hi - lo <= 1);
        }
    }
}

namespace {

Dataset two_fold_dataset(const FoldAssignment& folds) {
    // rows in fold 1 get mean(A)=0.4, rows in fold 2 get mean(A)=0.6
    Dataset d;
    d.n = folds.fold_of.size();
    d.n_w = 1;
    d.w_names = {"w1"};
    d.w.assign(d.n, 0.0);
    d.a.assign(d.n, 0.0);
    d.z.assign(d.n, 0.0);
    d.m.assign(d.n, 0.0);
    d.y.assign(d.n, 0.0);
    int seen1 = 0, seen2 = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
        if (folds.fold_of[i] == 1) {
            d.a[i] = (seen1++ % 5) < 2 ? 1.0 : 0.0;  // 2/5 = 0.4
        } else {
            d.a[i] = (seen2++ % 5) < 3 ? 1.0 : 0.0;  // 3/5 = 0.6
        }
        d.z[i] = double(i % 2);
        d.m[i] = double((i / 2) % 2);
        d.y[i] = double((i / 4) % 2);
    }
    return d;
}

}  // namespace

TEST_CASE("cross-fit means swap across folds") {
    FoldAssignment folds = assign_folds(20, 2, 3);
    Dataset d = two_fold_dataset(folds);
    ScenarioSpec sc;
    sc.setting = Setting::Single;
    sc.name = "test";
    LearnerSpec intercept;
    intercept.kind = LearnerKind::INTERCEPT_ONLY;
    for (const char* nm : {"g", "q", "r", "e", "mu"}) sc.learners[nm] = intercept;
    CrossFitPredictions pred = crossfit_nuisances(d, sc, folds, {"g"}, 1e-3, 1);
    const auto& g1 = pred.at("g1");
    for (std::size_t i = 0; i < d.n; ++i) {
        CHECK(g1[i] == doctest::Approx(folds.fold_of[i] == 1 ? 0.6 : 0.4));
    }
}

TEST_CASE("required q produces one column per counterfactual instrument value") {
    StructuralDGM dgm = build_dgm(Setting::Single);
    Dataset d = sample(dgm, 200, 77);
    FoldAssignment folds = assign_folds(d.n, 5, 77);
    ScenarioSpec sc = scenario_by_name(Setting::Single, "mu_wrong");
    CrossFitPredictions pred = crossfit_nuisances(d, sc, folds, {"q"}, 1e-3, 1);
    CHECK(pred.at("q1_a0").size() == d.n);
    CHECK(pred.at("q1_a1").size() == d.n);
    CHECK_THROWS_AS(pred.at("nope"), estimation_error);
    for (std::size_t i = 0; i < d.n; ++i) {
        CHECK(pred.at("q1_a0")[i] >= 1e-3);
        CHECK(pred.at("q1_a0")[i] <= 1.0 - 1e-3);
    }
}

TEST_CASE("no leakage: perturbing one row only moves models trained on it") {
    // y of row i only reaches models for folds != j(i), so held-out
    // predictions for the rows of V_{j(i)} stay identical
    StructuralDGM dgm = build_dgm(Setting::Single);
    Dataset d = sample(dgm, 20, 5);
    FoldAssignment folds = assign_folds(d.n, 4, 5);
    DesignMatrix x = make_design(d, "z");
    LearnerSpec spec;
    spec.kind = LearnerKind::LOGISTIC_MAIN;

    auto base = crossfit_columns(x, d.y, OutcomeType::Binary, spec, folds, {{}}, 1e-3, 9, nullptr);
    std::size_t flip = 0;
    std::vector<double> y2 = d.y;
    y2[flip] = 1.0 - y2[flip];
    auto pert = crossfit_columns(x, y2, OutcomeType::Binary, spec, folds, {{}}, 1e-3, 9, nullptr);
    int j_of_flip = folds.fold_of[flip];
    bool others_changed = false;
    for (std::size_t i = 0; i < d.n; ++i) {
        if (folds.fold_of[i] == j_of_flip) {
            CHECK(base[0][i] == pert[0][i]);
        } else if (base[0][i] != pert[0][i]) {
            others_changed = true;
        }
    }
    CHECK(others_changed);
}

TEST_CASE("cross-fitted g on the DGM is near 1/2 everywhere") {
    StructuralDGM dgm = build_dgm(Setting::Single);
    int good = 0;
    for (int rep = 0; rep < 5; ++rep) {
        Dataset d = sample(dgm, 5000, 900 + rep);
        FoldAssignment folds = assign_folds(d.n, 5, 900 + rep);
        ScenarioSpec sc = scenario_by_name(Setting::Single, "all_correct");
        CrossFitPredictions pred = crossfit_nuisances(d, sc, folds, {"g"}, 1e-3, rep);
        double worst = 0.0;
        for (double v : pred.at("g1")) worst = std::max(worst, std::fabs(v - 0.5));
        if (worst < 0.03) ++good;
    }
    CHECK(good >= 5);
}

TEST_CASE("empty training subset raises EmptySubset with the fold id") {
    Dataset d;
    d.n = 8;
    d.n_w = 1;
    d.w_names = {"w1"};
    d.w.assign(8, 0.0);
    d.a = {1, 1, 1, 1, 0, 0, 0, 0};
    d.z = {0, 1, 0, 1, 0, 1, 0, 1};
    d.m = d.z;
    d.y = d.z;
    FoldAssignment folds = assign_folds(d.n, 2, 1);
    DesignMatrix x = make_design(d, "");
    LearnerSpec spec;
    spec.kind = LearnerKind::INTERCEPT_ONLY;
    std::vector<char> filter(d.n, 0);  // nothing passes the filter
    try {
        crossfit_columns(x, d.y, OutcomeType::Binary, spec, folds, {{}}, 1e-3, 1, &filter);
        FAIL("expected EmptySubset");
    } catch (const estimation_error& e) {
        CHECK(e.kind() == "EmptySubset");
        CHECK(std::string(e.what()).find("fold") != std::string::npos);
    }
}
