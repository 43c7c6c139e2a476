#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rankroute/common.hpp"
#include "rankroute/lasso.hpp"
#include "rankroute/selection.hpp"

using namespace rr;

namespace {

double soft(double z, double a) { return z > a ? z - a : (z < -a ? z + a : 0.0); }

// columns orthogonal with squared norm N and zero mean
DataMatrix orthonormal_design() {
    DataMatrix x(4, 2);
    const double c0[] = {1.0, 1.0, -1.0, -1.0};
    const double c1[] = {1.0, -1.0, 1.0, -1.0};
    for (std::size_t r = 0; r < 4; ++r) {
        x.at(r, 0) = c0[r];
        x.at(r, 1) = c1[r];
    }
    return x;
}

}  // namespace

TEST_CASE("lasso on an orthonormal design soft-thresholds the OLS solution") {
    const DataMatrix x = orthonormal_design();
    const std::vector<double> y = {2.0, 1.0, -0.5, -1.5};
    const double y_mean = 0.25;

    double ols[2] = {0.0, 0.0};
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t j = 0; j < 2; ++j) ols[j] += x.at(r, j) * (y[r] - y_mean) / 4.0;

    for (const double alpha : {0.05, 0.3, 0.8, 1.5}) {
        const LassoFit fit = fit_l1_probe(x, y, alpha);
        CHECK(fit.intercept == doctest::Approx(y_mean));
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(fit.coefficients[j] == doctest::Approx(soft(ols[j], alpha)).epsilon(1e-9));
    }
}

TEST_CASE("lasso null threshold zeroes every coefficient") {
    const DataMatrix x = orthonormal_design();
    const std::vector<double> y = {2.0, 1.0, -0.5, -1.5};
    const double a_max = lasso_alpha_max(x, y);
    const LassoFit fit = fit_l1_probe(x, y, a_max * 1.0001);
    for (const double b : fit.coefficients) CHECK(b == 0.0);
}

TEST_CASE("lasso recovers a planted single-feature signal") {
    Rng rng(23);
    DataMatrix x(40, 4);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) x.at(r, c) = rng.normal();
    std::vector<double> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) y[r] = 3.0 * x.at(r, 2);

    const LassoFit fit = fit_l1_probe(x, y, 0.9);
    const auto support = fit.support();
    REQUIRE(support.size() == 1);
    CHECK(support[0] == 2);
    CHECK(fit.coefficients[2] > 1.0);
    CHECK(fit.converged);
}

TEST_CASE("lasso objective is non-increasing across sweeps") {
    Rng rng(29);
    DataMatrix x(30, 6);
    for (auto& v : x.data) v = rng.normal();
    std::vector<double> y(30);
    for (auto& v : y) v = rng.normal();

    const LassoFit fit = fit_l1_probe(x, y, 0.05);
    for (std::size_t s = 1; s < fit.objective_per_sweep.size(); ++s)
        CHECK(fit.objective_per_sweep[s] <= fit.objective_per_sweep[s - 1] + 1e-12);
    CHECK_THROWS_AS(fit_l1_probe(x, y, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_l1_probe(x, y, -1.0), std::invalid_argument);
}

TEST_CASE("consistency filter") {
    CHECK(consistency_filter({{"a", "b"}}, 1.0) == std::vector<std::string>{"a", "b"});
    // 2 of 3 settings at tau 0.5 stays, 1 of 3 at 0.6 goes
    const std::vector<std::vector<std::string>> supports = {{"a", "b"}, {"a"}, {"a", "b"}};
    CHECK(consistency_filter(supports, 0.5) == std::vector<std::string>{"a", "b"});
    const std::vector<std::vector<std::string>> sparse = {{"a", "c"}, {"a"}, {"a"}};
    CHECK(consistency_filter(sparse, 0.6) == std::vector<std::string>{"a"});

    // monotone: raising tau never adds features
    for (double lo = 0.1; lo < 1.0; lo += 0.2) {
        const auto low = consistency_filter(supports, lo);
        const auto high = consistency_filter(supports, std::min(1.0, lo + 0.2));
        for (const auto& f : high)
            CHECK(std::find(low.begin(), low.end(), f) != low.end());
    }
    CHECK_THROWS_AS(consistency_filter({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(consistency_filter(supports, 0.0), std::invalid_argument);
}

TEST_CASE("redundancy prune: duplicates collapse to the strongest coefficient") {
    Rng rng(31);
    const std::size_t n = 60;
    DataMatrix x(n, 4);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double base = rng.normal();
        x.at(r, 0) = base;
        x.at(r, 1) = base;           // exact duplicate of f0
        x.at(r, 2) = -base;          // anti-correlated duplicate
        x.at(r, 3) = rng.normal();   // independent
        y[r] = base + 0.1 * rng.normal();
    }
    const std::vector<std::string> schema = {"f0", "f1", "f2", "f3"};
    const std::vector<double> coefs = {0.9, 0.2, 0.1, 0.5};

    RedundancyConfig config;
    const auto kept = redundancy_prune(x, y, schema, schema, coefs, config);
    // f0/f1/f2 form one |corr|=1 group; f0 has the largest coefficient
    CHECK(kept == std::vector<std::string>{"f0", "f3"});

    // idempotent and a subset of its input
    const auto again = redundancy_prune(x, y, schema, kept, coefs, config);
    CHECK(again == kept);

    // correlations below rho leave the set unchanged
    RedundancyConfig loose;
    loose.rho = 1.1;  // nothing exceeds this
    CHECK(redundancy_prune(x, y, schema, schema, coefs, loose) == schema);
}

TEST_CASE("redundancy prune skips degenerate classes with a warning") {
    DataMatrix x(4, 2);
    std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
    for (std::size_t r = 0; r < 4; ++r) {
        x.at(r, 0) = static_cast<double>(r);
        x.at(r, 1) = static_cast<double>(r);
    }
    std::vector<std::string> warnings;
    const std::vector<std::string> schema = {"a", "b"};
    redundancy_prune(x, y, schema, schema, {1.0, 0.5}, {}, &warnings);
    CHECK(!warnings.empty());  // 4 rows over 3 bins leaves classes under 3
}

TEST_CASE("run_selection produces a disjoint, exhaustive report") {
    Rng rng(37);
    const std::size_t n = 90;
    DataMatrix x(n, 5);
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 5; ++c) x.at(r, c) = rng.normal();
        x.at(r, 3) = x.at(r, 0);  // redundant copy of the signal feature
        y[r] = 2.0 * x.at(r, 0) + 0.05 * rng.normal();
    }
    const std::vector<std::string> schema = {"sig", "noise1", "noise2", "sig_copy", "delta_cost_est"};

    SelectionConfig config;
    config.n_settings = 3;
    const SelectionReport report = run_selection(x, y, schema, config);

    std::set<std::string> seen;
    for (const auto& k : report.kept) CHECK(seen.insert(k).second);
    for (const auto& d : report.dropped) CHECK(seen.insert(d.name).second);
    CHECK(seen.size() == schema.size());

    // the planted signal survives, its duplicate is pruned as redundant
    CHECK(std::find(report.kept.begin(), report.kept.end(), "sig") != report.kept.end());
    bool copy_redundant = false;
    for (const auto& d : report.dropped)
        if (d.name == "sig_copy" && d.reason == "redundant") copy_redundant = true;
    CHECK(copy_redundant);
    // pinned feature is always kept
    CHECK(std::find(report.kept.begin(), report.kept.end(), "delta_cost_est") != report.kept.end());
}
