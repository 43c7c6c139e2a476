#include <doctest.h>

// The OpenMP kernels must agree bit-for-bit with their serial reference
// paths: loop bodies only write disjoint slots, reductions are serialized.

#include "rankroute/common.hpp"
#include "rankroute/features.hpp"
#include "rankroute/gbdt.hpp"
#include "rankroute/labels.hpp"
#include "rankroute/matrix.hpp"
#include "rankroute/policy.hpp"
#include "rankroute/synth.hpp"

using namespace rr;

TEST_CASE("feature extraction: serial and parallel results are identical") {
    SynthConfig config;
    config.n_instances = 40;
    config.seed = 12;
    const SynthOutput data = synthesize(config);
    const CostModel cm = CostModel::from_coefficients(300.0, 0.1, 0.0, 5.0, false);

    const auto serial = extract_features_batch(data.dumps, cm, {}, Exec::Serial);
    const auto parallel = extract_features_batch(data.dumps, cm, {}, Exec::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].names == parallel[i].names);
        CHECK(serial[i].values == parallel[i].values);  // bitwise
    }
}

TEST_CASE("router training: serial and parallel split search agree exactly") {
    Rng rng(17);
    const std::size_t n = 90;
    DataMatrix x(n, 5);
    std::vector<double> y(n), w(n, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 5; ++c) x.at(r, c) = rng.normal();
        y[r] = x.at(r, 0) - 0.5 * x.at(r, 3) + 0.1 * rng.normal();
    }
    TrainConfig config;
    config.n_rounds = 25;
    config.max_depth = 3;
    config.min_samples_leaf = 3;
    config.subsample = 0.8;  // same seed, same subsets either way
    const std::map<std::string, Monotone> monotone{{"f4", Monotone::Decreasing}};
    const std::vector<std::string> schema = {"f0", "f1", "f2", "f3", "f4"};

    const TrainResult serial = train_router(x, y, w, schema, monotone, config, Exec::Serial);
    const TrainResult parallel = train_router(x, y, w, schema, monotone, config, Exec::Parallel);
    CHECK(serial.model.save_text() == parallel.model.save_text());
    CHECK(serial.round_losses == parallel.round_losses);

    const auto sp = serial.model.predict_batch(x, Exec::Serial);
    const auto pp = parallel.model.predict_batch(x, Exec::Parallel);
    CHECK(sp == pp);
}

TEST_CASE("eta sweep: serial and parallel grids agree exactly") {
    Rng rng(19);
    ModeStats stats;
    std::vector<double> preds, dcosts;
    for (int i = 0; i < 50; ++i) {
        stats.ids.push_back(std::to_string(i));
        stats.u_non.push_back(rng.uniform(0.0, 1.0));
        stats.u_think.push_back(rng.uniform(0.0, 1.0));
        stats.t_non.push_back(rng.uniform(30.0, 70.0));
        stats.t_think.push_back(rng.uniform(200.0, 400.0));
        preds.push_back(rng.uniform(-0.3, 0.5));
        dcosts.push_back(rng.uniform(50.0, 400.0));
    }
    const SweepInputs inputs{preds, dcosts, stats};
    const std::vector<double> grid = default_eta_grid(preds, dcosts, 80);

    const auto serial = sweep_eta(inputs, grid, Exec::Serial);
    const auto parallel = sweep_eta(inputs, grid, Exec::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].eta == parallel[i].eta);
        CHECK(serial[i].mean_tokens == parallel[i].mean_tokens);
        CHECK(serial[i].utility == parallel[i].utility);
        CHECK(serial[i].think_fraction == parallel[i].think_fraction);
    }
}

TEST_CASE("exceptions inside parallel loops surface to the caller") {
    CHECK_THROWS_AS(
        for_each_index(Exec::Parallel, 8,
                       [](std::size_t i) {
                           if (i == 5) throw std::runtime_error("boom");
                       }),
        std::runtime_error);
}
