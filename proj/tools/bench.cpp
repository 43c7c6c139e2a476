// Serial-vs-OpenMP timing for the data-parallel kernels: feature extraction,
// router training, batch prediction and the eta sweep. Results must agree
// bit-for-bit; this target reports the speedup only.

#include <chrono>
#include <cstdio>
#include <string>

#include "rankroute/common.hpp"
#include "rankroute/features.hpp"
#include "rankroute/gbdt.hpp"
#include "rankroute/labels.hpp"
#include "rankroute/matrix.hpp"
#include "rankroute/policy.hpp"
#include "rankroute/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn) {
    const auto begin = Clock::now();
    fn();
    const auto end = Clock::now();
    return std::chrono::duration<double, std::milli>(end - begin).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-22s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = 1500;
    if (argc > 1) n = static_cast<std::size_t>(std::stoul(argv[1]));
    std::printf("benchmark over %zu instances, %d threads available\n", n, rr::max_threads());

    rr::SynthConfig synth_config;
    synth_config.n_instances = n;
    synth_config.seed = 99;
    const rr::SynthOutput data = rr::synthesize(synth_config);

    std::vector<rr::CostObservation> observations;
    for (std::size_t i = 0; i < data.dumps.size(); ++i)
        observations.push_back({static_cast<double>(data.dumps[i].prompt_tokens),
                                static_cast<double>(data.dumps[i].candidates.size()),
                                static_cast<double>(data.records[i].think.tokens -
                                                    data.records[i].non_think.tokens)});
    const rr::CostModel cost_model = rr::CostModel::fit(observations);

    std::vector<rr::FeatureVector> features;
    {
        const double serial = time_ms([&] {
            features = rr::extract_features_batch(data.dumps, cost_model, {}, rr::Exec::Serial);
        });
        std::vector<rr::FeatureVector> parallel_out;
        const double parallel = time_ms([&] {
            parallel_out = rr::extract_features_batch(data.dumps, cost_model, {}, rr::Exec::Parallel);
        });
        report("feature extraction", serial, parallel);
    }

    const rr::FeatureTable table = rr::FeatureTable::from_vectors(features);
    const rr::UtilityMetric metric = rr::UtilityMetric::parse("ndcg@10");
    std::vector<double> y, w(features.size(), 1.0);
    for (std::size_t i = 0; i < data.instances.size(); ++i)
        y.push_back(rr::advantage_label(data.instances[i], data.records[i], metric, 1e-4).advantage);

    rr::TrainConfig train_config;
    train_config.n_rounds = 80;
    std::map<std::string, rr::Monotone> monotone{{rr::kDeltaCostFeature, rr::Monotone::Decreasing}};
    rr::TrainResult serial_model, parallel_model;
    {
        const double serial = time_ms([&] {
            serial_model = rr::train_router(table.x, y, w, table.schema, monotone, train_config,
                                            rr::Exec::Serial);
        });
        const double parallel = time_ms([&] {
            parallel_model = rr::train_router(table.x, y, w, table.schema, monotone, train_config,
                                              rr::Exec::Parallel);
        });
        report("router training", serial, parallel);
    }

    std::vector<double> preds;
    {
        const double serial =
            time_ms([&] { preds = serial_model.model.predict_batch(table.x, rr::Exec::Serial); });
        const double parallel =
            time_ms([&] { preds = parallel_model.model.predict_batch(table.x, rr::Exec::Parallel); });
        report("batch prediction", serial, parallel);
    }

    {
        std::vector<double> dcosts;
        for (const auto& fv : features) dcosts.push_back(fv.at(rr::kDeltaCostFeature));
        const rr::ModeStats stats = rr::summarize_modes(data.instances, data.records, metric);
        const rr::SweepInputs inputs{preds, dcosts, stats};
        const std::vector<double> grid = rr::default_eta_grid(preds, dcosts, 400);
        std::vector<rr::FrontierPoint> points;
        const double serial = time_ms([&] { points = rr::sweep_eta(inputs, grid, rr::Exec::Serial); });
        const double parallel =
            time_ms([&] { points = rr::sweep_eta(inputs, grid, rr::Exec::Parallel); });
        report("eta sweep", serial, parallel);
    }
    return 0;
}
