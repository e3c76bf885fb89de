#include <benchmark/benchmark.h>

#include "deduct/baselines.hpp"
#include "deduct/engine.hpp"
#include "deduct/simulation.hpp"
#include "deduct/working_models.hpp"

using namespace deduct;

namespace {

Dataset make_data(std::size_t n) {
    GenerativeConfig config{Gm::GM1, n, 42, 0, 0.7};
    return generate(config);
}

void BM_Generate(benchmark::State& state) {
    GenerativeConfig config{Gm::GM1, static_cast<std::size_t>(state.range(0)), 42, 0, 0.7};
    for (auto _ : state) {
        auto data = generate(config);
        benchmark::DoNotOptimize(data);
    }
}
BENCHMARK(BM_Generate)->Arg(200)->Arg(1000);

void BM_WorkingModelFit(benchmark::State& state) {
    const Dataset data = make_data(state.range(0));
    const auto sup = build_support(data);
    WorkingModelOptions opts;
    opts.variant = state.range(1) ? Variant::LogNormal : Variant::Cox;
    for (auto _ : state) {
        auto fit = fit_working_models(data, sup, opts);
        benchmark::DoNotOptimize(fit);
    }
}
BENCHMARK(BM_WorkingModelFit)->Args({200, 0})->Args({200, 1});

void BM_EvaluatorBuild(benchmark::State& state) {
    const Dataset data = make_data(state.range(0));
    const auto sup = build_support(data);
    WorkingModelOptions opts;
    const auto fit = fit_working_models(data, sup, opts);
    const EngineContext ctx(data, sup);
    for (auto _ : state) {
        TauEvaluator eval(ctx, fit, 0.3, 0.7);
        benchmark::DoNotOptimize(eval.tau());
    }
}
BENCHMARK(BM_EvaluatorBuild)->Arg(200)->Arg(500);

void BM_GateauxSweep(benchmark::State& state) {
    const Dataset data = make_data(state.range(0));
    const auto sup = build_support(data);
    WorkingModelOptions opts;
    const auto fit = fit_working_models(data, sup, opts);
    const EngineContext ctx(data, sup);
    const TauEvaluator eval(ctx, fit, 0.3, 0.7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval.sum_gateaux(1e-4));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GateauxSweep)->Arg(200)->Arg(500);

void BM_Estimate(benchmark::State& state) {
    const Dataset data = make_data(state.range(0));
    EstimateOptions opts;
    opts.variant = state.range(1) ? Variant::LogNormal : Variant::Cox;
    for (auto _ : state) {
        auto res = estimate(data, opts);
        benchmark::DoNotOptimize(res);
    }
}
BENCHMARK(BM_Estimate)->Args({100, 0})->Args({200, 0})->Args({100, 1})->Args({200, 1});

void BM_KmStratified(benchmark::State& state) {
    const Dataset data = make_data(200);
    for (auto _ : state) {
        auto km = km_stratified(data, 0.7, state.range(0), 7);
        benchmark::DoNotOptimize(km);
    }
}
BENCHMARK(BM_KmStratified)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
