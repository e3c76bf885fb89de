#include "deduct/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <thread>

#include "deduct/baselines.hpp"
#include "deduct/engine.hpp"
#include "deduct/errors.hpp"
#include "deduct/logistic.hpp"
#include "deduct/rng.hpp"
#include "deduct/stats.hpp"

namespace deduct {

namespace {

// Stream-id namespaces under one seed.
constexpr std::uint64_t kStreamData = 0x0100000000ull;
constexpr std::uint64_t kStreamBoot = 0x0200000000ull;
constexpr std::uint64_t kStreamTau = 0x0300000000ull;

double draw_survival_time(Gm model, double z, RngStream& rng) {
    if (model == Gm::GM1) return rng.weibull(5.0, std::exp(-z / 5.0));  // hazard e^z 5 t^4
    return rng.lognormal(z, 0.5);
}

double draw_censoring_time(Gm model, double z, RngStream& rng) {
    if (model == Gm::GM1) return rng.uniform(0.5, 2.0);
    return rng.lognormal(z, 0.5);
}

}  // namespace

std::vector<LatentDraw> generate_latent(const GenerativeConfig& config) {
    RngStream rng(config.seed, kStreamData + config.stream);
    std::vector<LatentDraw> out(config.n);
    for (auto& d : out) {
        d.z = rng.uniform(-2.0, 2.0);
        d.r = rng.bernoulli((d.z + 3.0) / 6.0) ? 1 : 0;
        d.t = draw_survival_time(config.model, d.z, rng);
        d.c = draw_censoring_time(config.model, d.z, rng);
        const double min_tc = std::min(d.t, d.c);
        if (d.r == 0) {
            d.l = rng.uniform(d.t / 3.0, d.t);
            d.r_obs = min_tc < d.l ? 1 : 0;
            if (d.r_obs == 1) d.l = kNA;
        } else {
            d.r_obs = 1;
        }
        if (d.r_obs == 0) {
            const double arg = config.model == Gm::GM1 ? (d.l + d.z + 1.0) / 2.0
                                                       : (d.l - d.z + 1.0) / 2.0;
            d.p_select = expit(arg);
            d.s = rng.bernoulli(d.p_select) ? 1 : 0;
        }
        if (d.r_obs == 1 || d.s == 1) {
            d.x = min_tc;
            d.delta = d.t <= d.c ? 1 : 0;
        }
    }
    return out;
}

Dataset generate(const GenerativeConfig& config) {
    const auto latent = generate_latent(config);
    std::vector<ObservedRecord> records;
    records.reserve(latent.size());
    long row = 0;
    for (const auto& d : latent) {
        ObservedRecord rec;
        rec.row_id = ++row;
        rec.c = d.c;
        rec.r_obs = d.r_obs;
        rec.z = {d.z};
        rec.w = {d.l};
        rec.s = d.s;
        rec.x = d.x;
        rec.delta = d.delta;
        records.push_back(std::move(rec));
    }
    return canonical_sort(std::move(records), 1, 1);
}

double true_tau(Gm model, double t, std::size_t n_mc, std::uint64_t seed) {
    RngStream rng(seed, kStreamTau);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double z = rng.uniform(-2.0, 2.0);
        hits += draw_survival_time(model, z, rng) > t;
    }
    return static_cast<double>(hits) / static_cast<double>(n_mc);
}

Table1Row descriptive_stats(Gm model, std::size_t n_mc, std::uint64_t seed) {
    GenerativeConfig config{model, n_mc, seed, 0, 0.7};
    const auto latent = generate_latent(config);
    Table1Row row;
    std::size_t robs0 = 0, s1 = 0, obs = 0, dead = 0, tau_hits = 0;
    std::vector<double> sel, xs;
    std::vector<double> t_all, c_all, z_all, robs_all;
    std::vector<double> t0, c0, z0, l0;
    for (const auto& d : latent) {
        tau_hits += d.t > 0.7;
        t_all.push_back(d.t);
        c_all.push_back(d.c);
        z_all.push_back(d.z);
        robs_all.push_back(d.r_obs);
        if (d.r_obs == 0) {
            ++robs0;
            s1 += d.s;
            sel.push_back(d.p_select);
            t0.push_back(d.t);
            c0.push_back(d.c);
            z0.push_back(d.z);
            l0.push_back(d.l);
        }
        if (!is_na(d.x)) {
            ++obs;
            dead += d.delta == 1;
            xs.push_back(d.x);
        }
    }
    row.tau = static_cast<double>(tau_hits) / latent.size();
    row.p_robs0 = static_cast<double>(robs0) / latent.size();
    row.p_s1_given_robs0 = robs0 ? static_cast<double>(s1) / robs0 : 0.0;
    row.sel_p10 = quantile_type7(sel, 0.10);
    row.sel_p90 = quantile_type7(sel, 0.90);
    row.p_delta1 = obs ? static_cast<double>(dead) / obs : 0.0;
    row.x_p10 = quantile_type7(xs, 0.10);
    row.x_p90 = quantile_type7(xs, 0.90);
    row.corr_tc_given_z_robs = partial_correlation(t_all, c_all, {&z_all, &robs_all});
    row.corr_tc_given_zl_robs0 = partial_correlation(t0, c0, {&z0, &l0});
    return row;
}

const char* estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::DeCox: return "DE.Cox";
        case EstimatorKind::DeLn: return "DE.LN";
        case EstimatorKind::DeCoxWrongS: return "DE.Cox.WrongS";
        case EstimatorKind::DeLnWrongS: return "DE.LN.WrongS";
        case EstimatorKind::DeCoxAlpha0: return "DE.Cox(alpha=0)";
        case EstimatorKind::DeLnAlpha0: return "DE.LN(alpha=0)";
        case EstimatorKind::KmS: return "KM.S";
        case EstimatorKind::KmC: return "KM.C";
    }
    return "?";
}

namespace {

struct CellResult {
    double estimate = kNA;
    double ci_lo = kNA;
    double ci_hi = kNA;
    bool failed = true;
};

CellResult run_one(EstimatorKind kind, const Dataset& data, const ReplicateOptions& opts,
                   std::uint64_t seed, std::uint64_t rep) {
    CellResult out;
    try {
        switch (kind) {
            case EstimatorKind::KmS: {
                const KmResult km =
                    km_stratified(data, opts.t, opts.n_boot, seed, kStreamBoot + rep);
                out = {km.estimate, km.ci_lo, km.ci_hi, false};
                break;
            }
            case EstimatorKind::KmC: {
                const KmResult km = km_complete_case(data, opts.t);
                out = {km.estimate, km.ci_lo, km.ci_hi, false};
                break;
            }
            default: {
                EstimateOptions eopts;
                eopts.t = opts.t;
                eopts.epsilon = opts.epsilon;
                eopts.variant = (kind == EstimatorKind::DeCox || kind == EstimatorKind::DeCoxWrongS ||
                                 kind == EstimatorKind::DeCoxAlpha0)
                                    ? Variant::Cox
                                    : Variant::LogNormal;
                eopts.wrong_s =
                    kind == EstimatorKind::DeCoxWrongS || kind == EstimatorKind::DeLnWrongS;
                eopts.alpha_zero =
                    kind == EstimatorKind::DeCoxAlpha0 || kind == EstimatorKind::DeLnAlpha0;
                const EstimationResult res = estimate(data, eopts);
                if (res.solver.no_root) break;  // flagged, not a usable estimate
                const double half = 1.959963984540054 * res.se;
                out = {res.tau_hat, res.tau_hat - half, res.tau_hat + half, false};
                break;
            }
        }
    } catch (const Error&) {
        out.failed = true;
    }
    return out;
}

}  // namespace

std::vector<ReplicateSummary> run_replicates(Gm model, std::size_t n,
                                             const std::vector<EstimatorKind>& estimators,
                                             int n_rep, std::uint64_t seed,
                                             const ReplicateOptions& opts) {
    const double truth =
        opts.true_value >= 0.0 ? opts.true_value : true_tau(model, opts.t, opts.n_mc, seed);
    std::vector<std::vector<CellResult>> cells(n_rep,
                                               std::vector<CellResult>(estimators.size()));

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    const int workers = std::max(1, opts.workers);
    auto worker = [&] {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= n_rep) return;
            GenerativeConfig config{model, n, seed, static_cast<std::uint64_t>(rep), opts.t};
            const Dataset data = generate(config);
            for (std::size_t e = 0; e < estimators.size(); ++e)
                cells[rep][e] = run_one(estimators[e], data, opts, seed, rep);
            const int d = done.fetch_add(1) + 1;
            if (opts.progress && d % 25 == 0)
                std::cerr << "replicates: " << d << "/" << n_rep << "\n";
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }

    std::vector<ReplicateSummary> out;
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        ReplicateSummary sum;
        sum.kind = estimators[e];
        std::vector<double> est;
        int covered = 0;
        for (int rep = 0; rep < n_rep; ++rep) {
            const CellResult& cell = cells[rep][e];
            if (cell.failed) {
                ++sum.n_failures;
                continue;
            }
            est.push_back(cell.estimate);
            covered += cell.ci_lo <= truth && truth <= cell.ci_hi;
        }
        sum.n_replicates = static_cast<int>(est.size());
        if (!est.empty()) {
            double mean = 0.0;
            for (double v : est) mean += v;
            mean /= est.size();
            double var = 0.0;
            for (double v : est) var += (v - mean) * (v - mean);
            sum.bias_points = (mean - truth) * 100.0;
            sum.sd_points = est.size() > 1 ? std::sqrt(var / (est.size() - 1)) * 100.0 : 0.0;
            sum.cp_percent = 100.0 * covered / est.size();
        }
        out.push_back(sum);
    }
    return out;
}

Dataset apply_gamma_restriction(const Dataset& data, double gamma, std::size_t l_col) {
    if (l_col >= static_cast<std::size_t>(data.w_dim))
        throw MissingDropoutTime("dropout-time column " + std::to_string(l_col) +
                                 " is outside w (dimension " + std::to_string(data.w_dim) + ")");
    std::vector<ObservedRecord> records = data.records;
    for (auto& rec : records) {
        if (rec.r_obs != 0 || rec.s != 1) continue;
        const double l = rec.w[l_col];
        if (is_na(l))
            throw MissingDropoutTime("record (row " + std::to_string(rec.row_id) +
                                     ") has NA dropout time");
        if (rec.c - l > gamma) {
            rec.s = 0;
            rec.x = kNA;
            rec.delta = kDeltaNA;
        }
    }
    return canonical_sort(std::move(records), data.z_dim, data.w_dim);
}

}  // namespace deduct
