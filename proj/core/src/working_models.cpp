#include "deduct/working_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

std::vector<double> cell_covars0(const ZwKey& key) {
    std::vector<double> v = key.z;
    v.insert(v.end(), key.w.begin(), key.w.end());
    return v;
}

std::vector<double> cell_covars1(const ZwKey& key, bool include_w) {
    std::vector<double> v = key.z;
    if (include_w) v.insert(v.end(), key.w.begin(), key.w.end());
    return v;
}

struct StratumData {
    std::vector<double> x;
    std::vector<int> event;     // deaths for the T fit; complemented for the C fit
    std::vector<std::vector<double>> covars;
};

StratumData collect(const Dataset& data, int r_obs, bool include_w) {
    StratumData out;
    for (const auto& rec : data.records) {
        if (rec.r_obs != r_obs) continue;
        if (r_obs == 0 && rec.s != 1) continue;
        out.x.push_back(rec.x);
        out.event.push_back(rec.delta);
        std::vector<double> v = rec.z;
        if (r_obs == 0 || include_w) v.insert(v.end(), rec.w.begin(), rec.w.end());
        out.covars.push_back(std::move(v));
    }
    return out;
}

std::vector<int> complement(const std::vector<int>& ev) {
    std::vector<int> out(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) out[i] = 1 - ev[i];
    return out;
}

}  // namespace

Marginals fit_empirical_marginals(const Dataset& data, const DiscretizedSupport& support) {
    Marginals out;
    out.p_zw0.assign(support.zw0.size(), 0.0);
    out.p_zw1.assign(support.zw1.size(), 0.0);
    for (const auto& rec : data.records) {
        const std::size_t j = support.find_zw(rec.r_obs, rec.z, rec.w);
        if (j == DiscretizedSupport::npos)
            throw NotInSupport("record (row " + std::to_string(rec.row_id) +
                               ") has no covariate cell in the support");
        (rec.r_obs == 0 ? out.p_zw0[j] : out.p_zw1[j]) += 1.0;
    }
    out.p_robs0 = static_cast<double>(data.m) / static_cast<double>(data.n);
    out.p_robs1 = 1.0 - out.p_robs0;
    for (double& v : out.p_zw0) v /= std::max<double>(data.m, 1);
    for (double& v : out.p_zw1) v /= std::max<double>(data.n - data.m, 1);
    return out;
}

LogisticFit fit_selection(const Dataset& data, bool intercept_only, const LogisticOptions& opts) {
    std::vector<std::vector<double>> covars;
    std::vector<int> y;
    for (const auto& rec : data.records) {
        if (rec.r_obs != 0) continue;
        if (intercept_only) {
            covars.emplace_back();
        } else {
            std::vector<double> v = rec.z;
            v.insert(v.end(), rec.w.begin(), rec.w.end());
            covars.push_back(std::move(v));
        }
        y.push_back(rec.s);
    }
    return fit_logistic(covars, y, opts);
}

std::array<CoxFit, 4> fit_cox_quadruple(const Dataset& data, bool include_w_in_r1,
                                        const CoxOptions& opts) {
    const StratumData s0 = collect(data, 0, false);
    const StratumData s1 = collect(data, 1, include_w_in_r1);
    if (s0.x.empty() || s1.x.empty())
        throw EmptyStratum("both strata need observed outcomes for the outcome fits");
    return {fit_cox(s0.x, s0.event, s0.covars, opts),
            fit_cox(s0.x, complement(s0.event), s0.covars, opts),
            fit_cox(s1.x, s1.event, s1.covars, opts),
            fit_cox(s1.x, complement(s1.event), s1.covars, opts)};
}

std::array<LogNormalFit, 4> fit_lognormal_quadruple(const Dataset& data, bool include_w_in_r1,
                                                    const LogNormalOptions& opts) {
    const StratumData s0 = collect(data, 0, false);
    const StratumData s1 = collect(data, 1, include_w_in_r1);
    if (s0.x.empty() || s1.x.empty())
        throw EmptyStratum("both strata need observed outcomes for the outcome fits");
    return {fit_lognormal(s0.x, s0.event, s0.covars, opts),
            fit_lognormal(s0.x, complement(s0.event), s0.covars, opts),
            fit_lognormal(s1.x, s1.event, s1.covars, opts),
            fit_lognormal(s1.x, complement(s1.event), s1.covars, opts)};
}

namespace {

// Midpoint-bin masses for a log-normal law over the sorted unique times:
// first bin from 0, last bin to infinity.
void lognormal_masses(double mu, double sigma, const std::vector<double>& log_cuts,
                      std::size_t nx, double* out) {
    if (nx == 1) {
        out[0] = 1.0;
        return;
    }
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        const double cdf = norm_cdf((log_cuts[i] - mu) / sigma);
        out[i] = std::max(cdf - prev, 0.0);
        prev = cdf;
    }
    out[nx - 1] = std::max(1.0 - prev, 0.0);
}

// Survivor values at the support times from a mass vector: S(x_i) = sum_{j>i} p_j.
void survivor_from_masses(const double* p, std::size_t nx, double* s) {
    double acc = 0.0;
    for (std::size_t i = nx; i-- > 0;) {
        s[i] = acc;
        acc += p[i];
    }
}

struct StratumGeometry {
    const std::vector<ZwKey>* cells;
    const std::vector<double>* ux;
    const std::vector<std::size_t>* pair_xidx;
    const std::vector<int>* pair_delta;
    const std::vector<double>* pair_x;
    double c_max;
};

// Eq-style product masses for one stratum under the current T/C mass and
// survivor matrices, normalized within each cell; zero cells fall back to the
// stratum-pooled table. Returns false (instead of throwing) when even the
// pooled table is empty.
bool stratum_tables(const StratumGeometry& geo, const std::vector<double>& pT,
                    const std::vector<double>& pC, const std::vector<double>& ST,
                    const std::vector<double>& SC, std::vector<double>* table, int* n_fallback,
                    std::vector<double>* pooled_out) {
    const std::size_t ncell = geo.cells->size();
    const std::size_t npair = geo.pair_xidx->size();
    const std::size_t nx = geo.ux->size();
    table->assign(ncell * npair, 0.0);
    std::vector<double> pooled(npair, 0.0);
    std::vector<char> needs_fallback(ncell, 0);
    for (std::size_t c = 0; c < ncell; ++c) {
        double sum = 0.0;
        for (std::size_t k = 0; k < npair; ++k) {
            const std::size_t xi = (*geo.pair_xidx)[k];
            const double raw = (*geo.pair_delta)[k] == 1
                                   ? pT[c * nx + xi] * SC[c * nx + xi]
                                   : ST[c * nx + xi] * pC[c * nx + xi];
            const double v = std::max(raw, 0.0);
            (*table)[c * npair + k] = v;
            pooled[k] += v;
            sum += v;
        }
        if (sum > 0.0) {
            for (std::size_t k = 0; k < npair; ++k) (*table)[c * npair + k] /= sum;
        } else {
            needs_fallback[c] = 1;
        }
    }
    double pooled_sum = 0.0;
    for (double v : pooled) pooled_sum += v;
    if (pooled_sum > 0.0) {
        for (double& v : pooled) v /= pooled_sum;
    } else if (npair > 0) {
        return false;
    }
    *n_fallback = 0;
    for (std::size_t c = 0; c < ncell; ++c) {
        if (!needs_fallback[c]) continue;
        ++*n_fallback;
        std::copy(pooled.begin(), pooled.end(), table->begin() + c * npair);
    }
    if (pooled_out) *pooled_out = pooled;
    return true;
}

}  // namespace

namespace {

// Cox-path survival and mass matrices for one stratum at the base fit.
void cox_matrices(const CoxFit& ft, const CoxFit& fc, const std::vector<std::vector<double>>& covars,
                  const std::vector<double>& ux, std::vector<double>* pT, std::vector<double>* pC,
                  std::vector<double>* ST, std::vector<double>* SC) {
    const std::size_t ncell = covars.size();
    const std::size_t nx = ux.size();
    pT->resize(ncell * nx);
    pC->resize(ncell * nx);
    ST->resize(ncell * nx);
    SC->resize(ncell * nx);
    for (std::size_t c = 0; c < ncell; ++c) {
        double prevT = 1.0, prevC = 1.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double st = ft.survival_at(ux[i], covars[c]);
            const double sc = fc.survival_at(ux[i], covars[c]);
            (*ST)[c * nx + i] = st;
            (*SC)[c * nx + i] = sc;
            (*pT)[c * nx + i] = std::max(prevT - st, 0.0);
            (*pC)[c * nx + i] = std::max(prevC - sc, 0.0);
            prevT = st;
            prevC = sc;
        }
    }
}

std::vector<double> log_midpoint_cuts(const std::vector<double>& ux) {
    std::vector<double> cuts;
    for (std::size_t i = 0; i + 1 < ux.size(); ++i) cuts.push_back(std::log(0.5 * (ux[i] + ux[i + 1])));
    return cuts;
}

}  // namespace

WorkingModelFit fit_working_models(const Dataset& data, const DiscretizedSupport& support,
                                   const WorkingModelOptions& opts) {
    WorkingModelFit fit;
    fit.variant = opts.variant;
    fit.options = opts;
    fit.marginals = fit_empirical_marginals(data, support);
    fit.selection = fit_selection(data, opts.wrong_s, opts.logistic);
    fit.p_select0.resize(support.zw0.size());
    for (std::size_t j = 0; j < support.zw0.size(); ++j) {
        fit.p_select0[j] = opts.wrong_s
                               ? fit.selection.predict({})
                               : fit.selection.predict(cell_covars0(support.zw0[j]));
    }
    for (const auto& rec : data.records)
        (rec.r_obs == 0 ? fit.c_max0 : fit.c_max1) = std::max(
            rec.r_obs == 0 ? fit.c_max0 : fit.c_max1, rec.c);

    // Pair geometry per stratum.
    for (std::size_t k : support.pairs0) {
        fit.pair_x0.push_back(support.sxd0[k].x);
        fit.pair_delta0.push_back(support.sxd0[k].delta);
    }
    for (const auto& key : support.sxd1) {
        fit.pair_x1.push_back(key.x);
        fit.pair_delta1.push_back(key.delta);
    }
    auto unique_sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    fit.ux0 = unique_sorted(fit.pair_x0);
    fit.ux1 = unique_sorted(fit.pair_x1);
    for (double x : fit.pair_x0)
        fit.pair_xidx0.push_back(std::lower_bound(fit.ux0.begin(), fit.ux0.end(), x) - fit.ux0.begin());
    for (double x : fit.pair_x1)
        fit.pair_xidx1.push_back(std::lower_bound(fit.ux1.begin(), fit.ux1.end(), x) - fit.ux1.begin());

    if (opts.variant == Variant::Cox) {
        fit.cox = fit_cox_quadruple(data, opts.include_w_in_r1, opts.cox);
    } else {
        fit.lognormal = fit_lognormal_quadruple(data, opts.include_w_in_r1, opts.lognormal);
        // Censoring-side matrices are alpha-free; precompute them.
        std::vector<std::vector<double>> cells0, cells1;
        for (const auto& key : support.zw0) cells0.push_back(cell_covars0(key));
        for (const auto& key : support.zw1) cells1.push_back(cell_covars1(key, opts.include_w_in_r1));
        const auto cuts0 = log_midpoint_cuts(fit.ux0);
        const auto cuts1 = log_midpoint_cuts(fit.ux1);
        fit.ln_pC0.resize(cells0.size() * fit.ux0.size());
        fit.ln_SC0.resize(cells0.size() * fit.ux0.size());
        fit.ln_pC1.resize(cells1.size() * fit.ux1.size());
        fit.ln_SC1.resize(cells1.size() * fit.ux1.size());
        fit.ln_muT0.resize(cells0.size());
        fit.ln_muT1.resize(cells1.size());
        for (std::size_t c = 0; c < cells0.size(); ++c) {
            lognormal_masses(fit.lognormal[1].mean_log(cells0[c]), fit.lognormal[1].sigma, cuts0,
                             fit.ux0.size(), fit.ln_pC0.data() + c * fit.ux0.size());
            survivor_from_masses(fit.ln_pC0.data() + c * fit.ux0.size(), fit.ux0.size(),
                                 fit.ln_SC0.data() + c * fit.ux0.size());
            fit.ln_muT0[c] = fit.lognormal[0].mean_log(cells0[c]);
        }
        for (std::size_t c = 0; c < cells1.size(); ++c) {
            lognormal_masses(fit.lognormal[3].mean_log(cells1[c]), fit.lognormal[3].sigma, cuts1,
                             fit.ux1.size(), fit.ln_pC1.data() + c * fit.ux1.size());
            survivor_from_masses(fit.ln_pC1.data() + c * fit.ux1.size(), fit.ux1.size(),
                                 fit.ln_SC1.data() + c * fit.ux1.size());
            fit.ln_muT1[c] = fit.lognormal[2].mean_log(cells1[c]);
        }
    }
    fit.base = tables_at_alpha(fit, support, 0.0);
    // Pooled tables for the alpha-path fallback.
    {
        CellTables dummy = fit.base;
        fit.pooled_base0.assign(fit.pair_x0.size(), 0.0);
        fit.pooled_base1.assign(fit.pair_x1.size(), 0.0);
        for (std::size_t c = 0; c < support.zw0.size(); ++c)
            for (std::size_t k = 0; k < fit.pair_x0.size(); ++k)
                fit.pooled_base0[k] += dummy.t0[c * fit.pair_x0.size() + k];
        for (std::size_t c = 0; c < support.zw1.size(); ++c)
            for (std::size_t k = 0; k < fit.pair_x1.size(); ++k)
                fit.pooled_base1[k] += dummy.t1[c * fit.pair_x1.size() + k];
        auto norm = [](std::vector<double>& v) {
            double s = 0.0;
            for (double u : v) s += u;
            if (s > 0.0)
                for (double& u : v) u /= s;
        };
        norm(fit.pooled_base0);
        norm(fit.pooled_base1);
    }
    return fit;
}

namespace {

// Reweight a base table by max(0, 1 + alpha x / c_max) and renormalize.
void reweight_stratum(const std::vector<double>& base, const std::vector<double>& pooled,
                      const std::vector<double>& pair_x, double alpha, double c_max,
                      std::size_t ncell, std::vector<double>* out, int* n_fallback, int stratum) {
    const std::size_t npair = pair_x.size();
    std::vector<double> w(npair);
    for (std::size_t k = 0; k < npair; ++k)
        w[k] = std::max(0.0, 1.0 + alpha * pair_x[k] / c_max);
    out->assign(base.size(), 0.0);
    *n_fallback = 0;
    for (std::size_t c = 0; c < ncell; ++c) {
        double sum = 0.0;
        for (std::size_t k = 0; k < npair; ++k) {
            const double v = base[c * npair + k] * w[k];
            (*out)[c * npair + k] = v;
            sum += v;
        }
        if (sum <= 0.0) {
            ++*n_fallback;
            sum = 0.0;
            for (std::size_t k = 0; k < npair; ++k) {
                const double v = pooled[k] * w[k];
                (*out)[c * npair + k] = v;
                sum += v;
            }
            if (sum <= 0.0)
                throw DegenerateExtension("all outcome mass clamped to zero in stratum " +
                                          std::to_string(stratum) + " at alpha " +
                                          std::to_string(alpha));
        }
        for (std::size_t k = 0; k < npair; ++k) (*out)[c * npair + k] /= sum;
    }
}

}  // namespace

CellTables tables_at_alpha(const WorkingModelFit& fit, const DiscretizedSupport& support,
                           double alpha) {
    CellTables out;
    if (fit.variant == Variant::Cox) {
        if (alpha == 0.0) {
            if (!fit.base.t0.empty() || !fit.base.t1.empty()) return fit.base;
            // Base construction path: build from the fitted survival curves.
            std::vector<std::vector<double>> cells0, cells1;
            for (const auto& key : support.zw0) cells0.push_back(cell_covars0(key));
            for (const auto& key : support.zw1)
                cells1.push_back(cell_covars1(key, fit.options.include_w_in_r1));
            std::vector<double> pT, pC, ST, SC;
            cox_matrices(fit.cox[0], fit.cox[1], cells0, fit.ux0, &pT, &pC, &ST, &SC);
            StratumGeometry g0{&support.zw0, &fit.ux0, &fit.pair_xidx0, &fit.pair_delta0,
                               &fit.pair_x0, fit.c_max0};
            if (!stratum_tables(g0, pT, pC, ST, SC, &out.t0, &out.fallback_cells0, nullptr))
                throw DegenerateExtension("stratum 0 outcome table has no mass");
            cox_matrices(fit.cox[2], fit.cox[3], cells1, fit.ux1, &pT, &pC, &ST, &SC);
            StratumGeometry g1{&support.zw1, &fit.ux1, &fit.pair_xidx1, &fit.pair_delta1,
                               &fit.pair_x1, fit.c_max1};
            if (!stratum_tables(g1, pT, pC, ST, SC, &out.t1, &out.fallback_cells1, nullptr))
                throw DegenerateExtension("stratum 1 outcome table has no mass");
            return out;
        }
        reweight_stratum(fit.base.t0, fit.pooled_base0, fit.pair_x0, alpha, fit.c_max0,
                         support.zw0.size(), &out.t0, &out.fallback_cells0, 0);
        reweight_stratum(fit.base.t1, fit.pooled_base1, fit.pair_x1, alpha, fit.c_max1,
                         support.zw1.size(), &out.t1, &out.fallback_cells1, 1);
        return out;
    }

    // Log-normal path: shift the T intercepts by alpha, keep the C fits.
    const auto cuts0 = log_midpoint_cuts(fit.ux0);
    const auto cuts1 = log_midpoint_cuts(fit.ux1);
    const std::size_t nx0 = fit.ux0.size(), nx1 = fit.ux1.size();
    std::vector<double> pT0(fit.ln_muT0.size() * nx0), ST0(fit.ln_muT0.size() * nx0);
    for (std::size_t c = 0; c < fit.ln_muT0.size(); ++c) {
        lognormal_masses(fit.ln_muT0[c] + alpha, fit.lognormal[0].sigma, cuts0, nx0,
                         pT0.data() + c * nx0);
        survivor_from_masses(pT0.data() + c * nx0, nx0, ST0.data() + c * nx0);
    }
    StratumGeometry g0{&support.zw0, &fit.ux0, &fit.pair_xidx0, &fit.pair_delta0, &fit.pair_x0,
                       fit.c_max0};
    if (!stratum_tables(g0, pT0, fit.ln_pC0, ST0, fit.ln_SC0, &out.t0, &out.fallback_cells0,
                        nullptr))
        throw DegenerateExtension("stratum 0 outcome table has no mass at alpha " +
                                  std::to_string(alpha));
    std::vector<double> pT1(fit.ln_muT1.size() * nx1), ST1(fit.ln_muT1.size() * nx1);
    for (std::size_t c = 0; c < fit.ln_muT1.size(); ++c) {
        lognormal_masses(fit.ln_muT1[c] + alpha, fit.lognormal[2].sigma, cuts1, nx1,
                         pT1.data() + c * nx1);
        survivor_from_masses(pT1.data() + c * nx1, nx1, ST1.data() + c * nx1);
    }
    StratumGeometry g1{&support.zw1, &fit.ux1, &fit.pair_xidx1, &fit.pair_delta1, &fit.pair_x1,
                       fit.c_max1};
    if (!stratum_tables(g1, pT1, fit.ln_pC1, ST1, fit.ln_SC1, &out.t1, &out.fallback_cells1,
                        nullptr))
        throw DegenerateExtension("stratum 1 outcome table has no mass at alpha " +
                                  std::to_string(alpha));
    return out;
}

DiscreteDistribution assemble_distribution(const WorkingModelFit& fit,
                                           const DiscretizedSupport& support, double alpha) {
    const CellTables tabs = tables_at_alpha(fit, support, alpha);
    DiscreteDistribution g;
    g.support = &support;
    g.probs.assign(support.size(), 0.0);
    const std::size_t npair0 = fit.pair_x0.size();
    const std::size_t npair1 = fit.pair_x1.size();
    // Position of each sxd0 index within the pair list (npos for the NA triple).
    std::vector<std::size_t> pair_pos(support.sxd0.size(), DiscretizedSupport::npos);
    for (std::size_t k = 0; k < support.pairs0.size(); ++k) pair_pos[support.pairs0[k]] = k;

    for (std::size_t j = 0; j < support.zw0.size(); ++j) {
        const double head = fit.marginals.p_robs0 * fit.marginals.p_zw0[j];
        const double ps = fit.p_select0[j];
        for (std::size_t k = 0; k < support.sxd0.size(); ++k) {
            double f;
            if (k == support.na0_index)
                f = head * (1.0 - ps);
            else
                f = head * ps * tabs.t0[j * npair0 + pair_pos[k]];
            g.probs[support.flat_index({0, j, k})] = f;
        }
    }
    for (std::size_t j = 0; j < support.zw1.size(); ++j) {
        const double head = fit.marginals.p_robs1 * fit.marginals.p_zw1[j];
        for (std::size_t k = 0; k < support.sxd1.size(); ++k)
            g.probs[support.flat_index({1, j, k})] = head * tabs.t1[j * npair1 + k];
    }
    double sum = g.total();
    fit.assemble_sum_error = std::abs(sum - 1.0);
    if (sum > 0.0)
        for (double& p : g.probs) p /= sum;
    return g;
}

}  // namespace deduct
