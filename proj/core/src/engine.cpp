#include "deduct/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

bool atom_less(double xa, int da, double xb, int db) {
    if (xa != xb) return xa < xb;
    return da > db;  // events ahead of censorings at tied x
}

}  // namespace

EngineContext::EngineContext(const Dataset& data_in, const DiscretizedSupport& support_in)
    : data(data_in), support(support_in) {
    // Merged atom list over both strata's observed (x, delta) pairs.
    std::vector<std::pair<double, int>> all;
    for (std::size_t k : support.pairs0) all.push_back({support.sxd0[k].x, support.sxd0[k].delta});
    for (const auto& key : support.sxd1) all.push_back({key.x, key.delta});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return atom_less(a.first, a.second, b.first, b.second);
    });
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (const auto& [x, d] : all) {
        atom_x.push_back(x);
        atom_delta.push_back(d);
    }
    for (std::size_t i = 0; i < atom_x.size(); ++i)
        if (i == 0 || atom_x[i] != atom_x[i - 1]) grp_start.push_back(i);
    for (std::size_t k : support.pairs0) a0.push_back(find_atom(support.sxd0[k].x, support.sxd0[k].delta));
    for (const auto& key : support.sxd1) a1.push_back(find_atom(key.x, key.delta));

    // Merged unique z values; rows of both strata mapped onto them.
    std::vector<std::vector<double>> zs;
    for (const auto& key : support.zw0) zs.push_back(key.z);
    for (const auto& key : support.zw1) zs.push_back(key.z);
    std::sort(zs.begin(), zs.end(), [](const auto& a, const auto& b) { return na_less(a, b); });
    zs.erase(std::unique(zs.begin(), zs.end(),
                         [](const auto& a, const auto& b) { return na_equal(a, b); }),
             zs.end());
    nz = zs.size();
    auto z_index = [&](const std::vector<double>& z) {
        auto it = std::lower_bound(zs.begin(), zs.end(), z,
                                   [](const auto& a, const auto& b) { return na_less(a, b); });
        return static_cast<std::size_t>(it - zs.begin());
    };
    for (const auto& key : support.zw0) z_of_row0.push_back(z_index(key.z));
    for (const auto& key : support.zw1) z_of_row1.push_back(z_index(key.z));

    subjects.reserve(data.n);
    for (const auto& rec : data.records) {
        Subject s;
        s.row = support.find_zw(rec.r_obs, rec.z, rec.w);
        if (s.row == DiscretizedSupport::npos)
            throw NotInSupport("record (row " + std::to_string(rec.row_id) + ") has no cell");
        if (rec.r_obs == 1) {
            s.kind = kR1;
            s.atom = find_atom(rec.x, rec.delta);
            s.z = z_of_row1[s.row];
        } else if (rec.s == 1) {
            s.kind = kS1;
            s.atom = find_atom(rec.x, rec.delta);
            s.z = z_of_row0[s.row];
        } else {
            s.kind = kS0;
            s.atom = DiscretizedSupport::npos;
            s.z = z_of_row0[s.row];
        }
        subjects.push_back(s);
    }
}

std::size_t EngineContext::find_atom(double x, int delta) const {
    std::size_t lo = 0, hi = atom_x.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (atom_less(atom_x[mid], atom_delta[mid], x, delta))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < atom_x.size() && atom_x[lo] == x && atom_delta[lo] == delta) return lo;
    throw NotInSupport("outcome atom not present in the support");
}

TauEvaluator::TauEvaluator(const EngineContext& ctx, const WorkingModelFit& fit, double alpha,
                           double t, SurvFunctional functional)
    : ctx_(ctx), t_(t), functional_(functional) {
    const DiscretizedSupport& sup = ctx.support;
    natoms_ = ctx.atom_x.size();
    const CellTables tabs = tables_at_alpha(fit, sup, alpha);
    const std::size_t nrow0 = sup.zw0.size(), nrow1 = sup.zw1.size();
    const std::size_t np0 = sup.pairs0.size(), np1 = sup.sxd1.size();

    g0s1_.assign(nrow0 * np0, 0.0);
    g0na_.assign(nrow0, 0.0);
    g1_.assign(nrow1 * np1, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < nrow0; ++r) {
        const double head = fit.marginals.p_robs0 * fit.marginals.p_zw0[r];
        const double ps = fit.p_select0[r];
        for (std::size_t k = 0; k < np0; ++k) {
            const double v = head * ps * tabs.t0[r * np0 + k];
            g0s1_[r * np0 + k] = v;
            total += v;
        }
        if (sup.na0_index != DiscretizedSupport::npos) {
            g0na_[r] = head * (1.0 - ps);
            total += g0na_[r];
        }
    }
    for (std::size_t r = 0; r < nrow1; ++r) {
        const double head = fit.marginals.p_robs1 * fit.marginals.p_zw1[r];
        for (std::size_t k = 0; k < np1; ++k) {
            const double v = head * tabs.t1[r * np1 + k];
            g1_[r * np1 + k] = v;
            total += v;
        }
    }
    if (total > 0.0) {
        for (double& v : g0s1_) v /= total;
        for (double& v : g0na_) v /= total;
        for (double& v : g1_) v /= total;
    }

    row0_s1_.assign(nrow0, 0.0);
    row0_all_.assign(nrow0, 0.0);
    num_.assign(ctx.nz * natoms_, 0.0);
    pr_.assign(ctx.nz, 0.0);
    for (std::size_t r = 0; r < nrow0; ++r) {
        double s1 = 0.0;
        for (std::size_t k = 0; k < np0; ++k) s1 += g0s1_[r * np0 + k];
        row0_s1_[r] = s1;
        row0_all_[r] = s1 + g0na_[r];
        const std::size_t z = ctx.z_of_row0[r];
        pr_[z] += row0_all_[r];
        if (s1 > 0.0) {
            const double scale = row0_all_[r] / s1;
            for (std::size_t k = 0; k < np0; ++k)
                num_[z * natoms_ + ctx.a0[k]] += scale * g0s1_[r * np0 + k];
        }
    }
    for (std::size_t r = 0; r < nrow1; ++r) {
        const std::size_t z = ctx.z_of_row1[r];
        double rs = 0.0;
        for (std::size_t k = 0; k < np1; ++k) {
            const double v = g1_[r * np1 + k];
            num_[z * natoms_ + ctx.a1[k]] += v;
            rs += v;
        }
        pr_[z] += rs;
    }

    sv_.assign(ctx.nz, 1.0);
    tau_ = 0.0;
    std::vector<double> risk_buf;
    for (std::size_t z = 0; z < ctx.nz; ++z) {
        if (pr_[z] <= 0.0) continue;
        sv_[z] = surv(num_.data() + z * natoms_, risk_buf);
        tau_ += pr_[z] * sv_[z];
    }
}

double TauEvaluator::surv(const double* num, std::vector<double>& risk) const {
    // At-risk masses as exact suffix sums over the tie groups; subtracting a
    // running total cancels badly on decaying tails.
    const std::size_t ngrp = ctx_.grp_start.size();
    risk.resize(ngrp + 1);
    risk[ngrp] = 0.0;
    for (std::size_t g = ngrp; g-- > 0;) {
        const std::size_t a = ctx_.grp_start[g];
        const std::size_t b = g + 1 < ngrp ? ctx_.grp_start[g + 1] : natoms_;
        double m = 0.0;
        for (std::size_t i = a; i < b; ++i) m += num[i];
        risk[g] = risk[g + 1] + m;
    }
    double s = 1.0;
    double log_na = 0.0;
    for (std::size_t g = 0; g < ngrp; ++g) {
        const std::size_t a = ctx_.grp_start[g];
        if (ctx_.atom_x[a] > t_) break;
        if (risk[g] <= 0.0) break;  // carry the last defined value
        const std::size_t b = g + 1 < ngrp ? ctx_.grp_start[g + 1] : natoms_;
        double events = 0.0;
        for (std::size_t i = a; i < b; ++i)
            if (ctx_.atom_delta[i] == 1) events += num[i];
        if (events > 0.0) {
            if (functional_ == SurvFunctional::ProductLimit)
                s *= std::max(0.0, 1.0 - events / risk[g]);
            else
                log_na -= events / risk[g];
        }
    }
    return functional_ == SurvFunctional::ProductLimit ? s : std::exp(log_na);
}

double TauEvaluator::gateaux_at(std::size_t subject, double epsilon, Scratch& scratch) const {
    const auto& sub = ctx_.subjects[subject];
    const double keep = 1.0 - epsilon;
    auto& buf = scratch.buf;
    buf.assign(num_.begin() + sub.z * natoms_, num_.begin() + (sub.z + 1) * natoms_);
    const std::size_t np0 = ctx_.support.pairs0.size();

    if (sub.kind == EngineContext::kR1) {
        for (double& v : buf) v *= keep;
        buf[sub.atom] += epsilon;
    } else if (sub.kind == EngineContext::kS0) {
        // The row's conditional table is unchanged; only its weight grows.
        const std::size_t r = sub.row;
        for (double& v : buf) v *= keep;
        if (row0_s1_[r] > 0.0) {
            const double scale = epsilon / row0_s1_[r];
            for (std::size_t k = 0; k < np0; ++k)
                buf[ctx_.a0[k]] += scale * g0s1_[r * np0 + k];
        }
    } else {
        const std::size_t r = sub.row;
        const double m_all = row0_all_[r];
        const double m_s1 = row0_s1_[r];
        // Remove the old row contribution, add the perturbed one.
        if (m_s1 > 0.0) {
            const double scale = m_all / m_s1;
            for (std::size_t k = 0; k < np0; ++k)
                buf[ctx_.a0[k]] -= scale * g0s1_[r * np0 + k];
        }
        for (double& v : buf) v *= keep;
        const double m_all_new = keep * m_all + epsilon;
        const double m_s1_new = keep * m_s1 + epsilon;
        const double scale = m_all_new / m_s1_new;
        for (std::size_t k = 0; k < np0; ++k) {
            double gk = keep * g0s1_[r * np0 + k];
            if (ctx_.a0[k] == sub.atom) gk += epsilon;
            buf[ctx_.a0[k]] += scale * gk;
        }
    }
    const double pr_new = keep * pr_[sub.z] + epsilon;
    const double sv_new = surv(buf.data(), scratch.risk);
    const double tau_new = keep * (tau_ - pr_[sub.z] * sv_[sub.z]) + pr_new * sv_new;
    return (tau_new - tau_) / epsilon;
}

std::vector<double> TauEvaluator::gateaux_all(double epsilon, int workers) const {
    const std::size_t n = ctx_.subjects.size();
    std::vector<double> out(n);
    if (workers <= 1) {
        Scratch scratch;
        for (std::size_t i = 0; i < n; ++i) out[i] = gateaux_at(i, epsilon, scratch);
        return out;
    }
    const std::size_t nthreads = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < nthreads; ++w) {
        threads.emplace_back([&, w] {
            Scratch scratch;
            for (std::size_t i = w; i < n; i += nthreads) out[i] = gateaux_at(i, epsilon, scratch);
        });
    }
    for (auto& th : threads) th.join();
    return out;
}

double TauEvaluator::sum_gateaux(double epsilon, int workers) const {
    const auto values = gateaux_all(epsilon, workers);
    double s = 0.0;
    for (double v : values) s += v;  // fixed order: deterministic under any schedule
    return s;
}

double gateaux(const WorkingModelFit& fit, const DiscretizedSupport& support, const Dataset& data,
               double alpha, const ObservedRecord& record, double epsilon, double t) {
    EngineContext ctx(data, support);
    TauEvaluator eval(ctx, fit, alpha, t);
    const std::size_t flat = support.index_of(record);
    for (std::size_t i = 0; i < data.records.size(); ++i)
        if (support.index_of(data.records[i]) == flat) {
            TauEvaluator::Scratch scratch;
            return eval.gateaux_at(i, epsilon, scratch);
        }
    throw NotInSupport("record is not one of the dataset's subjects");
}

double sum_gateaux(const WorkingModelFit& fit, const DiscretizedSupport& support,
                   const Dataset& data, double alpha, double epsilon, double t) {
    EngineContext ctx(data, support);
    return TauEvaluator(ctx, fit, alpha, t).sum_gateaux(epsilon);
}

namespace {

struct AlphaEval {
    double value = 0.0;
    bool feasible = false;
};

}  // namespace

std::pair<double, SolverDiagnostics> solve_alpha(const WorkingModelFit& fit,
                                                 const EngineContext& ctx,
                                                 const EstimateOptions& opts) {
    SolverDiagnostics diag;
    const double n = static_cast<double>(ctx.subjects.size());
    const double residual_tol = n * opts.residual_tol_per_n;
    std::map<double, AlphaEval> cache;
    auto U = [&](double alpha) -> AlphaEval {
        auto it = cache.find(alpha);
        if (it != cache.end()) return it->second;
        AlphaEval ev;
        try {
            TauEvaluator eval(ctx, fit, alpha, opts.t, opts.functional);
            ev.value = eval.sum_gateaux(opts.epsilon, opts.workers);
            ev.feasible = true;
            ++diag.evaluations;
        } catch (const DegenerateExtension&) {
            ++diag.degenerate_alphas;
        }
        cache[alpha] = ev;
        return ev;
    };

    double lo = opts.bracket_lo, hi = opts.bracket_hi;
    constexpr int kGrid = 17;
    double best_alpha = 0.0, best_abs = std::numeric_limits<double>::infinity();
    double a = 0.0, b = 0.0, fa = 0.0, fb = 0.0;
    bool found = false;
    while (true) {
        diag.bracket_lo = lo;
        diag.bracket_hi = hi;
        std::vector<std::pair<double, double>> pts;  // feasible (alpha, U)
        for (int i = 0; i < kGrid; ++i) {
            const double alpha = lo + (hi - lo) * i / (kGrid - 1);
            const AlphaEval ev = U(alpha);
            if (!ev.feasible) continue;
            pts.push_back({alpha, ev.value});
            if (std::abs(ev.value) < best_abs) {
                best_abs = std::abs(ev.value);
                best_alpha = alpha;
            }
        }
        diag.sign_changes.clear();
        double best_mid = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i].second == 0.0 || pts[i].second * pts[i + 1].second < 0.0) {
                diag.sign_changes.push_back({pts[i].first, pts[i + 1].first});
                const double mid = std::abs(0.5 * (pts[i].first + pts[i + 1].first));
                if (mid < best_mid) {  // the root interval nearest zero
                    best_mid = mid;
                    a = pts[i].first;
                    b = pts[i + 1].first;
                    fa = pts[i].second;
                    fb = pts[i + 1].second;
                    found = true;
                }
            }
        }
        if (found) break;
        if (std::abs(lo) >= opts.bracket_limit && std::abs(hi) >= opts.bracket_limit) break;
        lo = std::max(2.0 * lo, -opts.bracket_limit);
        hi = std::min(2.0 * hi, opts.bracket_limit);
        ++diag.expansions;
    }

    if (!found) {
        diag.no_root = true;
        diag.residual = best_abs;
        return {best_alpha, diag};
    }

    // Bisection with a secant step when it lands strictly inside the bracket.
    double root = std::abs(fa) < std::abs(fb) ? a : b;
    double froot = std::abs(fa) < std::abs(fb) ? fa : fb;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(froot) <= residual_tol || (b - a) <= opts.width_tol) break;
        ++diag.iterations;
        double cand = 0.5 * (a + b);
        if (fb != fa) {
            const double secant = a - fa * (b - a) / (fb - fa);
            const double margin = 0.01 * (b - a);
            if (secant > a + margin && secant < b - margin) cand = secant;
        }
        const AlphaEval ev = U(cand);
        if (!ev.feasible) {
            // Treat the infeasible side as keeping its sign; fall back to pure
            // bisection away from it.
            cand = 0.5 * (a + b);
            const AlphaEval ev2 = U(cand);
            if (!ev2.feasible) break;
            if (ev2.value == 0.0 || ev2.value * fa < 0.0) {
                b = cand;
                fb = ev2.value;
            } else {
                a = cand;
                fa = ev2.value;
            }
            if (std::abs(ev2.value) < std::abs(froot)) {
                froot = ev2.value;
                root = cand;
            }
            continue;
        }
        if (ev.value == 0.0 || ev.value * fa < 0.0) {
            b = cand;
            fb = ev.value;
        } else {
            a = cand;
            fa = ev.value;
        }
        if (std::abs(ev.value) < std::abs(froot)) {
            froot = ev.value;
            root = cand;
        }
    }
    diag.residual = std::abs(froot);
    // A bracket that collapsed onto a large residual is a discontinuity of the
    // estimating function (e.g. the clamp's pooled fallback switching on), not
    // a root. Flag it rather than return the jump location as a solution.
    if (diag.residual > n * 1e-3) {
        diag.no_root = true;
        for (const auto& [alpha, ev] : cache)
            if (ev.feasible && std::abs(ev.value) < diag.residual) {
                diag.residual = std::abs(ev.value);
                root = alpha;
            }
    }
    return {root, diag};
}

EstimationResult estimate(const Dataset& data, const EstimateOptions& opts) {
    auto staged = [](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (Error& e) {
            e.set_stage(stage);
            throw;
        }
    };

    if (!is_canonical(data)) throw InvariantViolation("dataset is not in canonical order");
    if (data.m == 0 || data.m == data.n)
        throw EmptyStratum("estimation needs observed dropouts and non-dropouts");
    if (data.m1 == 0) throw EmptyStratum("estimation needs at least one double-sampled dropout");

    EstimationResult res;
    res.variant = opts.variant;
    res.wrong_s = opts.wrong_s;
    res.alpha_zero = opts.alpha_zero;
    res.epsilon = opts.epsilon;
    res.t = opts.t;

    const DiscretizedSupport support =
        staged("build_support", [&] { return build_support(data); });
    res.support = support.diag;

    WorkingModelOptions wopts;
    wopts.variant = opts.variant;
    wopts.wrong_s = opts.wrong_s;
    wopts.include_w_in_r1 = opts.include_w_in_r1;
    const WorkingModelFit fit =
        staged("fit_working_models", [&] { return fit_working_models(data, support, wopts); });
    res.fallback_cells = fit.base.fallback_cells0 + fit.base.fallback_cells1;

    EngineContext ctx(data, support);
    {
        TauEvaluator base(ctx, fit, 0.0, opts.t, opts.functional);
        res.tau_alpha0 = base.tau();
    }
    if (opts.alpha_zero) {
        res.alpha_hat = 0.0;
    } else {
        auto [alpha, diag] = staged("solve_alpha", [&] { return solve_alpha(fit, ctx, opts); });
        res.alpha_hat = alpha;
        res.solver = diag;
    }
    TauEvaluator final_eval(ctx, fit, res.alpha_hat, opts.t, opts.functional);
    res.tau_hat = final_eval.tau();
    res.gateaux = final_eval.gateaux_all(opts.epsilon, opts.workers);
    double ss = 0.0;
    for (double gv : res.gateaux) ss += gv * gv;
    res.se = std::sqrt(ss) / static_cast<double>(data.n);
    res.assemble_sum_error = fit.assemble_sum_error;
    return res;
}

}  // namespace deduct
