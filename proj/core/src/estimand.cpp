#include "deduct/estimand.hpp"

#include <algorithm>
#include <cmath>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

ComponentSet components_from_distribution(const DiscreteDistribution& g) {
    const DiscretizedSupport& sup = *g.support;
    ComponentSet comp;
    comp.support = &sup;

    // Stratum shares.
    double mass1 = 0.0;
    for (std::size_t j = 0; j < sup.zw1.size(); ++j)
        for (std::size_t k = 0; k < sup.sxd1.size(); ++k)
            mass1 += g.probs[sup.flat_index({1, j, k})];
    comp.p_robs1 = mass1;
    comp.p_robs0 = 1.0 - mass1;

    // Unique z per stratum-1 cell (zw1 is sorted by z, so grouping is a scan).
    std::vector<std::size_t> z1_of_cell(sup.zw1.size());
    for (std::size_t j = 0; j < sup.zw1.size(); ++j) {
        if (j == 0 || !na_equal(sup.zw1[j].z, sup.zw1[j - 1].z))
            comp.z1_values.push_back(sup.zw1[j].z);
        z1_of_cell[j] = comp.z1_values.size() - 1;
    }
    const std::size_t nz1 = comp.z1_values.size();
    const std::size_t np1 = sup.sxd1.size();
    comp.p_z1.assign(nz1, 0.0);
    comp.xdelta_given_z1.assign(nz1 * np1, 0.0);
    for (std::size_t j = 0; j < sup.zw1.size(); ++j) {
        const std::size_t zi = z1_of_cell[j];
        for (std::size_t k = 0; k < np1; ++k) {
            const double p = g.probs[sup.flat_index({1, j, k})];
            comp.p_z1[zi] += p;
            comp.xdelta_given_z1[zi * np1 + k] += p;
        }
    }
    for (std::size_t zi = 0; zi < nz1; ++zi) {
        const double den = comp.p_z1[zi];
        for (std::size_t k = 0; k < np1; ++k)
            comp.xdelta_given_z1[zi * np1 + k] = safe_div(comp.xdelta_given_z1[zi * np1 + k], den);
        comp.p_z1[zi] = safe_div(comp.p_z1[zi], mass1);
    }

    // Stratum 0: cell masses and conditional-on-(s=1) outcome tables.
    const std::size_t np0 = sup.pairs0.size();
    comp.p_zw0.assign(sup.zw0.size(), 0.0);
    comp.xdelta_given_zw0.assign(sup.zw0.size() * np0, 0.0);
    const double mass0 = 1.0 - mass1;
    for (std::size_t j = 0; j < sup.zw0.size(); ++j) {
        double cell = 0.0, cell_s1 = 0.0;
        for (std::size_t k = 0; k < sup.sxd0.size(); ++k)
            cell += g.probs[sup.flat_index({0, j, k})];
        for (std::size_t k = 0; k < np0; ++k) {
            const double p = g.probs[sup.flat_index({0, j, sup.pairs0[k]})];
            comp.xdelta_given_zw0[j * np0 + k] = p;
            cell_s1 += p;
        }
        for (std::size_t k = 0; k < np0; ++k)
            comp.xdelta_given_zw0[j * np0 + k] =
                safe_div(comp.xdelta_given_zw0[j * np0 + k], cell_s1);
        comp.p_zw0[j] = safe_div(cell, mass0);
    }

    // Merged unique z list (both strata), NA-aware sorted.
    std::vector<std::vector<double>> all_z;
    for (const auto& key : sup.zw0) all_z.push_back(key.z);
    for (const auto& z : comp.z1_values) all_z.push_back(z);
    std::sort(all_z.begin(), all_z.end(),
              [](const auto& a, const auto& b) { return na_less(a, b); });
    all_z.erase(std::unique(all_z.begin(), all_z.end(),
                            [](const auto& a, const auto& b) { return na_equal(a, b); }),
                all_z.end());
    comp.z_values = std::move(all_z);
    auto z_index = [&](const std::vector<double>& z) {
        auto it = std::lower_bound(comp.z_values.begin(), comp.z_values.end(), z,
                                   [](const auto& a, const auto& b) { return na_less(a, b); });
        return static_cast<std::size_t>(it - comp.z_values.begin());
    };
    for (const auto& key : sup.zw0) comp.z_of_zw0.push_back(z_index(key.z));
    for (const auto& z : comp.z1_values) comp.z_of_z1.push_back(z_index(z));
    return comp;
}

std::vector<OutcomeAtom> marginal_xdelta_given_z(const ComponentSet& comp, std::size_t z_index,
                                                 double* pr_z) {
    const DiscretizedSupport& sup = *comp.support;
    const std::size_t np0 = sup.pairs0.size();
    const std::size_t np1 = sup.sxd1.size();
    std::vector<OutcomeAtom> atoms;
    atoms.reserve(np0 + np1);
    double prz = 0.0;
    for (std::size_t zi = 0; zi < comp.z_of_z1.size(); ++zi) {
        if (comp.z_of_z1[zi] != z_index) continue;
        const double weight = comp.p_robs1 * comp.p_z1[zi];
        prz += weight;
        for (std::size_t k = 0; k < np1; ++k)
            atoms.push_back({sup.sxd1[k].x, sup.sxd1[k].delta,
                             weight * comp.xdelta_given_z1[zi * np1 + k]});
    }
    for (std::size_t j = 0; j < comp.z_of_zw0.size(); ++j) {
        if (comp.z_of_zw0[j] != z_index) continue;
        const double weight = comp.p_robs0 * comp.p_zw0[j];
        prz += weight;
        for (std::size_t k = 0; k < np0; ++k) {
            const auto& key = sup.sxd0[sup.pairs0[k]];
            atoms.push_back({key.x, key.delta, weight * comp.xdelta_given_zw0[j * np0 + k]});
        }
    }
    if (pr_z) *pr_z = prz;
    double total = 0.0;
    for (const auto& a : atoms) total += a.mass;
    if (total > 0.0)
        for (auto& a : atoms) a.mass /= total;
    return atoms;
}

double survt_product_limit(std::vector<OutcomeAtom> atoms, double t, SurvFunctional functional) {
    std::sort(atoms.begin(), atoms.end(), [](const OutcomeAtom& a, const OutcomeAtom& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.delta > b.delta;
    });
    // Group by tied x, then take the at-risk mass as an exact suffix sum of
    // positive terms; a running subtraction cancels catastrophically when the
    // table carries a long decaying tail.
    const std::size_t n = atoms.size();
    std::vector<double> grp_x, grp_events, grp_mass;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double events = 0.0, group = 0.0;
        while (j < n && atoms[j].x == atoms[i].x) {
            group += atoms[j].mass;
            if (atoms[j].delta == 1) events += atoms[j].mass;
            ++j;
        }
        grp_x.push_back(atoms[i].x);
        grp_events.push_back(events);
        grp_mass.push_back(group);
        i = j;
    }
    std::vector<double> at_risk(grp_x.size() + 1, 0.0);
    for (std::size_t g = grp_x.size(); g-- > 0;) at_risk[g] = at_risk[g + 1] + grp_mass[g];
    double surv = 1.0;
    double log_na = 0.0;
    for (std::size_t g = 0; g < grp_x.size(); ++g) {
        if (grp_x[g] > t) break;
        if (at_risk[g] <= 0.0) break;  // carry the last defined value
        if (grp_events[g] > 0.0) {
            if (functional == SurvFunctional::ProductLimit)
                surv *= std::max(0.0, 1.0 - grp_events[g] / at_risk[g]);
            else
                log_na -= grp_events[g] / at_risk[g];
        }
    }
    return functional == SurvFunctional::ProductLimit ? surv : std::exp(log_na);
}

double tau_of_distribution(const DiscreteDistribution& g, double t, SurvFunctional functional) {
    const ComponentSet comp = components_from_distribution(g);
    double tau = 0.0;
    for (std::size_t zi = 0; zi < comp.z_values.size(); ++zi) {
        double prz = 0.0;
        auto atoms = marginal_xdelta_given_z(comp, zi, &prz);
        if (prz <= 0.0) continue;  // zero-marginal z values are skipped
        tau += prz * survt_product_limit(std::move(atoms), t, functional);
    }
    return tau;
}

}  // namespace deduct
