#pragma once
#include <cstddef>
#include <utility>
#include <vector>

#include "deduct/estimand.hpp"
#include "deduct/working_models.hpp"

namespace deduct {

struct SolverDiagnostics {
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int evaluations = 0;
    int iterations = 0;
    double residual = 0.0;
    int expansions = 0;
    int degenerate_alphas = 0;  // alpha values rejected by the extension
    bool no_root = false;
    std::vector<std::pair<double, double>> sign_changes;
};

struct EstimateOptions {
    Variant variant = Variant::Cox;
    double t = 0.7;
    double epsilon = 1e-4;
    bool wrong_s = false;
    bool alpha_zero = false;      // skip the solve and report tau at alpha = 0
    bool include_w_in_r1 = false;
    double bracket_lo = -5.0;
    double bracket_hi = 5.0;
    double bracket_limit = 50.0;  // geometric expansion stops here
    double residual_tol_per_n = 1e-6;
    double width_tol = 1e-8;
    int workers = 1;
    SurvFunctional functional = SurvFunctional::ProductLimit;
};

struct EstimationResult {
    double tau_hat = 0.0;
    double alpha_hat = 0.0;
    double se = 0.0;
    double tau_alpha0 = 0.0;  // the unextended working distribution's value
    std::vector<double> gateaux;  // per subject, at alpha_hat
    double epsilon = 0.0;
    double t = 0.0;
    Variant variant = Variant::Cox;
    bool wrong_s = false;
    bool alpha_zero = false;
    SolverDiagnostics solver;
    SupportDiagnostics support;
    double assemble_sum_error = 0.0;
    int fallback_cells = 0;
};

/// Subject-to-support bookkeeping shared by every alpha evaluation: the
/// merged (x, delta) atom list, per-z row groups, and each subject's
/// (stratum row, atom, z) address.
class EngineContext {
  public:
    EngineContext(const Dataset& data, const DiscretizedSupport& support);

    const Dataset& data;
    const DiscretizedSupport& support;

    std::vector<double> atom_x;
    std::vector<int> atom_delta;
    std::vector<std::size_t> grp_start;  // x-tie groups over the atom list
    std::vector<std::size_t> a0;         // stratum-0 pair -> atom
    std::vector<std::size_t> a1;         // stratum-1 pair -> atom

    std::size_t nz = 0;                      // merged unique z count
    std::vector<std::size_t> z_of_row0, z_of_row1;

    enum Kind { kR1, kS1, kS0 };
    struct Subject {
        Kind kind;
        std::size_t row;
        std::size_t atom;  // npos for kS0
        std::size_t z;
    };
    std::vector<Subject> subjects;

    std::size_t find_atom(double x, int delta) const;
};

/// The survival functional and its per-subject perturbation quotients at one
/// alpha, computed on cached per-z mixture tables. Perturbing a subject only
/// touches that subject's z cell, so one Gateaux value costs O(atoms).
class TauEvaluator {
  public:
    TauEvaluator(const EngineContext& ctx, const WorkingModelFit& fit, double alpha, double t,
                 SurvFunctional functional = SurvFunctional::ProductLimit);

    double tau() const { return tau_; }

    struct Scratch {
        std::vector<double> buf;
        std::vector<double> risk;
    };
    double gateaux_at(std::size_t subject, double epsilon, Scratch& scratch) const;
    std::vector<double> gateaux_all(double epsilon, int workers = 1) const;
    double sum_gateaux(double epsilon, int workers = 1) const;

  private:
    double surv(const double* num, std::vector<double>& risk) const;

    const EngineContext& ctx_;
    double t_;
    SurvFunctional functional_;
    std::size_t natoms_ = 0;
    // Joint masses (normalized to total 1 across both strata).
    std::vector<double> g0s1_;       // rows0 x pairs0
    std::vector<double> g0na_;       // rows0
    std::vector<double> row0_s1_;    // per-row s=1 mass
    std::vector<double> row0_all_;   // per-row total mass
    std::vector<double> g1_;         // rows1 x pairs1
    std::vector<double> num_;        // nz x natoms mixture numerators
    std::vector<double> pr_;         // nz
    std::vector<double> sv_;         // nz
    double tau_ = 0.0;
};

/// Single-subject Gateaux quotient of the survival functional at the working
/// distribution extended by alpha.
double gateaux(const WorkingModelFit& fit, const DiscretizedSupport& support, const Dataset& data,
               double alpha, const ObservedRecord& record, double epsilon, double t);

/// Sum of the per-subject quotients over the whole dataset (the estimating
/// function in alpha).
double sum_gateaux(const WorkingModelFit& fit, const DiscretizedSupport& support,
                   const Dataset& data, double alpha, double epsilon, double t);

std::pair<double, SolverDiagnostics> solve_alpha(const WorkingModelFit& fit,
                                                 const EngineContext& ctx,
                                                 const EstimateOptions& opts);

/// Full pipeline: canonicalize checks, support, working-model fits, alpha
/// solve (or alpha = 0), point estimate and influence-function standard error.
EstimationResult estimate(const Dataset& data, const EstimateOptions& opts);

}  // namespace deduct
