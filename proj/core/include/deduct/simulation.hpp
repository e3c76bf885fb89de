#pragma once
#include <cstdint>
#include <vector>

#include "deduct/record.hpp"

namespace deduct {

enum class Gm { GM1 = 1, GM2 = 2 };

struct GenerativeConfig {
    Gm model = Gm::GM1;
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // substream within the seed (one per replicate)
    double t_eval = 0.7;
};

/// Pre-masking draw of one subject, kept for descriptive statistics.
struct LatentDraw {
    double z = 0.0;
    int r = 1;          // true dropout status: 0 = would drop out
    double t = 0.0;     // survival time
    double c = 0.0;     // administrative censoring time
    double l = kNA;     // dropout time (NA when r=1 or masked by r_obs=1)
    int r_obs = 1;
    double p_select = kNA;  // true double-sampling probability (r_obs=0 only)
    int s = 0;
    double x = kNA;     // masked outcome
    int delta = kDeltaNA;
};

std::vector<LatentDraw> generate_latent(const GenerativeConfig& config);

/// Masked dataset in canonical order; z = (Z), w = (L).
Dataset generate(const GenerativeConfig& config);

/// Monte Carlo P(T > t) from unmasked survival draws.
double true_tau(Gm model, double t, std::size_t n_mc, std::uint64_t seed);

struct Table1Row {
    double tau = 0.0;
    double p_robs0 = 0.0;
    double p_s1_given_robs0 = 0.0;
    double sel_p10 = 0.0, sel_p90 = 0.0;  // deciles of the true selection probability
    double p_delta1 = 0.0;                // among observed outcomes
    double x_p10 = 0.0, x_p90 = 0.0;      // deciles of observed x
    double corr_tc_given_z_robs = 0.0;    // partial correlation, r_obs as regressor
    double corr_tc_given_zl_robs0 = 0.0;  // within the r_obs=0 subpopulation
};

Table1Row descriptive_stats(Gm model, std::size_t n_mc, std::uint64_t seed);

enum class EstimatorKind {
    DeCox,
    DeLn,
    DeCoxWrongS,
    DeLnWrongS,
    DeCoxAlpha0,
    DeLnAlpha0,
    KmS,
    KmC,
};

const char* estimator_name(EstimatorKind kind);

struct ReplicateSummary {
    EstimatorKind kind = EstimatorKind::DeCox;
    double bias_points = 0.0;  // (mean estimate - truth) * 100
    double cp_percent = 0.0;   // 95% interval coverage, in percent
    double sd_points = 0.0;    // sd of the estimates * 100
    int n_replicates = 0;
    int n_failures = 0;
};

struct ReplicateOptions {
    double t = 0.7;
    double epsilon = 1e-4;
    int n_boot = 1000;       // stratified-KM bootstrap replicates
    int workers = 1;         // parallel replicates
    double true_value = -1;  // < 0: estimate by Monte Carlo below
    std::size_t n_mc = 4000000;
    bool progress = false;   // one stderr line per replicate chunk
};

std::vector<ReplicateSummary> run_replicates(Gm model, std::size_t n,
                                             const std::vector<EstimatorKind>& estimators,
                                             int n_rep, std::uint64_t seed,
                                             const ReplicateOptions& opts = {});

/// Masks double-samples whose dropout recency c - L exceeds gamma: s becomes 0
/// and the outcome becomes NA. `l_col` indexes the dropout-time column within
/// w. Returns a re-canonicalized copy.
Dataset apply_gamma_restriction(const Dataset& data, double gamma, std::size_t l_col = 0);

}  // namespace deduct
