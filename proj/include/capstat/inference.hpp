#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capstat/exec.hpp"
#include "capstat/telemetry.hpp"

namespace capstat {

// Significance levels of the verdict grid: 1%, 0.1%, 0.01%.
inline constexpr std::array<double, 3> kAlphaLevels{0.01, 0.001, 0.0001};

// One-sided ("less") two-sample test result.
struct TestResult {
    double statistic = 0.0;
    std::optional<double> dof;  // Welch only
    double p_value = 1.0;
    std::array<bool, 3> significant_at{};  // p < kAlphaLevels[i]; monotone

    static std::array<bool, 3> verdicts(double p) {
        return {p < kAlphaLevels[0], p < kAlphaLevels[1], p < kAlphaLevels[2]};
    }
};

enum class AteMethod { ols, matching, matching_bias_adjusted };

struct AteEstimate {
    double estimate = 0.0;
    std::optional<double> std_error;  // absent for unbootstrapped matching
    std::optional<double> p_value;    // two-sided, normal approximation
    std::optional<std::pair<double, double>> ci95;
    AteMethod method = AteMethod::ols;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    std::string se_type;  // "hc1" | "classical" | "bootstrap" | ""
};

struct MatchingSpec {
    std::vector<Selector> covariates;  // non-empty, must exclude the outcome
    int k = 1;                         // neighbors per observation
    bool standardize = true;           // z-score by pooled mean/sd before distances
    bool with_replacement = true;
    bool bias_adjust = false;
    int bootstrap_replicates = 0;  // 0 = no bootstrap CI
    std::uint64_t bootstrap_seed = 0;

    static MatchingSpec defaults();  // runtime, utilization.mean, utilization.p50
};

// One-sided Welch's t-test of H1: mean(capped) < mean(uncapped).
// t = (m1-m0)/sqrt(s1^2/n1 + s0^2/n0), dof by Welch-Satterthwaite,
// p = P(T_dof <= t). Both groups zero-variance with equal means is
// DegenerateTest; with unequal means the statistic is +/-inf and p is 0 or 1
// (dof reported as n1+n0-2).
TestResult welch_t_test(std::span<const double> capped, std::span<const double> uncapped);

// One-sided Mann-Whitney U of H1: capped stochastically smaller. Midrank
// ties; exact p by enumeration over subsets when n1+n0 <= 20, otherwise
// normal approximation with tie correction and 0.5 continuity correction.
// A pooled sample with zero variance yields U = n1*n0/2 and p = 0.5.
TestResult mann_whitney_u(std::span<const double> capped, std::span<const double> uncapped);

// Exact tail P(U <= u_observed) for the given samples (used internally below
// the size cutoff; exposed for direct testing against enumeration).
double mann_whitney_exact_p(std::span<const double> capped, std::span<const double> uncapped);

enum class SeType { hc1, classical };

// ATE of the capped flag on the selected outcome via OLS with a lone binary
// regressor. Point estimate equals the difference of group means; standard
// errors are heteroskedasticity-robust (HC1) by default.
AteEstimate ols_ate(const std::vector<JobRecord>& records, const Selector& outcome,
                    SeType se_type = SeType::hc1);

// Nearest-neighbor matching ATE: every observation is matched to its k
// nearest opposite-group neighbors (Euclidean distance on standardized
// covariates, ties broken by lowest index after sorting by job_id), and the
// signed matched differences are averaged over all N observations.
// With spec.bias_adjust, each difference is corrected by the fitted
// within-group linear outcome model evaluated at the two covariate vectors.
AteEstimate matching_ate(const std::vector<JobRecord>& records, const Selector& outcome,
                         const MatchingSpec& spec, Exec exec = Exec::parallel);

// matching_ate with the bias adjustment forced on.
AteEstimate bias_adjusted_matching_ate(const std::vector<JobRecord>& records,
                                       const Selector& outcome, MatchingSpec spec,
                                       Exec exec = Exec::parallel);

// Records with mean utilization strictly above the threshold (percent).
Cohort filter_efficient(const std::vector<JobRecord>& records, double threshold_pct = 70.0);

namespace matching_detail {

// Index of the nearest opposite-group row for each row of the standardized
// covariate matrix (row-major, n_cols per row); `order` ranks rows for tie
// breaking. Returns k matches per row, nearest first.
std::vector<std::vector<std::size_t>> nearest_opposite(const std::vector<double>& x,
                                                       std::size_t n_cols,
                                                       const std::vector<char>& treated,
                                                       const std::vector<std::size_t>& order,
                                                       int k, Exec exec);

}  // namespace matching_detail

}  // namespace capstat
