#pragma once

#include <cstdint>
#include <string>

#include "capstat/exec.hpp"
#include "capstat/telemetry.hpp"

namespace capstat {

// Baseline (between-job) distribution of one field.
//   lognormal:        location = log-median, scale = sigma of log
//   truncated_normal: location = mean, scale = sd; realized by clamping at
//                     +/-4 sd (and the physical floor of the field)
//   beta_mixture:     utilization only; location = target mean in percent,
//                     scale = weight in (0,1) of the near-zero component
struct BaselineDist {
    enum class Family { lognormal, truncated_normal, beta_mixture };
    Family family = Family::lognormal;
    double location = 0.0;
    double scale = 1.0;
};

// Ground-truth configuration of the synthetic world. Treated jobs' power and
// temperature levels are shifted by the configured ATEs and their within-job
// sd is multiplied by variance_shrink_under_cap. With selection_bias_strength
// != 0 the treatment probability follows a logistic link in the standardized
// utilization score, making utilization a confounder.
struct SynthConfig {
    std::size_t n_jobs = 1000;
    double cap_fraction = 0.1597;  // treated share under randomized assignment
    double true_ate_power_w = 0.0;
    double true_ate_temp_c = 0.0;
    double selection_bias_strength = 0.0;
    double variance_shrink_under_cap = 1.0;
    // Optional effect heterogeneity: per-job effect scale
    // 1 + ate_utilization_interaction * (util - mean util)/100, floored at 0.
    double ate_utilization_interaction = 0.0;
    std::uint64_t seed = 0;

    BaselineDist runtime;      // minutes
    BaselineDist utilization;  // percent
    BaselineDist power;        // Watts
    BaselineDist temperature;  // Celsius

    // Calibration with the marginal shapes of the production sample
    // (log-normal runtime/power, truncated-normal temperature, zero-inflated
    // utilization).
    static SynthConfig defaults();

    void validate() const;  // throws ConfigError
};

struct GroundTruth {
    double true_ate_power_w = 0.0;
    double true_ate_temp_c = 0.0;
    bool covariate_dependent_assignment = false;
};

struct SynthCohorts {
    Cohort treated;
    Cohort control;
    GroundTruth truth;
};

// Deterministic given (config, seed): job i draws from RNG substream i, so
// serial and parallel execution produce identical cohorts.
SynthCohorts generate_cohorts(const SynthConfig& config, Exec exec = Exec::parallel);

// Sample series whose aggregate converges to the template record's summary
// statistics as the series grows. Sample count comes from the template's
// runtime and the polling interval.
SampleSeries generate_raw_series(const SynthConfig& config, const JobRecord& tmpl,
                                 double poll_interval_ms = kDefaultPollIntervalMs);

// JSON (de)serialization; the same object format is accepted by the CLI.
SynthConfig parse_synth_config(const std::string& json_text);
std::string synth_config_to_json(const SynthConfig& config);

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth parse_ground_truth(const std::string& json_text);

}  // namespace capstat
