#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace capstat {

// One polled reading. Timestamps are milliseconds since job start.
struct Sample {
    std::int64_t t_ms = 0;
    double util_pct = 0.0;  // [0, 100]
    double temp_c = 0.0;    // > -50 sanity bound
    double power_w = 0.0;   // > 0
};

// Samples of one GPU within one job, strictly increasing timestamps.
// A series produced by merge_gpu_series may carry equal timestamps from
// different GPUs (ordered by gpu_index); plain ingested series may not.
struct SampleSeries {
    std::string job_id;
    int gpu_index = 0;
    std::vector<Sample> samples;
};

// Summary statistics of one telemetry field over a job's time series.
// sd uses the n-1 denominator and is absent for n == 1. p10/p90 are absent
// only for records loaded from the summary-lite file profile. n == 0 marks a
// record whose sample count is unknown (loaded from disk).
struct StatSummary {
    double mean = 0.0;
    std::optional<double> sd;
    double min = 0.0;
    std::optional<double> p10;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    std::optional<double> p90;
    double max = 0.0;
    std::size_t n = 0;
};

struct JobRecord {
    std::string job_id;
    bool capped = false;  // treatment flag
    double runtime_min = 0.0;
    StatSummary utilization;
    StatSummary temperature;
    StatSummary power;
};

struct Cohort {
    std::vector<JobRecord> records;
    std::string label;
};

struct AggregateResult {
    StatSummary utilization;
    StatSummary temperature;
    StatSummary power;
    double runtime_min = 0.0;
};

inline constexpr double kDefaultPollIntervalMs = 100.0;

// Summary over the raw sample values of each field. Percentiles interpolate
// linearly between closest order statistics. Runtime is the timestamp span
// floored at one polling interval.
// Throws EmptySeries / MalformedSeries.
AggregateResult aggregate(const SampleSeries& series,
                          double poll_interval_ms = kDefaultPollIntervalMs);

// Pools all per-GPU series of one job into a single series sorted by
// timestamp (gpu_index breaks ties). Throws MixedJobs on differing job ids.
SampleSeries merge_gpu_series(const std::vector<SampleSeries>& series_list);

// StatSummary over a plain vector of values (n >= 1).
StatSummary summarize_values(std::vector<double> values);

// Type-7 percentile (linear interpolation) over an already-sorted vector.
double percentile_sorted(const std::vector<double>& sorted, double q);

// Field/statistic selectors used by inference, report, and the CLI.
enum class Field { runtime, utilization, temperature, power };
enum class Stat { mean, sd, min, p10, p25, p50, p75, p90, max };

struct Selector {
    Field field = Field::power;
    Stat stat = Stat::mean;

    bool operator==(const Selector&) const = default;
};

// Parses "power.mean", "temperature.p90", "runtime", "utilization.p50", ...
// Throws ConfigError on unknown names. A bare field name means its mean;
// "runtime" takes no statistic suffix.
Selector parse_selector(const std::string& text);
std::string selector_name(const Selector& sel);

// Value of the selected statistic; absent when the record does not carry it
// (lite p10/p90, or sd of an n==1 record).
std::optional<double> select_value(const JobRecord& rec, const Selector& sel);

// Validates the published invariants of one record (bounds and percentile
// ordering); returns a description of the first violation, or nullopt.
std::optional<std::string> validate_record(const JobRecord& rec);

}  // namespace capstat
