#pragma once

#include <string>
#include <vector>

#include "capstat/synth.hpp"
#include "capstat/telemetry.hpp"

namespace capstat {

struct DatasetManifest {
    std::size_t record_count = 0;
    std::size_t capped_count = 0;
    std::string schema_version;  // "jobrec-1-full" | "jobrec-1-lite"
    std::string source;
};

struct LoadedDataset {
    Cohort capped;
    Cohort uncapped;
    DatasetManifest manifest;

    std::vector<JobRecord> all() const;
};

inline constexpr char kSchemaFull[] = "jobrec-1-full";
inline constexpr char kSchemaLite[] = "jobrec-1-lite";

// Job-record CSV: header mandatory, UTF-8, LF, '.' decimals, ',' delimiter.
// Full profile columns: job_id,capped,runtime_min, then for each of
// {util,temp,power}: mean,sd,min,p10,p25,p50,p75,p90,max, then
// util_n,temp_n,power_n. Summary-lite drops p10/p90 and the sample counts.
// Floats are written in shortest round-trip form, so load(write(x)) == x.
// Malformed rows raise RowError with 1-based line numbers; nothing is
// silently dropped or defaulted.
LoadedDataset load_job_records(const std::string& path);
DatasetManifest write_job_records(const Cohort& capped, const Cohort& uncapped,
                                  const std::string& path, bool lite = false);

// Raw-sample CSV: job_id,gpu_index,t_ms,util_pct,temp_c,power_w. Rows may
// interleave GPUs; one series per (job_id, gpu_index), timestamps strictly
// increasing within a series. Result sorted by (job_id, gpu_index).
std::vector<SampleSeries> load_sample_series(const std::string& path);
void write_sample_series(const std::vector<SampleSeries>& series, const std::string& path);

// Ground-truth sidecar (JSON) written next to generated datasets.
void write_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

// Canonical sidecar path for a dataset: "<path>.truth.json".
std::string truth_sidecar_path(const std::string& dataset_path);

// Shortest round-trip decimal rendering used by all CSV writers.
std::string format_double(double v);

}  // namespace capstat
