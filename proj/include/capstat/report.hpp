#pragma once

#include <string>
#include <vector>

#include "capstat/telemetry.hpp"

namespace capstat {

// Histogram request over one record statistic. Counts carry open-ended edge
// bins: counts[0] holds values below edges.front(), counts.back() values at
// or above edges.back(), so totals always conserve the cohort size.
struct HistogramSpec {
    Selector field{Field::temperature, Stat::p90};
    std::vector<double> edges;  // >= 2, strictly increasing
    enum class Scale { linear, log_count } scale = Scale::linear;

    static HistogramSpec equal_width(Selector field, double lo, double hi, int n_bins,
                                     Scale scale = Scale::linear);
};

struct Histogram {
    HistogramSpec spec;
    std::string cohort_label;
    std::vector<std::size_t> counts;  // size = edges.size() - 1 + 2
    std::size_t total = 0;
};

// Throws SpecError on a malformed spec, SchemaError when records lack the
// selected statistic.
Histogram histogram(const Cohort& cohort, const HistogramSpec& spec);

// 50 equal-width bins spanning the pooled min-max of both cohorts, so their
// histograms share edges and can be overlaid.
HistogramSpec shared_spec(const Cohort& a, const Cohort& b, Selector field, int n_bins = 50,
                          HistogramSpec::Scale scale = HistogramSpec::Scale::linear);

// Distribution of within-job sd for temperature and power across a cohort.
struct SpreadSummary {
    std::string cohort_label;
    double mean_temp_sd = 0.0;
    double mean_power_sd = 0.0;
    Histogram temp_sd_hist;
    Histogram power_sd_hist;
};

// Throws SchemaError when any record lacks a within-job sd.
SpreadSummary spread_summary(const Cohort& cohort, const HistogramSpec& temp_spec,
                             const HistogramSpec& power_spec);
SpreadSummary spread_summary(const Cohort& cohort, int n_bins = 50);

// Plot-ready CSV rows: field,cohort,bin_left,bin_right,count. Edge bins use
// -inf/inf bounds.
std::string histogram_csv(const std::vector<Histogram>& histograms);

}  // namespace capstat
