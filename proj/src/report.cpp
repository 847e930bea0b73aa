#include "capstat/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "capstat/errors.hpp"
#include "capstat/ingest.hpp"

namespace capstat {

HistogramSpec HistogramSpec::equal_width(Selector field, double lo, double hi, int n_bins,
                                         Scale scale) {
    if (!(n_bins >= 1) || !(hi > lo)) {
        throw SpecError("equal_width needs n_bins >= 1 and hi > lo");
    }
    HistogramSpec spec;
    spec.field = field;
    spec.scale = scale;
    spec.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i) {
        spec.edges[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
    }
    spec.edges.back() = hi;
    return spec;
}

namespace {

void validate_spec(const HistogramSpec& spec) {
    if (spec.edges.size() < 2) throw SpecError("histogram needs at least 2 bin edges");
    for (std::size_t i = 1; i < spec.edges.size(); ++i) {
        if (!(spec.edges[i] > spec.edges[i - 1])) {
            throw SpecError("bin edges must be strictly increasing");
        }
    }
}

double record_stat(const JobRecord& rec, const Selector& sel) {
    auto v = select_value(rec, sel);
    if (!v) {
        throw SchemaError("record '" + rec.job_id + "' lacks " + selector_name(sel));
    }
    return *v;
}

}  // namespace

Histogram histogram(const Cohort& cohort, const HistogramSpec& spec) {
    validate_spec(spec);
    Histogram h;
    h.spec = spec;
    h.cohort_label = cohort.label;
    h.counts.assign(spec.edges.size() + 1, 0);
    for (const JobRecord& rec : cohort.records) {
        double v = record_stat(rec, spec.field);
        // Interior bins are [left, right) except the last, which is closed so
        // the pooled maximum stays inside; bucket 0 / back() are the
        // open-ended under/overflow bins.
        std::size_t idx;
        if (v == spec.edges.back()) {
            idx = spec.edges.size() - 1;
        } else {
            auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), v);
            idx = static_cast<std::size_t>(it - spec.edges.begin());
        }
        h.counts[idx] += 1;
    }
    h.total = cohort.records.size();
    return h;
}

HistogramSpec shared_spec(const Cohort& a, const Cohort& b, Selector field, int n_bins,
                          HistogramSpec::Scale scale) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Cohort* c : {&a, &b}) {
        for (const JobRecord& rec : c->records) {
            double v = record_stat(rec, field);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo < hi)) {
        // Degenerate pooled range; widen so a single-valued field still bins.
        hi = lo + 1.0;
    }
    return HistogramSpec::equal_width(field, lo, hi, n_bins, scale);
}

SpreadSummary spread_summary(const Cohort& cohort, const HistogramSpec& temp_spec,
                             const HistogramSpec& power_spec) {
    SpreadSummary s;
    s.cohort_label = cohort.label;
    if (cohort.records.empty()) throw EmptyDataset("spread_summary of empty cohort");
    double temp_sum = 0.0;
    double power_sum = 0.0;
    for (const JobRecord& rec : cohort.records) {
        if (!rec.temperature.sd || !rec.power.sd) {
            throw SchemaError("record '" + rec.job_id +
                              "' lacks within-job sd; spread summaries need sd columns");
        }
        temp_sum += *rec.temperature.sd;
        power_sum += *rec.power.sd;
    }
    auto n = static_cast<double>(cohort.records.size());
    s.mean_temp_sd = temp_sum / n;
    s.mean_power_sd = power_sum / n;
    s.temp_sd_hist = histogram(cohort, temp_spec);
    s.power_sd_hist = histogram(cohort, power_spec);
    return s;
}

SpreadSummary spread_summary(const Cohort& cohort, int n_bins) {
    HistogramSpec temp_spec =
        shared_spec(cohort, Cohort{}, {Field::temperature, Stat::sd}, n_bins);
    HistogramSpec power_spec = shared_spec(cohort, Cohort{}, {Field::power, Stat::sd}, n_bins);
    return spread_summary(cohort, temp_spec, power_spec);
}

std::string histogram_csv(const std::vector<Histogram>& histograms) {
    std::ostringstream os;
    os << "field,cohort,bin_left,bin_right,count\n";
    for (const Histogram& h : histograms) {
        const auto& e = h.spec.edges;
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            std::string left = b == 0 ? "-inf" : format_double(e[b - 1]);
            std::string right = b == h.counts.size() - 1 ? "inf" : format_double(e[b]);
            os << selector_name(h.spec.field) << ',' << h.cohort_label << ',' << left << ','
               << right << ',' << h.counts[b] << '\n';
        }
    }
    return os.str();
}

}  // namespace capstat
