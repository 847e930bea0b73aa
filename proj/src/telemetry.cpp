#include "capstat/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "capstat/errors.hpp"

namespace capstat {

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw EmptySeries("percentile of empty vector");
    if (sorted.size() == 1) return sorted.front();
    double h = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(h);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

StatSummary summarize_values(std::vector<double> values) {
    if (values.empty()) throw EmptySeries("no values to summarize");
    StatSummary s;
    s.n = values.size();
    double sum = std::accumulate(values.begin(), values.end(), 0.0);
    s.mean = sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values) {
            double d = v - s.mean;
            ss += d * d;
        }
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.p10 = percentile_sorted(values, 0.10);
    s.p25 = percentile_sorted(values, 0.25);
    s.p50 = percentile_sorted(values, 0.50);
    s.p75 = percentile_sorted(values, 0.75);
    s.p90 = percentile_sorted(values, 0.90);
    return s;
}

AggregateResult aggregate(const SampleSeries& series, double poll_interval_ms) {
    if (series.samples.empty()) throw EmptySeries("series " + series.job_id + " has no samples");
    for (std::size_t i = 1; i < series.samples.size(); ++i) {
        if (series.samples[i].t_ms < series.samples[i - 1].t_ms) {
            throw MalformedSeries("series " + series.job_id + ": timestamps not monotone at index " +
                                  std::to_string(i));
        }
    }
    std::vector<double> util, temp, power;
    util.reserve(series.samples.size());
    temp.reserve(series.samples.size());
    power.reserve(series.samples.size());
    for (const Sample& smp : series.samples) {
        util.push_back(smp.util_pct);
        temp.push_back(smp.temp_c);
        power.push_back(smp.power_w);
    }
    AggregateResult out;
    out.utilization = summarize_values(std::move(util));
    out.temperature = summarize_values(std::move(temp));
    out.power = summarize_values(std::move(power));
    double span_ms = static_cast<double>(series.samples.back().t_ms - series.samples.front().t_ms);
    out.runtime_min = std::max(span_ms, poll_interval_ms) / 60000.0;
    return out;
}

SampleSeries merge_gpu_series(const std::vector<SampleSeries>& series_list) {
    if (series_list.empty()) throw EmptySeries("no series to merge");
    const std::string& job = series_list.front().job_id;
    for (const auto& s : series_list) {
        if (s.job_id != job) {
            throw MixedJobs("cannot merge series of jobs '" + job + "' and '" + s.job_id + "'");
        }
    }
    if (series_list.size() == 1) return series_list.front();

    // Pool (sample, gpu_index) pairs so ties sort by gpu_index.
    std::vector<std::pair<Sample, int>> pooled;
    for (const auto& s : series_list) {
        for (const Sample& smp : s.samples) pooled.emplace_back(smp, s.gpu_index);
    }
    std::stable_sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) {
        if (a.first.t_ms != b.first.t_ms) return a.first.t_ms < b.first.t_ms;
        return a.second < b.second;
    });
    SampleSeries merged;
    merged.job_id = job;
    merged.gpu_index = series_list.front().gpu_index;
    merged.samples.reserve(pooled.size());
    for (auto& [smp, gpu] : pooled) merged.samples.push_back(smp);
    return merged;
}

Selector parse_selector(const std::string& text) {
    auto dot = text.find('.');
    std::string field_name = text.substr(0, dot);
    Selector sel;
    if (field_name == "runtime") {
        sel.field = Field::runtime;
    } else if (field_name == "utilization" || field_name == "util") {
        sel.field = Field::utilization;
    } else if (field_name == "temperature" || field_name == "temp") {
        sel.field = Field::temperature;
    } else if (field_name == "power") {
        sel.field = Field::power;
    } else {
        throw ConfigError("unknown field '" + field_name + "' in selector '" + text + "'");
    }
    if (dot == std::string::npos) {
        sel.stat = Stat::mean;
        return sel;
    }
    if (sel.field == Field::runtime) {
        throw ConfigError("runtime takes no statistic suffix: '" + text + "'");
    }
    std::string stat_name = text.substr(dot + 1);
    static const std::pair<const char*, Stat> table[] = {
        {"mean", Stat::mean}, {"sd", Stat::sd},   {"min", Stat::min},
        {"p10", Stat::p10},   {"p25", Stat::p25}, {"p50", Stat::p50},
        {"p75", Stat::p75},   {"p90", Stat::p90}, {"max", Stat::max},
    };
    for (auto& [name, stat] : table) {
        if (stat_name == name) {
            sel.stat = stat;
            return sel;
        }
    }
    throw ConfigError("unknown statistic '" + stat_name + "' in selector '" + text + "'");
}

std::string selector_name(const Selector& sel) {
    static const char* fields[] = {"runtime", "utilization", "temperature", "power"};
    static const char* stats[] = {"mean", "sd", "min", "p10", "p25", "p50", "p75", "p90", "max"};
    if (sel.field == Field::runtime) return "runtime";
    return std::string(fields[static_cast<int>(sel.field)]) + "." +
           stats[static_cast<int>(sel.stat)];
}

namespace {
const StatSummary& field_summary(const JobRecord& rec, Field f) {
    switch (f) {
        case Field::utilization: return rec.utilization;
        case Field::temperature: return rec.temperature;
        default: return rec.power;
    }
}
}  // namespace

std::optional<double> select_value(const JobRecord& rec, const Selector& sel) {
    if (sel.field == Field::runtime) return rec.runtime_min;
    const StatSummary& s = field_summary(rec, sel.field);
    switch (sel.stat) {
        case Stat::mean: return s.mean;
        case Stat::sd: return s.sd;
        case Stat::min: return s.min;
        case Stat::p10: return s.p10;
        case Stat::p25: return s.p25;
        case Stat::p50: return s.p50;
        case Stat::p75: return s.p75;
        case Stat::p90: return s.p90;
        case Stat::max: return s.max;
    }
    return std::nullopt;
}

namespace {

std::optional<std::string> check_summary(const StatSummary& s, const std::string& name,
                                         double lo_bound, double hi_bound) {
    std::ostringstream err;
    auto fail = [&](const std::string& what) -> std::optional<std::string> {
        err << name << ": " << what;
        return err.str();
    };
    // percentile chain, with optional links skipped when absent
    double prev = s.min;
    const char* prev_name = "min";
    auto step = [&](std::optional<double> v, const char* nm) -> std::optional<std::string> {
        if (!v) return std::nullopt;
        if (*v < prev) return fail(std::string(nm) + " < " + prev_name);
        prev = *v;
        prev_name = nm;
        return std::nullopt;
    };
    if (auto e = step(s.p10, "p10")) return e;
    if (auto e = step(s.p25, "p25")) return e;
    if (auto e = step(s.p50, "p50")) return e;
    if (auto e = step(s.p75, "p75")) return e;
    if (auto e = step(s.p90, "p90")) return e;
    if (auto e = step(s.max, "max")) return e;
    if (s.mean < s.min || s.mean > s.max) return fail("mean outside [min, max]");
    if (s.sd && *s.sd < 0) return fail("sd < 0");
    if (s.min < lo_bound) return fail("min below bound " + std::to_string(lo_bound));
    if (s.max > hi_bound) return fail("max above bound " + std::to_string(hi_bound));
    return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_record(const JobRecord& rec) {
    if (!(rec.runtime_min > 0)) return "runtime_min must be > 0";
    constexpr double inf = 1e300;
    if (auto e = check_summary(rec.utilization, "utilization", 0.0, 100.0)) return e;
    if (auto e = check_summary(rec.temperature, "temperature", -50.0, inf)) return e;
    if (auto e = check_summary(rec.power, "power", 0.0, inf)) return e;
    if (!(rec.power.min > 0)) return "power: min must be > 0";
    return std::nullopt;
}

}  // namespace capstat
