// capstat: synthesize, summarize, and analyze power-capped GPU job telemetry.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "capstat/errors.hpp"
#include "capstat/inference.hpp"
#include "capstat/ingest.hpp"
#include "capstat/report.hpp"
#include "capstat/synth.hpp"
#include "capstat/telemetry.hpp"
#include "capstat/tradeoff.hpp"

namespace {

using capstat::Cohort;
using capstat::JobRecord;
using capstat::Selector;
using nlohmann::json;

std::string fixed2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string sig6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty() || output_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw capstat::IoError("cannot open '" + output_path + "' for writing");
    out << text;
    if (!out) throw capstat::IoError("failed writing '" + output_path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw capstat::IoError("cannot open '" + path + "' for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

// ---------------------------------------------------------------- generate

struct GenerateOpts {
    std::string config_path;
    std::string output;
    std::string truth_path;
    std::string raw_series_path;
    std::size_t raw_jobs = 4;
    bool lite = false;
    std::string format = "table";
    // Flag overrides; only applied when the user passed them.
    std::optional<std::size_t> n_jobs;
    std::optional<double> cap_fraction, ate_power, ate_temp, bias, var_shrink, util_interaction;
    std::optional<std::uint64_t> seed;
};

int run_generate(const GenerateOpts& opt) {
    capstat::SynthConfig config = capstat::SynthConfig::defaults();
    if (!opt.config_path.empty()) config = capstat::parse_synth_config(read_file(opt.config_path));
    if (opt.n_jobs) config.n_jobs = *opt.n_jobs;
    if (opt.cap_fraction) config.cap_fraction = *opt.cap_fraction;
    if (opt.ate_power) config.true_ate_power_w = *opt.ate_power;
    if (opt.ate_temp) config.true_ate_temp_c = *opt.ate_temp;
    if (opt.bias) config.selection_bias_strength = *opt.bias;
    if (opt.var_shrink) config.variance_shrink_under_cap = *opt.var_shrink;
    if (opt.util_interaction) config.ate_utilization_interaction = *opt.util_interaction;
    if (opt.seed) config.seed = *opt.seed;

    capstat::SynthCohorts cohorts = capstat::generate_cohorts(config);
    capstat::DatasetManifest manifest =
        capstat::write_job_records(cohorts.treated, cohorts.control, opt.output, opt.lite);
    std::string truth_path =
        opt.truth_path.empty() ? capstat::truth_sidecar_path(opt.output) : opt.truth_path;
    capstat::write_ground_truth(cohorts.truth, truth_path);

    if (!opt.raw_series_path.empty()) {
        std::vector<capstat::SampleSeries> series;
        std::vector<const JobRecord*> firsts;
        for (const auto& rec : cohorts.control.records) firsts.push_back(&rec);
        for (const auto& rec : cohorts.treated.records) firsts.push_back(&rec);
        std::sort(firsts.begin(), firsts.end(),
                  [](auto* a, auto* b) { return a->job_id < b->job_id; });
        for (std::size_t i = 0; i < std::min(opt.raw_jobs, firsts.size()); ++i) {
            // Bound the series length so demo output stays small.
            JobRecord tmpl = *firsts[i];
            tmpl.runtime_min = std::min(tmpl.runtime_min, 1.0);
            series.push_back(capstat::generate_raw_series(config, tmpl));
        }
        capstat::write_sample_series(series, opt.raw_series_path);
    }

    if (opt.format == "json") {
        json j{{"command", "generate"},
               {"dataset", opt.output},
               {"truth_sidecar", truth_path},
               {"seed", config.seed},
               {"manifest",
                json{{"record_count", manifest.record_count},
                     {"capped_count", manifest.capped_count},
                     {"schema_version", manifest.schema_version},
                     {"source", manifest.source}}}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "wrote " << manifest.record_count << " job records ("
                  << manifest.capped_count << " capped) to " << opt.output << " ["
                  << manifest.schema_version << "]\n"
                  << "ground truth sidecar: " << truth_path << "\n";
        if (!opt.raw_series_path.empty()) {
            std::cout << "raw sample series: " << opt.raw_series_path << "\n";
        }
    }
    return 0;
}

// --------------------------------------------------------------- summarize

struct SummarizeOpts {
    std::string input;
    std::string format = "table";
    std::string output;
    std::string hist_csv;
    std::string spread_csv;
    std::vector<std::string> hist_fields;
    int bins = 50;
};

struct MetricColumn {
    const char* header;
    const char* key;
    Selector selector;
};

const MetricColumn kSummaryColumns[] = {
    {"Time (minutes)", "runtime_min", {capstat::Field::runtime, capstat::Stat::mean}},
    {"Util. (%)", "utilization_pct", {capstat::Field::utilization, capstat::Stat::mean}},
    {"Temp. (C)", "temperature_c", {capstat::Field::temperature, capstat::Stat::mean}},
    {"Power (W)", "power_w", {capstat::Field::power, capstat::Stat::mean}},
};

// Table-1-style statistic rows, in order.
struct StatRow {
    const char* label;
    const char* key;
};
const StatRow kStatRows[] = {
    {"mean", "mean"}, {"s.d.", "sd"},  {"min", "min"}, {"25%", "p25"},
    {"50%", "p50"},   {"75%", "p75"},  {"max", "max"},
};

std::optional<double> summary_stat(const capstat::StatSummary& s, const std::string& key) {
    if (key == "mean") return s.mean;
    if (key == "sd") return s.sd;
    if (key == "min") return s.min;
    if (key == "p25") return s.p25;
    if (key == "p50") return s.p50;
    if (key == "p75") return s.p75;
    return s.max;
}

capstat::StatSummary cohort_metric_summary(const std::vector<JobRecord>& records,
                                           const Selector& sel) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& rec : records) {
        auto v = capstat::select_value(rec, sel);
        if (!v) {
            throw capstat::SchemaError("record '" + rec.job_id + "' lacks " +
                                       capstat::selector_name(sel));
        }
        values.push_back(*v);
    }
    return capstat::summarize_values(std::move(values));
}

int run_summarize(const SummarizeOpts& opt) {
    capstat::LoadedDataset ds = capstat::load_job_records(opt.input);
    std::vector<std::pair<std::string, std::vector<JobRecord>>> cohorts;
    cohorts.emplace_back("overall", ds.all());
    cohorts.emplace_back("capped", ds.capped.records);
    cohorts.emplace_back("uncapped", ds.uncapped.records);

    std::ostringstream table;
    json j{{"command", "summarize"}, {"input", opt.input}, {"cohorts", json::array()}};
    std::ostringstream csv;
    csv << "cohort,metric,stat,value\n";

    for (const auto& [label, records] : cohorts) {
        if (records.empty()) continue;  // one-sided datasets still summarize
        std::vector<capstat::StatSummary> summaries;
        for (const auto& col : kSummaryColumns) {
            summaries.push_back(cohort_metric_summary(records, col.selector));
        }
        table << "cohort: " << label << " (n=" << records.size() << ")\n";
        table << "  Metric";
        for (const auto& col : kSummaryColumns) {
            table << "  " << col.header;
        }
        table << "\n";
        json jc{{"label", label}, {"n", records.size()}, {"metrics", json::object()}};
        for (const auto& row : kStatRows) {
            char label_buf[8];
            std::snprintf(label_buf, sizeof label_buf, "%-6s", row.label);
            table << "  " << label_buf;
            for (std::size_t c = 0; c < std::size(kSummaryColumns); ++c) {
                auto v = summary_stat(summaries[c], row.key);
                std::string cell = v ? fixed2(*v) : "n/a";
                int width = static_cast<int>(std::string(kSummaryColumns[c].header).size());
                table << "  ";
                for (int pad = width - static_cast<int>(cell.size()); pad > 0; --pad) {
                    table << ' ';
                }
                table << cell;
                csv << label << ',' << kSummaryColumns[c].key << ',' << row.key << ','
                    << (v ? capstat::format_double(*v) : "") << '\n';
            }
            table << "\n";
        }
        table << "\n";
        for (std::size_t c = 0; c < std::size(kSummaryColumns); ++c) {
            json jm;
            for (const auto& row : kStatRows) {
                auto v = summary_stat(summaries[c], row.key);
                jm[row.key] = v ? json(*v) : json(nullptr);
            }
            jc["metrics"][kSummaryColumns[c].key] = jm;
        }
        j["cohorts"].push_back(jc);
    }

    // Optional plot-ready distribution CSVs.
    if (!opt.hist_csv.empty()) {
        std::vector<std::string> fields = opt.hist_fields;
        if (fields.empty()) {
            fields = {"temperature.mean", "temperature.p10", "temperature.p50",
                      "temperature.p90", "power.mean",       "power.p10",
                      "power.p50",       "power.p90"};
        }
        std::vector<capstat::Histogram> hists;
        for (const auto& name : fields) {
            Selector sel = capstat::parse_selector(name);
            auto spec = capstat::shared_spec(ds.capped, ds.uncapped, sel, opt.bins);
            hists.push_back(capstat::histogram(ds.capped, spec));
            hists.push_back(capstat::histogram(ds.uncapped, spec));
        }
        emit(capstat::histogram_csv(hists), opt.hist_csv);
    }
    if (!opt.spread_csv.empty()) {
        auto temp_spec = capstat::shared_spec(ds.capped, ds.uncapped,
                                              {capstat::Field::temperature, capstat::Stat::sd},
                                              opt.bins);
        auto power_spec = capstat::shared_spec(ds.capped, ds.uncapped,
                                               {capstat::Field::power, capstat::Stat::sd},
                                               opt.bins);
        std::vector<capstat::Histogram> hists;
        std::ostringstream means;
        means << "cohort,mean_temp_sd,mean_power_sd\n";
        for (const Cohort* c : {&ds.capped, &ds.uncapped}) {
            auto s = capstat::spread_summary(*c, temp_spec, power_spec);
            hists.push_back(s.temp_sd_hist);
            hists.push_back(s.power_sd_hist);
            means << c->label << ',' << capstat::format_double(s.mean_temp_sd) << ','
                  << capstat::format_double(s.mean_power_sd) << '\n';
        }
        emit(means.str() + capstat::histogram_csv(hists), opt.spread_csv);
    }

    if (opt.format == "json") {
        emit(j.dump(2) + "\n", opt.output);
    } else if (opt.format == "csv") {
        emit(csv.str(), opt.output);
    } else {
        emit(table.str(), opt.output);
    }
    return 0;
}

// -------------------------------------------------------------------- test

struct TestOpts {
    std::string input;
    std::string format = "table";
    std::string output;
};

struct GridRow {
    const char* label;
    Selector selector;
};

const GridRow kGridRows[] = {
    {"GPU Power Draw (Mean)", {capstat::Field::power, capstat::Stat::mean}},
    {"GPU Power Draw (50th)", {capstat::Field::power, capstat::Stat::p50}},
    {"GPU Power Draw (90th)", {capstat::Field::power, capstat::Stat::p90}},
    {"GPU Temperature (Mean)", {capstat::Field::temperature, capstat::Stat::mean}},
    {"GPU Temperature (50th)", {capstat::Field::temperature, capstat::Stat::p50}},
    {"GPU Temperature (90th)", {capstat::Field::temperature, capstat::Stat::p90}},
};

std::vector<double> cohort_values(const std::vector<JobRecord>& records, const Selector& sel) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        auto v = capstat::select_value(rec, sel);
        if (!v) {
            throw capstat::SchemaError("dataset lacks column for " + capstat::selector_name(sel) +
                                       " (summary-lite profile); the test grid needs p10/p90");
        }
        out.push_back(*v);
    }
    return out;
}

int run_test(const TestOpts& opt) {
    capstat::LoadedDataset ds = capstat::load_job_records(opt.input);

    // Refuse summary-lite datasets up front, naming the missing columns.
    if (ds.manifest.schema_version == capstat::kSchemaLite) {
        throw capstat::SchemaError(
            "dataset is summary-lite (missing util_p10/util_p90/temp_p10/temp_p90/"
            "power_p10/power_p90); the test grid requires p50 and p90 outcomes");
    }

    std::ostringstream table;
    table << "One-sided tests of H1: capped < uncapped (n_capped="
          << ds.capped.records.size() << ", n_uncapped=" << ds.uncapped.records.size() << ")\n";
    table << "Variable                 Welch p       MWU p         a=1%  a=0.1%  a=0.01%\n";
    std::ostringstream csv;
    csv << "outcome,welch_statistic,welch_dof,welch_p,mwu_statistic,mwu_p,"
           "sig_1pct,sig_0p1pct,sig_0p01pct,mwu_sig_1pct,mwu_sig_0p1pct,mwu_sig_0p01pct\n";
    json j{{"command", "test"},
           {"input", opt.input},
           {"alpha_levels", capstat::kAlphaLevels},
           {"rows", json::array()}};

    for (const auto& row : kGridRows) {
        std::string name = capstat::selector_name(row.selector);
        json jr{{"outcome", name}, {"label", row.label}};
        std::string welch_cell = "n/a";
        std::string mwu_cell = "n/a";
        std::string marks = "   -      -       -";
        try {
            auto capped = cohort_values(ds.capped.records, row.selector);
            auto uncapped = cohort_values(ds.uncapped.records, row.selector);
            capstat::TestResult welch = capstat::welch_t_test(capped, uncapped);
            capstat::TestResult mwu = capstat::mann_whitney_u(capped, uncapped);
            jr["welch"] = json{{"statistic", welch.statistic},
                               {"dof", *welch.dof},
                               {"p_value", welch.p_value}};
            jr["mann_whitney"] =
                json{{"statistic", mwu.statistic}, {"p_value", mwu.p_value}};
            jr["significant"] = welch.significant_at;
            jr["mwu_significant"] = mwu.significant_at;
            welch_cell = sig6(welch.p_value);
            mwu_cell = sig6(mwu.p_value);
            char buf[32];
            std::snprintf(buf, sizeof buf, "   %s      %s       %s",
                          welch.significant_at[0] ? "*" : ".",
                          welch.significant_at[1] ? "*" : ".",
                          welch.significant_at[2] ? "*" : ".");
            marks = buf;
            csv << name << ',' << capstat::format_double(welch.statistic) << ','
                << capstat::format_double(*welch.dof) << ','
                << capstat::format_double(welch.p_value) << ','
                << capstat::format_double(mwu.statistic) << ','
                << capstat::format_double(mwu.p_value);
            for (bool b : welch.significant_at) csv << ',' << (b ? 1 : 0);
            for (bool b : mwu.significant_at) csv << ',' << (b ? 1 : 0);
            csv << '\n';
        } catch (const capstat::InsufficientData& e) {
            jr["error"] = e.what();
            csv << name << ",,,,,,,,,,,\n";
        }
        char lbuf[32];
        std::snprintf(lbuf, sizeof lbuf, "%-24s", row.label);
        char wbuf[16], mbuf[16];
        std::snprintf(wbuf, sizeof wbuf, "%-13s", welch_cell.c_str());
        std::snprintf(mbuf, sizeof mbuf, "%-13s", mwu_cell.c_str());
        table << lbuf << ' ' << wbuf << ' ' << mbuf << marks << "\n";
        j["rows"].push_back(jr);
    }
    table << "(*) significant for H1 at that level; grid follows the Welch test\n";

    if (opt.format == "json") {
        emit(j.dump(2) + "\n", opt.output);
    } else if (opt.format == "csv") {
        emit(csv.str(), opt.output);
    } else {
        emit(table.str(), opt.output);
    }
    return 0;
}

// --------------------------------------------------------------------- ate

struct AteOpts {
    std::string input;
    std::string format = "table";
    std::string output;
    std::string outcome = "power.mean";
    std::string method = "ols";
    std::string se = "hc1";
    std::string covariates;
    std::string truth_path;
    double efficient_threshold = -1.0;  // < 0 = no filter
    int bootstrap = 0;
    std::uint64_t bootstrap_seed = 0;
};

const char* method_name(capstat::AteMethod m) {
    switch (m) {
        case capstat::AteMethod::ols: return "ols";
        case capstat::AteMethod::matching: return "matching";
        case capstat::AteMethod::matching_bias_adjusted: return "matching_bias_adjusted";
    }
    return "ols";
}

int run_ate(const AteOpts& opt) {
    capstat::LoadedDataset ds = capstat::load_job_records(opt.input);
    Selector outcome = capstat::parse_selector(opt.outcome);

    std::vector<JobRecord> records = ds.all();
    if (opt.efficient_threshold >= 0.0) {
        records = capstat::filter_efficient(records, opt.efficient_threshold).records;
    }

    capstat::MatchingSpec spec = capstat::MatchingSpec::defaults();
    if (!opt.covariates.empty()) {
        spec.covariates.clear();
        std::stringstream ss(opt.covariates);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) spec.covariates.push_back(capstat::parse_selector(item));
        }
    }
    spec.bootstrap_replicates = opt.bootstrap;
    spec.bootstrap_seed = opt.bootstrap_seed;

    capstat::AteEstimate est;
    if (opt.method == "ols") {
        auto se_type = opt.se == "classical" ? capstat::SeType::classical : capstat::SeType::hc1;
        est = capstat::ols_ate(records, outcome, se_type);
    } else if (opt.method == "match") {
        est = capstat::matching_ate(records, outcome, spec);
    } else if (opt.method == "match-adj") {
        est = capstat::bias_adjusted_matching_ate(records, outcome, spec);
    } else {
        throw capstat::ConfigError("unknown method '" + opt.method + "' (ols|match|match-adj)");
    }

    // Ground-truth sidecar comparison, when one is available for the outcome.
    std::optional<double> truth_value;
    std::string truth_path = opt.truth_path;
    if (truth_path.empty() && file_exists(capstat::truth_sidecar_path(opt.input))) {
        truth_path = capstat::truth_sidecar_path(opt.input);
    }
    if (!truth_path.empty()) {
        capstat::GroundTruth truth = capstat::load_ground_truth(truth_path);
        if (outcome.field == capstat::Field::power) truth_value = truth.true_ate_power_w;
        if (outcome.field == capstat::Field::temperature) truth_value = truth.true_ate_temp_c;
    }

    json j{{"command", "ate"},
           {"input", opt.input},
           {"outcome", capstat::selector_name(outcome)},
           {"method", method_name(est.method)},
           {"estimate", est.estimate},
           {"n_treated", est.n_treated},
           {"n_control", est.n_control}};
    std::ostringstream table;
    table << "ATE of power capping on " << capstat::selector_name(outcome) << "\n";
    table << "  method:        " << method_name(est.method) << "\n";
    if (est.method != capstat::AteMethod::ols) {
        std::string covs;
        for (const auto& c : spec.covariates) {
            covs += (covs.empty() ? "" : ", ") + capstat::selector_name(c);
        }
        table << "  covariates:    " << covs << " (standardized Euclidean, k=" << spec.k
              << ")\n";
        json jc = json::array();
        for (const auto& c : spec.covariates) jc.push_back(capstat::selector_name(c));
        j["covariates"] = jc;
        j["k"] = spec.k;
    }
    if (opt.efficient_threshold >= 0.0) {
        table << "  cohort:        efficient (utilization.mean > "
              << sig6(opt.efficient_threshold) << "%)\n";
        j["efficient_threshold"] = opt.efficient_threshold;
    }
    table << "  estimate:      " << sig6(est.estimate) << "\n";
    if (est.std_error) {
        table << "  std. error:    " << sig6(*est.std_error) << " (" << est.se_type << ")\n";
        j["std_error"] = *est.std_error;
        j["se_type"] = est.se_type;
    }
    if (est.p_value) {
        table << "  p-value:       " << sig6(*est.p_value) << " (two-sided)\n";
        j["p_value"] = *est.p_value;
    }
    if (est.ci95) {
        table << "  95% CI:        [" << sig6(est.ci95->first) << ", " << sig6(est.ci95->second)
              << "]\n";
        j["ci95"] = json::array({est.ci95->first, est.ci95->second});
    }
    table << "  group sizes:   " << est.n_treated << " treated, " << est.n_control
          << " control\n";
    if (truth_value) {
        table << "  true ATE:      " << sig6(*truth_value)
              << " (error: " << sig6(est.estimate - *truth_value) << ")\n";
        j["truth"] = json{{"value", *truth_value}, {"error", est.estimate - *truth_value}};
    }

    std::ostringstream csv;
    csv << "outcome,method,estimate,std_error,se_type,p_value,ci95_lo,ci95_hi,n_treated,"
           "n_control,truth,truth_error\n";
    csv << capstat::selector_name(outcome) << ',' << method_name(est.method) << ','
        << capstat::format_double(est.estimate) << ','
        << (est.std_error ? capstat::format_double(*est.std_error) : "") << ','
        << est.se_type << ','
        << (est.p_value ? capstat::format_double(*est.p_value) : "") << ','
        << (est.ci95 ? capstat::format_double(est.ci95->first) : "") << ','
        << (est.ci95 ? capstat::format_double(est.ci95->second) : "") << ','
        << est.n_treated << ',' << est.n_control << ','
        << (truth_value ? capstat::format_double(*truth_value) : "") << ','
        << (truth_value ? capstat::format_double(est.estimate - *truth_value) : "") << '\n';

    if (opt.format == "json") {
        emit(j.dump(2) + "\n", opt.output);
    } else if (opt.format == "csv") {
        emit(csv.str(), opt.output);
    } else {
        emit(table.str(), opt.output);
    }
    return 0;
}

// ---------------------------------------------------------------- tradeoff

struct TradeoffOpts {
    std::string input;
    std::string runs;
    std::string format = "table";
    std::string output;
};

int run_tradeoff(const TradeoffOpts& opt) {
    std::vector<capstat::TradeoffPoint> points;
    std::string source;
    if (!opt.input.empty()) {
        points = capstat::load_tradeoff_points(opt.input);
        source = opt.input;
    } else {
        points = capstat::load_tradeoff_runs(opt.runs);
        source = opt.runs;
    }

    // Sweep per workload, in name order.
    std::map<std::string, std::vector<capstat::TradeoffPoint>> by_workload;
    for (auto& p : points) by_workload[p.workload].push_back(p);

    json j{{"command", "tradeoff"}, {"input", source}, {"workloads", json::array()}};
    std::ostringstream table;
    std::ostringstream csv;
    csv << "workload,context,output_length,cap_w,relative_speed,relative_energy,"
           "energy_saving,perf_impact,optimal\n";

    for (auto& [workload, wl_points] : by_workload) {
        capstat::SweepReport report = capstat::sweep(wl_points);
        table << "workload: " << workload << " (" << report.optimal_count << " optimal of "
              << report.verdicts.size() << ")\n";
        table << "  cap_w     out_len   rel_speed  rel_energy  saving   impact   optimal\n";
        json jw{{"workload", workload},
                {"optimal_count", report.optimal_count},
                {"verdicts", json::array()}};
        for (const auto& v : report.verdicts) {
            std::string cap = v.point.cap_w ? sig6(*v.point.cap_w) : "uncapped";
            std::string len = v.point.output_length ? std::to_string(*v.point.output_length) : "-";
            char line[160];
            std::snprintf(line, sizeof line,
                          "  %-9s %-9s %-10s %-11s %-8s %-8s %s\n", cap.c_str(), len.c_str(),
                          sig6(v.point.relative_speed).c_str(),
                          sig6(v.point.relative_energy).c_str(), sig6(v.energy_saving).c_str(),
                          sig6(v.perf_impact).c_str(), v.optimal ? "yes" : "no");
            table << line;
            csv << workload << ',' << capstat::context_name(v.point.context) << ','
                << (v.point.output_length ? std::to_string(*v.point.output_length) : "") << ','
                << (v.point.cap_w ? capstat::format_double(*v.point.cap_w) : "") << ','
                << capstat::format_double(v.point.relative_speed) << ','
                << capstat::format_double(v.point.relative_energy) << ','
                << capstat::format_double(v.energy_saving) << ','
                << capstat::format_double(v.perf_impact) << ','
                << (v.optimal ? 1 : 0) << '\n';
            json jv{{"context", capstat::context_name(v.point.context)},
                    {"relative_speed", v.point.relative_speed},
                    {"relative_energy", v.point.relative_energy},
                    {"energy_saving", v.energy_saving},
                    {"perf_impact", v.perf_impact},
                    {"optimal", v.optimal}};
            jv["cap_w"] = v.point.cap_w ? json(*v.point.cap_w) : json(nullptr);
            jv["output_length"] =
                v.point.output_length ? json(*v.point.output_length) : json(nullptr);
            jw["verdicts"].push_back(jv);
        }
        j["workloads"].push_back(jw);
    }

    if (opt.format == "json") {
        emit(j.dump(2) + "\n", opt.output);
    } else if (opt.format == "csv") {
        emit(csv.str(), opt.output);
    } else {
        emit(table.str(), opt.output);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"power-cap telemetry analysis toolkit"};
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* cmd_gen = app.add_subcommand("generate", "synthesize a job-record dataset");
    cmd_gen->add_option("--config", gen.config_path, "synth config JSON");
    cmd_gen->add_option("--output", gen.output, "dataset CSV path")->required();
    cmd_gen->add_option("--truth", gen.truth_path, "ground-truth sidecar path");
    cmd_gen->add_option("--raw-series", gen.raw_series_path, "also write raw sample series CSV");
    cmd_gen->add_option("--raw-jobs", gen.raw_jobs, "number of jobs in the raw series file");
    cmd_gen->add_flag("--lite", gen.lite, "write the summary-lite profile");
    cmd_gen->add_option("--format", gen.format, "table|json")->check(CLI::IsMember({"table", "json"}));
    std::size_t n_jobs_flag = 0;
    double cap_fraction_flag = 0, ate_power_flag = 0, ate_temp_flag = 0, bias_flag = 0,
           shrink_flag = 0, interaction_flag = 0;
    std::uint64_t seed_flag = 0;
    auto* o_n = cmd_gen->add_option("--n-jobs", n_jobs_flag, "number of jobs (>= 4)");
    auto* o_cf = cmd_gen->add_option("--cap-fraction", cap_fraction_flag, "treated share in (0,1)");
    auto* o_ap = cmd_gen->add_option("--ate-power", ate_power_flag, "true power ATE (W)");
    auto* o_at = cmd_gen->add_option("--ate-temp", ate_temp_flag, "true temperature ATE (C)");
    auto* o_b = cmd_gen->add_option("--bias", bias_flag, "selection bias strength");
    auto* o_vs = cmd_gen->add_option("--var-shrink", shrink_flag, "within-job sd factor under cap");
    auto* o_ui =
        cmd_gen->add_option("--util-interaction", interaction_flag, "effect-utilization scaling");
    auto* o_seed = cmd_gen->add_option("--seed", seed_flag, "RNG seed")->envname("CAPSTAT_SEED");

    SummarizeOpts summ;
    auto* cmd_summ = app.add_subcommand("summarize", "Table-1-style summary of a dataset");
    cmd_summ->add_option("--input", summ.input, "dataset CSV")->required();
    cmd_summ->add_option("--format", summ.format, "table|csv|json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd_summ->add_option("--output", summ.output, "report path (default stdout)");
    cmd_summ->add_option("--hist-csv", summ.hist_csv, "write distribution histograms CSV");
    cmd_summ->add_option("--hist-field", summ.hist_fields, "histogram field selector(s)");
    cmd_summ->add_option("--spread-csv", summ.spread_csv, "write within-job sd spread CSV");
    cmd_summ->add_option("--bins", summ.bins, "histogram bin count");

    TestOpts test;
    auto* cmd_test = app.add_subcommand("test", "Welch + Mann-Whitney significance grid");
    cmd_test->add_option("--input", test.input, "dataset CSV")->required();
    cmd_test->add_option("--format", test.format, "table|csv|json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd_test->add_option("--output", test.output, "report path (default stdout)");

    AteOpts ate;
    auto* cmd_ate = app.add_subcommand("ate", "average treatment effect estimation");
    cmd_ate->add_option("--input", ate.input, "dataset CSV")->required();
    cmd_ate->add_option("--outcome", ate.outcome, "outcome selector (default power.mean)");
    cmd_ate->add_option("--method", ate.method, "ols|match|match-adj")
        ->check(CLI::IsMember({"ols", "match", "match-adj"}));
    cmd_ate->add_option("--se", ate.se, "hc1|classical (OLS only)")
        ->check(CLI::IsMember({"hc1", "classical"}));
    cmd_ate->add_option("--covariates", ate.covariates, "comma-separated matching covariates");
    cmd_ate->add_option("--efficient-threshold", ate.efficient_threshold,
                        "restrict to utilization.mean > threshold");
    cmd_ate->add_option("--bootstrap", ate.bootstrap, "bootstrap replicates for matching CI");
    cmd_ate->add_option("--bootstrap-seed", ate.bootstrap_seed, "bootstrap RNG seed")
        ->envname("CAPSTAT_SEED");
    cmd_ate->add_option("--truth", ate.truth_path, "ground-truth sidecar (default: autodetect)");
    cmd_ate->add_option("--format", ate.format, "table|csv|json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd_ate->add_option("--output", ate.output, "report path (default stdout)");

    TradeoffOpts tr;
    auto* cmd_tr = app.add_subcommand("tradeoff", "classify power caps by energy/performance");
    auto* tr_in = cmd_tr->add_option("--input", tr.input, "relative points CSV");
    auto* tr_runs = cmd_tr->add_option("--runs", tr.runs, "raw runs CSV");
    tr_in->excludes(tr_runs);
    cmd_tr->add_option("--format", tr.format, "table|csv|json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd_tr->add_option("--output", tr.output, "report path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) {
            if (*o_n) gen.n_jobs = n_jobs_flag;
            if (*o_cf) gen.cap_fraction = cap_fraction_flag;
            if (*o_ap) gen.ate_power = ate_power_flag;
            if (*o_at) gen.ate_temp = ate_temp_flag;
            if (*o_b) gen.bias = bias_flag;
            if (*o_vs) gen.var_shrink = shrink_flag;
            if (*o_ui) gen.util_interaction = interaction_flag;
            if (*o_seed) gen.seed = seed_flag;
            return run_generate(gen);
        }
        if (cmd_summ->parsed()) return run_summarize(summ);
        if (cmd_test->parsed()) return run_test(test);
        if (cmd_ate->parsed()) return run_ate(ate);
        if (cmd_tr->parsed()) {
            if (tr.input.empty() && tr.runs.empty()) {
                throw capstat::ConfigError("tradeoff needs --input or --runs");
            }
            return run_tradeoff(tr);
        }
    } catch (const capstat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
