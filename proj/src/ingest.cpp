#include "capstat/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "capstat/errors.hpp"

namespace capstat {

std::vector<JobRecord> LoadedDataset::all() const {
    std::vector<JobRecord> out;
    out.reserve(capped.records.size() + uncapped.records.size());
    out.insert(out.end(), capped.records.begin(), capped.records.end());
    out.insert(out.end(), uncapped.records.begin(), uncapped.records.end());
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

const char* kFields[] = {"util", "temp", "power"};
const char* kFullStats[] = {"mean", "sd", "min", "p10", "p25", "p50", "p75", "p90", "max"};
const char* kLiteStats[] = {"mean", "sd", "min", "p25", "p50", "p75", "max"};

std::vector<std::string> full_columns() {
    std::vector<std::string> cols{"job_id", "capped", "runtime_min"};
    for (const char* f : kFields) {
        for (const char* s : kFullStats) cols.push_back(std::string(f) + "_" + s);
    }
    for (const char* f : kFields) cols.push_back(std::string(f) + "_n");
    return cols;
}

std::vector<std::string> lite_columns() {
    std::vector<std::string> cols{"job_id", "capped", "runtime_min"};
    for (const char* f : kFields) {
        for (const char* s : kLiteStats) cols.push_back(std::string(f) + "_" + s);
    }
    return cols;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_double_field(const std::string& text, std::size_t line_no, const std::string& col) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw RowError("line " + std::to_string(line_no) + ": column '" + col +
                       "' is not a number: '" + text + "'");
    }
    return v;
}

std::size_t parse_count_field(const std::string& text, std::size_t line_no,
                              const std::string& col) {
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw RowError("line " + std::to_string(line_no) + ": column '" + col +
                       "' is not a count: '" + text + "'");
    }
    return v;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

class ErrorCollector {
public:
    void add(const std::string& msg) {
        if (messages_.size() < kMax) messages_.push_back(msg);
        ++count_;
    }
    void throw_if_any() const {
        if (count_ == 0) return;
        std::ostringstream os;
        os << count_ << " malformed row" << (count_ > 1 ? "s" : "") << ":";
        for (const auto& m : messages_) os << "\n  " << m;
        if (count_ > messages_.size()) os << "\n  ...";
        throw RowError(os.str());
    }

private:
    static constexpr std::size_t kMax = 10;
    std::vector<std::string> messages_;
    std::size_t count_ = 0;
};

}  // namespace

LoadedDataset load_job_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string header_line;
    if (!std::getline(in, header_line)) throw EmptyDataset("'" + path + "' is empty");
    header_line = strip_cr(header_line);
    auto header = split_csv_line(header_line);

    bool lite;
    if (header == full_columns()) {
        lite = false;
    } else if (header == lite_columns()) {
        lite = true;
    } else {
        // Name what is missing relative to the nearest profile.
        std::set<std::string> have(header.begin(), header.end());
        std::ostringstream os;
        os << "'" << path << "': header matches neither the full nor the summary-lite profile;";
        os << " missing vs full:";
        for (const auto& c : full_columns()) {
            if (!have.count(c)) os << " " << c;
        }
        throw SchemaError(os.str());
    }

    LoadedDataset ds;
    ds.capped.label = "capped";
    ds.uncapped.label = "uncapped";
    ds.manifest.schema_version = lite ? kSchemaLite : kSchemaFull;
    ds.manifest.source = path;

    ErrorCollector errors;
    std::set<std::string> seen_capped, seen_uncapped;
    std::string line;
    std::size_t line_no = 1;
    std::size_t n_cols = lite ? lite_columns().size() : full_columns().size();
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        try {
            if (cells.size() != n_cols) {
                throw RowError("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(n_cols) + " columns, got " +
                               std::to_string(cells.size()));
            }
            JobRecord rec;
            std::size_t c = 0;
            rec.job_id = cells[c++];
            if (rec.job_id.empty()) {
                throw RowError("line " + std::to_string(line_no) + ": empty job_id");
            }
            const std::string& cap = cells[c++];
            if (cap == "1") {
                rec.capped = true;
            } else if (cap == "0") {
                rec.capped = false;
            } else {
                throw RowError("line " + std::to_string(line_no) +
                               ": column 'capped' must be 0 or 1, got '" + cap + "'");
            }
            rec.runtime_min = parse_double_field(cells[c++], line_no, "runtime_min");

            StatSummary* summaries[3] = {&rec.utilization, &rec.temperature, &rec.power};
            for (int f = 0; f < 3; ++f) {
                StatSummary& s = *summaries[f];
                auto col = [&](const char* stat) { return std::string(kFields[f]) + "_" + stat; };
                auto num = [&](const char* stat) {
                    return parse_double_field(cells[c++], line_no, col(stat));
                };
                s.mean = num("mean");
                // sd may be blank (n = 1 records)
                if (cells[c].empty()) {
                    ++c;
                } else {
                    s.sd = parse_double_field(cells[c++], line_no, col("sd"));
                }
                s.min = num("min");
                if (!lite) s.p10 = num("p10");
                s.p25 = num("p25");
                s.p50 = num("p50");
                s.p75 = num("p75");
                if (!lite) s.p90 = num("p90");
                s.max = num("max");
            }
            if (!lite) {
                rec.utilization.n = parse_count_field(cells[c++], line_no, "util_n");
                rec.temperature.n = parse_count_field(cells[c++], line_no, "temp_n");
                rec.power.n = parse_count_field(cells[c++], line_no, "power_n");
            }
            if (auto violation = validate_record(rec)) {
                throw RowError("line " + std::to_string(line_no) + ": " + *violation);
            }
            auto& seen = rec.capped ? seen_capped : seen_uncapped;
            if (!seen.insert(rec.job_id).second) {
                throw RowError("line " + std::to_string(line_no) + ": duplicate job_id '" +
                               rec.job_id + "' within cohort");
            }
            (rec.capped ? ds.capped : ds.uncapped).records.push_back(std::move(rec));
        } catch (const RowError& e) {
            errors.add(e.what());
        }
    }
    errors.throw_if_any();

    ds.manifest.capped_count = ds.capped.records.size();
    ds.manifest.record_count = ds.capped.records.size() + ds.uncapped.records.size();
    if (ds.manifest.record_count == 0) throw EmptyDataset("'" + path + "' has no data rows");
    return ds;
}

namespace {

void append_summary(std::ostringstream& os, const StatSummary& s, bool lite) {
    auto cell = [&](double v) { os << ',' << format_double(v); };
    cell(s.mean);
    os << ',';
    if (s.sd) os << format_double(*s.sd);
    cell(s.min);
    if (!lite) {
        os << ',';
        if (s.p10) os << format_double(*s.p10);
    }
    cell(s.p25);
    cell(s.p50);
    cell(s.p75);
    if (!lite) {
        os << ',';
        if (s.p90) os << format_double(*s.p90);
    }
    cell(s.max);
}

}  // namespace

DatasetManifest write_job_records(const Cohort& capped, const Cohort& uncapped,
                                  const std::string& path, bool lite) {
    std::vector<const JobRecord*> rows;
    rows.reserve(capped.records.size() + uncapped.records.size());
    for (const auto& r : capped.records) rows.push_back(&r);
    for (const auto& r : uncapped.records) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const JobRecord* a, const JobRecord* b) { return a->job_id < b->job_id; });

    for (const JobRecord* r : rows) {
        if (r->job_id.find(',') != std::string::npos ||
            r->job_id.find('\n') != std::string::npos) {
            throw RowError("job_id '" + r->job_id + "' contains a delimiter");
        }
        if (!lite && (!r->utilization.p10 || !r->utilization.p90 || !r->temperature.p10 ||
                      !r->temperature.p90 || !r->power.p10 || !r->power.p90)) {
            throw SchemaError("record '" + r->job_id +
                              "' lacks p10/p90; write with lite=true or fill the percentiles");
        }
        if (auto violation = validate_record(*r)) {
            throw RowError("record '" + r->job_id + "': " + *violation);
        }
    }

    std::ostringstream os;
    auto cols = lite ? lite_columns() : full_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const JobRecord* r : rows) {
        os << r->job_id << ',' << (r->capped ? '1' : '0') << ',' << format_double(r->runtime_min);
        append_summary(os, r->utilization, lite);
        append_summary(os, r->temperature, lite);
        append_summary(os, r->power, lite);
        if (!lite) {
            os << ',' << r->utilization.n << ',' << r->temperature.n << ',' << r->power.n;
        }
        os << '\n';
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << os.str();
    if (!out) throw IoError("failed writing '" + path + "'");

    DatasetManifest m;
    m.record_count = rows.size();
    m.capped_count = capped.records.size();
    m.schema_version = lite ? kSchemaLite : kSchemaFull;
    m.source = path;
    return m;
}

std::vector<SampleSeries> load_sample_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string header_line;
    if (!std::getline(in, header_line)) throw EmptyDataset("'" + path + "' is empty");
    const std::vector<std::string> expect{"job_id", "gpu_index", "t_ms",
                                          "util_pct", "temp_c", "power_w"};
    if (split_csv_line(strip_cr(header_line)) != expect) {
        throw SchemaError("'" + path +
                          "' header must be job_id,gpu_index,t_ms,util_pct,temp_c,power_w");
    }

    std::map<std::pair<std::string, int>, SampleSeries> by_key;
    ErrorCollector errors;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        try {
            if (cells.size() != 6) {
                throw RowError("line " + std::to_string(line_no) + ": expected 6 columns, got " +
                               std::to_string(cells.size()));
            }
            std::string job = cells[0];
            if (job.empty()) throw RowError("line " + std::to_string(line_no) + ": empty job_id");
            auto gpu = static_cast<int>(parse_count_field(cells[1], line_no, "gpu_index"));
            Sample s;
            s.t_ms = static_cast<std::int64_t>(parse_double_field(cells[2], line_no, "t_ms"));
            s.util_pct = parse_double_field(cells[3], line_no, "util_pct");
            s.temp_c = parse_double_field(cells[4], line_no, "temp_c");
            s.power_w = parse_double_field(cells[5], line_no, "power_w");
            if (s.util_pct < 0.0 || s.util_pct > 100.0) {
                throw RowError("line " + std::to_string(line_no) +
                               ": util_pct outside [0,100]: " + cells[3]);
            }
            if (!(s.power_w > 0.0)) {
                throw RowError("line " + std::to_string(line_no) + ": power_w must be > 0");
            }
            if (!(s.temp_c > -50.0)) {
                throw RowError("line " + std::to_string(line_no) + ": temp_c must be > -50");
            }
            SampleSeries& series = by_key[{job, gpu}];
            if (series.samples.empty()) {
                series.job_id = job;
                series.gpu_index = gpu;
            } else if (s.t_ms <= series.samples.back().t_ms) {
                throw MalformedSeries("line " + std::to_string(line_no) + ": job '" + job +
                                      "' gpu " + std::to_string(gpu) +
                                      ": timestamps must be strictly increasing");
            }
            series.samples.push_back(s);
        } catch (const MalformedSeries&) {
            throw;  // structural, not a per-row recoverable problem
        } catch (const RowError& e) {
            errors.add(e.what());
        }
    }
    errors.throw_if_any();
    if (by_key.empty()) throw EmptyDataset("'" + path + "' has no data rows");

    std::vector<SampleSeries> out;
    out.reserve(by_key.size());
    for (auto& [key, series] : by_key) out.push_back(std::move(series));
    return out;
}

void write_sample_series(const std::vector<SampleSeries>& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "job_id,gpu_index,t_ms,util_pct,temp_c,power_w\n";
    for (const auto& s : series) {
        for (const Sample& smp : s.samples) {
            out << s.job_id << ',' << s.gpu_index << ',' << smp.t_ms << ','
                << format_double(smp.util_pct) << ',' << format_double(smp.temp_c) << ','
                << format_double(smp.power_w) << '\n';
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << ground_truth_to_json(truth);
    if (!out) throw IoError("failed writing '" + path + "'");
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ground_truth(ss.str());
}

std::string truth_sidecar_path(const std::string& dataset_path) {
    return dataset_path + ".truth.json";
}

}  // namespace capstat
