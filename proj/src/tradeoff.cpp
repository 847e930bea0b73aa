#include "capstat/tradeoff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>

#include "capstat/errors.hpp"

namespace capstat {

namespace {

constexpr double kMinSaving = 0.10;   // "at least 10%" inclusive
constexpr double kMaxImpact = 0.10;   // "single digits", strictly below 10%

void validate_point(const TradeoffPoint& p) {
    auto in_range = [](double v) { return v > 0.0 && v <= 1.5; };
    if (!in_range(p.relative_speed) || !in_range(p.relative_energy)) {
        throw MalformedRun("workload '" + p.workload + "': relative speed/energy must lie in " +
                           "(0, 1.5], got " + std::to_string(p.relative_speed) + "/" +
                           std::to_string(p.relative_energy));
    }
    if (!p.cap_w && (p.relative_speed != 1.0 || p.relative_energy != 1.0)) {
        throw MalformedRun("workload '" + p.workload +
                           "': uncapped reference must have relative speed and energy 1.0");
    }
    if (p.cap_w && !(*p.cap_w > 0.0)) {
        throw MalformedRun("workload '" + p.workload + "': cap_w must be > 0");
    }
}

}  // namespace

CapVerdict classify(const TradeoffPoint& point) {
    validate_point(point);
    CapVerdict v;
    v.point = point;
    v.energy_saving = 1.0 - point.relative_energy;
    v.perf_impact = 1.0 - point.relative_speed;
    v.optimal = v.energy_saving >= kMinSaving && v.perf_impact < kMaxImpact;
    return v;
}

SweepReport sweep(const std::vector<TradeoffPoint>& points) {
    if (points.empty()) throw MissingBaseline("no tradeoff points given");
    const std::string& workload = points.front().workload;
    for (const auto& p : points) {
        if (p.workload != workload) {
            throw SpecError("sweep requires a single workload; got '" + workload + "' and '" +
                            p.workload + "'");
        }
    }
    // Every output length present must carry its own uncapped reference.
    std::map<std::optional<long>, bool> has_baseline;
    for (const auto& p : points) has_baseline[p.output_length] |= !p.cap_w;
    for (const auto& [len, ok] : has_baseline) {
        if (!ok) {
            throw MissingBaseline(
                "workload '" + workload + "'" +
                (len ? " output length " + std::to_string(*len) : std::string{}) +
                ": no uncapped reference point");
        }
    }

    SweepReport report;
    report.verdicts.reserve(points.size());
    for (const auto& p : points) report.verdicts.push_back(classify(p));
    auto rank_key = [](const CapVerdict& v) {
        double cap = v.point.cap_w.value_or(std::numeric_limits<double>::infinity());
        return std::make_tuple(!v.optimal, -v.energy_saving, -cap,
                               v.point.output_length.value_or(-1));
    };
    std::stable_sort(report.verdicts.begin(), report.verdicts.end(),
                     [&](const CapVerdict& a, const CapVerdict& b) {
                         return rank_key(a) < rank_key(b);
                     });
    for (const auto& v : report.verdicts) report.optimal_count += v.optimal ? 1 : 0;
    return report;
}

TradeoffPoint estimate_relative(const std::vector<RunMeasurement>& capped_runs,
                                const std::vector<RunMeasurement>& uncapped_runs,
                                std::string workload, WorkloadContext context,
                                std::optional<double> cap_w, std::optional<long> output_length) {
    if (capped_runs.empty() || uncapped_runs.empty()) {
        throw EmptyRuns("estimate_relative needs runs on both sides");
    }
    auto mean_of = [&](const std::vector<RunMeasurement>& runs, bool energy) {
        double sum = 0.0;
        for (const auto& r : runs) {
            double v = energy ? r.energy_j : r.runtime_s;
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw MalformedRun("run measurements must be positive finite");
            }
            sum += v;
        }
        return sum / static_cast<double>(runs.size());
    };
    TradeoffPoint p;
    p.workload = std::move(workload);
    p.context = context;
    p.cap_w = cap_w;
    p.output_length = output_length;
    p.relative_speed = mean_of(uncapped_runs, false) / mean_of(capped_runs, false);
    p.relative_energy = mean_of(capped_runs, true) / mean_of(uncapped_runs, true);
    validate_point(p);
    return p;
}

std::string context_name(WorkloadContext c) {
    return c == WorkloadContext::training ? "training" : "inference";
}

namespace {

WorkloadContext context_from_name(const std::string& name, std::size_t line_no) {
    if (name == "training") return WorkloadContext::training;
    if (name == "inference") return WorkloadContext::inference;
    throw RowError("line " + std::to_string(line_no) + ": context must be training|inference");
}

std::vector<std::string> split(const std::string& line) {
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

double parse_num(const std::string& text, std::size_t line_no, const char* col) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw RowError("line " + std::to_string(line_no) + ": column '" + col +
                       "' is not a number: '" + text + "'");
    }
    return v;
}

struct ParsedRow {
    std::string workload;
    WorkloadContext context;
    std::optional<double> cap_w;
    std::optional<long> output_length;
    double a = 0.0;
    double b = 0.0;
};

std::vector<ParsedRow> load_rows(const std::string& path, const char* col_a, const char* col_b) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expect =
        std::string("workload,context,cap_w,output_length,") + col_a + "," + col_b;
    std::string got = line;
    if (got != expect) {
        throw SchemaError("'" + path + "': header must be '" + expect + "'");
    }
    std::vector<ParsedRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != 6) {
            throw RowError("line " + std::to_string(line_no) + ": expected 6 columns, got " +
                           std::to_string(cells.size()));
        }
        ParsedRow row;
        row.workload = cells[0];
        if (row.workload.empty()) {
            throw RowError("line " + std::to_string(line_no) + ": empty workload");
        }
        row.context = context_from_name(cells[1], line_no);
        if (!cells[2].empty()) row.cap_w = parse_num(cells[2], line_no, "cap_w");
        if (!cells[3].empty()) {
            row.output_length = static_cast<long>(parse_num(cells[3], line_no, "output_length"));
        }
        row.a = parse_num(cells[4], line_no, col_a);
        row.b = parse_num(cells[5], line_no, col_b);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw EmptyDataset("'" + path + "' has no data rows");
    return rows;
}

}  // namespace

std::vector<TradeoffPoint> load_tradeoff_points(const std::string& path) {
    auto rows = load_rows(path, "relative_speed", "relative_energy");
    std::vector<TradeoffPoint> points;
    points.reserve(rows.size());
    for (const auto& row : rows) {
        TradeoffPoint p;
        p.workload = row.workload;
        p.context = row.context;
        p.cap_w = row.cap_w;
        p.output_length = row.output_length;
        p.relative_speed = row.a;
        p.relative_energy = row.b;
        validate_point(p);
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<TradeoffPoint> load_tradeoff_runs(const std::string& path) {
    auto rows = load_rows(path, "runtime_s", "energy_j");
    using GroupKey = std::tuple<std::string, int, long>;
    struct Group {
        std::map<double, std::vector<RunMeasurement>> capped;  // by cap level
        std::vector<RunMeasurement> uncapped;
        WorkloadContext context;
        std::optional<long> output_length;
        std::string workload;
    };
    std::map<GroupKey, Group> groups;
    for (const auto& row : rows) {
        GroupKey key{row.workload, static_cast<int>(row.context),
                     row.output_length.value_or(-1)};
        Group& g = groups[key];
        g.workload = row.workload;
        g.context = row.context;
        g.output_length = row.output_length;
        RunMeasurement m{row.a, row.b};
        if (row.cap_w) {
            g.capped[*row.cap_w].push_back(m);
        } else {
            g.uncapped.push_back(m);
        }
    }
    std::vector<TradeoffPoint> points;
    for (const auto& [key, g] : groups) {
        if (g.uncapped.empty()) {
            throw MissingBaseline("workload '" + g.workload + "': no uncapped runs");
        }
        TradeoffPoint ref;
        ref.workload = g.workload;
        ref.context = g.context;
        ref.output_length = g.output_length;
        points.push_back(ref);
        for (const auto& [cap, runs] : g.capped) {
            points.push_back(estimate_relative(runs, g.uncapped, g.workload, g.context, cap,
                                               g.output_length));
        }
    }
    return points;
}

}  // namespace capstat
