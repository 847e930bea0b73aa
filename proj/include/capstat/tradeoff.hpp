#pragma once

#include <optional>
#include <string>
#include <vector>

namespace capstat {

enum class WorkloadContext { training, inference };

// One cap level's measured speed and energy relative to the uncapped
// baseline of the same workload (and output length, for generation tasks).
struct TradeoffPoint {
    std::optional<double> cap_w;  // absent = uncapped reference
    double relative_speed = 1.0;  // (0, 1.5]
    double relative_energy = 1.0; // (0, 1.5]
    std::string workload;
    WorkloadContext context = WorkloadContext::training;
    std::optional<long> output_length;
};

struct CapVerdict {
    TradeoffPoint point;
    double energy_saving = 0.0;  // 1 - relative_energy
    double perf_impact = 0.0;    // 1 - relative_speed
    bool optimal = false;        // saving >= 0.10 and impact < 0.10 (strict)
};

// Throws MalformedRun when the point violates its invariants.
CapVerdict classify(const TradeoffPoint& point);

struct SweepReport {
    std::vector<CapVerdict> verdicts;   // ranked: optimal first by saving desc
    std::size_t optimal_count = 0;
};

// Verdicts for one workload's points. Requires the uncapped reference for
// every output length present (MissingBaseline otherwise). Optimal points are
// ranked by energy_saving descending, ties by cap descending, then output
// length ascending; non-optimal points follow under the same key.
SweepReport sweep(const std::vector<TradeoffPoint>& points);

struct RunMeasurement {
    double runtime_s = 0.0;
    double energy_j = 0.0;
};

// Relative speed = mean uncapped runtime / mean capped runtime (speed is
// inverse runtime); relative energy = mean capped / mean uncapped energy.
TradeoffPoint estimate_relative(const std::vector<RunMeasurement>& capped_runs,
                                const std::vector<RunMeasurement>& uncapped_runs,
                                std::string workload = {},
                                WorkloadContext context = WorkloadContext::training,
                                std::optional<double> cap_w = std::nullopt,
                                std::optional<long> output_length = std::nullopt);

// Points CSV: workload,context,cap_w,output_length,relative_speed,relative_energy
// (empty cap_w = uncapped; empty output_length = none).
std::vector<TradeoffPoint> load_tradeoff_points(const std::string& path);

// Raw-runs CSV: workload,context,cap_w,output_length,runtime_s,energy_j; rows
// are grouped by (workload, context, output_length) and reduced against the
// group's uncapped rows via estimate_relative.
std::vector<TradeoffPoint> load_tradeoff_runs(const std::string& path);

std::string context_name(WorkloadContext c);

}  // namespace capstat
