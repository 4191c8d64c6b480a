#pragma once

// Slot loop, the two sweep drivers and the on-disk result layout.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mecnc/controller.hpp"
#include "mecnc/metrics.hpp"
#include "mecnc/model.hpp"
#include "mecnc/oracle.hpp"
#include "mecnc/queues.hpp"
#include "mecnc/stochastic.hpp"

namespace mecnc {

// An invariant broke inside the slot loop; the message names the slot.
class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ControllerKind { mecnc, oracle, local };

ControllerKind parse_controller(const std::string& name);
const char* to_string(ControllerKind kind);

struct RunConfig {
    Instance instance;
    double V = 0.0;
    // At most one of these overrides the instance's arrival rates.
    std::optional<double> rate;           // packets/slot per UE per service
    std::optional<double> aggregate_mbps; // network total, split equally
    std::size_t horizon = 100000;
    double warmup_fraction = 0.1;
    std::uint64_t seed = 1;
    ControllerKind controller = ControllerKind::mecnc;
    DiscretizeOptions oracle;
    double oracle_margin = 0.02;
    std::filesystem::path out; // empty: nothing is written
    bool trace = false;
    std::size_t timeseries_every = 1;
};

// Throws ConfigError for horizon < 1000, warm-up outside [0, 0.5), bad V or
// conflicting rate overrides.
void validate(const RunConfig& config);

// The instance a run actually simulates, rate overrides applied.
Instance resolved_instance(const RunConfig& config);

// Reads the instance and an optional "run" section with the RunConfig
// defaults (V, slots, seed, warmup, rate, aggregate_mbps, controller,
// power_levels).
RunConfig load_run_config(const nlohmann::json& config);

// Fully explicit instance plus the run section; loadable by
// load_run_config.
nlohmann::json snapshot(const RunConfig& config);

std::unique_ptr<Controller> make_controller(const RunConfig& config, const Instance& instance);

struct SlotView {
    Slot slot;
    const QueueState& queues; // after execution
    const ChannelState& channel;
    const Decision& decision;
    const SlotOutcome& outcome;
    const SlotRecord& record;
};

using SlotObserver = std::function<void(const SlotView&)>;

struct RunResult {
    std::string controller;
    double V = 0.0;
    double rate = 0.0; // per UE per service, packets/slot (mean over pairs)
    std::uint64_t seed = 0;
    RunMetrics metrics;
    StabilityVerdict stability;
    std::vector<SlotRecord> series;
};

RunResult run(const RunConfig& config, const SlotObserver& observer = {});

// Run directory contents.
void write_run(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir);
nlohmann::json summary_json(const RunResult& result);
RunResult summary_from_json(const nlohmann::json& j);

enum class SweepVariable { lambda, V };

struct SweepSpec {
    SweepVariable variable = SweepVariable::lambda;
    std::vector<double> grid;
    std::vector<std::uint64_t> seeds{1};
};

// Throws ConfigError unless the grid is strictly increasing and nonempty
// and at least one seed is given.
void validate(const SweepSpec& spec);

struct SweepPoint {
    double value = 0.0;
    std::vector<RunResult> runs; // per seed, series dropped
    std::size_t stable_votes = 0;
    bool stable = true; // strict majority of replicates
    double mean_cost = 0.0;
    double cost_se = 0.0;
    SlotCost breakdown;
    double age_delay_ms = 0.0;    // infinity when unstable
    double little_delay_ms = 0.0; // infinity when unstable
    double mean_backlog = 0.0;
    std::vector<OffloadRatio> offload; // pooled over replicates
};

struct SweepReport {
    SweepSpec spec;
    std::vector<SweepPoint> points;
    // Midpoint between the last stable point and the first unstable one.
    // Empty when every point is stable; the first grid value when none is.
    std::optional<double> knee;
    bool monotone = true; // no stable point above the first unstable one
};

// Pure function of the per-run summaries, in grid-major, seed-minor order.
SweepReport aggregate_sweep(const SweepSpec& spec, std::vector<std::vector<RunResult>> runs);

// Runs every (value, seed) pair on top of `base`; when base.out is set each
// run lands in out/runs/<index>_seed<seed> and out/sweep.csv is written.
SweepReport sweep_lambda(const SweepSpec& spec, const RunConfig& base);
SweepReport sweep_V(const SweepSpec& spec, const RunConfig& base);

void write_sweep(const SweepReport& report, const std::filesystem::path& dir);
std::string sweep_csv(const SweepReport& report);
// Rebuilds the report from a sweep directory's stored run summaries.
SweepReport reaggregate(const std::filesystem::path& dir);

// %.17g, with "inf" and "nan" spelled out.
std::string format_double(double x);

} // namespace mecnc
