#pragma once

// Per-slot cost, the two delay estimators, offloading ratios and the
// stability classifier used by the sweeps.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mecnc/model.hpp"
#include "mecnc/queues.hpp"

namespace mecnc {

// Per-commodity weight; the same at every node.
using KappaTable = std::vector<double>;

// 1 / (prod of upstream scalings * total arrival rate). Throws
// std::domain_error when the total rate is not positive.
KappaTable kappa(const CommoditySpace& space, double total_rate);
KappaTable kappa(const Instance& instance);

// kappa(instance), or the unit-rate table when nothing arrives, so the
// controller still has well-defined weights on an idle network.
KappaTable controller_kappa(const Instance& instance);

struct SlotCost {
    double proc_setup = 0.0;
    double proc_unit = 0.0;
    double wired_setup = 0.0;
    double wired_unit = 0.0;
    double wireless_energy = 0.0;

    double total() const { return proc_setup + proc_unit + wired_setup + wired_unit + wireless_energy; }
    SlotCost& operator+=(const SlotCost& o);
    SlotCost scaled(double k) const;
};

// Setup costs from the chosen levels, unit costs from the executed flows,
// and energy for every powered link.
SlotCost slot_cost(const Instance& instance, const Decision& decision, const ExecutedFlows& executed);

struct OffloadRatio {
    std::size_t service = 0;
    std::size_t function = 0;      // 1-based
    double at_servers = 0.0;       // packets processed at servers
    double total = 0.0;            // packets processed anywhere

    double ratio() const { return total > 0.0 ? at_servers / total : 0.0; }
};

struct RunMetrics {
    std::size_t slots = 0;
    std::size_t measured_slots = 0;
    double mean_cost = 0.0;
    double cost_se = 0.0; // batch-means standard error of mean_cost
    SlotCost mean_breakdown;
    double little_delay_slots = 0.0;
    double age_delay_slots = 0.0;
    double little_delay_ms = 0.0;
    double age_delay_ms = 0.0;
    double delivered = 0.0; // input-equivalent packets in the window
    double mean_backlog = 0.0;
    std::vector<OffloadRatio> offload;
    bool stable = true;
};

// What the accumulator sees of one slot.
struct SlotRecord {
    Slot slot = 0;
    SlotCost cost;
    double weighted_backlog = 0.0; // kappa^T Q at the start of the slot
    double backlog = 0.0;          // sum of Q at the start of the slot
    double delivered = 0.0;        // input-equivalent amount delivered
    double age_sum = 0.0;          // sum of age * input-equivalent amount
};

SlotRecord make_slot_record(const Instance& instance, std::span<const double> kappa_table,
                            const QueueState& start, Slot slot, const SlotCost& cost,
                            const DeliveryRecord& deliveries);

// Adds input-equivalent delivered amounts and ages to `record`.
void record_deliveries(const Instance& instance, const DeliveryRecord& deliveries, SlotRecord& record);

class MetricsAccumulator {
public:
    MetricsAccumulator(const Instance& instance, std::size_t horizon, double warmup_fraction);

    void accumulate(const SlotRecord& record, const Decision& decision, const ExecutedFlows& executed);
    RunMetrics finish() const;

    std::span<const double> backlog_trajectory() const { return backlog_; }
    std::span<const double> cost_series() const { return cost_; }
    std::size_t warmup_slots() const { return warmup_; }

private:
    const Instance* instance_;
    std::size_t horizon_;
    std::size_t warmup_;
    std::size_t measured_ = 0;
    SlotCost cost_sum_;
    double weighted_sum_ = 0.0;
    double backlog_sum_ = 0.0;
    double delivered_ = 0.0;
    double age_sum_ = 0.0;
    std::vector<OffloadRatio> offload_; // service-major, function-minor
    std::vector<std::size_t> offload_first_;
    std::vector<double> backlog_;
    std::vector<double> cost_;
};

// Standard error of the mean of `series` by non-overlapping batch means.
double batch_means_se(std::span<const double> series, std::size_t batches = 20);

struct StabilityVerdict {
    bool stable = true;
    double middle_mean = 0.0;   // slots [T/2, 3T/4)
    double trailing_mean = 0.0; // slots [3T/4, T)
};

inline constexpr double stability_ratio = 1.25;

// Stable when the trailing-quarter mean of the total backlog is at most
// 1.25 times the middle-quarter mean.
StabilityVerdict classify_stability(std::span<const double> backlog);

} // namespace mecnc
