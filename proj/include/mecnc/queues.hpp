#pragma once

// Per-node per-commodity backlogs with FIFO age ledgers, and execution of one
// slot's planned flows against them.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mecnc/model.hpp"
#include "mecnc/stochastic.hpp"

namespace mecnc {

using Slot = std::int64_t;

struct Batch {
    Slot origin = 0; // exogenous arrival slot of the packets' inputs
    double amount = 0.0;
};

// FIFO list of timestamped amounts. The queue's backlog is the ledger total;
// amounts below `dust` left after a drain are discarded.
class Ledger {
public:
    static constexpr double dust = 1e-12;

    double total() const { return total_; }
    bool empty() const { return head_ == items_.size(); }
    std::span<const Batch> batches() const { return {items_.data() + head_, items_.size() - head_}; }

    // Appends at the tail, merging with the tail batch when origins match.
    void push(Slot origin, double amount);
    // Removes up to `amount` from the head; appends the removed slices to
    // `out` and returns the amount actually removed.
    double take(double amount, std::vector<Batch>& out);
    // push() for every slice in order; adopts the storage when empty.
    void append(std::vector<Batch>&& slices);
    void clear();

private:
    void compact();

    std::vector<Batch> items_;
    std::size_t head_ = 0;
    double total_ = 0.0;
};

class QueueState {
public:
    QueueState() = default;
    QueueState(std::size_t num_nodes, std::size_t num_commodities);

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_commodities() const { return num_commodities_; }

    double backlog(NodeIndex node, std::size_t c) const { return backlog_[node * num_commodities_ + c]; }
    // Dense node-major view: entry node * num_commodities + c.
    std::span<const double> backlogs() const { return backlog_; }
    std::span<const double> backlogs(NodeIndex node) const {
        return {backlog_.data() + node * num_commodities_, num_commodities_};
    }
    const Ledger& ledger(NodeIndex node, std::size_t c) const { return ledgers_[node * num_commodities_ + c]; }

    void add(NodeIndex node, std::size_t c, Slot origin, double amount);
    double take(NodeIndex node, std::size_t c, double amount, std::vector<Batch>& out);
    // Appends FIFO slices taken from another ledger.
    void append(NodeIndex node, std::size_t c, std::vector<Batch>&& slices);

    double total() const;

private:
    std::size_t num_nodes_ = 0;
    std::size_t num_commodities_ = 0;
    std::vector<double> backlog_;
    std::vector<Ledger> ledgers_;
};

// Intake of `commodity` into the processor of `node`; the processor emits
// scaling * amount packets of the next stage.
struct ProcessingFlow {
    NodeIndex node = 0;
    std::size_t commodity = 0;
    double amount = 0.0;
};

// Transmission over a wired edge or wireless link, by index into the
// topology's edge or link list.
struct LinkFlow {
    std::size_t link = 0;
    std::size_t commodity = 0;
    double amount = 0.0;
};

struct FlowPlan {
    std::vector<ProcessingFlow> processing;
    std::vector<LinkFlow> wired;
    std::vector<LinkFlow> wireless;
};

// Processor output implied by an intake (the chaining rule).
inline double processor_output(const CommoditySpace& space, const ProcessingFlow& f) {
    return space.scaling()[f.commodity] * f.amount;
}

inline constexpr NodeIndex no_server = std::numeric_limits<NodeIndex>::max();

struct Decision {
    std::vector<NodeIndex> association;   // per UE, a server or no_server
    std::vector<std::size_t> compute_level;
    std::vector<std::size_t> wired_level;
    std::vector<double> power;             // W, per wireless link
    std::vector<double> wireless_capacity; // packets/slot, per wireless link
    FlowPlan plan;

    // All-idle decision shaped for `instance`.
    static Decision idle(const Instance& instance);
};

class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Delivery {
    std::size_t commodity = 0;
    double amount = 0.0;
    Slot age = 0;
};

struct DeliveryRecord {
    std::vector<Delivery> items;
};

// Amounts actually moved, index-aligned with the plan's flow lists.
struct ExecutedFlows {
    std::vector<double> processing;
    std::vector<double> wired;
    std::vector<double> wireless;
};

struct SlotOutcome {
    DeliveryRecord deliveries;
    ExecutedFlows executed;
};

// Checks nonnegativity, capacities at the chosen levels, the stage
// boundary rules, commodity admissibility per link, per-node power budgets
// and single association. Throws PlanError naming the first violation.
void check_decision(const Instance& instance, const Decision& decision);

// Executes one slot. Outgoing phase first, on the start-of-slot backlogs:
// processor intake, then wired flows in edge order, then wireless flows in
// link order, each moving min(remaining, planned). Incoming phase then adds
// processor outputs, link receptions and the exogenous arrivals stamped
// `slot`. Final-stage packets reaching their destination leave the system
// and are reported with their age.
SlotOutcome apply_decision(const Instance& instance, QueueState& state, const Decision& decision,
                           const ArrivalBatch& arrivals, Slot slot);

// Output slices of a function: origins kept, amounts scaled by `scaling`.
std::vector<Batch> ledger_age_transfer(std::span<const Batch> intake, double scaling);

// Elementwise kappa * Q, node-major like QueueState::backlogs().
std::vector<double> scaled_queues(const QueueState& state, std::span<const double> kappa);

} // namespace mecnc
