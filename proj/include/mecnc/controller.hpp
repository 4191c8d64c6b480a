#pragma once

// MECNC: per-slot max-weight decisions for processing, wired and wireless
// transmission, each minimizing its own share of the drift-plus-penalty
// bound.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mecnc/kernels.hpp"
#include "mecnc/metrics.hpp"
#include "mecnc/model.hpp"
#include "mecnc/queues.hpp"
#include "mecnc/stochastic.hpp"

namespace mecnc {

// Backlog-differential weights. Processing and wired weights cover every
// commodity; a wireless link only carries the block of its UE endpoint, so
// its row holds that block alone.
class WeightTable {
public:
    WeightTable() = default;
    explicit WeightTable(const Instance& instance);

    std::span<const double> processing(NodeIndex node) const { return {proc_.data() + node * nc_, nc_}; }
    std::span<double> processing(NodeIndex node) { return {proc_.data() + node * nc_, nc_}; }
    std::span<const double> wired(std::size_t edge) const { return {wired_.data() + edge * nc_, nc_}; }
    std::span<double> wired(std::size_t edge) { return {wired_.data() + edge * nc_, nc_}; }
    std::span<const double> wireless(std::size_t link) const { return {wireless_.data() + link * block_, block_}; }
    std::span<double> wireless(std::size_t link) { return {wireless_.data() + link * block_, block_}; }

    // First commodity of a link's row.
    std::size_t wireless_offset(std::size_t link) const { return link_offset_[link]; }
    std::size_t block_size() const { return block_; }

private:
    std::size_t nc_ = 0;
    std::size_t block_ = 0;
    std::vector<double> proc_;
    std::vector<double> wired_;
    std::vector<double> wireless_;
    std::vector<std::size_t> link_offset_;
};

// Weights from kappa-scaled backlogs (node-major, like QueueState).
WeightTable compute_weights(const Instance& instance, std::span<const double> scaled,
                            const kernels::KernelTable& k = kernels::active());

struct ResourceChoice {
    std::size_t level = 0;
    std::size_t commodity = 0;
    double weight = 0.0; // W of the chosen commodity
    double flow = 0.0;   // planned packets
};

// W = [w / r - V c_pr]^+, then the level maximizing W C_k - V s_k. Lowest
// commodity and lowest level win ties.
ResourceChoice decide_processing(const Instance& instance, NodeIndex node, const WeightTable& weights,
                                 double V, const kernels::KernelTable& k = kernels::active());

// W = [w - V c_tr]^+, then the level maximizing W C_k - V s_k.
ResourceChoice decide_wired(const Instance& instance, std::size_t edge, const WeightTable& weights,
                            double V, const kernels::KernelTable& k = kernels::active());

struct LinkChoice {
    std::size_t commodity = 0;
    double weight = 0.0;
};

LinkChoice max_weight_commodity(const WeightTable& weights, std::size_t link,
                                const kernels::KernelTable& k = kernels::active());

// One transmitting node's power problem:
//   minimize sum_l [cost * p_l - w_l R_l(p_l)]   s.t. sum_l p_l <= budget
// with R_l in packets per second.
struct WaterfillProblem {
    std::vector<double> weights;      // w*
    std::vector<double> noise_over_gain; // sigma^2 / g
    double cost = 0.0;                // V c_wt
    double budget = 0.0;              // P
    double rate_scale = 0.0;          // B / F
};

struct WaterfillResult {
    std::vector<double> power;
    double rho = 0.0;       // budget multiplier
    double objective = 0.0;
    std::size_t iterations = 0;
};

WaterfillResult waterfill_power(const WaterfillProblem& problem,
                                const kernels::KernelTable& k = kernels::active());

// Objective of a given power vector.
double waterfill_objective(const WaterfillProblem& problem, std::span<const double> power);

struct UeWireless {
    NodeIndex server = no_server;
    std::size_t link = 0;
    LinkChoice choice;
    double power = 0.0;
    double objective = 0.0;
};

// Solves the one-link problem toward every covered server and keeps the
// smallest objective (lowest server on ties); idle if no candidate is
// strictly negative.
UeWireless decide_ue_association(const Instance& instance, NodeIndex ue, const WeightTable& weights,
                                 const ChannelState& channel, double V,
                                 const kernels::KernelTable& k = kernels::active());

struct ServerWireless {
    std::vector<std::size_t> links; // the server's outgoing links
    std::vector<LinkChoice> choices;
    WaterfillResult solution;
};

ServerWireless decide_server_wireless(const Instance& instance, NodeIndex server, const WeightTable& weights,
                                      const ChannelState& channel, double V,
                                      const kernels::KernelTable& k = kernels::active());

struct MecncOptions {
    bool local_only = false; // processing at UEs only, no transmission
};

Decision mecnc_slot(const Instance& instance, const QueueState& queues, const ChannelState& channel,
                    double V, std::span<const double> kappa_table, MecncOptions options = {},
                    const kernels::KernelTable& k = kernels::active());

struct SlotContext {
    const QueueState& queues;
    const ChannelState& channel;
    Slot slot;
    Rng& rng;
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual Decision decide(const SlotContext& ctx) = 0;
    virtual std::string name() const = 0;
};

class MecncController final : public Controller {
public:
    MecncController(const Instance& instance, double V, MecncOptions options = {});

    Decision decide(const SlotContext& ctx) override;
    std::string name() const override { return options_.local_only ? "local" : "mecnc"; }

private:
    const Instance* instance_;
    double V_;
    MecncOptions options_;
    KappaTable kappa_;
};

} // namespace mecnc
