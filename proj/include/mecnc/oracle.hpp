#pragma once

// Capacity-region and minimum-cost oracle for small static instances. The
// stationary randomized policy is written as a linear program over joint
// "level and commodity" frequencies and solved exactly by the simplex.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mecnc/controller.hpp"
#include "mecnc/model.hpp"
#include "mecnc/queues.hpp"
#include "mecnc/simplex.hpp"
#include "mecnc/stochastic.hpp"

namespace mecnc {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DiscretizeOptions {
    std::size_t power_levels = 5; // per link, including zero
    // Replace the power grid by tangent cuts of the rate curve. The program
    // then relaxes continuous power control, so its cost is a lower bound
    // for any policy, and it has no samplable power actions.
    bool envelope = false;
    std::size_t tangents = 32;
    std::size_t max_variables = 20000;
};

// Joint CSI states observed by one transmitting node.
struct NodeChannel {
    std::vector<std::size_t> links;         // the node's outgoing wireless links
    std::vector<std::vector<double>> gains; // [state][k], linear
    std::vector<double> probability;        // [state]
    std::size_t quantiles = 0;

    std::size_t num_states() const { return probability.size(); }
};

struct DiscreteInstance {
    Instance instance;
    DiscretizeOptions options;
    std::vector<NodeChannel> channel;                      // per node
    std::vector<std::vector<std::vector<double>>> actions; // per node: [action][k] power

    // Joint state index from per-link quantized states.
    std::size_t csi_index(NodeIndex node, std::span<const std::uint32_t> link_states) const;
};

// Uses the instance's current positions; shadowing takes the equiprobable
// quantized levels of the radio parameters.
DiscreteInstance discretize(const Instance& instance, DiscretizeOptions options = {});

enum class Objective { feasibility, max_throughput, min_cost };

struct Share {
    std::size_t commodity = 0;
    double value = 0.0; // joint frequency of (resource state, commodity)
};

struct LevelPolicy {
    std::vector<double> alpha;               // [level]
    std::vector<std::vector<Share>> shares;  // [level]
};

struct WirelessPolicy {
    // Grid mode.
    std::vector<std::vector<double>> action_prob;                 // [state][action]
    std::vector<std::vector<std::vector<std::vector<Share>>>> shares; // [state][action][k]
    // Envelope mode.
    std::vector<std::vector<double>> activity;                 // [state][k]
    std::vector<std::vector<double>> mean_power;               // [state][k]
    std::vector<std::vector<std::vector<Share>>> rate_shares;  // [state][k], packets/slot
};

struct OracleSolution {
    lp::Status status = lp::Status::numerical_failure;
    Objective objective = Objective::feasibility;
    bool lower_bound = false; // envelope program
    double theta = 0.0;       // scale on the direction for max_throughput
    double cost = 0.0;        // expected per-slot cost of the policy
    std::vector<double> rates; // arrival rates the policy supports, (ue, service)
    std::vector<LevelPolicy> compute;
    std::vector<LevelPolicy> wired;
    std::vector<WirelessPolicy> wireless;
    std::vector<double> processing_flow; // node-major, packets/slot
    std::vector<double> wired_flow;      // edge-major
    std::vector<double> wireless_flow;   // link-major
    std::size_t variables = 0;
    std::size_t constraints = 0;
    std::size_t iterations = 0;
    double max_violation = 0.0;

    bool feasible() const { return status == lp::Status::optimal; }
};

struct PolicyProgram;

// Builds the program. `rates` are the arrival rates (feasibility and
// min_cost) or the direction (max_throughput). Throws OracleError when the
// program would exceed options.max_variables.
std::shared_ptr<PolicyProgram> build_policy_program(const DiscreteInstance& d, std::span<const double> rates,
                                                    Objective objective);

const lp::LinearProgram& program_of(const PolicyProgram& p);

OracleSolution solve(const DiscreteInstance& d, const PolicyProgram& program);

OracleSolution check_feasible(const DiscreteInstance& d, std::span<const double> rates);
OracleSolution max_throughput(const DiscreteInstance& d, std::span<const double> direction);
OracleSolution min_cost(const DiscreteInstance& d, std::span<const double> rates);

// Re-evaluates every flow, probability and capacity relation of the
// recovered policy directly from the instance data; returns the largest
// violation.
double verify_certificate(const DiscreteInstance& d, const OracleSolution& s);

// One slot of the stationary randomized policy given the observed CSI.
Decision sample_randomized_policy(const DiscreteInstance& d, const OracleSolution& s, Rng& rng,
                                  const ChannelState& channel);

class RandomizedPolicyController final : public Controller {
public:
    RandomizedPolicyController(DiscreteInstance d, OracleSolution s);

    Decision decide(const SlotContext& ctx) override;
    std::string name() const override { return "oracle"; }
    const OracleSolution& solution() const { return solution_; }

private:
    DiscreteInstance discrete_;
    OracleSolution solution_;
};

// Solves min-cost at rates * (1 + margin), falling back to the rates
// themselves, and wraps the policy. Throws OracleError if neither is
// feasible.
std::unique_ptr<RandomizedPolicyController> make_oracle_controller(const Instance& instance,
                                                                   DiscretizeOptions options = {},
                                                                   double margin = 0.02);

// Keeps one UE and its nearest covered server, without wired edges, with
// positions frozen and the quantized channel.
Instance project_instance(const Instance& instance, NodeIndex ue);

nlohmann::json to_json(const DiscreteInstance& d, const OracleSolution& s);

} // namespace mecnc
