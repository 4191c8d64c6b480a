#pragma once

// Static problem instance: topology, service chains, resource and cost
// profiles, the commodity space, and configuration loading/validation.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mecnc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense node index. UEs occupy [0, num_ues), servers follow; both ranges are
// sorted by external id.
using NodeIndex = std::size_t;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct WirelessLink {
    NodeIndex from = 0;
    NodeIndex to = 0;
};

struct WiredEdge {
    NodeIndex from = 0;
    NodeIndex to = 0;
};

struct Topology {
    std::vector<int> ids;
    std::size_t num_ues = 0;
    std::vector<Vec2> positions;
    std::vector<WiredEdge> wired_edges;                 // lexicographic (from, to)
    std::vector<std::vector<NodeIndex>> coverage;       // per UE, servers in order
    std::vector<WirelessLink> wireless_links;           // lexicographic (from, to)
    std::vector<std::vector<std::size_t>> wireless_out; // node -> link indices
    std::vector<std::vector<std::size_t>> wired_out;    // node -> edge indices
    double area_side = 0.0;
    double mobility_variance = 0.0;

    std::size_t num_nodes() const { return ids.size(); }
    std::size_t num_servers() const { return ids.size() - num_ues; }
    bool is_ue(NodeIndex n) const { return n < num_ues; }
    // Rebuilds wireless_links / wireless_out / wired_out from coverage and
    // wired_edges.
    void index_links();
};

struct ServiceSpec {
    int id = 0;
    std::vector<double> scaling;  // xi per function
    std::vector<double> workload; // r per function, resource*slot per packet

    std::size_t num_stages() const { return scaling.size() + 1; }
};

// (dest, service, stage); stage is 1-based, stage == num_stages means finished.
struct Commodity {
    NodeIndex dest = 0;
    std::size_t service = 0;
    std::size_t stage = 1;

    auto operator<=>(const Commodity&) const = default;
};

// Shared shape of ComputeProfile and WiredLinkProfile: one entry per level,
// level 0 is "allocate nothing".
struct ResourceProfile {
    std::vector<double> capacity;
    std::vector<double> setup_cost;
    double unit_cost = 0.0;

    std::size_t num_levels() const { return capacity.size(); }
};

struct ComputeProfile : ResourceProfile {};
struct WiredLinkProfile : ResourceProfile {};

enum class ChannelMode {
    lognormal, // fresh N(0, sigma^2) shadowing per slot
    quantized, // one of `quantiles` equiprobable shadowing states per slot
};

struct RadioParams {
    double bandwidth_hz = 1e8;
    double packet_bits = 1e3;
    double carrier_hz = 30e9;
    double noise_psd_dbm_hz = -174.0;
    double antenna_gain_db = 10.0;
    double shadow_sigma_db = 8.2;
    double slot_seconds = 1e-3;
    double min_distance_m = 1.0;
    ChannelMode mode = ChannelMode::lognormal;
    std::size_t quantiles = 3;

    double noise_watts() const;
};

struct NodeRadio {
    double power_budget = 0.0; // W
    double power_cost = 0.0;   // per J
};

struct WirelessProfile {
    RadioParams radio;
    std::vector<NodeRadio> nodes;
};

struct ArrivalSpec {
    std::vector<double> rates; // packets/slot, row-major (ue, service)
    double a_max_factor = 50.0;

    double rate(std::size_t ue, std::size_t service, std::size_t num_services) const {
        return rates[ue * num_services + service];
    }
    double total() const;
};

// Flat, index-aligned views of the commodity list for the slot loop and the
// vector kernels.
class CommoditySpace {
public:
    CommoditySpace() = default;
    CommoditySpace(const Topology& topology, const std::vector<ServiceSpec>& services);

    std::size_t size() const { return items_.size(); }
    const Commodity& operator[](std::size_t c) const { return items_[c]; }
    std::span<const Commodity> items() const { return items_; }

    std::size_t index(NodeIndex ue, std::size_t service, std::size_t stage) const;
    std::size_t block_begin(NodeIndex ue) const { return block_begin_[ue]; }
    std::size_t block_end(NodeIndex ue) const { return block_begin_[ue + 1]; }
    bool is_final(std::size_t c) const { return final_[c] != 0; }

    std::span<const double> scaling() const { return scaling_; }
    std::span<const double> workload() const { return workload_; }
    std::span<const double> inverse_workload() const { return inverse_workload_; }
    std::span<const double> cumulative_scaling() const { return cumulative_scaling_; }

private:
    std::vector<Commodity> items_;
    std::vector<std::size_t> block_begin_;
    std::vector<std::size_t> service_offset_;
    std::vector<char> final_;
    std::vector<double> scaling_;
    std::vector<double> workload_;
    std::vector<double> inverse_workload_;
    std::vector<double> cumulative_scaling_;
};

struct Instance {
    Topology topology;
    std::vector<ServiceSpec> services;
    CommoditySpace commodities;
    std::vector<ComputeProfile> compute;  // per node
    std::vector<WiredLinkProfile> wired;  // per wired edge
    WirelessProfile wireless;
    ArrivalSpec arrivals;
    nlohmann::json source;

    NodeIndex node_of(int id) const;
};

// Ordered (dest, service, stage) list; exactly sum over UEs of sum M_phi.
std::vector<Commodity> commodity_space(const std::vector<ServiceSpec>& services,
                                       const Topology& topology);

Instance build_instance(const nlohmann::json& config);
Instance load_instance(const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

// Fully explicit configuration that rebuilds `instance` (current positions,
// explicit coverage, edges and rates).
nlohmann::json to_config(const Instance& instance);

// Throws ConfigError describing the first violated invariant.
void validate(const Instance& instance);

// Converts a network-aggregate rate in Mb/s into packets/slot per UE per
// service under the equal-split rule.
double aggregate_mbps_to_rate(double mbps, const Instance& instance);

// Sets every (ue, service) arrival rate to `rate` packets/slot.
void set_uniform_rate(Instance& instance, double rate);

} // namespace mecnc
