#include "mecnc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mecnc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) fail(where + ": missing key '" + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) fail(where + "." + key + ": expected a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(std::string(key) + ": expected a number");
    return j.at(key).get<double>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(where + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Vec2 position(const json& j, const std::string& where) {
    auto xy = numbers(j, where);
    if (xy.size() != 2) fail(where + ": position must have two coordinates");
    return {xy[0], xy[1]};
}

template <class Profile>
Profile parse_profile(const json& j, const std::string& where) {
    Profile p;
    p.capacity = numbers(require(j, "capacity", where), where + ".capacity");
    p.setup_cost = numbers(require(j, "setup_cost", where), where + ".setup_cost");
    p.unit_cost = number(j, "unit_cost", where);
    return p;
}

void check_profile(const ResourceProfile& p, const std::string& where) {
    if (p.capacity.empty()) fail(where + ": at least one level required");
    if (p.capacity.size() != p.setup_cost.size())
        fail(where + ": capacity and setup_cost must list the same levels");
    if (p.capacity[0] != 0.0 || p.setup_cost[0] != 0.0)
        fail(where + ": level 0 must have zero capacity and zero setup cost");
    for (std::size_t k = 1; k < p.capacity.size(); ++k) {
        if (p.capacity[k] < p.capacity[k - 1] || p.setup_cost[k] < p.setup_cost[k - 1])
            fail(where + ": capacity and setup_cost must be nondecreasing in level");
    }
    if (!(p.unit_cost >= 0.0)) fail(where + ": unit_cost must be nonnegative");
}

struct NodeDecl {
    int id;
    Vec2 pos;
    bool ue;
    bool wireless;
};

std::vector<NodeDecl> parse_ues(const json& topo, double area) {
    const json& ues = require(topo, "ues", "topology");
    std::vector<NodeDecl> out;
    if (ues.is_array()) {
        for (const auto& u : ues)
            out.push_back({require(u, "id", "topology.ues").get<int>(),
                           position(require(u, "pos", "topology.ues"), "topology.ues.pos"), true,
                           true});
        return out;
    }
    const auto count = static_cast<int>(number(ues, "count", "topology.ues"));
    const auto first_id = static_cast<int>(number_or(ues, "first_id", 0));
    const auto seed = static_cast<std::uint64_t>(number_or(ues, "placement_seed", 1));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, area);
    for (int i = 0; i < count; ++i) {
        const double x = coord(rng);
        const double y = coord(rng);
        out.push_back({first_id + i, {x, y}, true, true});
    }
    return out;
}

std::vector<NodeDecl> parse_servers(const json& topo) {
    std::vector<NodeDecl> out;
    for (const auto& s : require(topo, "servers", "topology")) {
        const bool radio = !s.contains("wireless") || s.at("wireless").get<bool>();
        out.push_back({require(s, "id", "topology.servers").get<int>(),
                       position(require(s, "pos", "topology.servers"), "topology.servers.pos"),
                       false, radio});
    }
    return out;
}

std::size_t cluster_of(double coord, double side, std::size_t clusters) {
    const auto c = static_cast<long>(std::floor(coord / (side / static_cast<double>(clusters))));
    return static_cast<std::size_t>(std::clamp<long>(c, 0, static_cast<long>(clusters) - 1));
}

} // namespace

Instance build_unchecked(const json& config);

double RadioParams::noise_watts() const {
    return std::pow(10.0, (noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz;
}

double ArrivalSpec::total() const {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
}

void Topology::index_links() {
    wireless_links.clear();
    wireless_out.assign(num_nodes(), {});
    wired_out.assign(num_nodes(), {});
    for (NodeIndex u = 0; u < num_ues; ++u)
        for (NodeIndex s : coverage[u]) wireless_links.push_back({u, s});
    for (NodeIndex s = num_ues; s < num_nodes(); ++s)
        for (NodeIndex u = 0; u < num_ues; ++u)
            if (std::find(coverage[u].begin(), coverage[u].end(), s) != coverage[u].end())
                wireless_links.push_back({s, u});
    for (std::size_t l = 0; l < wireless_links.size(); ++l)
        wireless_out[wireless_links[l].from].push_back(l);
    std::sort(wired_edges.begin(), wired_edges.end(), [](const WiredEdge& a, const WiredEdge& b) {
        return std::pair(a.from, a.to) < std::pair(b.from, b.to);
    });
    for (std::size_t e = 0; e < wired_edges.size(); ++e) wired_out[wired_edges[e].from].push_back(e);
}

CommoditySpace::CommoditySpace(const Topology& topology, const std::vector<ServiceSpec>& services) {
    items_ = commodity_space(services, topology);
    std::size_t per_ue = 0;
    for (const auto& s : services) {
        service_offset_.push_back(per_ue);
        per_ue += s.num_stages();
    }
    for (NodeIndex u = 0; u <= topology.num_ues; ++u) block_begin_.push_back(u * per_ue);

    const std::size_t n = items_.size();
    final_.resize(n);
    scaling_.resize(n);
    workload_.resize(n);
    inverse_workload_.resize(n);
    cumulative_scaling_.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        const auto& item = items_[c];
        const auto& svc = services[item.service];
        const std::size_t m = item.stage;
        final_[c] = m == svc.num_stages();
        scaling_[c] = final_[c] ? 0.0 : svc.scaling[m - 1];
        workload_[c] = final_[c] ? 0.0 : svc.workload[m - 1];
        inverse_workload_[c] = final_[c] ? 0.0 : 1.0 / svc.workload[m - 1];
        double prod = 1.0;
        for (std::size_t z = 1; z < m; ++z) prod *= svc.scaling[z - 1];
        cumulative_scaling_[c] = prod;
    }
}

std::size_t CommoditySpace::index(NodeIndex ue, std::size_t service, std::size_t stage) const {
    return block_begin_[ue] + service_offset_[service] + (stage - 1);
}

NodeIndex Instance::node_of(int id) const {
    const auto& ids = topology.ids;
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) fail("unknown node id " + std::to_string(id));
    return static_cast<NodeIndex>(it - ids.begin());
}

std::vector<Commodity> commodity_space(const std::vector<ServiceSpec>& services,
                                       const Topology& topology) {
    std::vector<Commodity> out;
    for (NodeIndex u = 0; u < topology.num_ues; ++u)
        for (std::size_t s = 0; s < services.size(); ++s)
            for (std::size_t m = 1; m <= services[s].num_stages(); ++m) out.push_back({u, s, m});
    return out;
}

Instance build_unchecked(const json& config) {
    Instance inst;
    inst.source = config;

    // topology
    const json& topo = require(config, "topology", "config");
    auto& t = inst.topology;
    t.area_side = number(topo, "area_side", "topology");
    t.mobility_variance = number_or(topo, "mobility_variance", 1e-2);

    auto ues = parse_ues(topo, t.area_side);
    auto servers = parse_servers(topo);
    auto by_id = [](const NodeDecl& a, const NodeDecl& b) { return a.id < b.id; };
    std::sort(ues.begin(), ues.end(), by_id);
    std::sort(servers.begin(), servers.end(), by_id);
    std::vector<NodeDecl> nodes = ues;
    nodes.insert(nodes.end(), servers.begin(), servers.end());
    {
        std::set<int> seen;
        for (const auto& n : nodes)
            if (!seen.insert(n.id).second) fail("duplicate node id " + std::to_string(n.id));
    }
    t.num_ues = ues.size();
    for (const auto& n : nodes) {
        t.ids.push_back(n.id);
        t.positions.push_back(n.pos);
    }
    auto index_of = [&](int id) -> NodeIndex {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return i;
        fail("unknown node id " + std::to_string(id));
    };

    // coverage
    t.coverage.assign(t.num_ues, {});
    const json cov = topo.contains("coverage") ? topo.at("coverage") : json{{"rule", "all"}};
    const std::string rule = require(cov, "rule", "topology.coverage").get<std::string>();
    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        for (NodeIndex s = t.num_ues; s < nodes.size(); ++s) {
            if (!nodes[s].wireless) continue;
            bool covered = false;
            if (rule == "all") {
                covered = true;
            } else if (rule == "radius") {
                const double r = number(cov, "radius", "topology.coverage");
                covered = std::hypot(t.positions[u].x - t.positions[s].x,
                                     t.positions[u].y - t.positions[s].y) <= r;
            } else if (rule == "grid") {
                const auto k = static_cast<std::size_t>(number(cov, "clusters", "topology.coverage"));
                if (k == 0) fail("topology.coverage.clusters must be positive");
                auto dx = static_cast<long>(cluster_of(t.positions[u].x, t.area_side, k)) -
                          static_cast<long>(cluster_of(t.positions[s].x, t.area_side, k));
                auto dy = static_cast<long>(cluster_of(t.positions[u].y, t.area_side, k)) -
                          static_cast<long>(cluster_of(t.positions[s].y, t.area_side, k));
                covered = std::abs(dx) <= 1 && std::abs(dy) <= 1;
            } else if (rule == "explicit") {
                const json& map = require(cov, "map", "topology.coverage");
                const std::string key = std::to_string(nodes[u].id);
                if (map.contains(key))
                    for (const auto& sid : map.at(key)) covered |= sid.get<int>() == nodes[s].id;
            } else {
                fail("topology.coverage.rule: unknown rule '" + rule + "'");
            }
            if (covered) t.coverage[u].push_back(s);
        }
    }
    if (rule == "explicit") {
        for (const auto& [key, list] : require(cov, "map", "topology.coverage").items()) {
            const NodeIndex u = index_of(std::stoi(key));
            if (u >= t.num_ues) fail("topology.coverage: " + key + " is not a UE");
            for (const auto& sid : list)
                if (index_of(sid.get<int>()) < t.num_ues)
                    fail("topology.coverage: UE " + key + " covered by non-server " +
                         std::to_string(sid.get<int>()));
        }
    }

    // wired edges
    const json& wired = require(config, "wired", "config");
    const json edges = wired.contains("edges") ? wired.at("edges") : json("none");
    if (edges.is_string()) {
        const std::string kind = edges.get<std::string>();
        const std::size_t ns = servers.size();
        if (kind == "ring" && ns >= 2) {
            std::set<std::pair<NodeIndex, NodeIndex>> pairs;
            for (std::size_t k = 0; k < ns; ++k) {
                const NodeIndex a = t.num_ues + k;
                const NodeIndex b = t.num_ues + (k + 1) % ns;
                pairs.insert({a, b});
                pairs.insert({b, a});
            }
            for (auto [a, b] : pairs) t.wired_edges.push_back({a, b});
        } else if (kind != "ring" && kind != "none") {
            fail("wired.edges: expected 'ring', 'none' or a list of [from, to] pairs");
        }
    } else {
        std::set<std::pair<NodeIndex, NodeIndex>> pairs;
        for (const auto& e : edges) {
            if (!e.is_array() || e.size() != 2) fail("wired.edges: each edge is [from, to]");
            const NodeIndex a = index_of(e[0].get<int>());
            const NodeIndex b = index_of(e[1].get<int>());
            if (a == b) fail("wired.edges: self-loop at node " + std::to_string(e[0].get<int>()));
            if (a < t.num_ues || b < t.num_ues)
                fail("wired.edges: UE endpoint in wired edge (" + std::to_string(e[0].get<int>()) +
                     ", " + std::to_string(e[1].get<int>()) + ")");
            if (!pairs.insert({a, b}).second) fail("wired.edges: duplicate edge");
            t.wired_edges.push_back({a, b});
        }
    }
    t.index_links();

    // services
    const json& svcs = require(config, "services", "config");
    if (!svcs.is_array() || svcs.empty()) fail("services: expected a nonempty array");
    for (const auto& s : svcs) {
        ServiceSpec spec;
        spec.id = require(s, "id", "services").get<int>();
        spec.scaling = numbers(require(s, "scaling", "services"), "services.scaling");
        spec.workload = numbers(require(s, "workload", "services"), "services.workload");
        inst.services.push_back(std::move(spec));
    }

    // compute
    const json& compute = require(config, "compute", "config");
    const auto ue_cpu = parse_profile<ComputeProfile>(require(compute, "ue", "compute"), "compute.ue");
    const auto srv_cpu =
        parse_profile<ComputeProfile>(require(compute, "server", "compute"), "compute.server");
    for (NodeIndex n = 0; n < nodes.size(); ++n) inst.compute.push_back(t.is_ue(n) ? ue_cpu : srv_cpu);
    if (compute.contains("nodes"))
        for (const auto& [key, prof] : compute.at("nodes").items())
            inst.compute[index_of(std::stoi(key))] =
                parse_profile<ComputeProfile>(prof, "compute.nodes." + key);

    // wired profiles
    if (!t.wired_edges.empty()) {
        const auto link = parse_profile<WiredLinkProfile>(require(wired, "profile", "wired"),
                                                          "wired.profile");
        inst.wired.assign(t.wired_edges.size(), link);
    }

    // wireless
    const json& wl = require(config, "wireless", "config");
    auto& radio = inst.wireless.radio;
    radio.bandwidth_hz = number(wl, "bandwidth", "wireless");
    radio.packet_bits = number(wl, "packet_size", "wireless");
    radio.carrier_hz = number(wl, "carrier_freq", "wireless");
    radio.noise_psd_dbm_hz = number(wl, "noise_psd_dbm", "wireless");
    radio.antenna_gain_db = number(wl, "antenna_gain_db", "wireless");
    radio.shadow_sigma_db = number(wl, "shadow_sigma_db", "wireless");
    radio.slot_seconds = number(wl, "slot_len", "wireless");
    radio.min_distance_m = number_or(wl, "min_distance", 1.0);
    radio.quantiles = static_cast<std::size_t>(number_or(wl, "quantiles", 3));
    const std::string mode = wl.value("channel", std::string("lognormal"));
    if (mode == "lognormal")
        radio.mode = ChannelMode::lognormal;
    else if (mode == "quantized")
        radio.mode = ChannelMode::quantized;
    else
        fail("wireless.channel: expected 'lognormal' or 'quantized'");
    auto node_radio = [&](const char* key) {
        const json& j = require(wl, key, "wireless");
        return NodeRadio{number(j, "power_budget", std::string("wireless.") + key),
                         number(j, "power_cost", std::string("wireless.") + key)};
    };
    const NodeRadio ue_radio = node_radio("ue");
    const NodeRadio srv_radio = node_radio("server");
    for (NodeIndex n = 0; n < nodes.size(); ++n)
        inst.wireless.nodes.push_back(t.is_ue(n) ? ue_radio : srv_radio);

    // arrivals
    const std::size_t ns = inst.services.size();
    inst.arrivals.rates.assign(t.num_ues * ns, 0.0);
    if (config.contains("arrivals")) {
        const json& arr = config.at("arrivals");
        inst.arrivals.a_max_factor = number_or(arr, "a_max_factor", 50.0);
        const int given = int(arr.contains("rate_per_ue_service")) + int(arr.contains("aggregate_mbps")) +
                          int(arr.contains("rates"));
        if (given > 1) fail("arrivals: give one of rate_per_ue_service, aggregate_mbps or rates");
        if (arr.contains("rate_per_ue_service"))
            inst.arrivals.rates.assign(t.num_ues * ns, number(arr, "rate_per_ue_service", "arrivals"));
        if (arr.contains("rates")) {
            // Keyed by UE id, one rate per service in service order.
            for (const auto& [key, row] : arr.at("rates").items()) {
                const NodeIndex u = index_of(std::stoi(key));
                if (u >= t.num_ues) fail("arrivals.rates: " + key + " is not a UE");
                const auto r = numbers(row, "arrivals.rates." + key);
                if (r.size() != ns) fail("arrivals.rates." + key + ": one rate per service required");
                std::copy(r.begin(), r.end(), inst.arrivals.rates.begin() + static_cast<std::ptrdiff_t>(u * ns));
            }
        }
    }

    inst.commodities = CommoditySpace(t, inst.services);
    validate(inst);
    if (config.contains("arrivals") && config.at("arrivals").contains("aggregate_mbps"))
        set_uniform_rate(inst, aggregate_mbps_to_rate(number(config.at("arrivals"), "aggregate_mbps",
                                                             "arrivals"),
                                                      inst));
    return inst;
}

Instance build_instance(const json& config) {
    try {
        return build_unchecked(config);
    } catch (const json::exception& e) {
        fail(std::string("config: ") + e.what());
    }
}

void validate(const Instance& inst) {
    const auto& t = inst.topology;
    if (t.num_ues == 0) fail("topology: at least one UE required");
    if (t.num_servers() == 0) fail("topology: at least one server required");
    if (!(t.area_side > 0.0)) fail("topology.area_side must be positive");
    if (t.mobility_variance < 0.0) fail("topology.mobility_variance must be nonnegative");
    for (std::size_t n = 0; n < t.num_nodes(); ++n) {
        const auto& p = t.positions[n];
        if (p.x < 0.0 || p.y < 0.0 || p.x > t.area_side || p.y > t.area_side)
            fail("topology: node " + std::to_string(t.ids[n]) + " lies outside the area");
    }
    for (const auto& e : t.wired_edges) {
        if (t.is_ue(e.from) || t.is_ue(e.to)) fail("wired: UE endpoint in wired edge");
        if (e.from == e.to) fail("wired: self-loop");
    }
    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        if (t.coverage[u].empty())
            fail("topology: UE " + std::to_string(t.ids[u]) + " has empty coverage");
        for (NodeIndex s : t.coverage[u])
            if (t.is_ue(s)) fail("topology: coverage must list servers only");
    }
    for (const auto& s : inst.services) {
        const std::string where = "services[" + std::to_string(s.id) + "]";
        if (s.scaling.empty()) fail(where + ": at least one function (num_stages >= 2)");
        if (s.scaling.size() != s.workload.size())
            fail(where + ": scaling and workload lengths differ");
        for (double x : s.scaling)
            if (!(x > 0.0)) fail(where + ": scaling must be positive");
        for (double r : s.workload)
            if (!(r > 0.0)) fail(where + ": workload must be positive");
    }
    {
        std::set<int> ids;
        for (const auto& s : inst.services)
            if (!ids.insert(s.id).second) fail("services: duplicate id " + std::to_string(s.id));
    }
    for (std::size_t n = 0; n < inst.compute.size(); ++n)
        check_profile(inst.compute[n], "compute[" + std::to_string(t.ids[n]) + "]");
    for (std::size_t e = 0; e < inst.wired.size(); ++e) check_profile(inst.wired[e], "wired.profile");
    const auto& r = inst.wireless.radio;
    if (!(r.bandwidth_hz > 0 && r.packet_bits > 0 && r.carrier_hz > 0 && r.slot_seconds > 0 &&
          r.min_distance_m > 0))
        fail("wireless: bandwidth, packet_size, carrier_freq, slot_len, min_distance must be positive");
    if (r.shadow_sigma_db < 0.0) fail("wireless.shadow_sigma_db must be nonnegative");
    if (r.quantiles == 0) fail("wireless.quantiles must be positive");
    for (const auto& nr : inst.wireless.nodes)
        if (!(nr.power_budget > 0.0) || nr.power_cost < 0.0)
            fail("wireless: power_budget must be positive and power_cost nonnegative");
    for (double a : inst.arrivals.rates)
        if (!(a >= 0.0)) fail("arrivals: rates must be nonnegative");
    if (!(inst.arrivals.a_max_factor > 0.0)) fail("arrivals.a_max_factor must be positive");
}

double aggregate_mbps_to_rate(double mbps, const Instance& inst) {
    const auto& r = inst.wireless.radio;
    const double packets_per_slot = mbps * 1e6 * r.slot_seconds / r.packet_bits;
    return packets_per_slot /
           static_cast<double>(inst.topology.num_ues * inst.services.size());
}

void set_uniform_rate(Instance& inst, double rate) {
    if (!(rate >= 0.0)) fail("arrival rate must be nonnegative");
    std::fill(inst.arrivals.rates.begin(), inst.arrivals.rates.end(), rate);
}

json to_config(const Instance& inst) {
    const auto& t = inst.topology;
    auto profile = [](const ResourceProfile& p) {
        return json{{"capacity", p.capacity}, {"setup_cost", p.setup_cost}, {"unit_cost", p.unit_cost}};
    };
    auto same = [](const ResourceProfile& a, const ResourceProfile& b) {
        return a.capacity == b.capacity && a.setup_cost == b.setup_cost && a.unit_cost == b.unit_cost;
    };

    json ues = json::array();
    json servers = json::array();
    json map = json::object();
    for (NodeIndex n = 0; n < t.num_nodes(); ++n) {
        json node{{"id", t.ids[n]}, {"pos", {t.positions[n].x, t.positions[n].y}}};
        if (t.is_ue(n)) {
            ues.push_back(node);
            json list = json::array();
            for (NodeIndex s : t.coverage[n]) list.push_back(t.ids[s]);
            map[std::to_string(t.ids[n])] = list;
        } else {
            servers.push_back(node);
        }
    }
    json topo{{"area_side", t.area_side},
              {"mobility_variance", t.mobility_variance},
              {"ues", ues},
              {"servers", servers},
              {"coverage", {{"rule", "explicit"}, {"map", map}}}};

    json edges = json::array();
    for (const auto& e : t.wired_edges) edges.push_back({t.ids[e.from], t.ids[e.to]});
    json wired{{"edges", edges}};
    if (!inst.wired.empty()) wired["profile"] = profile(inst.wired[0]);

    json services = json::array();
    for (const auto& s : inst.services)
        services.push_back({{"id", s.id}, {"scaling", s.scaling}, {"workload", s.workload}});

    const NodeIndex first_server = t.num_ues;
    json compute{{"ue", profile(inst.compute[0])}, {"server", profile(inst.compute[first_server])}};
    json overrides = json::object();
    for (NodeIndex n = 0; n < t.num_nodes(); ++n) {
        const auto& base = inst.compute[t.is_ue(n) ? 0 : first_server];
        if (!same(inst.compute[n], base)) overrides[std::to_string(t.ids[n])] = profile(inst.compute[n]);
    }
    if (!overrides.empty()) compute["nodes"] = overrides;

    const auto& r = inst.wireless.radio;
    auto node_radio = [](const NodeRadio& nr) {
        return json{{"power_budget", nr.power_budget}, {"power_cost", nr.power_cost}};
    };
    json wireless{{"bandwidth", r.bandwidth_hz},
                  {"packet_size", r.packet_bits},
                  {"carrier_freq", r.carrier_hz},
                  {"noise_psd_dbm", r.noise_psd_dbm_hz},
                  {"antenna_gain_db", r.antenna_gain_db},
                  {"shadow_sigma_db", r.shadow_sigma_db},
                  {"slot_len", r.slot_seconds},
                  {"min_distance", r.min_distance_m},
                  {"quantiles", r.quantiles},
                  {"channel", r.mode == ChannelMode::quantized ? "quantized" : "lognormal"},
                  {"ue", node_radio(inst.wireless.nodes[0])},
                  {"server", node_radio(inst.wireless.nodes[first_server])}};

    const std::size_t ns = inst.services.size();
    json rates = json::object();
    for (NodeIndex u = 0; u < t.num_ues; ++u)
        rates[std::to_string(t.ids[u])] =
            std::vector<double>(inst.arrivals.rates.begin() + static_cast<std::ptrdiff_t>(u * ns),
                                inst.arrivals.rates.begin() + static_cast<std::ptrdiff_t>((u + 1) * ns));

    return json{{"topology", topo},
                {"wired", wired},
                {"services", services},
                {"compute", compute},
                {"wireless", wireless},
                {"arrivals", {{"a_max_factor", inst.arrivals.a_max_factor}, {"rates", rates}}}};
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config '" + path.string() + "'");
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        fail("config '" + path.string() + "' does not parse: " + e.what());
    }
}

Instance load_instance(const std::filesystem::path& path) {
    try {
        return build_instance(load_json(path));
    } catch (const ConfigError& e) {
        fail("config '" + path.string() + "': " + e.what());
    }
}

} // namespace mecnc
