#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "mecnc/model.hpp"
#include "mecnc/queues.hpp"
#include "mecnc/stochastic.hpp"

namespace mecnc::testing {

inline std::filesystem::path config_path(const std::string& name) {
    return std::filesystem::path(MECNC_CONFIG_DIR) / name;
}

inline nlohmann::json config_json(const std::string& name) { return load_json(config_path(name)); }

// Two nodes, one single-function service, rate `lambda`.
inline nlohmann::json tiny_json(double lambda = 300.0) {
    auto j = config_json("tiny.json");
    j["arrivals"] = {{"rate_per_ue_service", lambda}};
    return j;
}

inline Instance tiny_instance(double lambda = 300.0) { return build_instance(tiny_json(lambda)); }

// A scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("mecnc_test_" + tag);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// A random decision that satisfies every plan rule: random levels, powers
// and association, and flows of admissible commodities scaled down to the
// chosen capacities. Planned amounts may exceed the backlogs.
inline Decision random_decision(const Instance& inst, Rng& rng, double scale) {
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    Decision d = Decision::idle(inst);

    auto random_commodity = [&](std::size_t begin, std::size_t end, bool allow_final) {
        for (;;) {
            const std::size_t c = begin + pick(end - begin);
            if (allow_final || !space.is_final(c)) return c;
        }
    };

    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        d.compute_level[i] = pick(inst.compute[i].num_levels());
        const double cap = inst.compute[i].capacity[d.compute_level[i]];
        const std::size_t first = d.plan.processing.size();
        double used = 0.0;
        for (std::size_t k = 0, n = pick(4); k < n; ++k) {
            const std::size_t c = t.is_ue(i) ? random_commodity(space.block_begin(i), space.block_end(i), false)
                                             : random_commodity(0, space.size(), false);
            const double a = unit(rng) * scale;
            d.plan.processing.push_back({i, c, a});
            used += a * space.workload()[c];
        }
        if (used > cap)
            for (std::size_t k = first; k < d.plan.processing.size(); ++k) d.plan.processing[k].amount *= cap / used;
    }

    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        d.wired_level[e] = pick(inst.wired[e].num_levels());
        const double cap = inst.wired[e].capacity[d.wired_level[e]];
        const std::size_t first = d.plan.wired.size();
        double used = 0.0;
        for (std::size_t k = 0, n = pick(3); k < n; ++k) {
            const double a = unit(rng) * scale;
            d.plan.wired.push_back({e, random_commodity(0, space.size(), true), a});
            used += a;
        }
        if (used > cap)
            for (std::size_t k = first; k < d.plan.wired.size(); ++k) d.plan.wired[k].amount *= cap / used;
    }

    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        const auto& cov = t.coverage[u];
        const std::size_t choice = pick(cov.size() + 1);
        if (choice == cov.size()) continue;
        d.association[u] = cov[choice];
        for (std::size_t l : t.wireless_out[u])
            if (t.wireless_links[l].to == cov[choice]) d.power[l] = unit(rng) * inst.wireless.nodes[u].power_budget;
    }
    for (NodeIndex s = t.num_ues; s < t.num_nodes(); ++s) {
        const auto& out = t.wireless_out[s];
        std::vector<double> w(out.size());
        double sum = 0.0;
        for (auto& x : w) sum += (x = unit(rng) < 0.3 ? 0.0 : unit(rng));
        const double budget = inst.wireless.nodes[s].power_budget * unit(rng);
        for (std::size_t k = 0; k < out.size(); ++k) d.power[out[k]] = sum > 0.0 ? budget * w[k] / sum : 0.0;
    }
    for (std::size_t l = 0; l < t.wireless_links.size(); ++l) {
        if (!(d.power[l] > 0.0)) continue;
        d.wireless_capacity[l] = unit(rng) * 2.0 * scale;
        const auto& link = t.wireless_links[l];
        const NodeIndex ue = t.is_ue(link.from) ? link.from : link.to;
        const std::size_t first = d.plan.wireless.size();
        double used = 0.0;
        for (std::size_t k = 0, n = pick(3); k < n; ++k) {
            const double a = unit(rng) * scale;
            d.plan.wireless.push_back(
                {l, random_commodity(space.block_begin(ue), space.block_end(ue), !t.is_ue(link.from)), a});
            used += a;
        }
        if (used > d.wireless_capacity[l])
            for (std::size_t k = first; k < d.plan.wireless.size(); ++k)
                d.plan.wireless[k].amount *= d.wireless_capacity[l] / used;
    }
    return d;
}

// Largest excess of Q(t+1) over the per-queue bound
//   [Q - planned out]^+ + planned in + arrivals.
inline double queue_bound_excess(const Instance& inst, const QueueState& before, const QueueState& after,
                                 const Decision& d, const ArrivalBatch& arrivals) {
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    const std::size_t nc = space.size();
    std::vector<double> out(before.backlogs().size(), 0.0), in(out.size(), 0.0);
    for (const auto& f : d.plan.processing) {
        out[f.node * nc + f.commodity] += f.amount;
        in[f.node * nc + f.commodity + 1] += space.scaling()[f.commodity] * f.amount;
    }
    for (const auto& f : d.plan.wired) {
        out[t.wired_edges[f.link].from * nc + f.commodity] += f.amount;
        in[t.wired_edges[f.link].to * nc + f.commodity] += f.amount;
    }
    for (const auto& f : d.plan.wireless) {
        out[t.wireless_links[f.link].from * nc + f.commodity] += f.amount;
        in[t.wireless_links[f.link].to * nc + f.commodity] += f.amount;
    }
    const std::size_t ns = inst.services.size();
    for (NodeIndex u = 0; u < t.num_ues; ++u)
        for (std::size_t s = 0; s < ns; ++s) in[u * nc + space.index(u, s, 1)] += arrivals.counts[u * ns + s];
    double excess = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double bound = std::max(before.backlogs()[k] - out[k], 0.0) + in[k];
        excess = std::max(excess, after.backlogs()[k] - bound * (1.0 + 1e-12) - 1e-9);
    }
    return excess;
}

// Input-equivalent packets held in queues.
inline double input_equivalent_backlog(const Instance& inst, const QueueState& q) {
    const auto cum = inst.commodities.cumulative_scaling();
    const std::size_t nc = q.num_commodities();
    double s = 0.0;
    for (std::size_t k = 0; k < q.backlogs().size(); ++k) s += q.backlogs()[k] / cum[k % nc];
    return s;
}

} // namespace mecnc::testing
