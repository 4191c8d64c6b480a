#include "mecnc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mecnc {

namespace {

std::pair<std::size_t, std::size_t> processing_range(const Instance& instance, NodeIndex node) {
    const auto& space = instance.commodities;
    if (instance.topology.is_ue(node)) return {space.block_begin(node), space.block_end(node)};
    return {0, space.size()};
}

NodeIndex ue_endpoint(const Topology& t, const WirelessLink& l) { return t.is_ue(l.from) ? l.from : l.to; }

// Lowest level maximizing W C_k - V s_k; level 0 scores exactly 0.
std::size_t best_level(const ResourceProfile& p, double W, double V) {
    std::size_t level = 0;
    double best = 0.0;
    for (std::size_t k = 1; k < p.num_levels(); ++k) {
        const double v = W * p.capacity[k] - V * p.setup_cost[k];
        if (v > best) {
            best = v;
            level = k;
        }
    }
    return level;
}

} // namespace

WeightTable::WeightTable(const Instance& instance) {
    const auto& t = instance.topology;
    const auto& space = instance.commodities;
    nc_ = space.size();
    block_ = t.num_ues > 0 ? space.block_end(0) - space.block_begin(0) : 0;
    proc_.assign(t.num_nodes() * nc_, 0.0);
    wired_.assign(t.wired_edges.size() * nc_, 0.0);
    wireless_.assign(t.wireless_links.size() * block_, 0.0);
    for (const auto& l : t.wireless_links) link_offset_.push_back(space.block_begin(ue_endpoint(t, l)));
}

WeightTable compute_weights(const Instance& instance, std::span<const double> scaled,
                            const kernels::KernelTable& k) {
    const auto& t = instance.topology;
    const auto& space = instance.commodities;
    const std::size_t nc = space.size();
    WeightTable w(instance);
    auto row = [&](NodeIndex i) { return scaled.subspan(i * nc, nc); };

    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto [b, e] = processing_range(instance, i);
        auto out = w.processing(i).subspan(b, e - b);
        k.chain_weight(row(i).subspan(b, e - b), space.scaling().subspan(b, e - b), out);
        for (std::size_t c = b; c < e; ++c)
            if (space.is_final(c)) w.processing(i)[c] = 0.0;
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto& edge = t.wired_edges[e];
        k.positive_difference(row(edge.from), row(edge.to), w.wired(e));
    }
    const std::size_t block = w.block_size();
    for (std::size_t l = 0; l < t.wireless_links.size(); ++l) {
        const auto& link = t.wireless_links[l];
        const std::size_t off = w.wireless_offset(l);
        k.positive_difference(row(link.from).subspan(off, block), row(link.to).subspan(off, block),
                              w.wireless(l));
        if (!t.is_ue(link.from)) continue;
        auto out = w.wireless(l);
        for (std::size_t c = 0; c < block; ++c)
            if (space.is_final(off + c)) out[c] = 0.0;
    }
    return w;
}

ResourceChoice decide_processing(const Instance& instance, NodeIndex node, const WeightTable& weights,
                                 double V, const kernels::KernelTable& k) {
    const auto& space = instance.commodities;
    const auto& prof = instance.compute[node];
    const auto [b, e] = processing_range(instance, node);
    const auto best = k.affine_argmax(weights.processing(node).subspan(b, e - b),
                                      space.inverse_workload().subspan(b, e - b), V * prof.unit_cost);
    ResourceChoice r;
    r.commodity = b + best.index;
    r.weight = best.value;
    if (!(best.value > 0.0)) return r;
    r.level = best_level(prof, best.value, V);
    if (r.level > 0) r.flow = prof.capacity[r.level] / space.workload()[r.commodity];
    return r;
}

ResourceChoice decide_wired(const Instance& instance, std::size_t edge, const WeightTable& weights, double V,
                            const kernels::KernelTable& k) {
    const auto& prof = instance.wired[edge];
    const auto best = k.shifted_argmax(weights.wired(edge), V * prof.unit_cost);
    ResourceChoice r;
    r.commodity = best.index;
    r.weight = best.value;
    if (!(best.value > 0.0)) return r;
    r.level = best_level(prof, best.value, V);
    if (r.level > 0) r.flow = prof.capacity[r.level];
    return r;
}

LinkChoice max_weight_commodity(const WeightTable& weights, std::size_t link, const kernels::KernelTable& k) {
    const auto best = k.shifted_argmax(weights.wireless(link), 0.0);
    return {weights.wireless_offset(link) + best.index, best.value};
}

double waterfill_objective(const WaterfillProblem& p, std::span<const double> power) {
    double obj = 0.0;
    for (std::size_t l = 0; l < power.size(); ++l) {
        if (!(power[l] > 0.0)) continue;
        const double rate = p.rate_scale * std::log1p(power[l] / p.noise_over_gain[l]) / std::numbers::ln2;
        obj += p.cost * power[l] - p.weights[l] * rate;
    }
    return obj;
}

WaterfillResult waterfill_power(const WaterfillProblem& p, const kernels::KernelTable& k) {
    const std::size_t n = p.weights.size();
    WaterfillResult res;
    res.power.assign(n, 0.0);

    // p_l(eta) = [a_l eta - b_l]^+ with eta = 1 / (cost + rho).
    std::vector<double> a(n);
    bool any = false;
    for (std::size_t l = 0; l < n; ++l) {
        a[l] = p.weights[l] * p.rate_scale / std::numbers::ln2;
        any |= a[l] > 0.0;
    }
    if (!any) return res;
    const std::span<const double> b = p.noise_over_gain;
    auto total = [&](double rho) { return k.waterfill_sum(a, b, 1.0 / (p.cost + rho)); };
    auto fill = [&](double eta) {
        for (std::size_t l = 0; l < n; ++l) {
            const double v = a[l] * eta - b[l];
            res.power[l] = v > 0.0 ? v : 0.0;
        }
    };

    if (p.cost > 0.0 && total(0.0) <= p.budget) {
        fill(1.0 / p.cost);
        res.objective = waterfill_objective(p, res.power);
        return res;
    }

    if (n == 1) {
        // One link: the budget equation a eta - b = P has the root in closed form.
        const double eta = (p.budget + b[0]) / a[0];
        res.rho = std::max(0.0, 1.0 / eta - p.cost);
        res.power[0] = p.budget;
        res.objective = waterfill_objective(p, res.power);
        return res;
    }

    const double tol = 1e-9 * std::max(p.budget, 1.0);
    double lo = 0.0;
    double hi = 1.0;
    while (total(hi) > p.budget) {
        lo = hi;
        hi *= 2.0;
        ++res.iterations;
    }
    double rho = hi;
    for (std::size_t it = 0; it < 200; ++it, ++res.iterations) {
        const double mid = 0.5 * (lo + hi);
        const double s = total(mid);
        if (std::abs(s - p.budget) <= tol) {
            rho = mid;
            break;
        }
        if (s > p.budget)
            lo = mid;
        else
            hi = mid;
        rho = hi;
    }

    // With the active set known the budget equation is linear in eta; solve
    // it exactly and keep the result only if it reproduces the same set.
    double eta = 1.0 / (p.cost + rho);
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (std::size_t l = 0; l < n; ++l)
        if (a[l] * eta - b[l] > 0.0) {
            sum_a += a[l];
            sum_b += b[l];
        }
    bool polished = false;
    if (sum_a > 0.0) {
        const double exact = (p.budget + sum_b) / sum_a;
        bool consistent = 1.0 / exact > p.cost;
        for (std::size_t l = 0; l < n && consistent; ++l) {
            const bool was = a[l] * eta - b[l] > 0.0;
            const bool now = a[l] * exact - b[l] > 0.0;
            consistent = was == now;
        }
        if (consistent) {
            eta = exact;
            rho = 1.0 / exact - p.cost;
            polished = true;
        }
    }
    if (!polished) {
        rho = hi;
        eta = 1.0 / (p.cost + hi);
    }
    fill(eta);
    res.rho = rho;
    res.objective = waterfill_objective(p, res.power);
    return res;
}

UeWireless decide_ue_association(const Instance& instance, NodeIndex ue, const WeightTable& weights,
                                 const ChannelState& channel, double V, const kernels::KernelTable& k) {
    const auto& t = instance.topology;
    const auto& radio = instance.wireless.radio;
    const auto& node = instance.wireless.nodes[ue];
    const double noise = radio.noise_watts();
    UeWireless best;
    for (std::size_t l : t.wireless_out[ue]) {
        const LinkChoice choice = max_weight_commodity(weights, l, k);
        if (!(choice.weight > 0.0)) continue;
        WaterfillProblem prob{{choice.weight}, {noise / channel.gains[l]}, V * node.power_cost,
                              node.power_budget, radio.bandwidth_hz / radio.packet_bits};
        const auto sol = waterfill_power(prob, k);
        if (sol.objective < best.objective) {
            best.server = t.wireless_links[l].to;
            best.link = l;
            best.choice = choice;
            best.power = sol.power[0];
            best.objective = sol.objective;
        }
    }
    return best;
}

ServerWireless decide_server_wireless(const Instance& instance, NodeIndex server, const WeightTable& weights,
                                      const ChannelState& channel, double V, const kernels::KernelTable& k) {
    const auto& t = instance.topology;
    const auto& radio = instance.wireless.radio;
    const auto& node = instance.wireless.nodes[server];
    const double noise = radio.noise_watts();
    ServerWireless out;
    WaterfillProblem prob;
    prob.cost = V * node.power_cost;
    prob.budget = node.power_budget;
    prob.rate_scale = radio.bandwidth_hz / radio.packet_bits;
    for (std::size_t l : t.wireless_out[server]) {
        out.links.push_back(l);
        out.choices.push_back(max_weight_commodity(weights, l, k));
        prob.weights.push_back(out.choices.back().weight);
        prob.noise_over_gain.push_back(noise / channel.gains[l]);
    }
    out.solution = waterfill_power(prob, k);
    return out;
}

Decision mecnc_slot(const Instance& instance, const QueueState& queues, const ChannelState& channel, double V,
                    std::span<const double> kappa_table, MecncOptions options, const kernels::KernelTable& k) {
    const auto& t = instance.topology;
    const auto& radio = instance.wireless.radio;
    Decision d = Decision::idle(instance);
    const auto scaled = scaled_queues(queues, kappa_table);
    const WeightTable w = compute_weights(instance, scaled, k);

    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        if (options.local_only && !t.is_ue(i)) continue;
        const auto c = decide_processing(instance, i, w, V, k);
        d.compute_level[i] = c.level;
        if (c.flow > 0.0) d.plan.processing.push_back({i, c.commodity, c.flow});
    }
    if (options.local_only) return d;

    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto c = decide_wired(instance, e, w, V, k);
        d.wired_level[e] = c.level;
        if (c.flow > 0.0) d.plan.wired.push_back({e, c.commodity, c.flow});
    }
    auto transmit = [&](std::size_t l, double power, std::size_t commodity) {
        d.power[l] = power;
        d.wireless_capacity[l] = link_rate(channel.gains[l], power, radio) * radio.slot_seconds;
        if (d.wireless_capacity[l] > 0.0) d.plan.wireless.push_back({l, commodity, d.wireless_capacity[l]});
    };
    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        const auto ue = decide_ue_association(instance, u, w, channel, V, k);
        if (ue.server == no_server || !(ue.power > 0.0)) continue;
        d.association[u] = ue.server;
        transmit(ue.link, ue.power, ue.choice.commodity);
    }
    for (NodeIndex s = t.num_ues; s < t.num_nodes(); ++s) {
        if (t.wireless_out[s].empty()) continue;
        const auto sw = decide_server_wireless(instance, s, w, channel, V, k);
        for (std::size_t j = 0; j < sw.links.size(); ++j)
            if (sw.solution.power[j] > 0.0) transmit(sw.links[j], sw.solution.power[j], sw.choices[j].commodity);
    }
    return d;
}

MecncController::MecncController(const Instance& instance, double V, MecncOptions options)
    : instance_(&instance), V_(V), options_(options), kappa_(controller_kappa(instance)) {}

Decision MecncController::decide(const SlotContext& ctx) {
    return mecnc_slot(*instance_, ctx.queues, ctx.channel, V_, kappa_, options_);
}

} // namespace mecnc
