#include "mecnc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mecnc {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

bool holds(const Instance& inst, NodeIndex i, std::size_t c) {
    return !inst.topology.is_ue(i) || inst.commodities[c].dest == i;
}

bool can_process(const Instance& inst, NodeIndex i, std::size_t c) {
    return holds(inst, i, c) && !inst.commodities.is_final(c);
}

bool link_carries(const Instance& inst, std::size_t l, std::size_t c) {
    const auto& t = inst.topology;
    const auto& link = t.wireless_links[l];
    const auto& item = inst.commodities[c];
    if (t.is_ue(link.from)) return item.dest == link.from && !inst.commodities.is_final(c);
    return item.dest == link.to;
}

// A row exists for every queue that can hold packets, except the delivered
// final stage at its destination.
bool has_row(const Instance& inst, NodeIndex i, std::size_t c) {
    if (!holds(inst, i, c)) return false;
    return !(inst.commodities.is_final(c) && inst.commodities[c].dest == i);
}

double slot_rate(double gain, double power, const RadioParams& radio) {
    return link_rate(gain, power, radio) * radio.slot_seconds;
}

// d/dp of the per-second rate.
double rate_slope(double gain, double power, const RadioParams& radio) {
    const double b = radio.noise_watts() / gain;
    return radio.bandwidth_hz / radio.packet_bits / std::numbers::ln2 / (b + power);
}

std::vector<double> tangent_points(double budget, std::size_t count) {
    std::vector<double> pts;
    for (std::size_t k = 0; k <= count; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(count);
        pts.push_back(budget * f * f);
    }
    return pts;
}

std::size_t draw_index(Rng& rng, std::span<const double> weights, double total) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * total;
    double acc = 0.0;
    std::size_t last = weights.size();
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) continue;
        acc += weights[k];
        last = k;
        if (u < acc) return k;
    }
    return last;
}

// Picks a commodity from joint frequencies conditioned on a state of
// probability `given`; npos is the empty-packet outcome.
std::size_t draw_share(Rng& rng, const std::vector<Share>& shares, double given) {
    if (shares.empty() || !(given > 0.0)) return npos;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * given;
    double acc = 0.0;
    for (const auto& s : shares) {
        acc += s.value;
        if (u < acc) return s.commodity;
    }
    return npos;
}

} // namespace

struct PolicyProgram {
    struct VarShare {
        std::size_t commodity;
        std::size_t var;
    };
    struct Levels {
        std::vector<std::size_t> alpha;
        std::vector<std::vector<VarShare>> shares;
    };
    struct Radio {
        std::vector<std::vector<std::size_t>> gamma;                          // [g][a]
        std::vector<std::vector<std::vector<std::vector<VarShare>>>> shares;  // [g][a][k]
        std::vector<std::vector<std::size_t>> activity;                       // [g][k]
        std::vector<std::vector<std::size_t>> power;                          // [g][k]
        std::vector<std::vector<std::vector<VarShare>>> rate;                 // [g][k]
    };

    lp::LinearProgram lp;
    Objective objective = Objective::feasibility;
    std::vector<double> rates;
    std::size_t theta = npos;
    std::vector<Levels> compute;
    std::vector<Levels> wired;
    std::vector<Radio> wireless;
};

const lp::LinearProgram& program_of(const PolicyProgram& p) { return p.lp; }

std::size_t DiscreteInstance::csi_index(NodeIndex node, std::span<const std::uint32_t> link_states) const {
    const auto& ch = channel[node];
    std::size_t g = 0;
    std::size_t radix = 1;
    for (std::size_t k = 0; k < ch.links.size(); ++k) {
        g += static_cast<std::size_t>(link_states[ch.links[k]]) * radix;
        radix *= ch.quantiles;
    }
    return g;
}

DiscreteInstance discretize(const Instance& instance, DiscretizeOptions options) {
    if (options.power_levels < 2) throw OracleError("oracle: at least two power levels required");
    if (options.envelope && options.tangents < 1) throw OracleError("oracle: at least one tangent required");
    DiscreteInstance d{instance, options, {}, {}};
    const auto& t = instance.topology;
    const auto& radio = instance.wireless.radio;
    const auto mean = mean_gain_db(t, t.positions, radio);
    const auto levels = shadowing_levels_db(radio);
    const std::size_t q = levels.size();

    d.channel.resize(t.num_nodes());
    d.actions.resize(t.num_nodes());
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        auto& ch = d.channel[i];
        ch.links = t.wireless_out[i];
        ch.quantiles = q;
        if (ch.links.empty()) continue;
        const double states = std::pow(static_cast<double>(q), static_cast<double>(ch.links.size()));
        if (states > static_cast<double>(options.max_variables))
            throw OracleError("oracle: node " + std::to_string(t.ids[i]) + " has " + std::to_string(states) +
                              " joint CSI states, above the variable limit");
        const auto n = static_cast<std::size_t>(states);
        const double prob = 1.0 / states;
        for (std::size_t g = 0; g < n; ++g) {
            std::vector<double> gains;
            std::size_t rest = g;
            for (std::size_t l : ch.links) {
                gains.push_back(db_to_linear(mean[l] + levels[rest % q]));
                rest /= q;
            }
            ch.gains.push_back(std::move(gains));
            ch.probability.push_back(prob);
        }

        if (options.envelope) continue;
        const double budget = instance.wireless.nodes[i].power_budget;
        const std::size_t L = ch.links.size();
        const std::size_t top = options.power_levels - 1;
        auto& acts = d.actions[i];
        if (t.is_ue(i)) {
            acts.push_back(std::vector<double>(L, 0.0));
            for (std::size_t k = 0; k < L; ++k)
                for (std::size_t v = 1; v <= top; ++v) {
                    std::vector<double> p(L, 0.0);
                    p[k] = budget * static_cast<double>(v) / static_cast<double>(top);
                    acts.push_back(std::move(p));
                }
        } else {
            // Every grid vector whose level sum fits the budget.
            std::vector<std::size_t> lv(L, 0);
            while (true) {
                std::size_t sum = 0;
                for (auto v : lv) sum += v;
                if (sum <= top) {
                    std::vector<double> p(L);
                    for (std::size_t k = 0; k < L; ++k)
                        p[k] = budget * static_cast<double>(lv[k]) / static_cast<double>(top);
                    acts.push_back(std::move(p));
                    if (acts.size() > options.max_variables)
                        throw OracleError("oracle: server " + std::to_string(t.ids[i]) +
                                          " power grid exceeds the variable limit");
                }
                std::size_t k = 0;
                while (k < L && ++lv[k] > top) lv[k++] = 0;
                if (k == L) break;
            }
        }
    }
    return d;
}

std::shared_ptr<PolicyProgram> build_policy_program(const DiscreteInstance& d, std::span<const double> rates,
                                                    Objective objective) {
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    const auto& radio = inst.wireless.radio;
    const std::size_t nc = space.size();
    const std::size_t ns = inst.services.size();
    const double tau = radio.slot_seconds;
    const bool costed = objective == Objective::min_cost;
    if (rates.size() != t.num_ues * ns) throw OracleError("oracle: rate vector does not match the instance");

    // Size estimate before allocating anything large.
    double estimate = 1.0;
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        double procs = 0.0;
        for (std::size_t c = 0; c < nc; ++c) procs += can_process(inst, i, c) ? 1.0 : 0.0;
        const double L = static_cast<double>(inst.compute[i].num_levels());
        estimate += L + (L - 1.0) * procs;
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        double carried = 0.0;
        for (std::size_t l : ch.links)
            for (std::size_t c = 0; c < nc; ++c) carried += link_carries(inst, l, c) ? 1.0 : 0.0;
        const double G = static_cast<double>(ch.num_states());
        if (d.options.envelope)
            estimate += G * (2.0 * static_cast<double>(ch.links.size()) + carried);
        else
            estimate += G * static_cast<double>(d.actions[i].size()) * (1.0 + carried);
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const double L = static_cast<double>(inst.wired[e].num_levels());
        estimate += L + (L - 1.0) * static_cast<double>(nc);
    }
    if (estimate > static_cast<double>(d.options.max_variables))
        throw OracleError("oracle: program needs about " + std::to_string(static_cast<long long>(estimate)) +
                          " variables, limit is " + std::to_string(d.options.max_variables));

    auto prog = std::make_shared<PolicyProgram>();
    prog->objective = objective;
    prog->rates.assign(rates.begin(), rates.end());
    auto& lp = prog->lp;
    std::vector<std::vector<lp::Term>> rows(t.num_nodes() * nc);
    auto flow = [&](NodeIndex i, std::size_t c, std::size_t var, double coef) {
        if (has_row(inst, i, c)) rows[i * nc + c].push_back({var, coef});
    };

    // Processing.
    prog->compute.resize(t.num_nodes());
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& prof = inst.compute[i];
        auto& blk = prog->compute[i];
        std::vector<lp::Term> sum_alpha;
        blk.shares.resize(prof.num_levels());
        for (std::size_t k = 0; k < prof.num_levels(); ++k) {
            const std::size_t a = lp.add_variable(costed ? prof.setup_cost[k] : 0.0);
            blk.alpha.push_back(a);
            sum_alpha.push_back({a, 1.0});
            if (prof.capacity[k] <= 0.0) continue;
            std::vector<lp::Term> cap{{a, -1.0}};
            for (std::size_t c = 0; c < nc; ++c) {
                if (!can_process(inst, i, c)) continue;
                const std::size_t b = lp.add_variable(costed ? prof.unit_cost * prof.capacity[k] : 0.0);
                blk.shares[k].push_back({c, b});
                cap.push_back({b, 1.0});
                const double f = prof.capacity[k] / space.workload()[c];
                flow(i, c, b, -f);
                flow(i, c + 1, b, space.scaling()[c] * f);
            }
            lp.add_constraint(std::move(cap), lp::Sense::le, 0.0);
        }
        lp.add_constraint(std::move(sum_alpha), lp::Sense::eq, 1.0);
    }

    // Wired transmission.
    prog->wired.resize(t.wired_edges.size());
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto& prof = inst.wired[e];
        const auto& edge = t.wired_edges[e];
        auto& blk = prog->wired[e];
        std::vector<lp::Term> sum_alpha;
        blk.shares.resize(prof.num_levels());
        for (std::size_t k = 0; k < prof.num_levels(); ++k) {
            const std::size_t a = lp.add_variable(costed ? prof.setup_cost[k] : 0.0);
            blk.alpha.push_back(a);
            sum_alpha.push_back({a, 1.0});
            if (prof.capacity[k] <= 0.0) continue;
            std::vector<lp::Term> cap{{a, -1.0}};
            for (std::size_t c = 0; c < nc; ++c) {
                if (!holds(inst, edge.from, c)) continue;
                const std::size_t b = lp.add_variable(costed ? prof.unit_cost * prof.capacity[k] : 0.0);
                blk.shares[k].push_back({c, b});
                cap.push_back({b, 1.0});
                flow(edge.from, c, b, -prof.capacity[k]);
                flow(edge.to, c, b, prof.capacity[k]);
            }
            lp.add_constraint(std::move(cap), lp::Sense::le, 0.0);
        }
        lp.add_constraint(std::move(sum_alpha), lp::Sense::eq, 1.0);
    }

    // Wireless transmission.
    prog->wireless.resize(t.num_nodes());
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        auto& blk = prog->wireless[i];
        const auto& node = inst.wireless.nodes[i];
        const double energy = costed ? node.power_cost * tau : 0.0;
        const std::size_t G = ch.num_states();
        const std::size_t L = ch.links.size();
        if (!d.options.envelope) {
            const auto& acts = d.actions[i];
            blk.gamma.resize(G);
            blk.shares.resize(G);
            for (std::size_t g = 0; g < G; ++g) {
                const double pg = ch.probability[g];
                std::vector<lp::Term> sum_gamma;
                blk.shares[g].resize(acts.size());
                for (std::size_t a = 0; a < acts.size(); ++a) {
                    double watts = 0.0;
                    for (double p : acts[a]) watts += p;
                    const std::size_t gv = lp.add_variable(energy * pg * watts);
                    blk.gamma[g].push_back(gv);
                    sum_gamma.push_back({gv, 1.0});
                    blk.shares[g][a].resize(L);
                    for (std::size_t k = 0; k < L; ++k) {
                        const double p = acts[a][k];
                        if (!(p > 0.0)) continue;
                        const std::size_t l = ch.links[k];
                        const double cap = slot_rate(ch.gains[g][k], p, radio);
                        std::vector<lp::Term> row{{gv, -1.0}};
                        for (std::size_t c = 0; c < nc; ++c) {
                            if (!link_carries(inst, l, c)) continue;
                            const std::size_t b = lp.add_variable(0.0);
                            blk.shares[g][a][k].push_back({c, b});
                            row.push_back({b, 1.0});
                            flow(t.wireless_links[l].from, c, b, -pg * cap);
                            flow(t.wireless_links[l].to, c, b, pg * cap);
                        }
                        lp.add_constraint(std::move(row), lp::Sense::le, 0.0);
                    }
                }
                lp.add_constraint(std::move(sum_gamma), lp::Sense::eq, 1.0);
            }
        } else {
            const bool ue = t.is_ue(i);
            const auto pts = tangent_points(node.power_budget, d.options.tangents);
            blk.activity.resize(G);
            blk.power.resize(G);
            blk.rate.resize(G);
            for (std::size_t g = 0; g < G; ++g) {
                const double pg = ch.probability[g];
                std::vector<lp::Term> sum_activity;
                std::vector<lp::Term> sum_power;
                blk.rate[g].resize(L);
                for (std::size_t k = 0; k < L; ++k) {
                    const std::size_t l = ch.links[k];
                    const double gain = ch.gains[g][k];
                    const std::size_t act = ue ? lp.add_variable(0.0) : npos;
                    const std::size_t pw = lp.add_variable(energy * pg);
                    blk.activity[g].push_back(act);
                    blk.power[g].push_back(pw);
                    if (ue) {
                        sum_activity.push_back({act, 1.0});
                        lp.add_constraint({{pw, 1.0}, {act, -node.power_budget}}, lp::Sense::le, 0.0);
                    } else {
                        sum_power.push_back({pw, 1.0});
                    }
                    std::vector<lp::Term> shares;
                    for (std::size_t c = 0; c < nc; ++c) {
                        if (!link_carries(inst, l, c)) continue;
                        const std::size_t b = lp.add_variable(0.0);
                        blk.rate[g][k].push_back({c, b});
                        shares.push_back({b, 1.0});
                        flow(t.wireless_links[l].from, c, b, -pg);
                        flow(t.wireless_links[l].to, c, b, pg);
                    }
                    for (double p : pts) {
                        const double slope = tau * rate_slope(gain, p, radio);
                        const double intercept = slot_rate(gain, p, radio) - slope * p;
                        auto row = shares;
                        row.push_back({pw, -slope});
                        if (ue) {
                            row.push_back({act, -intercept});
                            lp.add_constraint(std::move(row), lp::Sense::le, 0.0);
                        } else {
                            lp.add_constraint(std::move(row), lp::Sense::le, intercept);
                        }
                    }
                }
                if (ue)
                    lp.add_constraint(std::move(sum_activity), lp::Sense::le, 1.0);
                else
                    lp.add_constraint(std::move(sum_power), lp::Sense::le, node.power_budget);
            }
        }
    }

    // Flow conservation with exogenous arrivals on the right.
    if (objective == Objective::max_throughput) {
        prog->theta = lp.add_variable(-1.0);
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            if (!has_row(inst, i, c)) continue;
            auto terms = std::move(rows[i * nc + c]);
            double lambda = 0.0;
            const auto& item = space[c];
            if (item.dest == i && item.stage == 1) lambda = rates[i * ns + item.service];
            double rhs = 0.0;
            if (prog->theta != npos) {
                if (lambda > 0.0) terms.push_back({prog->theta, lambda});
            } else {
                rhs = -lambda;
            }
            if (terms.empty() && rhs == 0.0) continue;
            lp.add_constraint(std::move(terms), lp::Sense::le, rhs);
        }
    return prog;
}

namespace {

double expected_cost(const DiscreteInstance& d, const OracleSolution& s) {
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const double tau = inst.wireless.radio.slot_seconds;
    double cost = 0.0;
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& prof = inst.compute[i];
        const auto& pol = s.compute[i];
        for (std::size_t k = 0; k < prof.num_levels(); ++k) {
            cost += pol.alpha[k] * prof.setup_cost[k];
            for (const auto& sh : pol.shares[k]) cost += prof.unit_cost * prof.capacity[k] * sh.value;
        }
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto& prof = inst.wired[e];
        const auto& pol = s.wired[e];
        for (std::size_t k = 0; k < prof.num_levels(); ++k) {
            cost += pol.alpha[k] * prof.setup_cost[k];
            for (const auto& sh : pol.shares[k]) cost += prof.unit_cost * prof.capacity[k] * sh.value;
        }
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        const double unit = inst.wireless.nodes[i].power_cost * tau;
        const auto& pol = s.wireless[i];
        for (std::size_t g = 0; g < ch.num_states(); ++g) {
            if (!d.options.envelope) {
                for (std::size_t a = 0; a < d.actions[i].size(); ++a) {
                    double watts = 0.0;
                    for (double p : d.actions[i][a]) watts += p;
                    cost += unit * ch.probability[g] * pol.action_prob[g][a] * watts;
                }
            } else {
                for (double p : pol.mean_power[g]) cost += unit * ch.probability[g] * p;
            }
        }
    }
    return cost;
}

// Flows implied by the recovered policy.
void policy_flows(const DiscreteInstance& d, const OracleSolution& s, std::vector<double>& proc,
                  std::vector<double>& wired, std::vector<double>& wireless) {
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    const auto& radio = inst.wireless.radio;
    const std::size_t nc = space.size();
    proc.assign(t.num_nodes() * nc, 0.0);
    wired.assign(t.wired_edges.size() * nc, 0.0);
    wireless.assign(t.wireless_links.size() * nc, 0.0);
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& prof = inst.compute[i];
        for (std::size_t k = 0; k < prof.num_levels(); ++k)
            for (const auto& sh : s.compute[i].shares[k])
                proc[i * nc + sh.commodity] += prof.capacity[k] / space.workload()[sh.commodity] * sh.value;
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto& prof = inst.wired[e];
        for (std::size_t k = 0; k < prof.num_levels(); ++k)
            for (const auto& sh : s.wired[e].shares[k]) wired[e * nc + sh.commodity] += prof.capacity[k] * sh.value;
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        const auto& pol = s.wireless[i];
        for (std::size_t g = 0; g < ch.num_states(); ++g) {
            const double pg = ch.probability[g];
            for (std::size_t k = 0; k < ch.links.size(); ++k) {
                const std::size_t l = ch.links[k];
                if (!d.options.envelope) {
                    for (std::size_t a = 0; a < d.actions[i].size(); ++a) {
                        const double p = d.actions[i][a][k];
                        if (!(p > 0.0)) continue;
                        const double cap = slot_rate(ch.gains[g][k], p, radio);
                        for (const auto& sh : pol.shares[g][a][k]) wireless[l * nc + sh.commodity] += pg * cap * sh.value;
                    }
                } else {
                    for (const auto& sh : pol.rate_shares[g][k]) wireless[l * nc + sh.commodity] += pg * sh.value;
                }
            }
        }
    }
}

} // namespace

OracleSolution solve(const DiscreteInstance& d, const PolicyProgram& prog) {
    OracleSolution s;
    s.objective = prog.objective;
    s.lower_bound = d.options.envelope;
    s.variables = prog.lp.num_variables();
    s.constraints = prog.lp.num_constraints();
    const auto sol = lp::solve(prog.lp);
    s.status = sol.status;
    s.iterations = sol.iterations;
    s.max_violation = sol.max_violation;
    if (sol.status != lp::Status::optimal) return s;
    const auto& x = sol.x;

    auto levels = [&](const PolicyProgram::Levels& blk) {
        LevelPolicy p;
        for (std::size_t a : blk.alpha) p.alpha.push_back(x[a]);
        p.shares.resize(blk.shares.size());
        for (std::size_t k = 0; k < blk.shares.size(); ++k)
            for (const auto& vs : blk.shares[k])
                if (x[vs.var] > 0.0) p.shares[k].push_back({vs.commodity, x[vs.var]});
        return p;
    };
    for (const auto& blk : prog.compute) s.compute.push_back(levels(blk));
    for (const auto& blk : prog.wired) s.wired.push_back(levels(blk));
    s.wireless.resize(prog.wireless.size());
    for (std::size_t i = 0; i < prog.wireless.size(); ++i) {
        const auto& blk = prog.wireless[i];
        auto& pol = s.wireless[i];
        for (std::size_t g = 0; g < blk.gamma.size(); ++g) {
            pol.action_prob.emplace_back();
            pol.shares.emplace_back();
            for (std::size_t a = 0; a < blk.gamma[g].size(); ++a) {
                pol.action_prob[g].push_back(x[blk.gamma[g][a]]);
                pol.shares[g].emplace_back();
                for (const auto& list : blk.shares[g][a]) {
                    pol.shares[g][a].emplace_back();
                    for (const auto& vs : list)
                        if (x[vs.var] > 0.0) pol.shares[g][a].back().push_back({vs.commodity, x[vs.var]});
                }
            }
        }
        for (std::size_t g = 0; g < blk.power.size(); ++g) {
            pol.activity.emplace_back();
            pol.mean_power.emplace_back();
            pol.rate_shares.emplace_back();
            for (std::size_t k = 0; k < blk.power[g].size(); ++k) {
                pol.activity[g].push_back(blk.activity[g][k] == npos ? 1.0 : x[blk.activity[g][k]]);
                pol.mean_power[g].push_back(x[blk.power[g][k]]);
                pol.rate_shares[g].emplace_back();
                for (const auto& vs : blk.rate[g][k])
                    if (x[vs.var] > 0.0) pol.rate_shares[g].back().push_back({vs.commodity, x[vs.var]});
            }
        }
    }
    s.theta = prog.theta == npos ? 0.0 : x[prog.theta];
    s.rates = prog.rates;
    if (prog.theta != npos)
        for (double& r : s.rates) r *= s.theta;
    policy_flows(d, s, s.processing_flow, s.wired_flow, s.wireless_flow);
    s.cost = expected_cost(d, s);
    return s;
}

OracleSolution check_feasible(const DiscreteInstance& d, std::span<const double> rates) {
    return solve(d, *build_policy_program(d, rates, Objective::feasibility));
}

OracleSolution max_throughput(const DiscreteInstance& d, std::span<const double> direction) {
    return solve(d, *build_policy_program(d, direction, Objective::max_throughput));
}

OracleSolution min_cost(const DiscreteInstance& d, std::span<const double> rates) {
    return solve(d, *build_policy_program(d, rates, Objective::min_cost));
}

double verify_certificate(const DiscreteInstance& d, const OracleSolution& s) {
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    const auto& radio = inst.wireless.radio;
    const std::size_t nc = space.size();
    const std::size_t ns = inst.services.size();
    double worst = 0.0;
    auto excess = [&](double v) { worst = std::max(worst, v); };

    auto check_levels = [&](const LevelPolicy& p) {
        double total = 0.0;
        for (std::size_t k = 0; k < p.alpha.size(); ++k) {
            excess(-p.alpha[k]);
            total += p.alpha[k];
            double used = 0.0;
            for (const auto& sh : p.shares[k]) {
                excess(-sh.value);
                used += sh.value;
            }
            excess(used - p.alpha[k]);
        }
        excess(std::abs(total - 1.0));
    };
    for (const auto& p : s.compute) check_levels(p);
    for (const auto& p : s.wired) check_levels(p);

    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        const auto& pol = s.wireless[i];
        const auto& node = inst.wireless.nodes[i];
        for (std::size_t g = 0; g < ch.num_states(); ++g) {
            if (!d.options.envelope) {
                double total = 0.0;
                for (std::size_t a = 0; a < d.actions[i].size(); ++a) {
                    const double psi = pol.action_prob[g][a];
                    excess(-psi);
                    total += psi;
                    double watts = 0.0;
                    std::size_t nonzero = 0;
                    for (double p : d.actions[i][a]) {
                        watts += p;
                        nonzero += p > 0.0 ? 1 : 0;
                    }
                    excess(watts - node.power_budget);
                    if (t.is_ue(i) && nonzero > 1) excess(1.0);
                    for (const auto& list : pol.shares[g][a]) {
                        double used = 0.0;
                        for (const auto& sh : list) {
                            excess(-sh.value);
                            used += sh.value;
                        }
                        excess(used - psi);
                    }
                }
                excess(std::abs(total - 1.0));
            } else {
                const auto pts = tangent_points(node.power_budget, d.options.tangents);
                double activity = 0.0;
                double power = 0.0;
                for (std::size_t k = 0; k < ch.links.size(); ++k) {
                    const double act = pol.activity[g][k];
                    const double pw = pol.mean_power[g][k];
                    excess(-pw);
                    activity += act;
                    power += pw;
                    if (t.is_ue(i)) excess(pw - node.power_budget * act);
                    double rate = 0.0;
                    for (const auto& sh : pol.rate_shares[g][k]) {
                        excess(-sh.value);
                        rate += sh.value;
                    }
                    for (double p : pts) {
                        const double slope = radio.slot_seconds * rate_slope(ch.gains[g][k], p, radio);
                        const double intercept = slot_rate(ch.gains[g][k], p, radio) - slope * p;
                        excess(rate - (intercept * act + slope * pw));
                    }
                }
                if (t.is_ue(i))
                    excess(activity - 1.0);
                else
                    excess(power - node.power_budget);
            }
        }
    }

    std::vector<double> proc, wired, wireless;
    policy_flows(d, s, proc, wired, wireless);
    for (std::size_t k = 0; k < proc.size(); ++k) excess(std::abs(proc[k] - s.processing_flow[k]));
    for (std::size_t k = 0; k < wired.size(); ++k) excess(std::abs(wired[k] - s.wired_flow[k]));
    for (std::size_t k = 0; k < wireless.size(); ++k) excess(std::abs(wireless[k] - s.wireless_flow[k]));

    for (NodeIndex i = 0; i < t.num_nodes(); ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            if (!has_row(inst, i, c)) continue;
            const auto& item = space[c];
            double in = 0.0;
            double out = proc[i * nc + c];
            if (item.stage > 1) in += space.scaling()[c - 1] * proc[i * nc + c - 1];
            if (item.dest == i && item.stage == 1) in += s.rates[i * ns + item.service];
            for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
                if (t.wired_edges[e].to == i) in += wired[e * nc + c];
                if (t.wired_edges[e].from == i) out += wired[e * nc + c];
            }
            for (std::size_t l = 0; l < t.wireless_links.size(); ++l) {
                if (t.wireless_links[l].to == i) in += wireless[l * nc + c];
                if (t.wireless_links[l].from == i) out += wireless[l * nc + c];
            }
            excess(in - out);
        }
    return worst;
}

Decision sample_randomized_policy(const DiscreteInstance& d, const OracleSolution& s, Rng& rng,
                                  const ChannelState& channel) {
    if (d.options.envelope) throw OracleError("oracle: an envelope program has no samplable power actions");
    if (!s.feasible()) throw OracleError("oracle: cannot sample an infeasible solution");
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    const auto& radio = inst.wireless.radio;
    Decision dec = Decision::idle(inst);

    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& pol = s.compute[i];
        const auto& prof = inst.compute[i];
        const std::size_t k = draw_index(rng, pol.alpha, 1.0);
        if (k >= prof.num_levels()) continue;
        dec.compute_level[i] = k;
        const std::size_t c = draw_share(rng, pol.shares[k], pol.alpha[k]);
        if (c != npos) dec.plan.processing.push_back({i, c, prof.capacity[k] / space.workload()[c]});
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        const auto& pol = s.wired[e];
        const auto& prof = inst.wired[e];
        const std::size_t k = draw_index(rng, pol.alpha, 1.0);
        if (k >= prof.num_levels()) continue;
        dec.wired_level[e] = k;
        const std::size_t c = draw_share(rng, pol.shares[k], pol.alpha[k]);
        if (c != npos) dec.plan.wired.push_back({e, c, prof.capacity[k]});
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        if (channel.states.size() != t.wireless_links.size())
            throw OracleError("oracle: the randomized policy needs the quantized channel");
        const std::size_t g = d.csi_index(i, channel.states);
        const auto& pol = s.wireless[i];
        const std::size_t a = draw_index(rng, pol.action_prob[g], 1.0);
        if (a >= d.actions[i].size()) continue;
        for (std::size_t k = 0; k < ch.links.size(); ++k) {
            const double p = d.actions[i][a][k];
            if (!(p > 0.0)) continue;
            const std::size_t l = ch.links[k];
            dec.power[l] = p;
            dec.wireless_capacity[l] = slot_rate(channel.gains[l], p, radio);
            if (t.is_ue(i)) dec.association[i] = t.wireless_links[l].to;
            const std::size_t c = draw_share(rng, pol.shares[g][a][k], pol.action_prob[g][a]);
            if (c != npos && dec.wireless_capacity[l] > 0.0)
                dec.plan.wireless.push_back({l, c, dec.wireless_capacity[l]});
        }
    }
    return dec;
}

RandomizedPolicyController::RandomizedPolicyController(DiscreteInstance d, OracleSolution s)
    : discrete_(std::move(d)), solution_(std::move(s)) {}

Decision RandomizedPolicyController::decide(const SlotContext& ctx) {
    return sample_randomized_policy(discrete_, solution_, ctx.rng, ctx.channel);
}

std::unique_ptr<RandomizedPolicyController> make_oracle_controller(const Instance& instance,
                                                                   DiscretizeOptions options, double margin) {
    options.envelope = false;
    DiscreteInstance d = discretize(instance, options);
    std::vector<double> padded = instance.arrivals.rates;
    for (double& r : padded) r *= 1.0 + margin;
    OracleSolution s = min_cost(d, padded);
    if (!s.feasible()) s = min_cost(d, instance.arrivals.rates);
    if (!s.feasible())
        throw OracleError(std::string("oracle: arrival rates outside the discretized capacity region (") +
                          lp::to_string(s.status) + ")");
    return std::make_unique<RandomizedPolicyController>(std::move(d), std::move(s));
}

Instance project_instance(const Instance& instance, NodeIndex ue) {
    const auto& t = instance.topology;
    if (!t.is_ue(ue)) throw ConfigError("projection: node is not a UE");
    NodeIndex server = no_server;
    double best = std::numeric_limits<double>::infinity();
    for (NodeIndex s : t.coverage[ue]) {
        const double dist = std::hypot(t.positions[ue].x - t.positions[s].x, t.positions[ue].y - t.positions[s].y);
        if (dist < best) {
            best = dist;
            server = s;
        }
    }
    Instance p;
    auto& pt = p.topology;
    pt.ids = {t.ids[ue], t.ids[server]};
    pt.num_ues = 1;
    pt.positions = {t.positions[ue], t.positions[server]};
    pt.coverage = {{1}};
    pt.area_side = t.area_side;
    pt.mobility_variance = 0.0;
    pt.index_links();
    p.services = instance.services;
    p.commodities = CommoditySpace(pt, p.services);
    p.compute = {instance.compute[ue], instance.compute[server]};
    p.wireless.radio = instance.wireless.radio;
    p.wireless.radio.mode = ChannelMode::quantized;
    p.wireless.nodes = {instance.wireless.nodes[ue], instance.wireless.nodes[server]};
    const std::size_t ns = instance.services.size();
    p.arrivals.a_max_factor = instance.arrivals.a_max_factor;
    p.arrivals.rates.assign(instance.arrivals.rates.begin() + static_cast<std::ptrdiff_t>(ue * ns),
                            instance.arrivals.rates.begin() + static_cast<std::ptrdiff_t>((ue + 1) * ns));
    validate(p);
    p.source = to_config(p);
    return p;
}

nlohmann::json to_json(const DiscreteInstance& d, const OracleSolution& s) {
    using nlohmann::json;
    const Instance& inst = d.instance;
    const auto& t = inst.topology;
    const auto& space = inst.commodities;
    auto commodity = [&](std::size_t c) {
        const auto& item = space[c];
        return json{{"dest", t.ids[item.dest]}, {"service", inst.services[item.service].id}, {"stage", item.stage}};
    };
    auto shares = [&](const std::vector<Share>& list) {
        json out = json::array();
        for (const auto& sh : list) out.push_back({{"commodity", commodity(sh.commodity)}, {"value", sh.value}});
        return out;
    };
    json j;
    const char* objective = s.objective == Objective::feasibility      ? "feasibility"
                            : s.objective == Objective::max_throughput ? "max_throughput"
                                                                       : "min_cost";
    j["status"] = lp::to_string(s.status);
    j["objective"] = objective;
    j["lower_bound"] = s.lower_bound;
    j["variables"] = s.variables;
    j["constraints"] = s.constraints;
    j["iterations"] = s.iterations;
    if (!s.feasible()) return j;
    j["theta"] = s.theta;
    j["cost"] = s.cost;
    j["rates"] = s.rates;
    j["max_violation"] = s.max_violation;
    j["certificate_violation"] = verify_certificate(d, s);
    json compute = json::array();
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        json levels = json::array();
        for (std::size_t k = 0; k < s.compute[i].alpha.size(); ++k)
            levels.push_back({{"level", k}, {"alpha", s.compute[i].alpha[k]}, {"shares", shares(s.compute[i].shares[k])}});
        compute.push_back({{"node", t.ids[i]}, {"levels", levels}});
    }
    j["compute"] = compute;
    json wired = json::array();
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) {
        json levels = json::array();
        for (std::size_t k = 0; k < s.wired[e].alpha.size(); ++k)
            levels.push_back({{"level", k}, {"alpha", s.wired[e].alpha[k]}, {"shares", shares(s.wired[e].shares[k])}});
        wired.push_back({{"from", t.ids[t.wired_edges[e].from]}, {"to", t.ids[t.wired_edges[e].to]}, {"levels", levels}});
    }
    j["wired"] = wired;
    json radio = json::array();
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        const auto& ch = d.channel[i];
        if (ch.links.empty()) continue;
        const auto& pol = s.wireless[i];
        json states = json::array();
        for (std::size_t g = 0; g < ch.num_states(); ++g) {
            json st{{"probability", ch.probability[g]}, {"gains", ch.gains[g]}};
            if (!d.options.envelope) {
                json acts = json::array();
                for (std::size_t a = 0; a < d.actions[i].size(); ++a) {
                    if (!(pol.action_prob[g][a] > 0.0)) continue;
                    json per_link = json::array();
                    for (const auto& list : pol.shares[g][a]) per_link.push_back(shares(list));
                    acts.push_back({{"power", d.actions[i][a]}, {"probability", pol.action_prob[g][a]}, {"shares", per_link}});
                }
                st["actions"] = acts;
            } else {
                json per_link = json::array();
                for (const auto& list : pol.rate_shares[g]) per_link.push_back(shares(list));
                st["activity"] = pol.activity[g];
                st["mean_power"] = pol.mean_power[g];
                st["rate_shares"] = per_link;
            }
            states.push_back(st);
        }
        json links = json::array();
        for (std::size_t l : ch.links) links.push_back(t.ids[t.wireless_links[l].to]);
        radio.push_back({{"node", t.ids[i]}, {"to", links}, {"states", states}});
    }
    j["wireless"] = radio;
    return j;
}

} // namespace mecnc
