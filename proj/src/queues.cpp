#include "mecnc/queues.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mecnc {

namespace {

constexpr double kSlack = 1e-9;

bool within(double used, double limit) { return used <= limit * (1.0 + kSlack) + kSlack; }

[[noreturn]] void reject(const std::string& msg) { throw PlanError(msg); }

void check_amount(double amount, const char* kind) {
    if (!std::isfinite(amount) || amount < 0.0)
        reject(std::string(kind) + " flow must be finite and nonnegative");
}

template <class Flow, class Key>
std::vector<std::size_t> execution_order(const std::vector<Flow>& flows, Key key) {
    std::vector<std::size_t> order(flows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(flows[a]) < key(flows[b]); });
    return order;
}

} // namespace

void Ledger::push(Slot origin, double amount) {
    if (!(amount > 0.0)) return;
    if (!empty() && items_.back().origin == origin)
        items_.back().amount += amount;
    else
        items_.push_back({origin, amount});
    total_ += amount;
}

double Ledger::take(double amount, std::vector<Batch>& out) {
    if (!(amount > 0.0) || empty()) return 0.0;
    if (amount >= total_) {
        const double taken = total_;
        if (out.empty() && head_ == 0)
            out.swap(items_);
        else
            out.insert(out.end(), items_.begin() + static_cast<std::ptrdiff_t>(head_), items_.end());
        clear();
        return taken;
    }
    double remaining = amount;
    while (remaining > 0.0 && head_ < items_.size()) {
        Batch& b = items_[head_];
        if (b.amount <= remaining) {
            out.push_back(b);
            remaining -= b.amount;
            ++head_;
        } else {
            out.push_back({b.origin, remaining});
            b.amount -= remaining;
            remaining = 0.0;
        }
    }
    total_ -= amount;
    if (empty() || total_ < dust)
        clear();
    else
        compact();
    return amount;
}

void Ledger::append(std::vector<Batch>&& slices) {
    if (!empty()) {
        for (const auto& b : slices) push(b.origin, b.amount);
        return;
    }
    // Same totals as pushing one by one; slices never hold adjacent equal
    // origins or nonpositive amounts.
    items_ = std::move(slices);
    head_ = 0;
    total_ = 0.0;
    for (const auto& b : items_) total_ += b.amount;
}

void Ledger::clear() {
    items_.clear();
    head_ = 0;
    total_ = 0.0;
}

void Ledger::compact() {
    if (head_ >= 32 && head_ * 2 >= items_.size()) {
        items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
}

QueueState::QueueState(std::size_t num_nodes, std::size_t num_commodities)
    : num_nodes_(num_nodes), num_commodities_(num_commodities),
      backlog_(num_nodes * num_commodities, 0.0), ledgers_(num_nodes * num_commodities) {}

void QueueState::append(NodeIndex node, std::size_t c, std::vector<Batch>&& slices) {
    const std::size_t k = node * num_commodities_ + c;
    ledgers_[k].append(std::move(slices));
    backlog_[k] = ledgers_[k].total();
}

void QueueState::add(NodeIndex node, std::size_t c, Slot origin, double amount) {
    const std::size_t k = node * num_commodities_ + c;
    ledgers_[k].push(origin, amount);
    backlog_[k] = ledgers_[k].total();
}

double QueueState::take(NodeIndex node, std::size_t c, double amount, std::vector<Batch>& out) {
    const std::size_t k = node * num_commodities_ + c;
    const double taken = ledgers_[k].take(amount, out);
    backlog_[k] = ledgers_[k].total();
    return taken;
}

double QueueState::total() const {
    double s = 0.0;
    for (double q : backlog_) s += q;
    return s;
}

Decision Decision::idle(const Instance& instance) {
    const auto& t = instance.topology;
    Decision d;
    d.association.assign(t.num_ues, no_server);
    d.compute_level.assign(t.num_nodes(), 0);
    d.wired_level.assign(t.wired_edges.size(), 0);
    d.power.assign(t.wireless_links.size(), 0.0);
    d.wireless_capacity.assign(t.wireless_links.size(), 0.0);
    return d;
}

void check_decision(const Instance& instance, const Decision& d) {
    const auto& t = instance.topology;
    const auto& space = instance.commodities;
    const std::size_t nl = t.wireless_links.size();

    if (d.association.size() != t.num_ues || d.compute_level.size() != t.num_nodes() ||
        d.wired_level.size() != t.wired_edges.size() || d.power.size() != nl ||
        d.wireless_capacity.size() != nl)
        reject("decision vectors do not match the instance shape");

    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        const NodeIndex s = d.association[u];
        if (s == no_server) continue;
        const auto& cov = t.coverage[u];
        if (std::find(cov.begin(), cov.end(), s) == cov.end())
            reject("UE " + std::to_string(t.ids[u]) + " associated with an uncovered server");
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) {
        double sum = 0.0;
        std::size_t active = 0;
        for (std::size_t l : t.wireless_out[i]) {
            const double p = d.power[l];
            if (!std::isfinite(p) || p < 0.0) reject("power must be finite and nonnegative");
            sum += p;
            if (t.is_ue(i) && p > 0.0) {
                ++active;
                if (d.association[i] != t.wireless_links[l].to)
                    reject("UE " + std::to_string(t.ids[i]) + " transmits to a server it is not associated with");
            }
        }
        if (active > 1) reject("UE " + std::to_string(t.ids[i]) + " transmits on more than one link");
        if (sum > instance.wireless.nodes[i].power_budget + kSlack)
            reject("node " + std::to_string(t.ids[i]) + " exceeds its power budget");
    }
    for (std::size_t l = 0; l < nl; ++l) {
        const double cap = d.wireless_capacity[l];
        if (!std::isfinite(cap) || cap < 0.0) reject("wireless capacity must be finite and nonnegative");
        if (cap > 0.0 && !(d.power[l] > 0.0)) reject("wireless capacity on an unpowered link");
    }

    for (NodeIndex i = 0; i < t.num_nodes(); ++i)
        if (d.compute_level[i] >= instance.compute[i].num_levels()) reject("compute level out of range");
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e)
        if (d.wired_level[e] >= instance.wired[e].num_levels()) reject("wired level out of range");

    std::vector<double> used(t.num_nodes(), 0.0);
    for (const auto& f : d.plan.processing) {
        check_amount(f.amount, "processing");
        if (f.node >= t.num_nodes() || f.commodity >= space.size()) reject("processing flow index out of range");
        if (space.is_final(f.commodity)) reject("processing of a finished commodity");
        if (t.is_ue(f.node) && space[f.commodity].dest != f.node)
            reject("UE " + std::to_string(t.ids[f.node]) + " processes another UE's packets");
        used[f.node] += f.amount * space.workload()[f.commodity];
    }
    for (NodeIndex i = 0; i < t.num_nodes(); ++i)
        if (!within(used[i], instance.compute[i].capacity[d.compute_level[i]]))
            reject("node " + std::to_string(t.ids[i]) + " processing exceeds compute capacity");

    used.assign(t.wired_edges.size(), 0.0);
    for (const auto& f : d.plan.wired) {
        check_amount(f.amount, "wired");
        if (f.link >= t.wired_edges.size() || f.commodity >= space.size()) reject("wired flow index out of range");
        used[f.link] += f.amount;
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e)
        if (!within(used[e], instance.wired[e].capacity[d.wired_level[e]]))
            reject("wired edge " + std::to_string(e) + " exceeds its capacity");

    used.assign(nl, 0.0);
    for (const auto& f : d.plan.wireless) {
        check_amount(f.amount, "wireless");
        if (f.link >= nl || f.commodity >= space.size()) reject("wireless flow index out of range");
        const auto& link = t.wireless_links[f.link];
        const auto& item = space[f.commodity];
        if (t.is_ue(link.from)) {
            if (item.dest != link.from) reject("UE relays another UE's packets");
            if (space.is_final(f.commodity)) reject("UE sends its own finished packets");
        } else if (item.dest != link.to) {
            reject("server sends packets to a UE that is not their destination");
        }
        used[f.link] += f.amount;
    }
    for (std::size_t l = 0; l < nl; ++l)
        if (!within(used[l], d.wireless_capacity[l]))
            reject("wireless link " + std::to_string(l) + " exceeds its rate");
}

SlotOutcome apply_decision(const Instance& instance, QueueState& state, const Decision& d,
                           const ArrivalBatch& arrivals, Slot slot) {
    check_decision(instance, d);
    const auto& t = instance.topology;
    const auto& space = instance.commodities;
    const auto& plan = d.plan;

    SlotOutcome out;
    out.executed.processing.assign(plan.processing.size(), 0.0);
    out.executed.wired.assign(plan.wired.size(), 0.0);
    out.executed.wireless.assign(plan.wireless.size(), 0.0);

    struct Transfer {
        NodeIndex node;
        std::size_t commodity;
        std::vector<Batch> slices;
    };
    std::vector<Transfer> incoming;
    incoming.reserve(plan.processing.size() + plan.wired.size() + plan.wireless.size());

    // Outgoing phase.
    for (std::size_t k : execution_order(plan.processing, [](const ProcessingFlow& f) {
             return std::pair(f.node, f.commodity);
         })) {
        const auto& f = plan.processing[k];
        std::vector<Batch> intake;
        out.executed.processing[k] = state.take(f.node, f.commodity, f.amount, intake);
        if (!intake.empty())
            incoming.push_back(
                {f.node, f.commodity + 1, ledger_age_transfer(intake, space.scaling()[f.commodity])});
    }
    auto by_link = [](const LinkFlow& f) { return std::pair(f.link, f.commodity); };
    for (std::size_t k : execution_order(plan.wired, by_link)) {
        const auto& f = plan.wired[k];
        const auto& e = t.wired_edges[f.link];
        Transfer tr{e.to, f.commodity, {}};
        out.executed.wired[k] = state.take(e.from, f.commodity, f.amount, tr.slices);
        if (!tr.slices.empty()) incoming.push_back(std::move(tr));
    }
    for (std::size_t k : execution_order(plan.wireless, by_link)) {
        const auto& f = plan.wireless[k];
        const auto& l = t.wireless_links[f.link];
        Transfer tr{l.to, f.commodity, {}};
        out.executed.wireless[k] = state.take(l.from, f.commodity, f.amount, tr.slices);
        if (!tr.slices.empty()) incoming.push_back(std::move(tr));
    }

    // Incoming phase.
    for (auto& tr : incoming) {
        if (space.is_final(tr.commodity) && space[tr.commodity].dest == tr.node) {
            for (const auto& b : tr.slices) out.deliveries.items.push_back({tr.commodity, b.amount, slot - b.origin});
        } else {
            state.append(tr.node, tr.commodity, std::move(tr.slices));
        }
    }
    const std::size_t ns = instance.services.size();
    for (NodeIndex u = 0; u < t.num_ues; ++u)
        for (std::size_t s = 0; s < ns; ++s) {
            const double a = arrivals.counts.empty() ? 0.0 : arrivals.counts[u * ns + s];
            if (a > 0.0) state.add(u, space.index(u, s, 1), slot, a);
        }
    return out;
}

std::vector<Batch> ledger_age_transfer(std::span<const Batch> intake, double scaling) {
    std::vector<Batch> out;
    out.reserve(intake.size());
    for (const auto& b : intake) out.push_back({b.origin, b.amount * scaling});
    return out;
}

std::vector<double> scaled_queues(const QueueState& state, std::span<const double> kappa) {
    std::vector<double> out(state.backlogs().size());
    const std::size_t nc = state.num_commodities();
    for (NodeIndex i = 0; i < state.num_nodes(); ++i) {
        const auto q = state.backlogs(i);
        for (std::size_t c = 0; c < nc; ++c) out[i * nc + c] = kappa[c] * q[c];
    }
    return out;
}

} // namespace mecnc
