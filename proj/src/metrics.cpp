#include "mecnc/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace mecnc {

KappaTable kappa(const CommoditySpace& space, double total_rate) {
    if (!(total_rate > 0.0)) throw std::domain_error("kappa: total arrival rate must be positive");
    KappaTable out(space.size());
    const auto cum = space.cumulative_scaling();
    for (std::size_t c = 0; c < space.size(); ++c) out[c] = 1.0 / (cum[c] * total_rate);
    return out;
}

KappaTable kappa(const Instance& instance) { return kappa(instance.commodities, instance.arrivals.total()); }

KappaTable controller_kappa(const Instance& instance) {
    const double total = instance.arrivals.total();
    return kappa(instance.commodities, total > 0.0 ? total : 1.0);
}

SlotCost& SlotCost::operator+=(const SlotCost& o) {
    proc_setup += o.proc_setup;
    proc_unit += o.proc_unit;
    wired_setup += o.wired_setup;
    wired_unit += o.wired_unit;
    wireless_energy += o.wireless_energy;
    return *this;
}

SlotCost SlotCost::scaled(double k) const {
    return {proc_setup * k, proc_unit * k, wired_setup * k, wired_unit * k, wireless_energy * k};
}

SlotCost slot_cost(const Instance& instance, const Decision& d, const ExecutedFlows& executed) {
    const auto& t = instance.topology;
    const auto& space = instance.commodities;
    SlotCost c;
    for (NodeIndex i = 0; i < t.num_nodes(); ++i) c.proc_setup += instance.compute[i].setup_cost[d.compute_level[i]];
    for (std::size_t k = 0; k < d.plan.processing.size(); ++k) {
        const auto& f = d.plan.processing[k];
        c.proc_unit += instance.compute[f.node].unit_cost * space.workload()[f.commodity] * executed.processing[k];
    }
    for (std::size_t e = 0; e < t.wired_edges.size(); ++e) c.wired_setup += instance.wired[e].setup_cost[d.wired_level[e]];
    for (std::size_t k = 0; k < d.plan.wired.size(); ++k)
        c.wired_unit += instance.wired[d.plan.wired[k].link].unit_cost * executed.wired[k];
    const double tau = instance.wireless.radio.slot_seconds;
    for (std::size_t l = 0; l < t.wireless_links.size(); ++l) {
        if (!(d.power[l] > 0.0)) continue;
        c.wireless_energy += instance.wireless.nodes[t.wireless_links[l].from].power_cost * d.power[l] * tau;
    }
    return c;
}

SlotRecord make_slot_record(const Instance& instance, std::span<const double> kappa_table,
                            const QueueState& start, Slot slot, const SlotCost& cost,
                            const DeliveryRecord& deliveries) {
    SlotRecord r;
    r.slot = slot;
    r.cost = cost;
    const std::size_t nc = start.num_commodities();
    for (NodeIndex i = 0; i < start.num_nodes(); ++i) {
        const auto q = start.backlogs(i);
        for (std::size_t c = 0; c < nc; ++c) {
            if (q[c] == 0.0) continue;
            r.backlog += q[c];
            if (!kappa_table.empty()) r.weighted_backlog += kappa_table[c] * q[c];
        }
    }
    record_deliveries(instance, deliveries, r);
    return r;
}

void record_deliveries(const Instance& instance, const DeliveryRecord& deliveries, SlotRecord& record) {
    const auto cum = instance.commodities.cumulative_scaling();
    for (const auto& item : deliveries.items) {
        const double input = item.amount / cum[item.commodity];
        record.delivered += input;
        record.age_sum += static_cast<double>(item.age) * input;
    }
}

MetricsAccumulator::MetricsAccumulator(const Instance& instance, std::size_t horizon, double warmup_fraction)
    : instance_(&instance), horizon_(horizon),
      warmup_(static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(horizon)))) {
    for (std::size_t s = 0; s < instance.services.size(); ++s) {
        offload_first_.push_back(offload_.size());
        for (std::size_t f = 1; f < instance.services[s].num_stages(); ++f) offload_.push_back({s, f, 0.0, 0.0});
    }
    backlog_.reserve(horizon);
    cost_.reserve(horizon > warmup_ ? horizon - warmup_ : 0);
}

void MetricsAccumulator::accumulate(const SlotRecord& r, const Decision& d, const ExecutedFlows& executed) {
    backlog_.push_back(r.backlog);
    if (static_cast<std::size_t>(r.slot) < warmup_) return;
    ++measured_;
    cost_sum_ += r.cost;
    cost_.push_back(r.cost.total());
    weighted_sum_ += r.weighted_backlog;
    backlog_sum_ += r.backlog;
    delivered_ += r.delivered;
    age_sum_ += r.age_sum;

    const auto& space = instance_->commodities;
    const auto& t = instance_->topology;
    for (std::size_t k = 0; k < d.plan.processing.size(); ++k) {
        const double amount = executed.processing[k];
        if (amount <= 0.0) continue;
        const auto& f = d.plan.processing[k];
        const auto& item = space[f.commodity];
        auto& o = offload_[offload_first_[item.service] + item.stage - 1];
        o.total += amount;
        if (!t.is_ue(f.node)) o.at_servers += amount;
    }
}

RunMetrics MetricsAccumulator::finish() const {
    RunMetrics m;
    m.slots = backlog_.size();
    m.measured_slots = measured_;
    m.offload = offload_;
    if (measured_ > 0) {
        const double n = static_cast<double>(measured_);
        m.mean_breakdown = cost_sum_.scaled(1.0 / n);
        m.mean_cost = cost_sum_.total() / n;
        m.cost_se = batch_means_se(cost_);
        m.little_delay_slots = weighted_sum_ / n;
        m.mean_backlog = backlog_sum_ / n;
    }
    m.delivered = delivered_;
    m.age_delay_slots = delivered_ > 0.0 ? age_sum_ / delivered_ : 0.0;
    const double ms = instance_->wireless.radio.slot_seconds * 1e3;
    m.little_delay_ms = m.little_delay_slots * ms;
    m.age_delay_ms = m.age_delay_slots * ms;
    m.stable = classify_stability(backlog_).stable;
    return m;
}

double batch_means_se(std::span<const double> series, std::size_t batches) {
    if (batches < 2 || series.size() < batches) return 0.0;
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += series[b * len + k];
        means[b] = s / static_cast<double>(len);
    }
    double mean = 0.0;
    for (double x : means) mean += x;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double x : means) var += (x - mean) * (x - mean);
    var /= static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
}

StabilityVerdict classify_stability(std::span<const double> backlog) {
    StabilityVerdict v;
    const std::size_t n = backlog.size();
    if (n < 4) return v;
    const std::size_t half = n / 2;
    const std::size_t three_q = (3 * n) / 4;
    auto mean = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t k = a; k < b; ++k) s += backlog[k];
        return s / static_cast<double>(b - a);
    };
    v.middle_mean = mean(half, three_q);
    v.trailing_mean = mean(three_q, n);
    if (v.middle_mean == 0.0 && v.trailing_mean == 0.0) return v;
    v.stable = v.trailing_mean <= stability_ratio * v.middle_mean;
    return v;
}

} // namespace mecnc
