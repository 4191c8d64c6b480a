#include "doctest.h"

#include <cmath>
#include <vector>

#include "mecnc/metrics.hpp"
#include "support.hpp"

using namespace mecnc;

TEST_CASE("kappa divides by upstream scaling and the total rate") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    const auto& sp = inst.commodities;
    const auto k = kappa(inst);
    const double total = inst.arrivals.total();
    for (std::size_t c = 0; c < sp.size(); ++c) {
        const auto& item = sp[c];
        double prod = 1.0;
        for (std::size_t f = 0; f + 1 < item.stage; ++f) prod *= inst.services[item.service].scaling[f];
        CHECK(k[c] == doctest::Approx(1.0 / (prod * total)));
    }
    CHECK_THROWS_AS(kappa(sp, 0.0), std::domain_error);
    const auto idle = controller_kappa(testing::tiny_instance(0.0));
    CHECK(idle == std::vector<double>{1.0, 1.0});
}

TEST_CASE("slot cost adds setup, unit and energy terms") {
    const auto inst = testing::tiny_instance();
    const auto& sp = inst.commodities;
    Decision d = Decision::idle(inst);
    d.compute_level = {1, 2};
    const std::size_t c1 = sp.index(0, 0, 1);
    d.plan.processing = {{0, c1, 150.0}, {1, c1, 600.0}};
    const std::size_t up = inst.topology.wireless_out[0][0];
    d.association[0] = 1;
    d.power[up] = 0.1;
    d.wireless_capacity[up] = 5.0;
    ExecutedFlows ex{{100.0, 600.0}, {}, {}};
    const auto c = slot_cost(inst, d, ex);
    CHECK(c.proc_setup == doctest::Approx(0.005 + 0.002));
    CHECK(c.proc_unit == doctest::Approx(0.001 * 100.0 / 300.0 + 0.0002 * 600.0 / 300.0));
    CHECK(c.wireless_energy == doctest::Approx(1.0 * 0.1 * 1e-3));
    CHECK(c.wired_setup == 0.0);
    CHECK(c.total() == doctest::Approx(c.proc_setup + c.proc_unit + c.wireless_energy));
}

TEST_CASE("slot record weights backlog and converts deliveries to inputs") {
    auto j = testing::config_json("desk.json");
    const auto inst = build_instance(j);
    const auto& sp = inst.commodities;
    const auto k = kappa(inst);
    QueueState q(inst.topology.num_nodes(), sp.size());
    const std::size_t c3 = sp.index(0, 1, 3);
    q.add(0, c3, 0, 6.0);
    DeliveryRecord del;
    del.items.push_back({c3, 1.0, 4});
    const auto r = make_slot_record(inst, k, q, 7, SlotCost{}, del);
    CHECK(r.backlog == 6.0);
    CHECK(r.weighted_backlog == doctest::Approx(k[c3] * 6.0));
    // Service 2 scales by 1/3 then 1/2: one output packet is six inputs.
    const double inputs = 1.0 / sp.cumulative_scaling()[c3];
    CHECK(inputs == doctest::Approx(6.0));
    CHECK(r.delivered == doctest::Approx(inputs));
    CHECK(r.age_sum == doctest::Approx(4.0 * inputs));
}

TEST_CASE("stability classifier compares trailing and middle quarters") {
    std::vector<double> flat(1000, 50.0);
    CHECK(classify_stability(flat).stable);
    std::vector<double> zero(1000, 0.0);
    CHECK(classify_stability(zero).stable);
    std::vector<double> ramp(1000);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = static_cast<double>(t);
    const auto v = classify_stability(ramp);
    CHECK_FALSE(v.stable);
    CHECK(v.middle_mean == doctest::Approx(624.5));
    CHECK(v.trailing_mean == doctest::Approx(874.5));
    // Saturating growth passes once it levels off by mid-horizon.
    std::vector<double> sat(1000);
    for (std::size_t t = 0; t < sat.size(); ++t) sat[t] = 100.0 * (1.0 - std::exp(-static_cast<double>(t) / 50.0));
    CHECK(classify_stability(sat).stable);
    // Exactly at the ratio still counts as stable.
    std::vector<double> edge(8, 4.0);
    edge[6] = edge[7] = 5.0;
    CHECK(classify_stability(edge).stable);
}

TEST_CASE("batch means standard error") {
    std::vector<double> alt(2000);
    for (std::size_t t = 0; t < alt.size(); ++t) alt[t] = t % 2 ? 1.0 : 3.0;
    CHECK(batch_means_se(alt) == 0.0);
    std::vector<double> steps(200);
    for (std::size_t t = 0; t < steps.size(); ++t) steps[t] = static_cast<double>(t / 100);
    // Two batches of means 0 and 1: sd 1/sqrt(2), se 0.5.
    CHECK(batch_means_se(steps, 2) == doctest::Approx(0.5));
    CHECK(batch_means_se(std::vector<double>(5, 1.0)) == 0.0);
}

TEST_CASE("accumulator skips warm-up and tracks offloading per function") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    const auto& sp = inst.commodities;
    MetricsAccumulator acc(inst, 100, 0.2);
    CHECK(acc.warmup_slots() == 20);
    const NodeIndex server = inst.topology.num_ues;
    Decision d = Decision::idle(inst);
    d.plan.processing = {{0, sp.index(0, 0, 1), 3.0}, {server, sp.index(0, 0, 1), 1.0},
                         {server, sp.index(0, 0, 2), 2.0}};
    ExecutedFlows ex{{3.0, 1.0, 2.0}, {}, {}};
    for (Slot t = 0; t < 100; ++t) {
        SlotRecord r;
        r.slot = t;
        r.cost.proc_setup = t < 20 ? 100.0 : 1.0;
        r.backlog = 10.0;
        r.weighted_backlog = 2.0;
        r.delivered = 1.0;
        r.age_sum = 5.0;
        acc.accumulate(r, d, ex);
    }
    const auto m = acc.finish();
    CHECK(m.slots == 100);
    CHECK(m.measured_slots == 80);
    CHECK(m.mean_cost == 1.0);
    CHECK(m.little_delay_slots == 2.0);
    CHECK(m.age_delay_slots == 5.0);
    CHECK(m.age_delay_ms == doctest::Approx(5.0));
    CHECK(m.mean_backlog == 10.0);
    CHECK(m.stable);
    REQUIRE(m.offload.size() == 4);
    CHECK(m.offload[0].ratio() == doctest::Approx(0.25));
    CHECK(m.offload[1].ratio() == 1.0);
    CHECK(m.offload[2].total == 0.0);
    CHECK(m.offload[2].ratio() == 0.0);
}
