#include "doctest.h"

#include <vector>

#include "mecnc/queues.hpp"
#include "support.hpp"

using namespace mecnc;

TEST_CASE("ledger is FIFO and merges equal origins") {
    Ledger l;
    l.push(1, 5.0);
    l.push(1, 1.0);
    l.push(2, 3.0);
    l.push(3, 0.0);
    CHECK(l.total() == 9.0);
    REQUIRE(l.batches().size() == 2);
    CHECK(l.batches()[0].amount == 6.0);

    std::vector<Batch> out;
    CHECK(l.take(7.0, out) == 7.0);
    REQUIRE(out.size() == 2);
    CHECK(out[0].origin == 1);
    CHECK(out[0].amount == 6.0);
    CHECK(out[1].origin == 2);
    CHECK(out[1].amount == 1.0);
    CHECK(l.total() == 2.0);
    CHECK(l.batches()[0].origin == 2);

    out.clear();
    CHECK(l.take(10.0, out) == 2.0);
    CHECK(l.empty());
    CHECK(l.total() == 0.0);
    CHECK(l.take(1.0, out) == 0.0);
}

TEST_CASE("ledger append matches pushing slice by slice") {
    std::vector<Batch> slices{{4, 1.5}, {6, 2.0}, {9, 0.25}};
    Ledger adopted;
    adopted.append(std::vector<Batch>(slices));
    Ledger pushed;
    for (const auto& b : slices) pushed.push(b.origin, b.amount);
    CHECK(adopted.total() == pushed.total());
    REQUIRE(adopted.batches().size() == pushed.batches().size());

    // Into a nonempty ledger the head slice merges with the tail.
    Ledger a, b;
    a.push(4, 1.0);
    b.push(4, 1.0);
    a.append(std::vector<Batch>(slices));
    for (const auto& s : slices) b.push(s.origin, s.amount);
    CHECK(a.total() == b.total());
    REQUIRE(a.batches().size() == 3);
    CHECK(a.batches()[0].amount == 2.5);
}

TEST_CASE("ledger age transfer keeps origins and scales amounts") {
    const std::vector<Batch> in{{2, 4.0}, {5, 1.0}};
    const auto out = ledger_age_transfer(in, 0.5);
    REQUIRE(out.size() == 2);
    CHECK(out[0].origin == 2);
    CHECK(out[0].amount == 2.0);
    CHECK(out[1].amount == 0.5);
}

TEST_CASE("local processing delivers with the age of the input") {
    const auto inst = testing::tiny_instance();
    QueueState q(inst.topology.num_nodes(), inst.commodities.size());
    const std::size_t c1 = inst.commodities.index(0, 0, 1);
    q.add(0, c1, 3, 100.0);

    Decision d = Decision::idle(inst);
    d.compute_level[0] = 1;
    d.plan.processing.push_back({0, c1, 40.0});
    ArrivalBatch a;
    a.counts = {7.0};
    const auto out = apply_decision(inst, q, d, a, 10);
    CHECK(out.executed.processing[0] == 40.0);
    REQUIRE(out.deliveries.items.size() == 1);
    CHECK(out.deliveries.items[0].amount == 40.0);
    CHECK(out.deliveries.items[0].age == 7);
    // 60 left from slot 3, 7 new stamped 10.
    CHECK(q.backlog(0, c1) == 67.0);
    CHECK(q.ledger(0, c1).batches().back().origin == 10);
}

TEST_CASE("outgoing phase sees only start-of-slot backlog") {
    const auto inst = testing::tiny_instance();
    QueueState q(inst.topology.num_nodes(), inst.commodities.size());
    const std::size_t c1 = inst.commodities.index(0, 0, 1);
    Decision d = Decision::idle(inst);
    d.compute_level[0] = 1;
    d.plan.processing.push_back({0, c1, 200.0});
    ArrivalBatch a;
    a.counts = {50.0};
    const auto out = apply_decision(inst, q, d, a, 0);
    CHECK(out.executed.processing[0] == 0.0);
    CHECK(out.deliveries.items.empty());
    CHECK(q.backlog(0, c1) == 50.0);
}

TEST_CASE("uplink then server processing then downlink") {
    const auto inst = testing::tiny_instance();
    const auto& t = inst.topology;
    const auto& sp = inst.commodities;
    QueueState q(t.num_nodes(), sp.size());
    const std::size_t c1 = sp.index(0, 0, 1), c2 = sp.index(0, 0, 2);
    q.add(0, c1, 0, 30.0);
    const std::size_t up = t.wireless_out[0][0];
    const std::size_t down = t.wireless_out[1][0];
    ArrivalBatch none;
    none.counts = {0.0};

    Decision d = Decision::idle(inst);
    d.association[0] = 1;
    d.power[up] = 0.1;
    d.wireless_capacity[up] = 30.0;
    d.plan.wireless.push_back({up, c1, 30.0});
    apply_decision(inst, q, d, none, 1);
    CHECK(q.backlog(1, c1) == 30.0);

    d = Decision::idle(inst);
    d.compute_level[1] = 1;
    d.plan.processing.push_back({1, c1, 30.0});
    auto out = apply_decision(inst, q, d, none, 2);
    CHECK(out.deliveries.items.empty());
    CHECK(q.backlog(1, c2) == 30.0);

    d = Decision::idle(inst);
    d.power[down] = 1.0;
    d.wireless_capacity[down] = 100.0;
    d.plan.wireless.push_back({down, c2, 100.0});
    out = apply_decision(inst, q, d, none, 5);
    CHECK(out.executed.wireless[0] == 30.0);
    REQUIRE(out.deliveries.items.size() == 1);
    CHECK(out.deliveries.items[0].age == 5);
    CHECK(q.total() == 0.0);
}

TEST_CASE("decision checks reject every rule violation") {
    const auto inst = mecnc::build_instance(testing::config_json("desk.json"));
    const auto& t = inst.topology;
    const auto& sp = inst.commodities;
    const NodeIndex s0 = t.num_ues, s1 = t.num_ues + 1;
    auto base = [&] { return Decision::idle(inst); };
    auto link = [&](NodeIndex from, NodeIndex to) {
        for (std::size_t l : t.wireless_out[from])
            if (t.wireless_links[l].to == to) return l;
        FAIL("no such link");
        return std::size_t{0};
    };

    CHECK_NOTHROW(check_decision(inst, base()));

    SUBCASE("two active UE links") {
        auto d = base();
        d.association[0] = s0;
        d.power[link(0, s0)] = 0.05;
        d.power[link(0, s1)] = 0.05;
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("transmitting to an unassociated server") {
        auto d = base();
        d.association[0] = s0;
        d.power[link(0, s1)] = 0.05;
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("power budget") {
        auto d = base();
        d.association[0] = s0;
        d.power[link(0, s0)] = inst.wireless.nodes[0].power_budget * 1.01;
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("compute capacity") {
        auto d = base();
        d.compute_level[s0] = 1;
        const std::size_t c = sp.index(0, 0, 1);
        const double cap = inst.compute[s0].capacity[1];
        d.plan.processing.push_back({s0, c, cap / sp.workload()[c] * 1.001});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
        d.plan.processing.back().amount = cap / sp.workload()[c];
        CHECK_NOTHROW(check_decision(inst, d));
    }
    SUBCASE("UE processes another UE's packets") {
        auto d = base();
        d.compute_level[0] = 1;
        d.plan.processing.push_back({0, sp.index(1, 0, 1), 1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("processing a finished commodity") {
        auto d = base();
        d.compute_level[s0] = 1;
        d.plan.processing.push_back({s0, sp.index(0, 0, 3), 1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("wired capacity at level zero") {
        auto d = base();
        d.plan.wired.push_back({0, 0, 1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("server sends to the wrong UE") {
        auto d = base();
        const std::size_t l = link(s0, 0);
        d.power[l] = 1.0;
        d.wireless_capacity[l] = 10.0;
        d.plan.wireless.push_back({l, sp.index(1, 0, 3), 1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("UE sends finished packets") {
        auto d = base();
        d.association[0] = s0;
        const std::size_t l = link(0, s0);
        d.power[l] = 0.1;
        d.wireless_capacity[l] = 10.0;
        d.plan.wireless.push_back({l, sp.index(0, 0, 3), 1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("capacity on an unpowered link") {
        auto d = base();
        d.wireless_capacity[link(s0, 0)] = 1.0;
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
    SUBCASE("negative flow") {
        auto d = base();
        d.compute_level[s0] = 1;
        d.plan.processing.push_back({s0, 0, -1.0});
        CHECK_THROWS_AS(check_decision(inst, d), PlanError);
    }
}

TEST_CASE("random plans conserve input-equivalent packets and respect the queue bound") {
    const auto inst = mecnc::build_instance(testing::config_json("desk.json"));
    const auto& t = inst.topology;
    QueueState q(t.num_nodes(), inst.commodities.size());
    Rng rng(21);
    const std::vector<double> rates(t.num_ues * inst.services.size(), 20.0);
    const auto caps = arrival_caps(rates, 50.0);
    const auto cum = inst.commodities.cumulative_scaling();
    double arrived = 0.0, delivered = 0.0, worst = 0.0;
    for (Slot s = 0; s < 2000; ++s) {
        const auto d = testing::random_decision(inst, rng, 60.0);
        const auto a = sample_arrivals(rng, rates, caps);
        for (double x : a.counts) arrived += x;
        const QueueState before = q;
        const auto out = apply_decision(inst, q, d, a, s);
        worst = std::max(worst, testing::queue_bound_excess(inst, before, q, d, a));
        for (const auto& item : out.deliveries.items) {
            delivered += item.amount / cum[item.commodity];
            CHECK(item.age >= 0);
            CHECK(item.age <= s);
        }
        for (std::size_t k = 0; k < out.executed.processing.size(); ++k)
            CHECK(out.executed.processing[k] <= d.plan.processing[k].amount);
    }
    CHECK(worst <= 0.0);
    CHECK(testing::input_equivalent_backlog(inst, q) + delivered == doctest::Approx(arrived).epsilon(1e-10));

    // The ledgers agree with the dense backlog view.
    for (NodeIndex i = 0; i < t.num_nodes(); ++i)
        for (std::size_t c = 0; c < inst.commodities.size(); ++c) {
            double s = 0.0;
            for (const auto& b : q.ledger(i, c).batches()) s += b.amount;
            CHECK(s == doctest::Approx(q.backlog(i, c)).epsilon(1e-9));
        }
}

TEST_CASE("scaled queues multiply by kappa per commodity") {
    const auto inst = testing::tiny_instance();
    QueueState q(2, inst.commodities.size());
    q.add(1, 1, 0, 4.0);
    const std::vector<double> k{2.0, 0.5};
    const auto s = scaled_queues(q, k);
    CHECK(s == std::vector<double>{0.0, 0.0, 0.0, 2.0});
}
