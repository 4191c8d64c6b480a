#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mecnc/controller.hpp"
#include "support.hpp"

using namespace mecnc;

namespace {

// Marginal rate weight of link l at power p: w l'(p) with R = s log2(1 + p/b).
double marginal(const WaterfillProblem& p, std::size_t l, double power) {
    return p.weights[l] * p.rate_scale / std::numbers::ln2 / (p.noise_over_gain[l] + power);
}

QueueState random_queues(const Instance& inst, Rng& rng, double scale) {
    QueueState q(inst.topology.num_nodes(), inst.commodities.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (NodeIndex i = 0; i < q.num_nodes(); ++i)
        for (std::size_t c = 0; c < q.num_commodities(); ++c)
            if (unit(rng) < 0.6) q.add(i, c, 0, unit(rng) * scale);
    return q;
}

} // namespace

TEST_CASE("water-filling without a binding budget") {
    WaterfillProblem p{{2.0, 1.0}, {0.01, 0.02}, 1000.0, 1e9, 1e5};
    const auto r = waterfill_power(p);
    CHECK(r.rho == 0.0);
    // Stationarity at the cost: w l'(p) = cost on active links.
    for (std::size_t l = 0; l < 2; ++l) {
        REQUIRE(r.power[l] > 0.0);
        CHECK(marginal(p, l, r.power[l]) == doctest::Approx(p.cost).epsilon(1e-12));
    }
    CHECK(r.objective == doctest::Approx(waterfill_objective(p, r.power)));
}

TEST_CASE("water-filling with a binding budget satisfies the KKT conditions") {
    WaterfillProblem p{{3.0, 1.0, 0.001}, {0.5, 1.0, 0.7}, 0.0, 2.0, 1e5};
    const auto r = waterfill_power(p);
    double sum = 0.0;
    for (double x : r.power) sum += x;
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.rho > 0.0);
    for (std::size_t l = 0; l < 3; ++l) {
        if (r.power[l] > 0.0)
            CHECK(marginal(p, l, r.power[l]) == doctest::Approx(p.cost + r.rho).epsilon(1e-9));
        else
            CHECK(marginal(p, l, 0.0) <= (p.cost + r.rho) * (1.0 + 1e-9));
    }
    CHECK(r.power[2] == 0.0);
}

TEST_CASE("single-link water-filling matches a dense grid") {
    WaterfillProblem p{{0.8}, {3e-4}, 40.0, 0.2, 1e5};
    const auto r = waterfill_power(p);
    double best = 0.0;
    for (int k = 0; k <= 200000; ++k) {
        const double x = p.budget * k / 200000.0;
        best = std::min(best, waterfill_objective(p, std::vector<double>{x}));
    }
    CHECK(r.objective <= best + 1e-9 * std::abs(best));
    CHECK(std::abs(r.rho * (p.budget - r.power[0])) <= 1e-8);
}

TEST_CASE("zero weights leave every link silent") {
    WaterfillProblem p{{0.0, 0.0}, {1.0, 1.0}, 1.0, 1.0, 1e5};
    const auto r = waterfill_power(p);
    CHECK(r.power == std::vector<double>{0.0, 0.0});
    CHECK(r.objective == 0.0);
}

TEST_CASE("processing weights follow the chaining differential") {
    const auto inst = mecnc::build_instance(testing::config_json("desk.json"));
    const auto& sp = inst.commodities;
    Rng rng(3);
    const auto q = random_queues(inst, rng, 100.0);
    const auto kap = controller_kappa(inst);
    const auto scaled = scaled_queues(q, kap);
    const auto w = compute_weights(inst, scaled);
    const std::size_t nc = sp.size();
    for (NodeIndex i = 0; i < inst.topology.num_nodes(); ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            double expected = 0.0;
            const bool allowed = !inst.topology.is_ue(i) || sp[c].dest == i;
            if (allowed && !sp.is_final(c))
                expected = std::max(scaled[i * nc + c] - sp.scaling()[c] * scaled[i * nc + c + 1], 0.0);
            CHECK(w.processing(i)[c] == doctest::Approx(expected).epsilon(1e-14));
        }
    for (std::size_t e = 0; e < inst.topology.wired_edges.size(); ++e) {
        const auto& edge = inst.topology.wired_edges[e];
        for (std::size_t c = 0; c < nc; ++c)
            CHECK(w.wired(e)[c] == std::max(scaled[edge.from * nc + c] - scaled[edge.to * nc + c], 0.0));
    }
}

TEST_CASE("level choice trades capacity against setup cost") {
    const auto inst = testing::tiny_instance();
    const auto& sp = inst.commodities;
    QueueState q(2, sp.size());
    const std::size_t c1 = sp.index(0, 0, 1);
    q.add(1, c1, 0, 300.0);
    const auto kap = controller_kappa(inst);
    const auto w = compute_weights(inst, scaled_queues(q, kap));
    // W = kappa Q / r = 300 / (300 * 1/300) = 300 per CPU.
    const double W = kap[c1] * 300.0 / sp.workload()[c1];

    auto r = decide_processing(inst, 1, w, 0.0);
    CHECK(r.level == 2);
    CHECK(r.commodity == c1);
    CHECK(r.flow == doctest::Approx(2.0 / sp.workload()[c1]));

    // Setup cost 0.001 per CPU level, unit cost 2e-4 per CPU-slot: the
    // weight net of unit cost is W - V c_pr and the level value is linear in
    // k, so a V just above the break-even idles the server.
    const double breakeven = W / (2e-4 + 1e-3);
    CHECK(decide_processing(inst, 1, w, breakeven * 0.99).level == 2);
    CHECK(decide_processing(inst, 1, w, breakeven * 1.01).level == 0);
}

TEST_CASE("controller decisions always pass the plan checks") {
    const auto inst = mecnc::build_instance(testing::config_json("desk.json"));
    Rng rng(9);
    const auto kap = controller_kappa(inst);
    const double Vs[] = {0.0, 1e3, 1e5, 1e7};
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = random_queues(inst, rng, trial % 2 ? 1e5 : 50.0);
        const auto ch = sample_channel_gains(inst.topology, inst.topology.positions, inst.wireless.radio, rng);
        for (double V : Vs) {
            const auto d = mecnc_slot(inst, q, ch, V, kap);
            CHECK_NOTHROW(check_decision(inst, d));
            const auto dl = mecnc_slot(inst, q, ch, V, kap, MecncOptions{true});
            CHECK_NOTHROW(check_decision(inst, dl));
            CHECK(dl.plan.wireless.empty());
            CHECK(dl.plan.wired.empty());
            for (const auto& f : dl.plan.processing) CHECK(inst.topology.is_ue(f.node));
        }
    }
}

TEST_CASE("a UE idles its radio when nothing is worth sending") {
    const auto inst = testing::tiny_instance();
    QueueState q(2, inst.commodities.size());
    const auto kap = controller_kappa(inst);
    Rng rng(1);
    const auto ch = sample_channel_gains(inst.topology, inst.topology.positions, inst.wireless.radio, rng);
    const auto d = mecnc_slot(inst, q, ch, 0.0, kap);
    CHECK(d.association[0] == no_server);
    for (double p : d.power) CHECK(p == 0.0);
    CHECK(d.plan.processing.empty());
}

TEST_CASE("a UE with backlog offloads at V = 0 and sends at full budget") {
    const auto inst = testing::tiny_instance();
    QueueState q(2, inst.commodities.size());
    q.add(0, inst.commodities.index(0, 0, 1), 0, 5000.0);
    const auto kap = controller_kappa(inst);
    Rng rng(1);
    const auto ch = sample_channel_gains(inst.topology, inst.topology.positions, inst.wireless.radio, rng);
    const auto d = mecnc_slot(inst, q, ch, 0.0, kap);
    CHECK(d.association[0] == 1);
    const std::size_t up = inst.topology.wireless_out[0][0];
    CHECK(d.power[up] == doctest::Approx(inst.wireless.nodes[0].power_budget));
    CHECK(d.wireless_capacity[up] ==
          doctest::Approx(link_rate(ch.gains[up], d.power[up], inst.wireless.radio) * 1e-3));
}
