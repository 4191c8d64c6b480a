#include "doctest.h"

#include "mecnc/model.hpp"
#include "support.hpp"

using namespace mecnc;
using nlohmann::json;

TEST_CASE("commodity space enumerates every (ue, service, stage)") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    const auto& t = inst.topology;
    std::size_t expected = 0;
    for (const auto& s : inst.services) expected += s.num_stages();
    expected *= t.num_ues;
    CHECK(inst.commodities.size() == expected);

    // Ordered by destination, then service, then stage.
    const auto items = inst.commodities.items();
    for (std::size_t c = 1; c < items.size(); ++c) CHECK(items[c - 1] < items[c]);
    for (NodeIndex u = 0; u < t.num_ues; ++u) {
        for (std::size_t c = inst.commodities.block_begin(u); c < inst.commodities.block_end(u); ++c)
            CHECK(items[c].dest == u);
    }
    for (std::size_t c = 0; c < items.size(); ++c) {
        const auto& item = items[c];
        CHECK(inst.commodities.index(item.dest, item.service, item.stage) == c);
        CHECK(inst.commodities.is_final(c) == (item.stage == inst.services[item.service].num_stages()));
    }
}

TEST_CASE("cumulative scaling is the product of upstream factors") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    const auto& sp = inst.commodities;
    for (std::size_t c = 0; c < sp.size(); ++c) {
        const auto& item = sp[c];
        double prod = 1.0;
        for (std::size_t f = 0; f + 1 < item.stage; ++f) prod *= inst.services[item.service].scaling[f];
        CHECK(sp.cumulative_scaling()[c] == doctest::Approx(prod).epsilon(1e-15));
        if (!sp.is_final(c)) {
            CHECK(sp.scaling()[c] == inst.services[item.service].scaling[item.stage - 1]);
            CHECK(sp.workload()[c] == inst.services[item.service].workload[item.stage - 1]);
            CHECK(sp.inverse_workload()[c] == doctest::Approx(1.0 / sp.workload()[c]));
        }
    }
}

TEST_CASE("shipped configs validate") {
    for (const char* name : {"tiny.json", "desk.json", "full.json"}) {
        CAPTURE(name);
        const auto inst = build_instance(testing::config_json(name));
        CHECK_NOTHROW(validate(inst));
    }
}

TEST_CASE("full-scale config has 100 UEs and 4 servers") {
    const auto inst = build_instance(testing::config_json("full.json"));
    CHECK(inst.topology.num_ues == 100);
    CHECK(inst.topology.num_servers() == 4);
    CHECK(inst.services.size() == 2);
    // Two two-function services: 3 + 3 stages per UE.
    CHECK(inst.commodities.size() == 600);
}

TEST_CASE("wireless links follow coverage in both directions") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    const auto& t = inst.topology;
    std::size_t expected = 0;
    for (NodeIndex u = 0; u < t.num_ues; ++u) expected += 2 * t.coverage[u].size();
    CHECK(t.wireless_links.size() == expected);
    for (std::size_t l = 1; l < t.wireless_links.size(); ++l) {
        const auto& a = t.wireless_links[l - 1];
        const auto& b = t.wireless_links[l];
        CHECK(std::pair(a.from, a.to) < std::pair(b.from, b.to));
    }
    for (const auto& l : t.wireless_links) CHECK(t.is_ue(l.from) != t.is_ue(l.to));
}

TEST_CASE("invalid configs are rejected") {
    SUBCASE("UE endpoint on a wired edge") {
        auto j = testing::tiny_json();
        j["wired"] = {{"edges", json::array({json::array({0, 1})})},
                      {"profile", {{"capacity", {0, 10}}, {"setup_cost", {0, 1}}, {"unit_cost", 0}}}};
        CHECK_THROWS_AS(validate(build_instance(j)), ConfigError);
    }
    SUBCASE("mismatched scaling and workload") {
        auto j = testing::tiny_json();
        j["services"][0]["workload"] = {0.1, 0.2};
        CHECK_THROWS_AS(validate(build_instance(j)), ConfigError);
    }
    SUBCASE("service without functions") {
        auto j = testing::tiny_json();
        j["services"][0]["scaling"] = json::array();
        j["services"][0]["workload"] = json::array();
        CHECK_THROWS_AS(validate(build_instance(j)), ConfigError);
    }
    SUBCASE("negative arrival rate") {
        CHECK_THROWS_AS(validate(testing::tiny_instance(-1.0)), ConfigError);
    }
    SUBCASE("two rate specifications") {
        auto j = testing::tiny_json();
        j["arrivals"]["aggregate_mbps"] = 10.0;
        CHECK_THROWS_AS(build_instance(j), ConfigError);
    }
    SUBCASE("missing section") {
        auto j = testing::tiny_json();
        j.erase("compute");
        CHECK_THROWS_AS(build_instance(j), ConfigError);
    }
}

TEST_CASE("aggregate Mb/s splits equally over UEs and services") {
    const auto inst = build_instance(testing::config_json("desk.json"));
    // 1 Mb/s at 1000-bit packets and 1 ms slots is one packet per slot.
    const double r = aggregate_mbps_to_rate(20.0, inst);
    CHECK(r == doctest::Approx(20.0 / static_cast<double>(inst.topology.num_ues * inst.services.size())));
}

TEST_CASE("to_config rebuilds an identical instance") {
    auto inst = build_instance(testing::config_json("desk.json"));
    inst.arrivals.rates[3] = 17.5;
    const auto again = build_instance(to_config(inst));
    const auto& a = inst.topology;
    const auto& b = again.topology;
    CHECK(a.ids == b.ids);
    CHECK(a.num_ues == b.num_ues);
    REQUIRE(a.positions.size() == b.positions.size());
    for (std::size_t n = 0; n < a.positions.size(); ++n) {
        CHECK(a.positions[n].x == b.positions[n].x);
        CHECK(a.positions[n].y == b.positions[n].y);
    }
    CHECK(a.coverage == b.coverage);
    REQUIRE(a.wired_edges.size() == b.wired_edges.size());
    for (std::size_t e = 0; e < a.wired_edges.size(); ++e) {
        CHECK(a.wired_edges[e].from == b.wired_edges[e].from);
        CHECK(a.wired_edges[e].to == b.wired_edges[e].to);
    }
    CHECK(inst.arrivals.rates == again.arrivals.rates);
    CHECK(to_config(inst) == to_config(again));
}
