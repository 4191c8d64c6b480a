#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "mecnc/stochastic.hpp"
#include "support.hpp"

using namespace mecnc;

TEST_CASE("path loss follows the urban micro-cell formula") {
    // 32.4 + 20 log10(30) + 31.9 log10(100)
    CHECK(path_loss_db(100.0, 30.0) == doctest::Approx(32.4 + 29.542425094 + 63.8).epsilon(1e-9));
    CHECK(path_loss_db(1.0, 30.0) == doctest::Approx(32.4 + 29.542425094).epsilon(1e-9));
    // Clamped below the minimum distance.
    CHECK(path_loss_db(0.1, 30.0) == path_loss_db(1.0, 30.0));
}

TEST_CASE("reflection keeps coordinates inside the area") {
    CHECK(reflect(-3.0, 10.0) == 3.0);
    CHECK(reflect(12.0, 10.0) == 8.0);
    CHECK(reflect(5.0, 10.0) == 5.0);
    CHECK(reflect(-23.0, 10.0) == doctest::Approx(3.0));
    CHECK(reflect(0.0, 10.0) == 0.0);
    CHECK(reflect(10.0, 10.0) == 10.0);
}

TEST_CASE("mobility stays in the area and is seed-deterministic") {
    std::vector<Vec2> a(50, Vec2{1.0, 99.0});
    auto b = a;
    Rng ra(4), rb(4);
    for (int t = 0; t < 1000; ++t) {
        step_mobility(a, 50, 4.0, 100.0, ra);
        step_mobility(b, 50, 4.0, 100.0, rb);
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].x >= 0.0);
        CHECK(a[k].x <= 100.0);
        CHECK(a[k].y >= 0.0);
        CHECK(a[k].y <= 100.0);
        CHECK(a[k].x == b[k].x);
        CHECK(a[k].y == b[k].y);
    }
}

TEST_CASE("mobility step variance matches the configuration") {
    std::vector<Vec2> p(1, Vec2{50.0, 50.0});
    Rng rng(11);
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int t = 0; t < n; ++t) {
        const double x0 = p[0].x;
        step_mobility(p, 1, 0.01, 100.0, rng);
        const double d = p[0].x - x0;
        sum += d;
        sq += d * d;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("quantized shadowing levels are symmetric normal quantiles") {
    RadioParams r;
    r.quantiles = 3;
    const auto lv = shadowing_levels_db(r);
    REQUIRE(lv.size() == 3);
    CHECK(lv[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(lv[0] == doctest::Approx(-lv[2]));
    // Phi^-1(5/6) = 0.967421566...
    CHECK(lv[2] == doctest::Approx(8.2 * 0.9674215661017).epsilon(1e-9));
}

TEST_CASE("quantized channel draws equiprobable states") {
    const auto inst = testing::tiny_instance();
    auto radio = inst.wireless.radio;
    const auto levels = shadowing_levels_db(radio);
    const auto mean = mean_gain_db(inst.topology, inst.topology.positions, radio);
    Rng rng(2);
    std::vector<double> freq(levels.size(), 0.0);
    const int n = 30000;
    for (int t = 0; t < n; ++t) {
        const auto ch = sample_channel_gains(inst.topology, inst.topology.positions, radio, rng);
        REQUIRE(ch.states.size() == ch.gains.size());
        for (std::size_t l = 0; l < ch.gains.size(); ++l)
            CHECK(ch.gains[l] == doctest::Approx(db_to_linear(mean[l] + levels[ch.states[l]])));
        freq[ch.states[0]] += 1.0;
    }
    for (double f : freq) CHECK(f / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("lognormal shadowing has the configured spread") {
    auto inst = testing::tiny_instance();
    auto radio = inst.wireless.radio;
    radio.mode = ChannelMode::lognormal;
    const auto mean = mean_gain_db(inst.topology, inst.topology.positions, radio);
    Rng rng(8);
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int t = 0; t < n; ++t) {
        const auto ch = sample_channel_gains(inst.topology, inst.topology.positions, radio, rng);
        const double db = 10.0 * std::log10(ch.gains[0]) - mean[0];
        sum += db;
        sq += db * db;
    }
    const double m = sum / n;
    CHECK(std::abs(m) < 0.15);
    CHECK(std::sqrt(sq / n - m * m) == doctest::Approx(8.2).epsilon(0.02));
}

TEST_CASE("arrivals are Poisson with truncation at the cap") {
    const std::vector<double> rates{0.0, 3.0, 100.0};
    const auto caps = arrival_caps(rates, 50.0);
    CHECK(caps == std::vector<double>{0.0, 150.0, 5000.0});
    Rng rng(5);
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const int n = 50000;
    for (int t = 0; t < n; ++t) {
        const auto b = sample_arrivals(rng, rates, caps);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(b.counts[k] == std::floor(b.counts[k]));
            sum[k] += b.counts[k];
            sq[k] += b.counts[k] * b.counts[k];
        }
    }
    CHECK(sum[0] == 0.0);
    for (std::size_t k = 1; k < 3; ++k) {
        const double m = sum[k] / n;
        CHECK(m == doctest::Approx(rates[k]).epsilon(0.01));
        CHECK(sq[k] / n - m * m == doctest::Approx(rates[k]).epsilon(0.03));
    }

    const std::vector<double> tight{10.0};
    const std::vector<double> cap{2.0};
    for (int t = 0; t < 100; ++t) CHECK(sample_arrivals(rng, tight, cap).counts[0] <= 2.0);
}

TEST_CASE("Shannon rate in packets per second") {
    RadioParams r;
    const double noise = r.noise_watts();
    // -174 dBm/Hz over 100 MHz is about 3.98e-13 W.
    CHECK(noise == doctest::Approx(std::pow(10.0, -17.4) * 1e8 * 1e-3).epsilon(1e-12));
    const double g = 3.0 * noise;
    CHECK(link_rate(g, 1.0, r) == doctest::Approx(1e5 * 2.0));
    CHECK(link_rate(g, 0.0, r) == 0.0);
    ChannelState ch;
    ch.gains = {g, g};
    const std::vector<double> p{1.0, 0.0};
    const auto caps = link_capacities(ch, p, r);
    CHECK(caps[0] == doctest::Approx(200.0));
    CHECK(caps[1] == 0.0);
}

TEST_CASE("streams are independent per purpose") {
    RngStreams a(7), b(7), c(8);
    CHECK(a.mobility() == b.mobility());
    CHECK(a.channel() == b.channel());
    RngStreams d(7);
    CHECK(d.mobility() != d.channel());
    CHECK(RngStreams(7).arrivals() != c.arrivals());
}
