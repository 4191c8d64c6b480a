#include "mecnc/stochastic.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

namespace mecnc {

namespace {

Rng seeded(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream, 0x6d65636eu};
    return Rng(seq);
}

} // namespace

RngStreams::RngStreams(std::uint64_t seed)
    : mobility(seeded(seed, 1)), channel(seeded(seed, 2)), arrivals(seeded(seed, 3)),
      policy(seeded(seed, 4)) {}

double reflect(double coord, double side) {
    // A displacement can cross the area more than once when it is large
    // relative to the side.
    while (coord < 0.0 || coord > side) {
        if (coord < 0.0) coord = -coord;
        if (coord > side) coord = 2.0 * side - coord;
    }
    return coord;
}

void step_mobility(std::span<Vec2> positions, std::size_t num_ues, double variance,
                   double area_side, Rng& rng) {
    if (variance <= 0.0) return;
    std::normal_distribution<double> step(0.0, std::sqrt(variance));
    for (std::size_t u = 0; u < num_ues; ++u) {
        const double dx = step(rng);
        const double dy = step(rng);
        positions[u].x = reflect(positions[u].x + dx, area_side);
        positions[u].y = reflect(positions[u].y + dy, area_side);
    }
}

double path_loss_db(double distance_m, double carrier_ghz, double min_distance) {
    const double d = std::max(distance_m, min_distance);
    return 32.4 + 20.0 * std::log10(carrier_ghz) + 31.9 * std::log10(d);
}

std::vector<double> mean_gain_db(const Topology& topology, std::span<const Vec2> positions,
                                 const RadioParams& radio) {
    std::vector<double> out;
    out.reserve(topology.wireless_links.size());
    for (const auto& link : topology.wireless_links) {
        const Vec2 a = positions[link.from];
        const Vec2 b = positions[link.to];
        const double d = std::hypot(a.x - b.x, a.y - b.y);
        out.push_back(radio.antenna_gain_db -
                      path_loss_db(d, radio.carrier_hz / 1e9, radio.min_distance_m));
    }
    return out;
}

std::vector<double> shadowing_levels_db(const RadioParams& radio) {
    std::vector<double> out;
    const boost::math::normal_distribution<double> unit;
    const auto q = radio.quantiles;
    for (std::size_t k = 0; k < q; ++k) {
        const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(q);
        out.push_back(radio.shadow_sigma_db * boost::math::quantile(unit, p));
    }
    return out;
}

ChannelState sample_channel_gains(const Topology& topology, std::span<const Vec2> positions,
                                  const RadioParams& radio, Rng& rng) {
    ChannelState ch;
    const auto mean = mean_gain_db(topology, positions, radio);
    ch.gains.resize(mean.size());
    if (radio.mode == ChannelMode::quantized) {
        const auto levels = shadowing_levels_db(radio);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(levels.size() - 1));
        ch.states.resize(mean.size());
        for (std::size_t l = 0; l < mean.size(); ++l) {
            ch.states[l] = pick(rng);
            ch.gains[l] = db_to_linear(mean[l] + levels[ch.states[l]]);
        }
        return ch;
    }
    std::normal_distribution<double> shadow(0.0, 1.0);
    for (std::size_t l = 0; l < mean.size(); ++l)
        ch.gains[l] = db_to_linear(mean[l] - radio.shadow_sigma_db * shadow(rng));
    return ch;
}

std::vector<double> arrival_caps(std::span<const double> rates, double factor) {
    std::vector<double> caps;
    caps.reserve(rates.size());
    for (double r : rates) caps.push_back(std::ceil(factor * r));
    return caps;
}

ArrivalBatch sample_arrivals(Rng& rng, std::span<const double> rates, std::span<const double> caps) {
    ArrivalBatch batch;
    batch.counts.resize(rates.size(), 0.0);
    for (std::size_t k = 0; k < rates.size(); ++k) {
        if (rates[k] <= 0.0) continue;
        std::poisson_distribution<long long> draw(rates[k]);
        batch.counts[k] = std::min(static_cast<double>(draw(rng)), caps[k]);
    }
    return batch;
}

double link_rate(double gain, double power, const RadioParams& radio) {
    if (power <= 0.0) return 0.0;
    return radio.bandwidth_hz / radio.packet_bits *
           std::log2(1.0 + gain * power / radio.noise_watts());
}

std::vector<double> link_capacities(const ChannelState& channel, std::span<const double> power,
                                    const RadioParams& radio) {
    std::vector<double> caps(power.size());
    for (std::size_t l = 0; l < power.size(); ++l)
        caps[l] = link_rate(channel.gains[l], power[l], radio) * radio.slot_seconds;
    return caps;
}

} // namespace mecnc
