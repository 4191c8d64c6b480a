#pragma once

// All randomness of the slot loop: UE mobility, channel gains and exogenous
// arrivals. Every sampler takes the generator it advances by reference, so
// (seed, config) fully determine a run.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mecnc/model.hpp"

namespace mecnc {

using Rng = std::mt19937_64;

// Independent generators per purpose; toggling one feature never shifts
// another's sequence.
struct RngStreams {
    Rng mobility;
    Rng channel;
    Rng arrivals;
    Rng policy;

    explicit RngStreams(std::uint64_t seed);
};

struct ChannelState {
    std::vector<double> gains;         // linear, per wireless link
    std::vector<std::uint32_t> states; // per wireless link; quantized mode only
};

struct ArrivalBatch {
    std::vector<double> counts; // whole packets, row-major (ue, service)
};

// Reflects a coordinate back into [0, side].
double reflect(double coord, double side);

// Moves every UE by N(0, variance * I) and reflects at the area boundary.
void step_mobility(std::span<Vec2> positions, std::size_t num_ues, double variance,
                   double area_side, Rng& rng);

// 3GPP urban micro-cell: 32.4 + 20 log10(fc_GHz) + 31.9 log10(d). Distances
// below `min_distance` are clamped.
double path_loss_db(double distance_m, double carrier_ghz, double min_distance = 1.0);

// Antenna gain minus path loss for every wireless link at the given positions.
std::vector<double> mean_gain_db(const Topology& topology, std::span<const Vec2> positions,
                                 const RadioParams& radio);

// Shadowing offsets (dB) of the equiprobable quantized states, ascending.
std::vector<double> shadowing_levels_db(const RadioParams& radio);

ChannelState sample_channel_gains(const Topology& topology, std::span<const Vec2> positions,
                                  const RadioParams& radio, Rng& rng);

// ceil(factor * rate), the per-draw truncation bound.
std::vector<double> arrival_caps(std::span<const double> rates, double factor);

ArrivalBatch sample_arrivals(Rng& rng, std::span<const double> rates, std::span<const double> caps);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// (B/F) log2(1 + g p / sigma^2), packets per second.
double link_rate(double gain, double power, const RadioParams& radio);

// Per-link packets-per-slot capacities for a power vector indexed like
// topology.wireless_links.
std::vector<double> link_capacities(const ChannelState& channel, std::span<const double> power,
                                    const RadioParams& radio);

} // namespace mecnc
