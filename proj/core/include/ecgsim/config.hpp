#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecgsim/adc.hpp"
#include "ecgsim/afe.hpp"
#include "ecgsim/link.hpp"
#include "ecgsim/power.hpp"
#include "ecgsim/screening.hpp"
#include "ecgsim/signal.hpp"

namespace ecgsim {

// Full description of one end-to-end run. Defaults reproduce the nominal
// scenario: clean 60 bpm ECG, 1000 sps, lossless channel, nominal radio
// profile. A single master seed feeds every stochastic module through fixed
// derivation streams, so `seed` alone pins the whole run.
struct RunConfig {
    double duration_s = 10.0;
    double sample_rate_hz = 1000.0;
    std::uint64_t seed = 1;
    double target_sps = 1000.0;

    EcgParams signal;
    InterferenceSpec interference;
    AfeConfig afe;
    ElectrodeModel electrodes;
    AdcConfig adc;

    PacketFormat format;
    ConnectionParams connection;
    ChannelModel channel;
    int packets_per_event = 5;

    ConnectionEventProfile power = nominal_event_profile();
    double analog_supply_ua = 3.0;
    double battery_capacity_mah = 150.0;

    ScreeningConfig screening;
    MarConfig mar;
};

// Named derivation streams for the per-module seeds.
enum class SeedStream : std::uint64_t {
    signal = 1,
    interference = 2,
    afe = 3,
    channel = 4,
    link = 5,
    common_mode = 6,
};

std::uint64_t module_seed(const RunConfig& cfg, SeedStream stream);

// Replaces the master seed (and with it every derived module seed).
void apply_seed_override(RunConfig& cfg, std::uint64_t seed);

// Parses the INI-style config file (sections per module, key = value,
// '#'/';' comments). Unknown sections or keys are errors. Returns defaults
// merged with the file's overrides.
RunConfig load_run_config(const std::filesystem::path& path);

// Runs every module validator. Hard violations become ConfigError; advisory
// findings (for example an LPF corner below the monitoring band) come back
// as warning strings.
std::vector<std::string> validate(const RunConfig& cfg);

} // namespace ecgsim
