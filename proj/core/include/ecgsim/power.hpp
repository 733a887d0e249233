#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ecgsim/trace.hpp"

namespace ecgsim {

// Duty-cycled transmitter average power: active while a packet is on the
// air, leaking the rest of the interval.
struct TxPowerParams {
    double p_active_mw = 0.0;
    double t_packet_s = 0.0;
    double p_leakage_mw = 0.0;
    double t_interval_s = 0.0; // idle time between packets
};

// (p_active * t_packet + p_leakage * t_interval) / (t_packet + t_interval)
double avg_power_tx(const TxPowerParams& params);

// Current draw of one connection event, phase by phase.
enum class PhaseKind { setup, xo_startup, rx, tx, transition };

const char* phase_kind_name(PhaseKind kind);

struct EventPhase {
    PhaseKind kind = PhaseKind::setup;
    double current_ma = 0.0;
    double duration_us = 0.0;
    int repetitions = 1;
};

struct ConnectionEventProfile {
    std::vector<EventPhase> phases;
    double t_interval_s = 0.1;           // one event per this interval
    double sleep_current_ma = 0.050;     // floor between events
    double no_coprocessor_current_ma = 3.0; // what the radio burns without one
};

void validate(const ConnectionEventProfile& profile);

// Measured event profile of the duty-cycled radio at one event per 100 ms:
// wakeup/setup, crystal startup, RX window, TX burst and six scheduler
// transitions. The phase sum averages to 244 uA over the interval.
ConnectionEventProfile nominal_event_profile();

// Average of the event phases alone over the interval, in microamps. This is
// the number the phase arithmetic yields before adding any sleep floor.
double phase_average_current_ua(const ConnectionEventProfile& profile);

// Full interval average in microamps: the phase sum plus the sleep floor
// over the remainder of the interval.
double avg_current_interval(const ConnectionEventProfile& profile);

// Hours a battery of `capacity_mah` lasts at `i_avg_ua`; +infinity when the
// draw is zero.
double battery_lifetime(double capacity_mah, double i_avg_ua);

// Piecewise-constant current waveform of one full interval at 1 us
// resolution (milliamps). Its integral matches avg_current_interval.
SampleTrace event_current_waveform(const ConnectionEventProfile& profile);

struct EnergyBudget {
    double digital_avg_ua = 0.0;   // radio + MCU, sleep floor included
    double analog_supply_ua = 3.0; // front-end amplifiers
    double total_avg_ua = 0.0;     // digital + analog, exactly
    double battery_capacity_mah = 150.0;
    double lifetime_h = 0.0;
};

EnergyBudget make_energy_budget(const ConnectionEventProfile& profile,
                                double analog_supply_ua = 3.0,
                                double battery_capacity_mah = 150.0);

std::string budget_text(const EnergyBudget& budget);

// Waveform export on a microsecond time base: header "t_us,current_ma".
void write_waveform_csv(const SampleTrace& waveform,
                        const std::filesystem::path& path);

} // namespace ecgsim
