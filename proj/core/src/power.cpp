#include "ecgsim/power.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ecgsim/errors.hpp"

namespace ecgsim {

double avg_power_tx(const TxPowerParams& params) {
    if (params.t_packet_s < 0.0 || params.t_interval_s < 0.0 ||
        !(params.t_packet_s + params.t_interval_s > 0.0)) {
        throw std::invalid_argument(
            "avg_power_tx: times must be >= 0 with a positive sum");
    }
    if (params.p_active_mw < 0.0 || params.p_leakage_mw < 0.0) {
        throw std::invalid_argument("avg_power_tx: powers must be non-negative");
    }
    return (params.p_active_mw * params.t_packet_s +
            params.p_leakage_mw * params.t_interval_s) /
           (params.t_packet_s + params.t_interval_s);
}

const char* phase_kind_name(PhaseKind kind) {
    switch (kind) {
    case PhaseKind::setup: return "setup";
    case PhaseKind::xo_startup: return "xo_startup";
    case PhaseKind::rx: return "rx";
    case PhaseKind::tx: return "tx";
    case PhaseKind::transition: return "transition";
    }
    return "unknown";
}

namespace {

double total_phase_time_us(const ConnectionEventProfile& profile) {
    double total = 0.0;
    for (const auto& phase : profile.phases) {
        total += phase.duration_us * static_cast<double>(phase.repetitions);
    }
    return total;
}

} // namespace

void validate(const ConnectionEventProfile& profile) {
    if (!(profile.t_interval_s > 0.0)) {
        throw std::invalid_argument("ConnectionEventProfile: t_interval must be positive");
    }
    if (profile.sleep_current_ma < 0.0 || profile.no_coprocessor_current_ma < 0.0) {
        throw std::invalid_argument("ConnectionEventProfile: currents must be non-negative");
    }
    for (const auto& phase : profile.phases) {
        if (phase.current_ma < 0.0 || !(phase.duration_us > 0.0) || phase.repetitions < 1) {
            throw std::invalid_argument("ConnectionEventProfile: bad phase entry");
        }
    }
    if (total_phase_time_us(profile) > profile.t_interval_s * 1e6) {
        throw std::invalid_argument(
            "ConnectionEventProfile: phases exceed the event interval");
    }
}

ConnectionEventProfile nominal_event_profile() {
    ConnectionEventProfile profile;
    profile.phases = {
        {PhaseKind::rx, 6.48, 129.0, 1},
        {PhaseKind::tx, 7.66, 1880.0, 1},
        {PhaseKind::xo_startup, 3.22, 1165.0, 1},
        {PhaseKind::setup, 3.99, 132.0, 1},
        {PhaseKind::transition, 5.49, 149.0, 6},
    };
    profile.t_interval_s = 0.1;
    profile.sleep_current_ma = 0.050;
    profile.no_coprocessor_current_ma = 3.0;
    return profile;
}

double phase_average_current_ua(const ConnectionEventProfile& profile) {
    validate(profile);
    double charge_ma_us = 0.0; // mA * us
    for (const auto& phase : profile.phases) {
        charge_ma_us +=
            phase.current_ma * phase.duration_us * static_cast<double>(phase.repetitions);
    }
    // mA*us / us = mA; * 1000 = uA
    return charge_ma_us / (profile.t_interval_s * 1e6) * 1000.0;
}

double avg_current_interval(const ConnectionEventProfile& profile) {
    validate(profile);
    const double interval_us = profile.t_interval_s * 1e6;
    const double active_us = total_phase_time_us(profile);
    const double sleep_ua =
        profile.sleep_current_ma * 1000.0 * (interval_us - active_us) / interval_us;
    return phase_average_current_ua(profile) + sleep_ua;
}

double battery_lifetime(double capacity_mah, double i_avg_ua) {
    if (capacity_mah < 0.0 || i_avg_ua < 0.0) {
        throw std::invalid_argument(
            "battery_lifetime: capacity and current must be >= 0");
    }
    if (capacity_mah == 0.0) {
        return 0.0;
    }
    if (i_avg_ua == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return capacity_mah / (i_avg_ua / 1000.0);
}

SampleTrace event_current_waveform(const ConnectionEventProfile& profile) {
    validate(profile);

    const double fs = 1e6; // 1 us resolution
    const auto n = static_cast<std::size_t>(std::llround(profile.t_interval_s * fs));
    SampleTrace trace = make_trace(fs, Unit::milliamp, n, profile.sleep_current_ma);

    // Phases run back to back from t = 0 in listed order, repetitions
    // consecutively; the rest of the interval sits at the sleep floor. Bins
    // fully inside a phase carry its current; bins straddling a boundary get
    // the time-weighted mix, which keeps the trace integral equal to the
    // closed-form interval average for any (fractional) durations.
    double cursor_us = 0.0;
    for (const auto& phase : profile.phases) {
        const double delta_ma = phase.current_ma - profile.sleep_current_ma;
        for (int r = 0; r < phase.repetitions; ++r) {
            const double end_us = std::min(cursor_us + phase.duration_us,
                                           static_cast<double>(n));
            const auto i0 = std::min(n, static_cast<std::size_t>(cursor_us));
            const auto i1 = std::min(n, static_cast<std::size_t>(std::ceil(end_us)));
            for (std::size_t i = i0; i < i1; ++i) {
                const double lo = std::max(cursor_us, static_cast<double>(i));
                const double hi = std::min(end_us, static_cast<double>(i + 1));
                const double overlap = hi - lo;
                if (overlap >= 1.0) {
                    trace.samples[i] = phase.current_ma;
                } else if (overlap > 0.0) {
                    trace.samples[i] += delta_ma * overlap;
                }
            }
            cursor_us = end_us;
        }
    }
    return trace;
}

EnergyBudget make_energy_budget(const ConnectionEventProfile& profile,
                                double analog_supply_ua,
                                double battery_capacity_mah) {
    if (analog_supply_ua < 0.0) {
        throw std::invalid_argument("make_energy_budget: analog supply must be >= 0");
    }
    EnergyBudget budget;
    budget.digital_avg_ua = avg_current_interval(profile);
    budget.analog_supply_ua = analog_supply_ua;
    budget.total_avg_ua = budget.digital_avg_ua + budget.analog_supply_ua;
    budget.battery_capacity_mah = battery_capacity_mah;
    budget.lifetime_h = battery_lifetime(battery_capacity_mah, budget.total_avg_ua);
    return budget;
}

std::string budget_text(const EnergyBudget& budget) {
    std::ostringstream out;
    out << "I_digital_avg_uA: " << budget.digital_avg_ua << '\n'
        << "I_analog_supply_uA: " << budget.analog_supply_ua << '\n'
        << "I_total_avg_uA: " << budget.total_avg_ua << '\n'
        << "battery_capacity_mAh: " << budget.battery_capacity_mah << '\n'
        << "lifetime_hours: " << budget.lifetime_h << '\n';
    return out.str();
}

void write_waveform_csv(const SampleTrace& waveform, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "t_us,current_ma\n";
    out.precision(12);
    for (std::size_t i = 0; i < waveform.size(); ++i) {
        out << waveform.time_at(i) * 1e6 << ',' << waveform.samples[i] << '\n';
    }
    if (!out) {
        throw IoError("short write to " + path.string(), true);
    }
}

} // namespace ecgsim
