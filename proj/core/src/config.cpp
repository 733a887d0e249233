#include "ecgsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ecgsim/errors.hpp"
#include "ecgsim/rng.hpp"

namespace ecgsim {

namespace {

struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const ConfigEntry& entry, const std::string& what) {
    throw ConfigError("config line " + std::to_string(entry.line) + ": " + what +
                      " for [" + entry.section + "] " + entry.key + " = " + entry.value);
}

std::vector<ConfigEntry> parse_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }

    std::vector<ConfigEntry> entries;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        }
        ConfigEntry entry;
        entry.section = section;
        entry.key = trim(line.substr(0, eq));
        entry.value = trim(line.substr(eq + 1));
        entry.line = lineno;
        if (entry.key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

double parse_double(const ConfigEntry& entry) {
    try {
        std::size_t used = 0;
        const double v = std::stod(entry.value, &used);
        if (used != entry.value.size()) fail(entry, "trailing characters");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(entry, "expected a number");
    }
}

int parse_int(const ConfigEntry& entry) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(entry.value, &used);
        if (used != entry.value.size()) fail(entry, "trailing characters");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(entry, "expected an integer");
    }
}

std::uint64_t parse_uint64(const ConfigEntry& entry) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(entry.value, &used);
        if (used != entry.value.size()) fail(entry, "trailing characters");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(entry, "expected an unsigned integer");
    }
}

bool parse_bool(const ConfigEntry& entry) {
    std::string v = entry.value;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    fail(entry, "expected on/off");
}

std::vector<double> parse_number_list(const ConfigEntry& entry, std::size_t count) {
    std::vector<double> values;
    std::stringstream ss(entry.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        ConfigEntry sub = entry;
        sub.value = trim(item);
        values.push_back(parse_double(sub));
    }
    if (values.size() != count) {
        fail(entry, "expected " + std::to_string(count) + " comma separated numbers");
    }
    return values;
}

PhaseKind parse_phase_kind(const ConfigEntry& entry, const std::string& token) {
    for (auto kind : {PhaseKind::setup, PhaseKind::xo_startup, PhaseKind::rx, PhaseKind::tx,
                      PhaseKind::transition}) {
        if (token == phase_kind_name(kind)) return kind;
    }
    fail(entry, "unknown phase kind '" + token + "'");
}

void apply_run(RunConfig& cfg, const ConfigEntry& e) {
    if (e.key == "duration_s") cfg.duration_s = parse_double(e);
    else if (e.key == "sample_rate_hz") cfg.sample_rate_hz = parse_double(e);
    else if (e.key == "seed") apply_seed_override(cfg, parse_uint64(e));
    else if (e.key == "target_sps") cfg.target_sps = parse_double(e);
    else fail(e, "unknown key");
}

void apply_signal(RunConfig& cfg, const ConfigEntry& e) {
    if (e.key == "heart_rate_bpm") cfg.signal.heart_rate_bpm = parse_double(e);
    else if (e.key == "peak_to_peak_mv") cfg.signal.peak_to_peak_mv = parse_double(e);
    else if (e.key == "rr_jitter") cfg.signal.rr_jitter = parse_double(e);
    else fail(e, "unknown key");
}

void apply_interference(RunConfig& cfg, const ConfigEntry& e) {
    auto& spec = cfg.interference;
    if (e.key == "powerline") {
        if (parse_bool(e)) {
            if (!spec.powerline) spec.powerline = PowerlineSpec{};
        } else {
            spec.powerline.reset();
        }
    } else if (e.key == "powerline_hz") {
        if (!spec.powerline) spec.powerline = PowerlineSpec{};
        spec.powerline->frequency_hz = parse_double(e);
    } else if (e.key == "powerline_v") {
        if (!spec.powerline) spec.powerline = PowerlineSpec{};
        spec.powerline->amplitude_v = parse_double(e);
    } else if (e.key == "baseline_wander") {
        if (parse_bool(e)) {
            if (!spec.baseline_wander) spec.baseline_wander = BaselineWanderSpec{};
        } else {
            spec.baseline_wander.reset();
        }
    } else if (e.key == "wander_mv") {
        if (!spec.baseline_wander) spec.baseline_wander = BaselineWanderSpec{};
        spec.baseline_wander->amplitude_mv = parse_double(e);
    } else if (e.key == "wander_hz") {
        if (!spec.baseline_wander) spec.baseline_wander = BaselineWanderSpec{};
        spec.baseline_wander->frequency_hz = parse_double(e);
    } else if (e.key == "motion_burst") {
        const auto v = parse_number_list(e, 3); // start, duration, amplitude_mv
        spec.motion_bursts.push_back({v[0], v[1], v[2], 0.5, 10.0});
    } else if (e.key == "lead_off") {
        const auto v = parse_number_list(e, 2); // start, duration
        spec.lead_off_events.push_back({v[0], v[1]});
    } else if (e.key == "lead_off_offset_mv") {
        spec.lead_off_offset_mv = parse_double(e);
    } else if (e.key == "white_noise_rms_uv") {
        spec.white_noise_rms_uv = parse_double(e);
    } else {
        fail(e, "unknown key");
    }
}

void apply_afe(RunConfig& cfg, const ConfigEntry& e) {
    auto& afe = cfg.afe;
    if (e.key == "g1_db") afe.g1_db = parse_double(e);
    else if (e.key == "cmrr_stage2_db") afe.cmrr_stage2_db = parse_double(e);
    else if (e.key == "total_gain_db") afe.total_gain_db = parse_double(e);
    else if (e.key == "lpf_cutoff_hz") afe.lpf_cutoff_hz = parse_double(e);
    else if (e.key == "hpf_cutoff_hz") afe.hpf_cutoff_hz = parse_double(e);
    else if (e.key == "notch_freq_hz") afe.notch_freq_hz = parse_double(e);
    else if (e.key == "notch_q") afe.notch_q = parse_double(e);
    else if (e.key == "input_impedance_ohm") afe.input_impedance_ohm = parse_double(e);
    else if (e.key == "input_noise_rms_uv") afe.input_noise_rms_uv = parse_double(e);
    else if (e.key == "stabilizer_threshold_mv") afe.stabilizer_threshold_mv = parse_double(e);
    else if (e.key == "stabilizer_recovery_s") afe.stabilizer_recovery_s = parse_double(e);
    else if (e.key == "electrode_impedance_ohm")
        cfg.electrodes.impedance_per_electrode_ohm = parse_double(e);
    else if (e.key == "electrode_mismatch") cfg.electrodes.mismatch = parse_double(e);
    else fail(e, "unknown key");
}

void apply_adc(RunConfig& cfg, const ConfigEntry& e) {
    if (e.key == "bits") cfg.adc.bits = parse_int(e);
    else if (e.key == "v_low") cfg.adc.v_low = parse_double(e);
    else if (e.key == "v_high") cfg.adc.v_high = parse_double(e);
    else fail(e, "unknown key");
}

void apply_link(RunConfig& cfg, const ConfigEntry& e) {
    if (e.key == "sample_bits") cfg.format.sample_bits = parse_int(e);
    else if (e.key == "samples_per_frame") cfg.format.samples_per_frame = parse_int(e);
    else if (e.key == "packets_per_event") cfg.packets_per_event = parse_int(e);
    else if (e.key == "active_interval_s") cfg.connection.active_interval_s = parse_double(e);
    else if (e.key == "min_interval_s") cfg.connection.min_interval_s = parse_double(e);
    else if (e.key == "max_interval_s") cfg.connection.max_interval_s = parse_double(e);
    else if (e.key == "slave_latency")
        cfg.connection.slave_latency = static_cast<std::uint16_t>(parse_int(e));
    else if (e.key == "supervision_timeout_multiplier")
        cfg.connection.supervision_timeout_multiplier =
            static_cast<std::uint16_t>(parse_int(e));
    else if (e.key == "frame_loss_probability")
        cfg.channel.frame_loss_probability = parse_double(e);
    else if (e.key == "event_loss_probability")
        cfg.channel.event_loss_probability = parse_double(e);
    else fail(e, "unknown key");
}

void apply_power(RunConfig& cfg, const ConfigEntry& e, bool& phases_cleared) {
    auto& power = cfg.power;
    if (e.key == "profile") {
        if (e.value == "nominal") {
            power.phases = nominal_event_profile().phases;
        } else if (e.value == "empty") {
            power.phases.clear();
        } else {
            fail(e, "expected nominal or empty");
        }
        phases_cleared = true;
    } else if (e.key == "phase") {
        // kind, current_ma, duration_us[, repetitions]; the first phase line
        // replaces the built-in nominal profile.
        std::vector<std::string> parts;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(trim(item));
        if (parts.size() != 3 && parts.size() != 4) {
            fail(e, "expected kind, current_ma, duration_us[, repetitions]");
        }
        EventPhase phase;
        phase.kind = parse_phase_kind(e, parts[0]);
        ConfigEntry sub = e;
        sub.value = parts[1];
        phase.current_ma = parse_double(sub);
        sub.value = parts[2];
        phase.duration_us = parse_double(sub);
        if (parts.size() == 4) {
            sub.value = parts[3];
            phase.repetitions = parse_int(sub);
        }
        if (!phases_cleared) {
            power.phases.clear();
            phases_cleared = true;
        }
        power.phases.push_back(phase);
    } else if (e.key == "t_interval_s") {
        power.t_interval_s = parse_double(e);
    } else if (e.key == "sleep_current_ma") {
        power.sleep_current_ma = parse_double(e);
    } else if (e.key == "analog_supply_ua") {
        cfg.analog_supply_ua = parse_double(e);
    } else if (e.key == "battery_capacity_mah") {
        cfg.battery_capacity_mah = parse_double(e);
    } else {
        fail(e, "unknown key");
    }
}

void apply_screening(RunConfig& cfg, const ConfigEntry& e) {
    auto& sc = cfg.screening;
    auto& mar = cfg.mar;
    if (e.key == "tachy_threshold_bpm") sc.tachy_threshold_bpm = parse_double(e);
    else if (e.key == "brady_threshold_bpm") sc.brady_threshold_bpm = parse_double(e);
    else if (e.key == "missed_pulse_factor") sc.missed_pulse_factor = parse_double(e);
    else if (e.key == "qrs_band_lo_hz") sc.qrs_band_lo_hz = parse_double(e);
    else if (e.key == "qrs_band_hi_hz") sc.qrs_band_hi_hz = parse_double(e);
    else if (e.key == "refractory_s") sc.refractory_s = parse_double(e);
    else if (e.key == "baseline_window_s") mar.baseline_window_s = parse_double(e);
    else if (e.key == "adaptive_taps") mar.adaptive_taps = parse_int(e);
    else if (e.key == "adaptive_step") mar.adaptive_step = parse_double(e);
    else if (e.key == "use_reference") mar.use_reference = parse_bool(e);
    else if (e.key == "baseline_gate_mv") mar.baseline_gate_mv = parse_double(e);
    else if (e.key == "clip_limit_mv") mar.clip_limit_mv = parse_double(e);
    else fail(e, "unknown key");
}

} // namespace

std::uint64_t module_seed(const RunConfig& cfg, SeedStream stream) {
    return derive_seed(cfg.seed, static_cast<std::uint64_t>(stream));
}

void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.channel.seed = derive_seed(seed, static_cast<std::uint64_t>(SeedStream::channel));
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_seed_override(cfg, cfg.seed); // derive channel seed for the default too
    bool power_phases_cleared = false;

    for (const auto& entry : parse_ini(path)) {
        if (entry.section == "run") apply_run(cfg, entry);
        else if (entry.section == "signal") apply_signal(cfg, entry);
        else if (entry.section == "interference") apply_interference(cfg, entry);
        else if (entry.section == "afe") apply_afe(cfg, entry);
        else if (entry.section == "adc") apply_adc(cfg, entry);
        else if (entry.section == "link") apply_link(cfg, entry);
        else if (entry.section == "power") apply_power(cfg, entry, power_phases_cleared);
        else if (entry.section == "screening") apply_screening(cfg, entry);
        else throw ConfigError("config line " + std::to_string(entry.line) +
                               ": unknown section [" + entry.section + "]");
    }

    cfg.adc.fs = cfg.sample_rate_hz;
    return cfg;
}

std::vector<std::string> validate(const RunConfig& cfg) {
    std::vector<std::string> warnings;
    try {
        if (cfg.duration_s < 0.0) {
            throw std::invalid_argument("duration_s must be >= 0");
        }
        if (!(cfg.sample_rate_hz > 0.0)) {
            throw std::invalid_argument("sample_rate_hz must be positive");
        }
        if (cfg.packets_per_event < 1) {
            throw std::invalid_argument("packets_per_event must be >= 1");
        }
        validate(cfg.signal);
        validate(cfg.interference);
        warnings = validate(cfg.afe);
        validate(cfg.electrodes);
        validate(cfg.adc);
        validate(cfg.format);
        validate(cfg.connection);
        validate(cfg.channel);
        validate(cfg.power);
        validate(cfg.screening);
        validate(cfg.mar);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }

    const auto check =
        throughput(cfg.format, cfg.packets_per_event, cfg.connection.active_interval_s,
                   cfg.target_sps);
    if (check.below_target) warnings.push_back(check.warning);
    return warnings;
}

} // namespace ecgsim
