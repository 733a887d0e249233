#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ecgsim/trace.hpp"

namespace ecgsim {

// One Gaussian bump of the beat template. Centers are expressed as a phase
// within the cardiac cycle so the complex stretches with the RR interval;
// widths stay in seconds because wave durations vary far less than rate.
struct GaussianBump {
    double center_phase = 0.0; // [0, 1) within the cycle
    double width_s = 0.01;     // Gaussian sigma, seconds
    double amplitude_mv = 0.0; // relative; the whole template is rescaled
};

// P-QRS-T template with an R peak normalized to +1.
std::vector<GaussianBump> default_morphology();

struct EcgParams {
    double heart_rate_bpm = 60.0;
    std::vector<GaussianBump> morphology = default_morphology();
    double peak_to_peak_mv = 1.0; // template is rescaled to hit this exactly
    double rr_jitter = 0.0;       // fractional sigma of the RR interval
};

void validate(const EcgParams& params);

struct EcgSignal {
    SampleTrace trace;                    // millivolts
    std::vector<double> r_peak_times_s;   // ground truth beat positions
};

// Deterministic for a fixed (params, duration, fs, seed) tuple. The seed only
// matters when rr_jitter > 0.
EcgSignal synthesize_ecg_with_truth(const EcgParams& params, double duration_s,
                                    double fs, std::uint64_t seed = 0);
SampleTrace synthesize_ecg(const EcgParams& params, double duration_s, double fs,
                           std::uint64_t seed = 0);

struct PowerlineSpec {
    double frequency_hz = 50.0; // mains frequency, typically 50 or 60
    double amplitude_v = 1.5;
};

struct BaselineWanderSpec {
    double amplitude_mv = 300.0;
    double frequency_hz = 0.2;
};

struct MotionBurst {
    double start_s = 0.0;
    double duration_s = 1.0;
    double amplitude_mv = 1.0; // peak of the band-limited burst
    double band_lo_hz = 0.5;
    double band_hi_hz = 10.0;
};

struct LeadOffEvent {
    double start_s = 0.0;
    double duration_s = 1.0;
};

struct InterferenceSpec {
    std::optional<PowerlineSpec> powerline;
    std::optional<BaselineWanderSpec> baseline_wander;
    std::vector<MotionBurst> motion_bursts;
    std::vector<LeadOffEvent> lead_off_events; // must not overlap
    double white_noise_rms_uv = 0.0;
    double lead_off_offset_mv = 300.0; // step applied while a lead is off
};

void validate(const InterferenceSpec& spec);

enum class InterferenceKind { powerline, baseline_wander, motion, lead_off, white_noise };

const char* interference_kind_name(InterferenceKind kind);

struct InterferenceComponent {
    InterferenceKind kind;
    SampleTrace trace; // millivolts, same length as the corrupted trace
};

// Sample-exact record of what was injected. `total` is the per-sample sum of
// the components in the order they appear, and the corrupted trace equals
// clean + total exactly (same floating point operations, no reordering).
struct InterferenceTruth {
    std::vector<InterferenceComponent> components;
    SampleTrace total;
};

// Adds every enabled component of `spec` to `clean` (millivolts). Each
// component draws from its own seed stream, so toggling one never changes
// the others.
std::pair<SampleTrace, InterferenceTruth>
inject_interference(const SampleTrace& clean, const InterferenceSpec& spec,
                    std::uint64_t seed);

// The common-mode channel seen by both electrodes: powerline plus broadband
// pickup, in volts. Only the powerline and white noise entries of `spec`
// participate.
SampleTrace common_mode_signal(const InterferenceSpec& spec, double duration_s,
                               double fs, std::uint64_t seed);

} // namespace ecgsim
