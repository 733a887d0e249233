#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ecgsim/trace.hpp"

namespace ecgsim {

struct ScreeningConfig {
    double tachy_threshold_bpm = 100.0;
    double brady_threshold_bpm = 60.0;
    double missed_pulse_factor = 1.5; // RR gap vs the running median
    double qrs_band_lo_hz = 5.0;
    double qrs_band_hi_hz = 15.0;
    double refractory_s = 0.2;
};

void validate(const ScreeningConfig& cfg);

// Baseline and motion-artifact removal settings.
struct MarConfig {
    double baseline_window_s = 0.6; // median filter span
    int adaptive_taps = 16;
    double adaptive_step = 0.05;    // normalized LMS step
    bool use_reference = false;
    // Fallback path tuning: baseline corrections smaller than the gate are
    // ignored (keeps clean traces untouched) and excursions beyond the clip
    // limit are treated as non-physiological and clamped.
    double baseline_gate_mv = 0.1;
    double clip_limit_mv = 5.0;
};

void validate(const MarConfig& cfg);

enum class RhythmFlagKind { tachycardia, bradycardia, missed_pulse };

const char* rhythm_flag_kind_name(RhythmFlagKind kind);

struct RhythmFlag {
    RhythmFlagKind kind;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct TimeRange {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ScreeningReport {
    std::vector<std::size_t> r_peaks;     // sample indices into the input
    std::vector<double> rr_intervals_s;
    double mean_hr_bpm = 0.0;
    std::vector<RhythmFlag> flags;
    std::vector<TimeRange> marked_segments; // union of flag extents
};

// Subtracts a sliding-window median (window baseline_window_s, edges
// replicated). DC offsets and slow wander vanish; beats are narrow enough to
// pass through the median untouched.
SampleTrace remove_baseline(const SampleTrace& trace, const MarConfig& cfg);

// Motion artifact removal. With a reference channel (cfg.use_reference and
// reference != nullptr) a normalized-step adaptive canceller subtracts
// whatever correlates with the reference. The fallback, also applied after
// cancellation, is deliberately conservative: gated baseline subtraction
// plus amplitude clamping, which leaves artifact-free traces untouched.
// Throws std::invalid_argument when the reference is misaligned (different
// rate or length) or required but missing.
SampleTrace remove_motion_artifact(const SampleTrace& trace,
                                   const SampleTrace* reference,
                                   const MarConfig& cfg);

// QRS detection: bandpass, differentiate, square, moving-window integrate,
// then an adaptive ratio-based threshold with a refractory hold-off. All
// decision levels scale with the signal, so amplitude calibration does not
// matter. Needs at least two seconds of input.
std::vector<std::size_t> detect_qrs(const SampleTrace& trace, const ScreeningConfig& cfg);

// Flags tachycardia / bradycardia from the windowed mean heart rate (eight
// RR intervals) and missed pulses from RR gaps versus the running median of
// the previous eight. Times are relative to the start of the first interval.
// Throws InsufficientDataError with fewer than three intervals.
std::vector<RhythmFlag> classify_rhythm(std::span<const double> rr_intervals_s,
                                        const ScreeningConfig& cfg);

// Full screening chain: baseline removal, artifact removal, detection,
// classification. `reference` may be nullptr.
ScreeningReport screen_trace(const SampleTrace& trace, const ScreeningConfig& cfg,
                             const MarConfig& mar_cfg = {},
                             const SampleTrace* reference = nullptr);

// One JSON object per flag: {"kind": ..., "start_s": ..., "end_s": ...}.
void write_screening_ndjson(const ScreeningReport& report,
                            const std::filesystem::path& path);

// Columns "sample_index,t_seconds".
void write_r_peaks_csv(const ScreeningReport& report, double fs,
                       const std::filesystem::path& path);

} // namespace ecgsim
