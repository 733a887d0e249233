#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ecgsim/filter.hpp"
#include "ecgsim/trace.hpp"

namespace ecgsim {

// Behavioral parameters of the analog front end. The defaults describe the
// nominal two-stage chain: a gain-of-30-dB instrumentation amplifier with a
// 150 Hz rolloff, a 50 Hz twin-T style notch, AC coupling at 0.05 Hz and a
// variable gain stage bringing the total to 68 dB on 0..3 V rails.
struct AfeConfig {
    double g1_db = 30.0;             // first stage gain
    double cmrr_stage2_db = 60.0;    // second stage common-mode rejection
    double total_gain_db = 68.0;     // differential gain of the whole chain
    double lpf_cutoff_hz = 150.0;
    double hpf_cutoff_hz = 0.05;     // corner is adjustable between 0.05 and 1 Hz
    double notch_freq_hz = 50.0;
    double notch_q = 5.0;
    double input_impedance_ohm = 22e6;
    double input_noise_rms_uv = 0.49; // total noise referred to the input
    double rail_low_v = 0.0;
    double rail_high_v = 3.0;
    double mid_rail_v = 1.5;
    double stabilizer_threshold_mv = 50.0;
    double stabilizer_recovery_s = 1.0; // one heart cycle at the 60 bpm default
};

// Throws std::invalid_argument on inconsistent values, returns advisory
// warnings (currently just the sub-150 Hz diagnostic-bandwidth flag).
std::vector<std::string> validate(const AfeConfig& cfg);

// Total common-mode rejection of the cascade: first stage gain plus second
// stage rejection, in dB.
double cmrr_total(double g1_db, double cmrr_stage2_db);

// Skin/electrode interface of the lead pair. `impedance_per_electrode_ohm`
// is the lumped source impedance the amplifier input sees; `mismatch` is the
// fractional asymmetry between the two signal electrodes.
struct ElectrodeModel {
    double impedance_per_electrode_ohm = 354e3;
    double mismatch = 0.0;
};

void validate(const ElectrodeModel& model);

// The two per-electrode impedances implied by the mean value and mismatch.
std::pair<double, double> pair_impedances(const ElectrodeModel& model);

// Voltage divider between the source impedance and the amplifier input:
// every sample is scaled by z_in / (z_in + z_source).
SampleTrace attenuate_by_electrodes(const SampleTrace& diff_mv,
                                    const ElectrodeModel& model,
                                    double input_impedance_ohm);

// Baseline stabilizer: on a large input deviation the chain drops to unity
// gain until the input settles, then snaps back re-centered. Mirrors the
// switch pair that shorts the gain network when an electrode pops off.
enum class StabilizerMode { normal, unity_gain_recovery };

struct StabilizerState {
    StabilizerMode mode = StabilizerMode::normal;
    double entered_at_s = 0.0; // time the current recovery began
};

// One decision step. Enters recovery when |deviation| crosses the threshold,
// leaves it once the configured recovery time has elapsed. No other
// transitions exist.
StabilizerState stabilizer_step(StabilizerState state, double deviation_mv,
                                const AfeConfig& cfg, double t_s);

// Streaming model of the whole front end. Feed it the differential input in
// millivolts and the common-mode channel in volts; it produces the amplifier
// output in volts, clamped to the rails. Chunked calls are equivalent to one
// big call: all state (filters, stabilizer, noise stream) lives here.
class AfeModel {
public:
    AfeModel(const AfeConfig& cfg, double fs, std::uint64_t seed);

    double process_sample(double diff_mv, double cm_v);
    SampleTrace process(const SampleTrace& diff_mv, const SampleTrace& cm_v);

    const AfeConfig& config() const { return cfg_; }
    const StabilizerState& stabilizer() const { return stab_; }
    std::size_t recovery_entries() const { return recovery_entries_; }

    // rms gain of the filter chain for white noise; the injected noise is
    // scaled by 1/this so the configured input-referred rms is what an output
    // measurement actually yields.
    double noise_shaping_gain() const { return noise_shaping_gain_; }

private:
    AfeConfig cfg_;
    double fs_;
    double gain_lin_;
    double cmrr_lin_;
    double noise_sigma_v_;
    double noise_shaping_gain_;
    double track_alpha_;   // slow baseline reference tracker
    double ref_v_ = 0.0;   // input-referred baseline estimate
    double recovery_sum_v_ = 0.0;      // input accumulated while recovering
    std::size_t recovery_samples_ = 0; // samples in the recovery window
    BiquadFilter lpf_;
    BiquadFilter notch_;
    BiquadFilter hpf_;
    StabilizerState stab_;
    std::size_t recovery_entries_ = 0;
    std::size_t sample_index_ = 0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
};

// One-shot convenience wrapper around AfeModel.
SampleTrace process_afe(const SampleTrace& diff_mv, const SampleTrace& cm_v,
                        const AfeConfig& cfg, std::uint64_t seed = 0);

// Maps amplifier output back to an input-referred trace in millivolts
// (subtract the mid-rail, divide by the differential gain).
SampleTrace afe_output_to_input_mv(const SampleTrace& out_v, const AfeConfig& cfg);

} // namespace ecgsim
