#include "ecgsim/afe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ecgsim/rng.hpp"

namespace ecgsim {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

} // namespace

std::vector<std::string> validate(const AfeConfig& cfg) {
    if (!(cfg.total_gain_db > 0.0)) {
        throw std::invalid_argument("AfeConfig: total_gain_db must be positive");
    }
    if (cfg.hpf_cutoff_hz < 0.05 || cfg.hpf_cutoff_hz > 1.0) {
        throw std::invalid_argument(
            "AfeConfig: hpf_cutoff_hz must lie in [0.05, 1] Hz");
    }
    if (!(cfg.lpf_cutoff_hz > 0.0)) {
        throw std::invalid_argument("AfeConfig: lpf_cutoff_hz must be positive");
    }
    if (!(cfg.notch_freq_hz > 0.0) || !(cfg.notch_q > 0.0)) {
        throw std::invalid_argument("AfeConfig: notch frequency and q must be positive");
    }
    if (!(cfg.rail_low_v < cfg.mid_rail_v) || !(cfg.mid_rail_v < cfg.rail_high_v)) {
        throw std::invalid_argument("AfeConfig: rails must satisfy low < mid < high");
    }
    if (!(cfg.input_impedance_ohm > 0.0)) {
        throw std::invalid_argument("AfeConfig: input_impedance_ohm must be positive");
    }
    if (cfg.input_noise_rms_uv < 0.0) {
        throw std::invalid_argument("AfeConfig: input_noise_rms_uv must be >= 0");
    }
    if (!(cfg.stabilizer_threshold_mv > 0.0) || !(cfg.stabilizer_recovery_s > 0.0)) {
        throw std::invalid_argument("AfeConfig: stabilizer settings must be positive");
    }

    std::vector<std::string> warnings;
    if (cfg.lpf_cutoff_hz < 150.0) {
        warnings.push_back(
            "lpf_cutoff_hz below 150 Hz narrows the bandwidth past the AHA "
            "diagnostic recommendation");
    }
    return warnings;
}

double cmrr_total(double g1_db, double cmrr_stage2_db) {
    return g1_db + cmrr_stage2_db;
}

void validate(const ElectrodeModel& model) {
    if (!(model.impedance_per_electrode_ohm > 0.0)) {
        throw std::invalid_argument("ElectrodeModel: impedance must be positive");
    }
    if (model.mismatch < 0.0 || model.mismatch > 1.0) {
        throw std::invalid_argument("ElectrodeModel: mismatch must lie in [0, 1]");
    }
}

std::pair<double, double> pair_impedances(const ElectrodeModel& model) {
    validate(model);
    const double z = model.impedance_per_electrode_ohm;
    return {z * (1.0 + model.mismatch / 2.0), z * (1.0 - model.mismatch / 2.0)};
}

SampleTrace attenuate_by_electrodes(const SampleTrace& diff_mv,
                                    const ElectrodeModel& model,
                                    double input_impedance_ohm) {
    validate(diff_mv);
    require_unit(diff_mv, Unit::millivolt, "attenuate_by_electrodes");
    validate(model);
    if (!(input_impedance_ohm > 0.0)) {
        throw std::invalid_argument("attenuate_by_electrodes: input impedance must be positive");
    }

    // The mismatch splits the pair symmetrically, so the series source
    // impedance the divider sees is just the mean electrode value.
    const auto [z_a, z_b] = pair_impedances(model);
    const double z_source = 0.5 * (z_a + z_b);
    const double scale = input_impedance_ohm / (input_impedance_ohm + z_source);

    SampleTrace out = diff_mv;
    for (auto& v : out.samples) v *= scale;
    return out;
}

StabilizerState stabilizer_step(StabilizerState state, double deviation_mv,
                                const AfeConfig& cfg, double t_s) {
    if (state.mode == StabilizerMode::normal) {
        if (std::abs(deviation_mv) > cfg.stabilizer_threshold_mv) {
            state.mode = StabilizerMode::unity_gain_recovery;
            state.entered_at_s = t_s;
        }
    } else if (t_s - state.entered_at_s >= cfg.stabilizer_recovery_s) {
        state.mode = StabilizerMode::normal;
    }
    return state;
}

AfeModel::AfeModel(const AfeConfig& cfg, double fs, std::uint64_t seed)
    : cfg_(cfg), fs_(fs) {
    validate(cfg);
    if (!(fs > 0.0)) {
        throw std::invalid_argument("AfeModel: fs must be positive");
    }
    if (cfg.lpf_cutoff_hz >= fs / 2.0 || cfg.notch_freq_hz >= fs / 2.0) {
        throw std::invalid_argument("AfeModel: filter corners must lie below fs/2");
    }

    gain_lin_ = db_to_linear(cfg.total_gain_db);
    cmrr_lin_ = db_to_linear(cmrr_total(cfg.g1_db, cfg.cmrr_stage2_db));

    const auto lpf = design_first_order(FilterKind::lowpass, cfg.lpf_cutoff_hz, fs);
    const auto notch = design_biquad_notch(cfg.notch_freq_hz, cfg.notch_q, fs);
    const auto hpf = design_first_order(FilterKind::highpass, cfg.hpf_cutoff_hz, fs);
    lpf_ = BiquadFilter(lpf);
    notch_ = BiquadFilter(notch);
    hpf_ = BiquadFilter(hpf);

    // White noise injected ahead of the filters comes out attenuated by the
    // chain's rms gain. Pre-dividing by that gain makes the measured
    // output-referred noise equal the configured figure, which is how the
    // datasheet-style "input referred noise" number is defined in the first
    // place (integrated output noise over the system band divided by gain).
    const std::size_t grid = 8192;
    double acc = 0.0;
    for (std::size_t k = 0; k < grid; ++k) {
        const double f = (static_cast<double>(k) + 0.5) / static_cast<double>(grid) * fs / 2.0;
        const double h = magnitude_response(lpf, f, fs) *
                         magnitude_response(notch, f, fs) *
                         magnitude_response(hpf, f, fs);
        acc += h * h;
    }
    noise_shaping_gain_ = std::sqrt(acc / static_cast<double>(grid));
    noise_sigma_v_ = noise_shaping_gain_ > 0.0
                         ? cfg.input_noise_rms_uv * 1e-6 / noise_shaping_gain_
                         : 0.0;

    // Baseline reference drifts with a ~5 s time constant; fast excursions
    // are the stabilizer's job.
    track_alpha_ = 1.0 - std::exp(-1.0 / (5.0 * fs));

    rng_.seed(derive_seed(seed, 0x5afe));
}

double AfeModel::process_sample(double diff_mv, double cm_v) {
    const double t = static_cast<double>(sample_index_) / fs_;
    ++sample_index_;

    double x = diff_mv / 1000.0 + cm_v / cmrr_lin_;
    if (noise_sigma_v_ > 0.0) {
        x += noise_sigma_v_ * noise_(rng_);
    }

    const StabilizerMode previous = stab_.mode;
    stab_ = stabilizer_step(stab_, (x - ref_v_) * 1000.0, cfg_, t);
    if (previous == StabilizerMode::normal &&
        stab_.mode == StabilizerMode::unity_gain_recovery) {
        ++recovery_entries_;
    }
    if (stab_.mode == StabilizerMode::unity_gain_recovery) {
        recovery_sum_v_ += x;
        ++recovery_samples_;
    }
    if (previous == StabilizerMode::unity_gain_recovery &&
        stab_.mode == StabilizerMode::normal) {
        // The switches reopen with every storage element recharged to the
        // level the fast path settled on: the mean input over the recovery
        // window. Averaging rather than sampling the reopening instant keeps
        // the charge that encodes the beat's periodic mean, so the output
        // re-centers on the same baseline it held before the disturbance
        // instead of drifting back to it over the slow coupling constant.
        const double settled =
            recovery_samples_ > 0
                ? recovery_sum_v_ / static_cast<double>(recovery_samples_)
                : x;
        lpf_.reset_to_steady_state(settled);
        notch_.reset_to_steady_state(settled);
        hpf_.reset_to_steady_state(settled);
        ref_v_ = settled;
        recovery_sum_v_ = 0.0;
        recovery_samples_ = 0;
    }

    const double filtered = hpf_.step(notch_.step(lpf_.step(x)));
    const double gain =
        stab_.mode == StabilizerMode::unity_gain_recovery ? 1.0 : gain_lin_;
    const double y =
        std::clamp(cfg_.mid_rail_v + gain * filtered, cfg_.rail_low_v, cfg_.rail_high_v);

    if (stab_.mode == StabilizerMode::normal) {
        ref_v_ += track_alpha_ * (x - ref_v_);
    }
    return y;
}

SampleTrace AfeModel::process(const SampleTrace& diff_mv, const SampleTrace& cm_v) {
    validate(diff_mv);
    validate(cm_v);
    require_unit(diff_mv, Unit::millivolt, "AfeModel::process differential input");
    require_unit(cm_v, Unit::volt, "AfeModel::process common-mode input");
    if (diff_mv.fs != fs_ || cm_v.fs != fs_) {
        throw std::invalid_argument("AfeModel::process: trace rate does not match the model");
    }
    if (diff_mv.size() != cm_v.size()) {
        throw std::invalid_argument(
            "AfeModel::process: differential and common-mode traces differ in length");
    }

    SampleTrace out;
    out.fs = fs_;
    out.t0 = diff_mv.t0;
    out.unit = Unit::volt;
    out.samples.reserve(diff_mv.size());
    for (std::size_t i = 0; i < diff_mv.size(); ++i) {
        out.samples.push_back(process_sample(diff_mv.samples[i], cm_v.samples[i]));
    }
    return out;
}

SampleTrace process_afe(const SampleTrace& diff_mv, const SampleTrace& cm_v,
                        const AfeConfig& cfg, std::uint64_t seed) {
    AfeModel model(cfg, diff_mv.fs, seed);
    return model.process(diff_mv, cm_v);
}

SampleTrace afe_output_to_input_mv(const SampleTrace& out_v, const AfeConfig& cfg) {
    validate(out_v);
    require_unit(out_v, Unit::volt, "afe_output_to_input_mv");
    const double gain = db_to_linear(cfg.total_gain_db);

    SampleTrace out = out_v;
    out.unit = Unit::millivolt;
    for (auto& v : out.samples) {
        v = (v - cfg.mid_rail_v) / gain * 1000.0;
    }
    return out;
}

} // namespace ecgsim
