#include "ecgsim/pipeline.hpp"

#include "ecgsim/adc.hpp"

namespace ecgsim {

SampleTrace decode_frames(const std::vector<Frame>& frames, const RunConfig& cfg) {
    const SampleTrace codes = depacketize(frames, cfg.format, cfg.sample_rate_hz);
    return afe_output_to_input_mv(dequantize(codes, cfg.adc), cfg.afe);
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    PipelineResult result;
    result.warnings = validate(cfg);

    const EcgSignal ecg =
        synthesize_ecg_with_truth(cfg.signal, cfg.duration_s, cfg.sample_rate_hz,
                                  module_seed(cfg, SeedStream::signal));
    result.clean_mv = ecg.trace;
    result.ground_truth_r_peaks_s = ecg.r_peak_times_s;

    InterferenceSpec diff_spec = cfg.interference;
    diff_spec.powerline.reset();
    diff_spec.white_noise_rms_uv = 0.0;
    auto [corrupted, truth] = inject_interference(
        ecg.trace, diff_spec, module_seed(cfg, SeedStream::interference));
    result.corrupted_mv = corrupted;

    const SampleTrace cm =
        common_mode_signal(cfg.interference, cfg.duration_s, cfg.sample_rate_hz,
                           module_seed(cfg, SeedStream::common_mode));

    const SampleTrace attenuated =
        attenuate_by_electrodes(corrupted, cfg.electrodes, cfg.afe.input_impedance_ohm);
    const SampleTrace afe_out =
        process_afe(attenuated, cm, cfg.afe, module_seed(cfg, SeedStream::afe));

    const SampleTrace codes = quantize(afe_out, cfg.adc);
    const std::vector<Frame> frames = packetize(codes, cfg.format);

    const SessionResult session =
        simulate_session(frames, cfg.connection, cfg.channel, cfg.packets_per_event,
                         module_seed(cfg, SeedStream::link));
    result.disconnected = session.report.disconnects > 0;

    result.record = record_session(session.delivered, cfg.format, cfg.sample_rate_hz,
                                   out_dir, "run-" + std::to_string(cfg.seed));
    result.record.link_report = session.report;
    result.record.budget =
        make_energy_budget(cfg.power, cfg.analog_supply_ua, cfg.battery_capacity_mah);

    result.reconstructed_mv = decode_frames(session.delivered, cfg);
    if (result.reconstructed_mv.duration_s() >= 2.0) {
        result.record.screening = screen_trace(result.reconstructed_mv, cfg.screening,
                                               cfg.mar);
    } else if (!result.reconstructed_mv.empty()) {
        result.warnings.push_back("session shorter than 2 s, screening skipped");
    }

    write_report_bundle(result.record, out_dir);
    return result;
}

} // namespace ecgsim
