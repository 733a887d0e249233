// Command line front end: each subcommand exposes one stage of the simulated
// telemetry chain, `run` strings them all together. Exit codes: 0 success,
// 2 configuration error, 3 session terminated by the supervision timeout.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecgsim/errors.hpp"
#include "ecgsim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ecgsim;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 2;
constexpr int exit_disconnected = 3;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig load_config(const GlobalArgs& args) {
    RunConfig cfg;
    if (args.config_path.empty()) {
        apply_seed_override(cfg, cfg.seed);
    } else {
        cfg = load_run_config(args.config_path);
    }
    if (args.seed_set) {
        apply_seed_override(cfg, args.seed);
    }
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

int cmd_synth(const RunConfig& cfg, const fs::path& out) {
    print_warnings(validate(cfg));
    fs::create_directories(out);

    const EcgSignal ecg =
        synthesize_ecg_with_truth(cfg.signal, cfg.duration_s, cfg.sample_rate_hz,
                                  module_seed(cfg, SeedStream::signal));
    const auto [corrupted, truth] = inject_interference(
        ecg.trace, cfg.interference, module_seed(cfg, SeedStream::interference));

    write_trace_csv(ecg.trace, out / "clean.csv");
    write_trace_csv(corrupted, out / "corrupted.csv");
    {
        std::ofstream peaks(out / "r_peaks_truth.csv");
        if (!peaks) {
            throw IoError("cannot open " + (out / "r_peaks_truth.csv").string() +
                          " for writing");
        }
        peaks << "t_seconds\n";
        peaks.precision(12);
        for (double t : ecg.r_peak_times_s) peaks << t << '\n';
    }

    std::cout << "wrote " << (out / "clean.csv").string() << " ("
              << ecg.trace.size() << " samples)\n";
    std::cout << "wrote " << (out / "corrupted.csv").string() << '\n';
    std::cout << "wrote " << (out / "r_peaks_truth.csv").string() << " ("
              << ecg.r_peak_times_s.size() << " beats)\n";
    return exit_ok;
}

int cmd_run(const RunConfig& cfg, const fs::path& out) {
    const PipelineResult result = run_pipeline(cfg, out);
    print_warnings(result.warnings);

    std::cout << generate_report(result.record);
    std::cout << "session_dir: " << out.string() << '\n';
    if (result.disconnected) {
        std::cerr << "error: session terminated by supervision timeout\n";
        return exit_disconnected;
    }
    return exit_ok;
}

int cmd_power(const RunConfig& cfg, const fs::path& out) {
    print_warnings(validate(cfg));
    fs::create_directories(out);

    // The headline figure: phase currents averaged over the interval, the
    // sleep floor accounted separately below.
    const double i_digital = phase_average_current_ua(cfg.power);
    const EnergyBudget budget =
        make_energy_budget(cfg.power, cfg.analog_supply_ua, cfg.battery_capacity_mah);

    std::cout << "I_avg_digital = " << std::fixed << std::setprecision(1) << i_digital
              << " uA\n";
    std::cout.unsetf(std::ios::fixed);
    std::cout << budget_text(budget);

    write_waveform_csv(event_current_waveform(cfg.power), out / "event_waveform.csv");
    std::cout << "wrote " << (out / "event_waveform.csv").string() << '\n';
    return exit_ok;
}

std::vector<double> parse_range(const std::string& text) {
    // either a single value or "start:stop:count" inclusive
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);

    try {
        if (parts.size() == 1) {
            return {std::stod(parts[0])};
        }
        if (parts.size() == 3) {
            const double start = std::stod(parts[0]);
            const double stop = std::stod(parts[1]);
            const int count = std::stoi(parts[2]);
            if (count < 1) throw ConfigError("range count must be >= 1");
            std::vector<double> values;
            for (int i = 0; i < count; ++i) {
                const double f =
                    count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
                values.push_back(start + f * (stop - start));
            }
            return values;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse range '" + text + "'");
    }
    throw ConfigError("range must be a value or start:stop:count, got '" + text + "'");
}

// The nominal event profile serves five packets per event; scale the on-air
// phases accordingly when sweeping the packet count.
ConnectionEventProfile profile_for_packets(ConnectionEventProfile profile, int ppe,
                                           int nominal_ppe = 5) {
    const double scale = static_cast<double>(ppe) / nominal_ppe;
    for (auto& phase : profile.phases) {
        if (phase.kind == PhaseKind::tx || phase.kind == PhaseKind::rx) {
            phase.duration_us *= scale;
        } else if (phase.kind == PhaseKind::transition) {
            phase.repetitions = ppe + 1;
        }
    }
    return profile;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::string& range,
              const fs::path& out) {
    print_warnings(validate(cfg));
    if (param != "t_interval_s" && param != "packets_per_event") {
        throw ConfigError("sweep parameter must be t_interval_s or packets_per_event");
    }
    fs::create_directories(out);

    std::ofstream csv(out / "sweep.csv");
    if (!csv) {
        throw IoError("cannot open " + (out / "sweep.csv").string() + " for writing");
    }
    csv << param << ",i_avg_ua,lifetime_h,throughput_sps,below_target\n";
    csv.precision(12);

    for (double value : parse_range(range)) {
        ConnectionEventProfile profile = cfg.power;
        int ppe = cfg.packets_per_event;
        double interval_s = cfg.connection.active_interval_s;

        if (param == "t_interval_s") {
            if (!(value > 0.0)) throw ConfigError("t_interval_s must be positive");
            profile.t_interval_s = value;
            interval_s = value;
        } else {
            ppe = static_cast<int>(std::llround(value));
            if (ppe < 1) throw ConfigError("packets_per_event must be >= 1");
            profile = profile_for_packets(profile, ppe);
        }

        try {
            validate(profile);
        } catch (const std::invalid_argument& err) {
            std::cerr << "warning: skipping " << param << " = " << value << ": "
                      << err.what() << '\n';
            continue;
        }

        const EnergyBudget budget =
            make_energy_budget(profile, cfg.analog_supply_ua, cfg.battery_capacity_mah);
        const ThroughputCheck check =
            throughput(cfg.format, ppe, interval_s, cfg.target_sps);
        csv << value << ',' << budget.total_avg_ua << ',' << budget.lifetime_h << ','
            << check.samples_per_second << ',' << (check.below_target ? 1 : 0) << '\n';
    }
    std::cout << "wrote " << (out / "sweep.csv").string() << '\n';
    return exit_ok;
}

int cmd_screen(const RunConfig& cfg, const std::string& in_path,
               const std::string& reference_path, const fs::path& out) {
    print_warnings(validate(cfg));
    fs::create_directories(out);

    const SampleTrace trace =
        read_trace_csv(in_path, Unit::millivolt, cfg.sample_rate_hz);

    SampleTrace reference;
    const SampleTrace* reference_ptr = nullptr;
    MarConfig mar = cfg.mar;
    if (!reference_path.empty()) {
        reference = read_trace_csv(reference_path, Unit::millivolt, cfg.sample_rate_hz);
        mar.use_reference = true;
        reference_ptr = &reference;
    }

    const ScreeningReport report = screen_trace(trace, cfg.screening, mar, reference_ptr);
    write_r_peaks_csv(report, trace.fs, out / "r_peaks.csv");
    write_screening_ndjson(report, out / "rhythm_flags.ndjson");

    std::cout << "r_peaks: " << report.r_peaks.size() << '\n';
    std::cout << "mean_hr_bpm: " << report.mean_hr_bpm << '\n';
    for (const auto& flag : report.flags) {
        std::cout << rhythm_flag_kind_name(flag.kind) << ' ' << flag.start_s << ".."
                  << flag.end_s << " s\n";
    }
    std::cout << "wrote " << (out / "r_peaks.csv").string() << '\n';
    std::cout << "wrote " << (out / "rhythm_flags.ndjson").string() << '\n';
    return exit_ok;
}

int cmd_link_sim(const RunConfig& cfg, std::uint64_t frame_count_opt,
                 const fs::path& out) {
    print_warnings(validate(cfg));
    fs::create_directories(out);

    // Frames-only session: a ramp pattern stands in for real samples.
    std::uint64_t frame_count = frame_count_opt;
    if (frame_count == 0) {
        const auto samples = sample_count(cfg.duration_s, cfg.sample_rate_hz);
        const auto spf = static_cast<std::size_t>(cfg.format.samples_per_frame);
        frame_count = (samples + spf - 1) / spf;
    }

    SampleTrace codes = make_trace(
        cfg.sample_rate_hz, Unit::adc_code,
        static_cast<std::size_t>(frame_count) *
            static_cast<std::size_t>(cfg.format.samples_per_frame));
    const int top = (1 << cfg.format.sample_bits) - 1;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        codes.samples[i] = static_cast<double>(i % (top + 1));
    }

    const std::vector<Frame> frames = packetize(codes, cfg.format);
    const SessionResult session =
        simulate_session(frames, cfg.connection, cfg.channel, cfg.packets_per_event,
                         module_seed(cfg, SeedStream::link));

    std::cout << report_text(session.report);
    write_latency_histogram_csv(session.report, out / "latency_histogram.csv");
    std::cout << "wrote " << (out / "latency_histogram.csv").string() << '\n';

    if (session.report.disconnects > 0) {
        std::cerr << "error: session terminated by supervision timeout\n";
        return exit_disconnected;
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG telemetry simulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalArgs args;
    app.add_option("--config", args.config_path, "run configuration file (INI style)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", args.out_dir, "output directory")
        ->envname("ECGSIM_OUT_DIR");
    auto* seed_opt =
        app.add_option("--seed", args.seed, "override every module seed at once");

    auto* synth = app.add_subcommand("synth", "generate clean and corrupted traces");
    auto* run = app.add_subcommand("run", "simulate the full acquisition chain");
    auto* power = app.add_subcommand("power", "energy budget and event waveform");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep of the energy budget");
    std::string sweep_param = "t_interval_s";
    std::string sweep_range;
    sweep->add_option("--param", sweep_param, "t_interval_s or packets_per_event");
    sweep->add_option("--range", sweep_range, "value or start:stop:count")->required();

    auto* screen = app.add_subcommand("screen", "run screening on an existing trace CSV");
    std::string screen_in;
    std::string screen_reference;
    screen->add_option("--in", screen_in, "trace CSV (t_seconds,value in mV)")
        ->required()
        ->check(CLI::ExistingFile);
    screen->add_option("--reference", screen_reference,
                       "aligned artifact reference CSV for the adaptive canceller")
        ->check(CLI::ExistingFile);

    auto* link_sim = app.add_subcommand("link-sim", "frames-only channel simulation");
    std::uint64_t link_frames = 0;
    link_sim->add_option("--frames", link_frames,
                         "frame count (default: derived from duration)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config_error;
    }
    args.seed_set = seed_opt->count() > 0;

    try {
        const RunConfig cfg = load_config(args);
        const fs::path out = args.out_dir;
        if (*synth) return cmd_synth(cfg, out);
        if (*run) return cmd_run(cfg, out);
        if (*power) return cmd_power(cfg, out);
        if (*sweep) return cmd_sweep(cfg, sweep_param, sweep_range, out);
        if (*screen) return cmd_screen(cfg, screen_in, screen_reference, out);
        if (*link_sim) return cmd_link_sim(cfg, link_frames, out);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return exit_ok;
}
