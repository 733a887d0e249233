#include <doctest.h>

#include <fstream>
#include <string>

#include "ecgsim/config.hpp"
#include "ecgsim/errors.hpp"
#include "ecgsim/rng.hpp"
#include "test_util.hpp"

using namespace ecgsim;

namespace {

std::filesystem::path write_config(const testutil::TempDir& dir, const std::string& body) {
    const auto path = dir.path() / "run.ini";
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("defaults load, validate, and warn about the nominal link budget") {
    const RunConfig cfg;
    const auto warnings = validate(cfg);
    // 5 packets of 12 samples per 100 ms carry 600 sps against a 1000 sps
    // acquisition: the mismatch must surface as an advisory, not an error
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("600") != std::string::npos);

    RunConfig fast;
    fast.packets_per_event = 9;
    CHECK(validate(fast).empty());
}

TEST_CASE("module seeds derive from the master seed with fixed streams") {
    RunConfig cfg;
    cfg.seed = 12345;
    CHECK(module_seed(cfg, SeedStream::signal) == derive_seed(12345, 1));
    CHECK(module_seed(cfg, SeedStream::interference) == derive_seed(12345, 2));
    CHECK(module_seed(cfg, SeedStream::channel) == derive_seed(12345, 4));
    CHECK(module_seed(cfg, SeedStream::signal) != module_seed(cfg, SeedStream::afe));

    apply_seed_override(cfg, 999);
    CHECK(cfg.seed == 999);
    CHECK(cfg.channel.seed == derive_seed(999, 4));
}

TEST_CASE("a full config file overrides every section") {
    testutil::TempDir dir("config-full");
    const auto path = write_config(dir, R"(# end-to-end scenario
[run]
duration_s = 20
sample_rate_hz = 500
seed = 77
target_sps = 500

[signal]
heart_rate_bpm = 80
peak_to_peak_mv = 1.4
rr_jitter = 0.04

[interference]
powerline = on
powerline_hz = 60
powerline_v = 1.2
baseline_wander = on
wander_mv = 0.8
wander_hz = 0.25
motion_burst = 4.0, 1.0, 0.6
motion_burst = 9.0, 0.5, 0.3
lead_off = 15.0, 0.5
lead_off_offset_mv = 250
white_noise_rms_uv = 8

[afe]
g1_db = 28
cmrr_stage2_db = 55
total_gain_db = 62
lpf_cutoff_hz = 160
hpf_cutoff_hz = 0.5
notch_freq_hz = 60
notch_q = 4
input_noise_rms_uv = 0.6
electrode_impedance_ohm = 300e3
electrode_mismatch = 0.05
stabilizer_threshold_mv = 40
stabilizer_recovery_s = 0.7

[adc]
bits = 10
v_low = 0
v_high = 3

[link]
sample_bits = 10
samples_per_frame = 14
packets_per_event = 8
active_interval_s = 0.12
supervision_timeout_multiplier = 1000
frame_loss_probability = 0.1
event_loss_probability = 0.02

[power]
profile = nominal
t_interval_s = 0.12
sleep_current_ma = 0.06
analog_supply_ua = 4
battery_capacity_mah = 120

[screening]
tachy_threshold_bpm = 110
brady_threshold_bpm = 50
missed_pulse_factor = 1.8
baseline_window_s = 0.5
adaptive_taps = 32
adaptive_step = 0.1
use_reference = false
)");

    const auto cfg = load_run_config(path);
    CHECK(cfg.duration_s == 20.0);
    CHECK(cfg.sample_rate_hz == 500.0);
    CHECK(cfg.seed == 77);
    CHECK(cfg.signal.heart_rate_bpm == 80.0);
    CHECK(cfg.signal.peak_to_peak_mv == 1.4);
    REQUIRE(cfg.interference.powerline.has_value());
    CHECK(cfg.interference.powerline->frequency_hz == 60.0);
    CHECK(cfg.interference.powerline->amplitude_v == 1.2);
    REQUIRE(cfg.interference.baseline_wander.has_value());
    CHECK(cfg.interference.baseline_wander->amplitude_mv == 0.8);
    REQUIRE(cfg.interference.motion_bursts.size() == 2);
    CHECK(cfg.interference.motion_bursts[1].start_s == 9.0);
    REQUIRE(cfg.interference.lead_off_events.size() == 1);
    CHECK(cfg.interference.lead_off_offset_mv == 250.0);
    CHECK(cfg.afe.total_gain_db == 62.0);
    CHECK(cfg.afe.notch_freq_hz == 60.0);
    CHECK(cfg.electrodes.impedance_per_electrode_ohm == 300e3);
    CHECK(cfg.adc.bits == 10);
    CHECK(cfg.adc.fs == 500.0); // follows the acquisition rate
    CHECK(cfg.format.samples_per_frame == 14);
    CHECK(cfg.packets_per_event == 8);
    CHECK(cfg.connection.active_interval_s == 0.12);
    CHECK(cfg.channel.frame_loss_probability == 0.1);
    CHECK(cfg.power.t_interval_s == 0.12);
    CHECK(cfg.power.sleep_current_ma == 0.06);
    CHECK(cfg.analog_supply_ua == 4.0);
    CHECK(cfg.battery_capacity_mah == 120.0);
    CHECK(cfg.screening.tachy_threshold_bpm == 110.0);
    CHECK(cfg.mar.adaptive_taps == 32);

    // the module seeds follow the file's master seed
    CHECK(cfg.channel.seed == derive_seed(77, 4));

    CHECK(validate(cfg).empty());
}

TEST_CASE("custom power phase tables replace the nominal profile") {
    testutil::TempDir dir("config-power");
    const auto path = write_config(dir, R"(
[power]
phase = rx, 5.0, 200
phase = tx, 8.0, 1500, 2
t_interval_s = 0.05
)");
    const auto cfg = load_run_config(path);
    REQUIRE(cfg.power.phases.size() == 2);
    CHECK(cfg.power.phases[0].kind == PhaseKind::rx);
    CHECK(cfg.power.phases[0].current_ma == 5.0);
    CHECK(cfg.power.phases[0].duration_us == 200.0);
    CHECK(cfg.power.phases[0].repetitions == 1);
    CHECK(cfg.power.phases[1].kind == PhaseKind::tx);
    CHECK(cfg.power.phases[1].repetitions == 2);
    CHECK(cfg.power.t_interval_s == 0.05);
}

TEST_CASE("the empty power profile is just the sleep floor") {
    testutil::TempDir dir("config-empty");
    const auto path = write_config(dir, "[power]\nprofile = empty\n");
    const auto cfg = load_run_config(path);
    CHECK(cfg.power.phases.empty());
    CHECK(avg_current_interval(cfg.power) == doctest::Approx(50.0));
}

TEST_CASE("unknown keys and sections fail with the line number") {
    testutil::TempDir dir("config-bad");

    SUBCASE("unknown key") {
        const auto path = write_config(dir, "[run]\nduration_s = 5\nbogus_key = 1\n");
        CHECK_THROWS_WITH_AS(load_run_config(path), doctest::Contains("line 3"),
                             ConfigError);
    }

    SUBCASE("unknown section") {
        const auto path = write_config(dir, "[run]\nduration_s = 5\n\n[nope]\nx = 1\n");
        CHECK_THROWS_AS(load_run_config(path), ConfigError);
    }

    SUBCASE("malformed value") {
        const auto path = write_config(dir, "[run]\nduration_s = fast\n");
        CHECK_THROWS_WITH_AS(load_run_config(path), doctest::Contains("line 2"),
                             ConfigError);
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_run_config(dir.path() / "absent.ini"), ConfigError);
    }
}

TEST_CASE("validation converts module errors into config errors") {
    RunConfig cfg;
    cfg.duration_s = -1.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = {};
    cfg.signal.heart_rate_bpm = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = {};
    cfg.channel.frame_loss_probability = 1.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = {};
    cfg.format.samples_per_frame = 80;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    cfg = {};
    cfg.afe.hpf_cutoff_hz = 5.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("seed override rederives the channel stream") {
    testutil::TempDir dir("config-seed");
    const auto path = write_config(dir, "[run]\nseed = 10\n");
    auto cfg = load_run_config(path);
    const auto original_channel_seed = cfg.channel.seed;
    CHECK(original_channel_seed == derive_seed(10, 4));

    apply_seed_override(cfg, 11);
    CHECK(cfg.channel.seed != original_channel_seed);
    CHECK(cfg.channel.seed == derive_seed(11, 4));
}

TEST_CASE("comments, blank lines, and spacing are tolerated") {
    testutil::TempDir dir("config-comments");
    const auto path = write_config(dir, R"(
; semicolon comment
# hash comment

[run]
  duration_s =   5.5
duration_s=6.5   # wins: later assignments override earlier ones

[signal]
heart_rate_bpm = 90 ; trailing comment
)");
    const auto cfg = load_run_config(path);
    CHECK(cfg.duration_s == 6.5);
    CHECK(cfg.signal.heart_rate_bpm == 90.0);
}
