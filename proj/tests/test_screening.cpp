#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "ecgsim/errors.hpp"
#include "ecgsim/filter.hpp"
#include "ecgsim/screening.hpp"
#include "ecgsim/signal.hpp"
#include "test_util.hpp"

using namespace ecgsim;

namespace {

// |detected - truth| <= tol_s for a 1:1 matching, same counts.
bool peaks_match(const std::vector<std::size_t>& detected,
                 const std::vector<double>& truth_s, double fs, double tol_s) {
    if (detected.size() != truth_s.size()) return false;
    for (std::size_t i = 0; i < detected.size(); ++i) {
        const double t = static_cast<double>(detected[i]) / fs;
        if (std::abs(t - truth_s[i]) > tol_s) return false;
    }
    return true;
}

} // namespace

TEST_CASE("median baseline removal takes out slow wander, keeps beats") {
    EcgParams params;
    params.heart_rate_bpm = 60.0;
    const auto truth = synthesize_ecg_with_truth(params, 10.0, 1000.0);
    const auto& clean = truth.trace;

    SampleTrace wandering = clean;
    for (std::size_t i = 0; i < wandering.size(); ++i) {
        wandering.samples[i] += 2.0 * std::sin(2.0 * std::numbers::pi * 0.3 *
                                               static_cast<double>(i) / 1000.0);
    }

    const auto cleaned = remove_baseline(wandering, MarConfig{});

    // the 0.3 Hz tone drops by more than an order of magnitude
    const double before = testutil::tone_amplitude(wandering.samples, 0.3, 1000.0, 0, 10000);
    const double after = testutil::tone_amplitude(cleaned.samples, 0.3, 1000.0, 0, 10000);
    CHECK(before == doctest::Approx(2.0).epsilon(0.02));
    CHECK(after < 0.2);

    // beats survive: every ground-truth R peak is still a strong excursion
    for (double r : truth.r_peak_times_s) {
        const auto i = static_cast<std::size_t>(std::lround(r * 1000.0));
        CHECK(cleaned.samples[i] > 0.6);
    }
    // and overall the cleaned trace tracks the clean one
    std::vector<double> residual(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        residual[i] = cleaned.samples[i] - clean.samples[i];
    }
    CHECK(testutil::rms_of(residual) < 0.15);
}

TEST_CASE("artifact removal is an exact no-op on clean traces") {
    const auto clean = synthesize_ecg(EcgParams{}, 10.0, 1000.0);
    MarConfig cfg;

    SUBCASE("fallback path, no reference") {
        const auto out = remove_motion_artifact(clean, nullptr, cfg);
        CHECK(out.samples == clean.samples);
    }

    SUBCASE("adaptive path with a silent reference") {
        cfg.use_reference = true;
        const auto ref = make_trace(1000.0, Unit::millivolt, clean.size());
        const auto out = remove_motion_artifact(clean, &ref, cfg);
        CHECK(out.samples == clean.samples);
    }
}

TEST_CASE("adaptive canceller removes what correlates with the reference") {
    const double fs = 1000.0;
    const auto clean = synthesize_ecg(EcgParams{}, 20.0, fs);

    // reference: band-limited motion noise; the artifact in the trace is a
    // short FIR coloring of it, well inside the canceller's 16 taps
    std::mt19937_64 rng(31);
    std::normal_distribution<double> unit(0.0, 1.0);
    BiquadFilter shaper(design_biquad_bandpass(0.5, 10.0, fs));
    auto ref = make_trace(fs, Unit::millivolt, clean.size());
    for (auto& v : ref.samples) v = shaper.step(unit(rng));

    SampleTrace corrupted = clean;
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
        double artifact = 1.5 * ref.samples[i];
        if (i >= 3) artifact += 0.4 * ref.samples[i - 3];
        corrupted.samples[i] += artifact;
    }

    MarConfig cfg;
    cfg.use_reference = true;
    const auto out = remove_motion_artifact(corrupted, &ref, cfg);

    // compare artifact power before and after, past the convergence window
    std::vector<double> before;
    std::vector<double> after;
    for (std::size_t i = 4000; i < clean.size(); ++i) {
        before.push_back(corrupted.samples[i] - clean.samples[i]);
        after.push_back(out.samples[i] - clean.samples[i]);
    }
    const double gain_db =
        20.0 * std::log10(testutil::rms_of(before) / testutil::rms_of(after));
    CHECK(gain_db > 10.0);
}

TEST_CASE("artifact removal rejects misaligned or missing references") {
    const auto trace = synthesize_ecg(EcgParams{}, 5.0, 1000.0);
    MarConfig cfg;
    cfg.use_reference = true;

    CHECK_THROWS_AS(remove_motion_artifact(trace, nullptr, cfg), std::invalid_argument);

    auto short_ref = make_trace(1000.0, Unit::millivolt, trace.size() - 1);
    CHECK_THROWS_AS(remove_motion_artifact(trace, &short_ref, cfg), std::invalid_argument);

    auto slow_ref = make_trace(500.0, Unit::millivolt, trace.size());
    CHECK_THROWS_AS(remove_motion_artifact(trace, &slow_ref, cfg), std::invalid_argument);
}

TEST_CASE("clamping caps non-physiological excursions") {
    MarConfig cfg;
    auto spiky = make_trace(1000.0, Unit::millivolt, 4000);
    spiky.samples[2000] = 80.0;
    spiky.samples[2001] = -80.0;
    const auto out = remove_motion_artifact(spiky, nullptr, cfg);
    CHECK(out.samples[2000] <= cfg.clip_limit_mv);
    CHECK(out.samples[2001] >= -cfg.clip_limit_mv);
}

TEST_CASE("QRS detection finds every beat of clean recordings") {
    ScreeningConfig cfg;
    for (double bpm : {50.0, 72.0, 110.0, 150.0}) {
        EcgParams params;
        params.heart_rate_bpm = bpm;
        const auto truth = synthesize_ecg_with_truth(params, 30.0, 1000.0);
        const auto peaks = detect_qrs(truth.trace, cfg);
        CHECK_MESSAGE(peaks_match(peaks, truth.r_peak_times_s, 1000.0, 0.1),
                      "bpm = " << bpm << ", found " << peaks.size() << " of "
                               << truth.r_peak_times_s.size());
    }
}

TEST_CASE("QRS detection is invariant to amplitude scaling") {
    EcgParams params;
    params.heart_rate_bpm = 72.0;
    params.rr_jitter = 0.05;
    const auto truth = synthesize_ecg_with_truth(params, 30.0, 1000.0, 21);

    ScreeningConfig cfg;
    const auto reference = detect_qrs(truth.trace, cfg);
    REQUIRE(!reference.empty());

    for (double scale : {1000.0, 0.001, 37.5}) {
        SampleTrace scaled = truth.trace;
        for (auto& v : scaled.samples) v *= scale;
        CHECK(detect_qrs(scaled, cfg) == reference);
    }
}

TEST_CASE("QRS detection copes with jitter and mild noise") {
    EcgParams params;
    params.heart_rate_bpm = 65.0;
    params.rr_jitter = 0.08;
    const auto truth = synthesize_ecg_with_truth(params, 30.0, 1000.0, 5);

    SampleTrace noisy = truth.trace;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 0.02); // 20 uV rms
    for (auto& v : noisy.samples) v += noise(rng);

    const auto peaks = detect_qrs(noisy, ScreeningConfig{});
    CHECK(peaks_match(peaks, truth.r_peak_times_s, 1000.0, 0.1));
}

TEST_CASE("QRS detection refuses inputs that are too short") {
    const auto blip = synthesize_ecg(EcgParams{}, 1.0, 1000.0);
    CHECK_THROWS_AS(detect_qrs(blip, ScreeningConfig{}), std::invalid_argument);
}

TEST_CASE("rhythm classification flags sustained rate excursions") {
    ScreeningConfig cfg;

    SUBCASE("steady tachycardia covers the whole strip") {
        const std::vector<double> rr(12, 0.5); // 120 bpm
        const auto flags = classify_rhythm(rr, cfg);
        REQUIRE(flags.size() == 1);
        CHECK(flags[0].kind == RhythmFlagKind::tachycardia);
        CHECK(flags[0].start_s == doctest::Approx(0.0));
        CHECK(flags[0].end_s == doctest::Approx(6.0));
    }

    SUBCASE("steady bradycardia covers the whole strip") {
        const std::vector<double> rr(10, 1.2); // 50 bpm
        const auto flags = classify_rhythm(rr, cfg);
        REQUIRE(flags.size() == 1);
        CHECK(flags[0].kind == RhythmFlagKind::bradycardia);
        CHECK(flags[0].start_s == doctest::Approx(0.0));
        CHECK(flags[0].end_s == doctest::Approx(12.0));
    }

    SUBCASE("a doubled interval is a missed pulse, not a rate change") {
        std::vector<double> rr(10, 0.8); // 75 bpm
        rr[5] = 1.6;
        const auto flags = classify_rhythm(rr, cfg);
        REQUIRE(flags.size() == 1);
        CHECK(flags[0].kind == RhythmFlagKind::missed_pulse);
        CHECK(flags[0].start_s == doctest::Approx(4.0));
        CHECK(flags[0].end_s == doctest::Approx(5.6));
    }

    SUBCASE("normal sinus rhythm raises no flags") {
        const std::vector<double> rr(20, 0.8);
        CHECK(classify_rhythm(rr, cfg).empty());
    }

    SUBCASE("too little data is an explicit error") {
        const std::vector<double> rr(2, 0.8);
        CHECK_THROWS_AS(classify_rhythm(rr, cfg), InsufficientDataError);
    }

    SUBCASE("non-positive intervals are rejected") {
        const std::vector<double> rr{0.8, -0.1, 0.8};
        CHECK_THROWS_AS(classify_rhythm(rr, cfg), std::invalid_argument);
    }
}

TEST_CASE("config validation enforces the documented ranges") {
    ScreeningConfig cfg;
    cfg.brady_threshold_bpm = 120.0; // above tachy
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.missed_pulse_factor = 1.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.refractory_s = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.qrs_band_lo_hz = 20.0; // above the high edge
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    MarConfig mar;
    mar.adaptive_step = 2.0; // open interval
    CHECK_THROWS_AS(validate(mar), std::invalid_argument);
    mar = {};
    mar.adaptive_step = 0.0;
    CHECK_THROWS_AS(validate(mar), std::invalid_argument);
    mar = {};
    mar.adaptive_taps = 0;
    CHECK_THROWS_AS(validate(mar), std::invalid_argument);
    mar = {};
    mar.baseline_window_s = 0.0;
    CHECK_THROWS_AS(validate(mar), std::invalid_argument);
    mar = {};
    CHECK_NOTHROW(validate(mar));
}

TEST_CASE("full screening pass summarizes a distorted recording") {
    EcgParams params;
    params.heart_rate_bpm = 72.0;
    const auto truth = synthesize_ecg_with_truth(params, 30.0, 1000.0);

    SampleTrace rough = truth.trace;
    for (std::size_t i = 0; i < rough.size(); ++i) {
        rough.samples[i] += 1.5 * std::sin(2.0 * std::numbers::pi * 0.25 *
                                           static_cast<double>(i) / 1000.0);
    }

    const auto report = screen_trace(rough, ScreeningConfig{});
    CHECK(peaks_match(report.r_peaks, truth.r_peak_times_s, 1000.0, 0.1));
    CHECK(report.mean_hr_bpm == doctest::Approx(72.0).epsilon(0.02));
    CHECK(report.flags.empty());
    CHECK(report.marked_segments.empty());
    CHECK(report.rr_intervals_s.size() == report.r_peaks.size() - 1);
}

TEST_CASE("screening flags carry absolute times from the strip start") {
    // 75 bpm with one beat missing in the middle
    EcgParams params;
    params.heart_rate_bpm = 75.0;
    auto truth = synthesize_ecg_with_truth(params, 30.0, 1000.0);
    auto trace = truth.trace;

    // blank out one beat: samples around the 15th R peak
    const double gone_r = truth.r_peak_times_s[15];
    const auto i0 = static_cast<std::size_t>((gone_r - 0.35) * 1000.0);
    const auto i1 = static_cast<std::size_t>((gone_r + 0.45) * 1000.0);
    for (std::size_t i = i0; i < i1; ++i) trace.samples[i] = 0.0;

    const auto report = screen_trace(trace, ScreeningConfig{});
    REQUIRE(report.flags.size() == 1);
    CHECK(report.flags[0].kind == RhythmFlagKind::missed_pulse);
    // the flagged gap brackets the removed beat, in absolute strip time
    CHECK(report.flags[0].start_s < gone_r);
    CHECK(report.flags[0].end_s > gone_r);
    REQUIRE(report.marked_segments.size() == 1);
    CHECK(report.marked_segments[0].start_s == report.flags[0].start_s);
}

TEST_CASE("screening outputs serialize to NDJSON and CSV") {
    testutil::TempDir dir("screening-io");
    ScreeningReport report;
    report.r_peaks = {400, 1400, 2400};
    report.rr_intervals_s = {1.0, 1.0};
    report.mean_hr_bpm = 60.0;
    report.flags.push_back({RhythmFlagKind::bradycardia, 0.4, 2.4});

    const auto ndjson = dir.path() / "flags.ndjson";
    write_screening_ndjson(report, ndjson);
    std::ifstream in(ndjson);
    std::string line;
    REQUIRE(std::getline(in, line));
    const auto summary = nlohmann::json::parse(line);
    CHECK(summary.at("record") == "summary");
    CHECK(summary.at("r_peaks") == 3);
    CHECK(summary.at("mean_hr_bpm") == doctest::Approx(60.0));
    CHECK(summary.at("flags") == 1);
    REQUIRE(std::getline(in, line));
    const auto flag = nlohmann::json::parse(line);
    CHECK(flag.at("kind") == "bradycardia");
    CHECK(flag.at("start_s") == doctest::Approx(0.4));
    CHECK(flag.at("end_s") == doctest::Approx(2.4));
    CHECK(!std::getline(in, line));

    const auto csv = dir.path() / "r_peaks.csv";
    write_r_peaks_csv(report, 1000.0, csv);
    std::ifstream peaks(csv);
    REQUIRE(std::getline(peaks, line));
    CHECK(line == "sample_index,t_seconds");
    REQUIRE(std::getline(peaks, line));
    CHECK(line == "400,0.4");
}
