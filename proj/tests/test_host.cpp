#include <doctest.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecgsim/host.hpp"
#include "ecgsim/link.hpp"
#include "ecgsim/screening.hpp"
#include "ecgsim/trace.hpp"
#include "test_util.hpp"

using namespace ecgsim;

namespace {

// 100 codes through the default 12-bit / 12-per-frame format: nine frames,
// the last one padded with 8 zero samples.
std::vector<Frame> sample_frames() {
    SampleTrace codes = make_trace(250.0, Unit::adc_code, 100);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        codes.samples[i] = static_cast<double>((i * 37) % 4096);
    }
    return packetize(codes, PacketFormat{});
}

SessionRecord sample_record(const std::filesystem::path& dir) {
    return record_session(sample_frames(), PacketFormat{}, 250.0, dir, "sess-7");
}

} // namespace

TEST_CASE("record_session fills in the totals and persists session.bin") {
    testutil::TempDir dir("host-record");
    const auto record = sample_record(dir.path());

    CHECK(record.session_id == "sess-7");
    CHECK(record.fs == 250.0);
    CHECK(record.frames == 9);
    CHECK(record.pad_samples == 8);
    CHECK(record.samples == 100); // 9 * 12 - 8
    CHECK(session_duration_s(record) == doctest::Approx(0.4));
    CHECK(std::filesystem::exists(dir.path() / "session.bin"));
}

TEST_CASE("read_session_frames round trips the recorded stream") {
    testutil::TempDir dir("host-roundtrip");
    const auto frames = sample_frames();
    record_session(frames, PacketFormat{}, 250.0, dir.path());

    const auto back = read_session_frames(dir.path());
    CHECK(back == frames);
}

TEST_CASE("record_session validates its inputs") {
    testutil::TempDir dir("host-validate");
    CHECK_THROWS_AS(record_session({}, PacketFormat{}, 0.0, dir.path()),
                    std::invalid_argument);
    CHECK_THROWS_AS(record_session({}, PacketFormat{13, 12}, 250.0, dir.path()),
                    std::invalid_argument);
}

TEST_CASE("record_session with no frames records an empty session") {
    testutil::TempDir dir("host-empty");
    const auto record = record_session({}, PacketFormat{}, 250.0, dir.path());
    CHECK(record.frames == 0);
    CHECK(record.samples == 0);
    CHECK(session_duration_s(record) == 0.0);
    CHECK(read_session_frames(dir.path()).empty());
}

TEST_CASE("annotate keeps notes sorted and rejects out-of-session timestamps") {
    testutil::TempDir dir("host-annotate");
    auto record = sample_record(dir.path()); // 0.4 s long

    annotate(record, 0.3, "cooling down");
    annotate(record, 0.1, "warming up");
    annotate(record, 0.2, "running");
    annotate(record, 0.4, "end of tape"); // boundary is inclusive
    annotate(record, 0.0, "start");

    REQUIRE(record.annotations.size() == 5);
    CHECK(record.annotations[0].t_s == 0.0);
    CHECK(record.annotations[1].text == "warming up");
    CHECK(record.annotations[2].text == "running");
    CHECK(record.annotations[3].text == "cooling down");
    CHECK(record.annotations[4].t_s == 0.4);

    CHECK_THROWS_AS(annotate(record, -0.01, "too early"), std::invalid_argument);
    CHECK_THROWS_AS(annotate(record, 0.41, "too late"), std::invalid_argument);
}

TEST_CASE("generate_report covers totals, screening, link, notes and budget") {
    testutil::TempDir dir("host-report");
    auto record = sample_record(dir.path());
    annotate(record, 0.2, "felt dizzy");

    record.link_report.frames_sent = 9;
    record.link_report.frames_delivered = 9;
    record.link_report.retransmissions = 2;
    record.link_report.disconnects = 0;
    record.link_report.delivered_in_order = true;

    ScreeningReport screening;
    screening.r_peaks = {10, 35, 60};
    screening.rr_intervals_s = {0.1, 0.1};
    screening.mean_hr_bpm = 600.0;
    screening.flags.push_back({RhythmFlagKind::missed_pulse, 0.1, 0.3});
    record.screening = screening;

    EnergyBudget budget;
    budget.digital_avg_ua = 292.0;
    budget.total_avg_ua = 295.0;
    budget.lifetime_h = 508.0;
    record.budget = budget;

    const std::string report = generate_report(record);
    CHECK(report.find("session_id: sess-7") != std::string::npos);
    CHECK(report.find("frames: 9") != std::string::npos);
    CHECK(report.find("samples: 100") != std::string::npos);
    CHECK(report.find("pad_samples: 8") != std::string::npos);
    CHECK(report.find("r_peaks: 3") != std::string::npos);
    CHECK(report.find("mean_hr_bpm: 600") != std::string::npos);
    // two equal RR intervals pin min and max heart rate to the mean
    CHECK(report.find("min_hr_bpm: 600") != std::string::npos);
    CHECK(report.find("max_hr_bpm: 600") != std::string::npos);
    CHECK(report.find("rhythm_flags: 1") != std::string::npos);
    CHECK(report.find("missed_pulse") != std::string::npos);
    CHECK(report.find("link_retransmissions: 2") != std::string::npos);
    CHECK(report.find("link_delivered_in_order: yes") != std::string::npos);
    CHECK(report.find("note @0.2 s: felt dizzy") != std::string::npos);
    CHECK(report.find("lifetime_hours: 508") != std::string::npos);
}

TEST_CASE("write_report_bundle emits the full session directory") {
    testutil::TempDir dir("host-bundle");
    auto record = sample_record(dir.path());
    annotate(record, 0.25, "brisk walk");

    record.link_report.frames_sent = 9;
    record.link_report.frames_delivered = 9;
    record.link_report.events_elapsed = 4;
    record.link_report.elapsed_s = 0.4;
    record.link_report.latency_histogram = {{0, 8}, {1, 1}};

    ScreeningReport screening;
    screening.r_peaks = {10, 60};
    screening.rr_intervals_s = {0.2};
    screening.mean_hr_bpm = 300.0;
    screening.flags.push_back({RhythmFlagKind::tachycardia, 0.0, 0.24});
    record.screening = screening;
    record.budget = make_energy_budget(nominal_event_profile());

    write_report_bundle(record, dir.path());

    for (const char* name : {"report.txt", "meta.ndjson", "r_peaks.csv",
                             "rhythm_flags.ndjson", "latency_histogram.csv"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(dir.path() / name));
    }

    // meta.ndjson: one JSON object per line, in a fixed record order.
    std::ifstream meta(dir.path() / "meta.ndjson");
    REQUIRE(meta.good());
    std::vector<nlohmann::json> records;
    std::string line;
    while (std::getline(meta, line)) {
        records.push_back(nlohmann::json::parse(line));
    }
    REQUIRE(records.size() == 5); // header, annotation, link, screening, budget

    CHECK(records[0].at("record") == "header");
    CHECK(records[0].at("session_id") == "sess-7");
    CHECK(records[0].at("sample_rate_hz") == 250.0);
    CHECK(records[0].at("frames") == 9);
    CHECK(records[0].at("samples") == 100);
    CHECK(records[0].at("pad_samples") == 8);
    CHECK(records[0].at("sample_bits") == 12);
    CHECK(records[0].at("samples_per_frame") == 12);

    CHECK(records[1].at("record") == "annotation");
    CHECK(records[1].at("t_s") == 0.25);
    CHECK(records[1].at("text") == "brisk walk");

    CHECK(records[2].at("record") == "link_report");
    CHECK(records[2].at("frames_delivered") == 9);
    CHECK(records[2].at("events_elapsed") == 4);
    CHECK(records[2].at("delivered_in_order") == true);

    CHECK(records[3].at("record") == "screening");
    CHECK(records[3].at("r_peaks") == 2);
    CHECK(records[3].at("mean_hr_bpm") == 300.0);
    REQUIRE(records[3].at("flags").size() == 1);
    CHECK(records[3].at("flags")[0].at("kind") == "tachycardia");
    CHECK(records[3].at("flags")[0].at("end_s") == 0.24);

    CHECK(records[4].at("record") == "energy_budget");
    CHECK(records[4].at("total_avg_ua") == doctest::Approx(295.1276));
    CHECK(records[4].at("lifetime_h").get<double>() > 480.0);

    // latency histogram side file mirrors the map.
    std::ifstream hist(dir.path() / "latency_histogram.csv");
    std::string header, row0, row1;
    std::getline(hist, header);
    std::getline(hist, row0);
    std::getline(hist, row1);
    CHECK(header == "delay_intervals,count");
    CHECK(row0 == "0,8");
    CHECK(row1 == "1,1");

    // r_peaks.csv carries index and derived time per peak.
    std::ifstream peaks(dir.path() / "r_peaks.csv");
    std::getline(peaks, header);
    std::getline(peaks, row0);
    CHECK(header == "sample_index,t_seconds");
    CHECK(row0 == "10,0.04");
}

TEST_CASE("write_report_bundle without screening skips the screening files") {
    testutil::TempDir dir("host-bundle-bare");
    auto record = sample_record(dir.path());
    write_report_bundle(record, dir.path());

    CHECK(std::filesystem::exists(dir.path() / "report.txt"));
    CHECK(std::filesystem::exists(dir.path() / "meta.ndjson"));
    CHECK(std::filesystem::exists(dir.path() / "latency_histogram.csv"));
    CHECK_FALSE(std::filesystem::exists(dir.path() / "r_peaks.csv"));
    CHECK_FALSE(std::filesystem::exists(dir.path() / "rhythm_flags.ndjson"));
}
