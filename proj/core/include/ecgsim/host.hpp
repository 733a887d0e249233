#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecgsim/link.hpp"
#include "ecgsim/power.hpp"
#include "ecgsim/screening.hpp"

namespace ecgsim {

// Free-text note attached to a point in the session ("running", "dizzy", ...).
struct Annotation {
    double t_s = 0.0;
    std::string text;
};

// Everything the receiver keeps about one recorded session. The raw frames
// live in session.bin next to the metadata; this struct holds the totals and
// the derived reports.
struct SessionRecord {
    std::string session_id = "session";
    double started_at_s = 0.0; // epoch seconds; stays 0 in deterministic runs
    double fs = 1000.0;
    PacketFormat format;
    std::size_t frames = 0;
    std::size_t pad_samples = 0;
    std::size_t samples = 0; // frames * samples_per_frame - pad_samples
    std::vector<Annotation> annotations;
    LinkReport link_report;
    std::optional<ScreeningReport> screening;
    std::optional<EnergyBudget> budget;
};

double session_duration_s(const SessionRecord& record);

// Persists the delivered frames as <dir>/session.bin and returns a record
// with the totals filled in. Frames must already be in delivery order.
SessionRecord record_session(const std::vector<Frame>& delivered,
                             const PacketFormat& fmt, double fs,
                             const std::filesystem::path& dir,
                             const std::string& session_id = "session");

// Reads the frame stream back from a session directory.
std::vector<Frame> read_session_frames(const std::filesystem::path& dir);

// Inserts a note, keeping annotations sorted by time. The timestamp must lie
// inside [0, session duration].
void annotate(SessionRecord& record, double t_s, const std::string& text);

// Human-readable session summary: totals, heart rate statistics, rhythm
// flags, link statistics and, when a budget is attached, projected lifetime.
std::string generate_report(const SessionRecord& record);

// Writes meta.ndjson, report.txt and the CSV side files into the session
// directory. session.bin is written by record_session.
void write_report_bundle(const SessionRecord& record, const std::filesystem::path& dir);

} // namespace ecgsim
