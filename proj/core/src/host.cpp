#include "ecgsim/host.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ecgsim/errors.hpp"

namespace ecgsim {

double session_duration_s(const SessionRecord& record) {
    return static_cast<double>(record.samples) / record.fs;
}

SessionRecord record_session(const std::vector<Frame>& delivered,
                             const PacketFormat& fmt, double fs,
                             const std::filesystem::path& dir,
                             const std::string& session_id) {
    validate(fmt);
    if (!(fs > 0.0)) {
        throw std::invalid_argument("record_session: fs must be positive");
    }

    std::filesystem::create_directories(dir);
    write_session_file(dir / "session.bin", delivered);

    SessionRecord record;
    record.session_id = session_id;
    record.fs = fs;
    record.format = fmt;
    record.frames = delivered.size();
    record.pad_samples =
        delivered.empty() ? 0 : static_cast<std::size_t>(delivered.back().pad_samples());
    record.samples =
        record.frames * static_cast<std::size_t>(fmt.samples_per_frame) - record.pad_samples;
    return record;
}

std::vector<Frame> read_session_frames(const std::filesystem::path& dir) {
    return read_session_file(dir / "session.bin");
}

void annotate(SessionRecord& record, double t_s, const std::string& text) {
    if (!(t_s >= 0.0) || t_s > session_duration_s(record)) {
        throw std::invalid_argument("annotate: timestamp outside the session");
    }
    Annotation note{t_s, text};
    auto pos = std::upper_bound(
        record.annotations.begin(), record.annotations.end(), note,
        [](const Annotation& a, const Annotation& b) { return a.t_s < b.t_s; });
    record.annotations.insert(pos, std::move(note));
}

std::string generate_report(const SessionRecord& record) {
    std::ostringstream out;
    out.precision(6);
    out << "session_id: " << record.session_id << '\n';
    out << "duration_s: " << session_duration_s(record) << '\n';
    out << "sample_rate_hz: " << record.fs << '\n';
    out << "frames: " << record.frames << '\n';
    out << "samples: " << record.samples << '\n';
    out << "pad_samples: " << record.pad_samples << '\n';

    if (record.screening) {
        const auto& sc = *record.screening;
        out << "r_peaks: " << sc.r_peaks.size() << '\n';
        if (!sc.rr_intervals_s.empty()) {
            const auto [min_rr, max_rr] = std::minmax_element(sc.rr_intervals_s.begin(),
                                                              sc.rr_intervals_s.end());
            out << "mean_hr_bpm: " << sc.mean_hr_bpm << '\n';
            out << "min_hr_bpm: " << 60.0 / *max_rr << '\n';
            out << "max_hr_bpm: " << 60.0 / *min_rr << '\n';
        }
        out << "rhythm_flags: " << sc.flags.size() << '\n';
        for (const auto& flag : sc.flags) {
            out << "  - " << rhythm_flag_kind_name(flag.kind) << ' ' << flag.start_s
                << ".." << flag.end_s << " s\n";
        }
    }

    out << "link_frames_sent: " << record.link_report.frames_sent << '\n';
    out << "link_retransmissions: " << record.link_report.retransmissions << '\n';
    out << "link_frames_lost_first_try: " << record.link_report.frames_lost_first_try
        << '\n';
    out << "link_frames_delivered: " << record.link_report.frames_delivered << '\n';
    out << "link_disconnects: " << record.link_report.disconnects << '\n';
    out << "link_delivered_in_order: "
        << (record.link_report.delivered_in_order ? "yes" : "no") << '\n';

    for (const auto& note : record.annotations) {
        out << "note @" << note.t_s << " s: " << note.text << '\n';
    }

    if (record.budget) {
        out << budget_text(*record.budget);
    }
    return out.str();
}

void write_report_bundle(const SessionRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "report.txt");
        if (!out) {
            throw IoError("cannot open " + (dir / "report.txt").string() + " for writing");
        }
        out << generate_report(record);
        if (!out) {
            throw IoError("short write to " + (dir / "report.txt").string(), true);
        }
    }

    {
        std::ofstream out(dir / "meta.ndjson");
        if (!out) {
            throw IoError("cannot open " + (dir / "meta.ndjson").string() + " for writing");
        }
        nlohmann::json header = {
            {"record", "header"},
            {"session_id", record.session_id},
            {"started_at_s", record.started_at_s},
            {"sample_rate_hz", record.fs},
            {"frames", record.frames},
            {"samples", record.samples},
            {"pad_samples", record.pad_samples},
            {"sample_bits", record.format.sample_bits},
            {"samples_per_frame", record.format.samples_per_frame},
        };
        out << header.dump() << '\n';
        for (const auto& note : record.annotations) {
            nlohmann::json entry = {
                {"record", "annotation"}, {"t_s", note.t_s}, {"text", note.text}};
            out << entry.dump() << '\n';
        }
        nlohmann::json link = {
            {"record", "link_report"},
            {"frames_sent", record.link_report.frames_sent},
            {"frames_lost_first_try", record.link_report.frames_lost_first_try},
            {"retransmissions", record.link_report.retransmissions},
            {"frames_delivered", record.link_report.frames_delivered},
            {"events_elapsed", record.link_report.events_elapsed},
            {"disconnects", record.link_report.disconnects},
            {"delivered_in_order", record.link_report.delivered_in_order},
            {"elapsed_s", record.link_report.elapsed_s},
        };
        out << link.dump() << '\n';
        if (record.screening) {
            nlohmann::json flags = nlohmann::json::array();
            for (const auto& flag : record.screening->flags) {
                flags.push_back({{"kind", rhythm_flag_kind_name(flag.kind)},
                                 {"start_s", flag.start_s},
                                 {"end_s", flag.end_s}});
            }
            nlohmann::json screening = {
                {"record", "screening"},
                {"r_peaks", record.screening->r_peaks.size()},
                {"mean_hr_bpm", record.screening->mean_hr_bpm},
                {"flags", flags},
            };
            out << screening.dump() << '\n';
        }
        if (record.budget) {
            nlohmann::json budget = {
                {"record", "energy_budget"},
                {"digital_avg_ua", record.budget->digital_avg_ua},
                {"analog_supply_ua", record.budget->analog_supply_ua},
                {"total_avg_ua", record.budget->total_avg_ua},
                {"battery_capacity_mah", record.budget->battery_capacity_mah},
                {"lifetime_h", record.budget->lifetime_h},
            };
            out << budget.dump() << '\n';
        }
        if (!out) {
            throw IoError("short write to " + (dir / "meta.ndjson").string(), true);
        }
    }

    if (record.screening) {
        write_r_peaks_csv(*record.screening, record.fs, dir / "r_peaks.csv");
        write_screening_ndjson(*record.screening, dir / "rhythm_flags.ndjson");
    }
    write_latency_histogram_csv(record.link_report, dir / "latency_histogram.csv");
}

} // namespace ecgsim
