#include "ecgsim/link.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ecgsim/rng.hpp"

namespace ecgsim {

namespace {

constexpr std::array<std::uint8_t, 4> session_magic = {'E', 'C', 'G', 'F'};
constexpr std::uint8_t session_version = 1;
constexpr std::size_t sender_buffer_limit = 256; // one full sequence epoch

// Uniform double in [0, 1) from the top 53 bits of the generator, so channel
// draws do not depend on library distribution internals.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

void validate(const ConnectionParams& params) {
    if (!(params.min_interval_s > 0.0) || !(params.max_interval_s >= params.min_interval_s)) {
        throw std::invalid_argument("ConnectionParams: need 0 < min_interval <= max_interval");
    }
    if (params.active_interval_s < params.min_interval_s ||
        params.active_interval_s > params.max_interval_s) {
        throw std::invalid_argument(
            "ConnectionParams: active_interval must lie within [min, max]");
    }
}

double supervision_deadline(const ConnectionParams& params) {
    return static_cast<double>(params.supervision_timeout_multiplier) * 0.010;
}

std::array<std::uint8_t, frame_wire_size> serialize(const Frame& frame) {
    std::array<std::uint8_t, frame_wire_size> bytes{};
    bytes[0] = frame.seq;
    std::memcpy(bytes.data() + 1, frame.payload.data(), frame_payload_size);
    return bytes;
}

Frame deserialize(std::span<const std::uint8_t, frame_wire_size> bytes) {
    Frame frame;
    frame.seq = bytes[0];
    std::memcpy(frame.payload.data(), bytes.data() + 1, frame_payload_size);
    return frame;
}

void validate(const PacketFormat& fmt) {
    if (fmt.sample_bits < 1 || fmt.sample_bits > 16) {
        throw std::invalid_argument("PacketFormat: sample_bits must lie in [1, 16]");
    }
    if (fmt.samples_per_frame < 1 || fmt.samples_per_frame > 64) {
        throw std::invalid_argument("PacketFormat: samples_per_frame must lie in [1, 64]");
    }
    if (fmt.samples_per_frame * fmt.sample_bits >
        static_cast<int>(frame_data_bytes * 8)) {
        throw std::invalid_argument(
            "PacketFormat: samples do not fit the 18-byte data area");
    }
}

std::vector<Frame> packetize(const SampleTrace& codes, const PacketFormat& fmt,
                             std::uint8_t start_seq) {
    validate(codes);
    require_unit(codes, Unit::adc_code, "packetize");
    validate(fmt);

    const std::uint32_t code_limit = 1u << fmt.sample_bits;
    const auto spf = static_cast<std::size_t>(fmt.samples_per_frame);
    const std::size_t n_frames = (codes.size() + spf - 1) / spf;

    std::vector<Frame> frames;
    frames.reserve(n_frames);

    for (std::size_t f = 0; f < n_frames; ++f) {
        Frame frame;
        frame.seq = static_cast<std::uint8_t>(start_seq + f);

        const std::size_t begin = f * spf;
        const std::size_t count = std::min(spf, codes.size() - begin);
        for (std::size_t s = 0; s < count; ++s) {
            const double raw = codes.samples[begin + s];
            if (raw < 0.0 || raw != std::floor(raw) ||
                raw >= static_cast<double>(code_limit)) {
                throw std::invalid_argument(
                    "packetize: sample " + std::to_string(begin + s) + " (" +
                    std::to_string(raw) + ") is not a " +
                    std::to_string(fmt.sample_bits) + "-bit code");
            }
            const auto value = static_cast<std::uint32_t>(raw);
            // MSB-first into the data area
            for (int k = fmt.sample_bits - 1; k >= 0; --k) {
                if ((value >> k) & 1u) {
                    const std::size_t pos =
                        s * static_cast<std::size_t>(fmt.sample_bits) +
                        static_cast<std::size_t>(fmt.sample_bits - 1 - k);
                    frame.payload[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
                }
            }
        }
        if (count < spf) {
            frame.set_pad_samples(static_cast<int>(spf - count));
        }
        frames.push_back(frame);
    }
    return frames;
}

SampleTrace depacketize(const std::vector<Frame>& frames, const PacketFormat& fmt,
                        double fs) {
    validate(fmt);

    SampleTrace out;
    out.fs = fs;
    out.unit = Unit::adc_code;
    if (frames.empty()) return out;

    std::vector<int> missing;
    std::uint8_t expected = frames.front().seq;
    for (const auto& frame : frames) {
        const auto gap = static_cast<std::uint8_t>(frame.seq - expected);
        if (gap > 128) {
            throw std::invalid_argument(
                "depacketize: sequence numbers run backwards near seq " +
                std::to_string(int(frame.seq)));
        }
        for (std::uint8_t k = 0; k < gap; ++k) {
            missing.push_back(static_cast<std::uint8_t>(expected + k));
        }
        expected = static_cast<std::uint8_t>(frame.seq + 1);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "depacketize: missing " << missing.size() << " frame(s), seq";
        for (int m : missing) msg << ' ' << m;
        throw SeqGapError(msg.str(), std::move(missing));
    }

    out.samples.reserve(frames.size() * static_cast<std::size_t>(fmt.samples_per_frame));
    for (const auto& frame : frames) {
        const int pad = frame.pad_samples();
        if (pad < 0 || pad >= fmt.samples_per_frame) {
            throw std::invalid_argument("depacketize: frame carries an invalid pad count");
        }
        const int count = fmt.samples_per_frame - pad;
        for (int s = 0; s < count; ++s) {
            std::uint32_t value = 0;
            for (int k = 0; k < fmt.sample_bits; ++k) {
                const std::size_t pos =
                    static_cast<std::size_t>(s) * static_cast<std::size_t>(fmt.sample_bits) +
                    static_cast<std::size_t>(k);
                const int bit = (frame.payload[pos / 8] >> (7 - pos % 8)) & 1;
                value = (value << 1) | static_cast<std::uint32_t>(bit);
            }
            out.samples.push_back(static_cast<double>(value));
        }
    }
    return out;
}

void validate(const ChannelModel& channel) {
    auto in_range = [](double p) { return p >= 0.0 && p < 1.0; };
    if (!in_range(channel.frame_loss_probability) ||
        !in_range(channel.event_loss_probability)) {
        throw std::invalid_argument("ChannelModel: loss probabilities must lie in [0, 1)");
    }
}

namespace {

struct WindowEntry {
    Frame frame;
    std::int64_t first_tx_event = -1;
    std::int64_t last_tx_event = -1;
};

// Receiver-side feedback snapshot, exchanged over the (abstracted, reliable,
// zero-size) acknowledgment path at the end of a successful event.
struct Feedback {
    std::int64_t snapshot_event = -1;
    std::uint64_t next_expected = 0;
    bool anything_seen = false;
    std::uint64_t highest_seen = 0;
    std::vector<std::uint64_t> missing; // ascending
};

} // namespace

SessionResult simulate_session(FrameSource source, const ConnectionParams& params,
                               const ChannelModel& channel, int packets_per_event,
                               std::uint64_t seed) {
    validate(params);
    validate(channel);
    if (packets_per_event < 1) {
        throw std::invalid_argument("simulate_session: packets_per_event must be >= 1");
    }

    std::mt19937_64 rng(derive_seed(channel.seed, splitmix64(seed) ^ 0x11f7));

    const double interval = params.active_interval_s;
    const double deadline = supervision_deadline(params);

    SessionResult result;
    LinkReport& report = result.report;

    // Sender: frames keyed by an absolute index; the wire carries the low
    // eight bits. The window holds everything pulled but not yet known
    // delivered.
    std::map<std::uint64_t, WindowEntry> window;
    std::deque<std::uint64_t> retx_queue;
    std::uint64_t next_pull = 0;  // absolute index the next source frame gets
    std::uint64_t next_send = 0;  // next never-transmitted index
    std::uint64_t cum_ack = 0;    // receiver watermark per last feedback
    bool source_done = false;

    // Receiver
    std::uint64_t next_expected = 0;
    std::uint64_t highest_seen = 0;
    bool anything_seen = false;
    std::map<std::uint64_t, Frame> held;
    std::map<std::uint64_t, std::uint64_t> first_tx_of; // abs -> event of first tx
    std::optional<Feedback> pending_feedback;

    double last_success = 0.0;
    std::int64_t event = 0;

    for (;; ++event) {
        const double t = static_cast<double>(event) * interval;

        if (source_done && window.empty()) {
            break; // everything delivered and acknowledged
        }
        if (t - last_success >= deadline) {
            report.disconnects += 1;
            break;
        }

        report.events_elapsed += 1;
        if (uniform01(rng) < channel.event_loss_probability) {
            continue; // no sync this interval: no data, no feedback
        }
        last_success = t;

        // Feedback from the previous successful event tells the sender what
        // arrived. A frame transmitted at or before that snapshot is known
        // lost when the receiver neither delivered it nor holds it out of
        // order; queue those again, oldest first.
        if (pending_feedback) {
            const Feedback& fb = *pending_feedback;
            cum_ack = fb.next_expected;
            window.erase(window.begin(), window.lower_bound(cum_ack));
            retx_queue.erase(
                std::remove_if(retx_queue.begin(), retx_queue.end(),
                               [&](std::uint64_t a) { return a < cum_ack; }),
                retx_queue.end());

            for (auto& [abs, entry] : window) {
                if (entry.last_tx_event < 0 || entry.last_tx_event > fb.snapshot_event) {
                    continue; // not sent yet, or sent after the snapshot
                }
                const bool lost = !fb.anything_seen || abs > fb.highest_seen ||
                                  std::binary_search(fb.missing.begin(),
                                                     fb.missing.end(), abs);
                if (lost && std::find(retx_queue.begin(), retx_queue.end(), abs) ==
                                retx_queue.end()) {
                    retx_queue.push_back(abs);
                }
            }
            std::sort(retx_queue.begin(), retx_queue.end());
            pending_feedback.reset();
        }

        auto deliver_to_receiver = [&](std::uint64_t abs, const Frame& frame) {
            if (abs < next_expected || held.count(abs)) return; // duplicate
            held[abs] = frame;
            highest_seen = anything_seen ? std::max(highest_seen, abs) : abs;
            anything_seen = true;
            while (true) {
                auto it = held.find(next_expected);
                if (it == held.end()) break;
                result.delivered.push_back(it->second);
                const auto delay = static_cast<std::uint64_t>(event) -
                                   first_tx_of.at(next_expected);
                report.latency_histogram[delay] += 1;
                held.erase(it);
                ++next_expected;
            }
        };

        for (int budget = packets_per_event; budget > 0; --budget) {
            std::uint64_t abs = 0;
            bool is_retx = false;

            if (!retx_queue.empty()) {
                abs = retx_queue.front();
                retx_queue.pop_front();
                is_retx = true;
            } else if (window.count(next_send)) {
                abs = next_send++;
            } else if (!source_done && window.size() < sender_buffer_limit) {
                auto frame = source();
                if (!frame) {
                    source_done = true;
                    break;
                }
                abs = next_pull++;
                window[abs] = WindowEntry{*frame, -1, -1};
                next_send = abs + 1;
            } else {
                break; // nothing sendable this event
            }

            auto& entry = window.at(abs);
            Frame wire = entry.frame;
            if (is_retx) {
                wire.mark_retransmitted();
                report.retransmissions += 1;
            } else {
                report.frames_sent += 1;
                entry.first_tx_event = event;
                first_tx_of[abs] = static_cast<std::uint64_t>(event);
            }
            entry.last_tx_event = event;

            if (uniform01(rng) < channel.frame_loss_probability) {
                if (!is_retx) report.frames_lost_first_try += 1;
                continue;
            }
            // Receiver reconstructs the absolute index from the seq byte and
            // its own watermark; with the 256-frame window this is unique.
            const auto offset = static_cast<std::uint8_t>(
                wire.seq - static_cast<std::uint8_t>(next_expected & 0xFF));
            deliver_to_receiver(next_expected + offset, wire);
        }

        // Snapshot receiver state; the sender reads it next event.
        Feedback fb;
        fb.snapshot_event = event;
        fb.next_expected = next_expected;
        fb.anything_seen = anything_seen;
        fb.highest_seen = highest_seen;
        if (anything_seen) {
            for (std::uint64_t a = next_expected; a <= highest_seen; ++a) {
                if (!held.count(a)) fb.missing.push_back(a);
            }
        }
        pending_feedback = fb;
    }

    report.frames_delivered = result.delivered.size();
    report.elapsed_s = static_cast<double>(event) * interval;
    for (std::size_t i = 1; i < result.delivered.size(); ++i) {
        const auto expected =
            static_cast<std::uint8_t>(result.delivered[i - 1].seq + 1);
        if (result.delivered[i].seq != expected) {
            report.delivered_in_order = false;
        }
    }
    return result;
}

SessionResult simulate_session(const std::vector<Frame>& frames,
                               const ConnectionParams& params,
                               const ChannelModel& channel, int packets_per_event,
                               std::uint64_t seed) {
    std::size_t cursor = 0;
    FrameSource source = [&frames, cursor]() mutable -> std::optional<Frame> {
        if (cursor >= frames.size()) return std::nullopt;
        return frames[cursor++];
    };
    return simulate_session(std::move(source), params, channel, packets_per_event, seed);
}

ThroughputCheck throughput(const PacketFormat& fmt, int packets_per_event,
                           double interval_s, double target_sps) {
    validate(fmt);
    if (packets_per_event < 1 || !(interval_s > 0.0)) {
        throw std::invalid_argument("throughput: need packets_per_event >= 1 and interval > 0");
    }

    ThroughputCheck check;
    check.samples_per_second = static_cast<double>(fmt.samples_per_frame) *
                               static_cast<double>(packets_per_event) / interval_s;
    check.target_sps = target_sps;
    check.below_target = target_sps > 0.0 && check.samples_per_second < target_sps;
    if (check.below_target) {
        std::ostringstream msg;
        msg << "link carries " << check.samples_per_second
            << " samples/s, below the requested " << target_sps << " samples/s";
        check.warning = msg.str();
    }
    return check;
}

void write_session_file(const std::filesystem::path& path, std::span<const Frame> frames) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(session_magic.data()), session_magic.size());
    out.put(static_cast<char>(session_version));
    for (const auto& frame : frames) {
        const auto bytes = serialize(frame);
        out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    if (!out) {
        throw IoError("write failed for " + path.string(), /*partial_file=*/true);
    }
}

std::vector<Frame> read_session_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }

    std::array<std::uint8_t, 5> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
        !std::equal(session_magic.begin(), session_magic.end(), header.begin())) {
        throw IoError(path.string() + " is not a session file (bad magic)");
    }
    if (header[4] != session_version) {
        throw IoError(path.string() + ": unsupported session version " +
                      std::to_string(int(header[4])));
    }

    std::vector<Frame> frames;
    std::array<std::uint8_t, frame_wire_size> bytes{};
    while (in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        frames.push_back(deserialize(std::span<const std::uint8_t, frame_wire_size>(bytes)));
    }
    if (in.gcount() != 0) {
        throw IoError(path.string() + " ends mid-frame", /*partial_file=*/true);
    }
    return frames;
}

std::string report_text(const LinkReport& report) {
    std::ostringstream out;
    out << "frames_sent: " << report.frames_sent << '\n'
        << "frames_delivered: " << report.frames_delivered << '\n'
        << "frames_lost_first_try: " << report.frames_lost_first_try << '\n'
        << "retransmissions: " << report.retransmissions << '\n'
        << "events_elapsed: " << report.events_elapsed << '\n'
        << "disconnects: " << report.disconnects << '\n'
        << "delivered_in_order: " << (report.delivered_in_order ? "true" : "false") << '\n'
        << "elapsed_s: " << report.elapsed_s << '\n';
    return out.str();
}

void write_latency_histogram_csv(const LinkReport& report,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "delay_intervals,count\n";
    for (const auto& [delay, count] : report.latency_histogram) {
        out << delay << ',' << count << '\n';
    }
}

} // namespace ecgsim
