#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgsim/errors.hpp"
#include "ecgsim/trace.hpp"

namespace ecgsim {

// Connection timing. Events fire every active_interval_s; the supervision
// deadline is supervision_timeout_multiplier counts of 10 ms.
struct ConnectionParams {
    double min_interval_s = 0.0075;
    double max_interval_s = 4.0;
    std::uint16_t slave_latency = 0;
    std::uint16_t supervision_timeout_multiplier = 3200; // 3200 * 10 ms = 32 s
    double active_interval_s = 0.1;
};

void validate(const ConnectionParams& params);

// Seconds without a successful event before the link is declared lost.
double supervision_deadline(const ConnectionParams& params);

inline constexpr std::size_t frame_wire_size = 20;
inline constexpr std::size_t frame_payload_size = 19;
inline constexpr std::size_t frame_data_bytes = 18;

// Wire frame: one sequence byte, 18 bytes of packed samples, one flags byte.
// Flags layout: bit 0 marks a retransmission, bit 1 marks a padded (final,
// partial) frame, bits 2..7 carry the number of padding samples.
struct Frame {
    std::uint8_t seq = 0;
    std::array<std::uint8_t, frame_payload_size> payload{};

    std::uint8_t flags() const { return payload[frame_payload_size - 1]; }
    bool retransmitted() const { return flags() & 0x01; }
    void mark_retransmitted() { payload[frame_payload_size - 1] |= 0x01; }
    int pad_samples() const { return (flags() & 0x02) ? (flags() >> 2) : 0; }
    void set_pad_samples(int n) {
        auto& f = payload[frame_payload_size - 1];
        f = static_cast<std::uint8_t>((f & 0x01) | (n > 0 ? 0x02 : 0x00) |
                                      (static_cast<unsigned>(n) << 2));
    }

    bool operator==(const Frame&) const = default;
};

std::array<std::uint8_t, frame_wire_size> serialize(const Frame& frame);
Frame deserialize(std::span<const std::uint8_t, frame_wire_size> bytes);

// Sample packing scheme. samples_per_frame * sample_bits must fit in the
// 18-byte data area, and the pad counter limits samples_per_frame to 64.
struct PacketFormat {
    int sample_bits = 12;
    int samples_per_frame = 12;
};

void validate(const PacketFormat& fmt);

// Splits a code trace into frames with consecutive (mod 256) sequence
// numbers. Samples are packed MSB first; a final partial frame is zero
// padded and carries the pad count in its flags byte.
std::vector<Frame> packetize(const SampleTrace& codes, const PacketFormat& fmt,
                             std::uint8_t start_seq = 0);

// Inverse of packetize. Throws SeqGapError when sequence numbers are not
// contiguous, naming every missing value.
SampleTrace depacketize(const std::vector<Frame>& frames, const PacketFormat& fmt,
                        double fs = 1000.0);

// Loss behavior of the radio channel. Event loss kills a whole connection
// event (no frames, no feedback); frame loss drops individual frames.
struct ChannelModel {
    double frame_loss_probability = 0.0; // [0, 1)
    double event_loss_probability = 0.0; // [0, 1)
    std::uint64_t seed = 0;
};

void validate(const ChannelModel& channel);

struct LinkReport {
    std::uint64_t frames_sent = 0;            // unique frames handed to the radio
    std::uint64_t frames_lost_first_try = 0;  // first transmissions dropped
    std::uint64_t retransmissions = 0;        // extra transmissions
    std::uint64_t frames_delivered = 0;
    std::uint64_t events_elapsed = 0;
    std::uint64_t disconnects = 0;
    bool delivered_in_order = true;
    // delivery delay in connection-interval units -> frame count
    std::map<std::uint64_t, std::uint64_t> latency_histogram;
    double elapsed_s = 0.0;
};

struct SessionResult {
    std::vector<Frame> delivered;
    LinkReport report;
};

// Pull-based frame supply; return std::nullopt when the recording ends.
using FrameSource = std::function<std::optional<Frame>()>;

// Discrete-event simulation of a duty-cycled session: every interval the
// sender pushes up to packets_per_event frames, the receiver NACKs gaps via
// a reliable feedback message consumed at the next event, and lost frames
// are retransmitted ahead of new data until everything got through. The
// sender buffers at most 256 frames (one sequence epoch); when the buffer is
// full the source is simply not pulled (backpressure).
SessionResult simulate_session(FrameSource source, const ConnectionParams& params,
                               const ChannelModel& channel, int packets_per_event,
                               std::uint64_t seed);
SessionResult simulate_session(const std::vector<Frame>& frames,
                               const ConnectionParams& params,
                               const ChannelModel& channel, int packets_per_event,
                               std::uint64_t seed);

struct ThroughputCheck {
    double samples_per_second = 0.0;
    double target_sps = 0.0;
    bool below_target = false;
    std::string warning; // empty unless below target
};

// Sustained sample rate of a configuration, with an advisory warning when it
// cannot keep up with a requested acquisition rate.
ThroughputCheck throughput(const PacketFormat& fmt, int packets_per_event,
                           double interval_s, double target_sps = 0.0);

// Binary session format: magic "ECGF", one version byte, then raw frames.
void write_session_file(const std::filesystem::path& path, std::span<const Frame> frames);
std::vector<Frame> read_session_file(const std::filesystem::path& path);

std::string report_text(const LinkReport& report);
void write_latency_histogram_csv(const LinkReport& report,
                                 const std::filesystem::path& path);

} // namespace ecgsim
