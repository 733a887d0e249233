#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ecgsim/config.hpp"
#include "ecgsim/host.hpp"

namespace ecgsim {

// Everything one simulated run produces. `reconstructed_mv` is the receiver
// side stream mapped back to input-referred millivolts, which is the signal
// the screening stage sees.
struct PipelineResult {
    SessionRecord record;
    SampleTrace clean_mv;
    SampleTrace corrupted_mv;
    SampleTrace reconstructed_mv;
    std::vector<double> ground_truth_r_peaks_s;
    bool disconnected = false;
    std::vector<std::string> warnings;
};

// Runs synth -> front end -> converter -> link -> recording -> screening and
// writes the session directory (session.bin, meta.ndjson, report.txt, CSV
// side files) under out_dir. Exit-code mapping is the caller's job.
//
// Interference routing: baseline wander, motion bursts and lead-off steps
// corrupt the differential pair; mains pickup and ambient noise ride the
// common mode, where the amplifier's rejection has to deal with them.
PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Receiver-side decode: frames -> codes -> volts -> input-referred mV.
SampleTrace decode_frames(const std::vector<Frame>& frames, const RunConfig& cfg);

} // namespace ecgsim
