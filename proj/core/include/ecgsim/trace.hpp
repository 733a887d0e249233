#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ecgsim {

// Physical unit of the values held by a SampleTrace.
enum class Unit { microvolt, millivolt, volt, adc_code, milliamp };

std::string unit_name(Unit u);

// Uniformly sampled waveform, the common currency of the whole pipeline.
// Value semantics throughout: stages take traces in and hand new ones back.
struct SampleTrace {
    double fs = 1000.0;           // sample rate, Hz
    double t0 = 0.0;              // time of samples[0], seconds
    Unit unit = Unit::millivolt;
    std::vector<double> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const { return fs > 0.0 ? samples.size() / fs : 0.0; }
    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / fs; }
};

SampleTrace make_trace(double fs, Unit unit, std::size_t n, double value = 0.0);

// Throws std::invalid_argument when fs is not positive.
void validate(const SampleTrace& trace);

// Throws std::invalid_argument unless the trace carries `expected`.
// `context` names the argument in the error message.
void require_unit(const SampleTrace& trace, Unit expected, const std::string& context);

// Number of samples covering `duration_s` at rate `fs` (floor, with a small
// guard so exact products like 0.3 * 1000 do not lose a sample to rounding).
std::size_t sample_count(double duration_s, double fs);

// Rate conversion: pick-every-kth / repeat-each-kth when the ratio is an
// integer, linear interpolation otherwise.
SampleTrace resample(const SampleTrace& trace, double new_fs);

// CSV form used by every tool: header "t_seconds,value", one row per sample.
void write_trace_csv(const SampleTrace& trace, const std::filesystem::path& path);

// Reads a trace CSV back. The sample rate is recovered from the time column;
// `fs_fallback` is used when the file has fewer than two rows.
SampleTrace read_trace_csv(const std::filesystem::path& path, Unit unit,
                           double fs_fallback = 1000.0);

double mean(const std::vector<double>& v);
double rms(const std::vector<double>& v);

} // namespace ecgsim
